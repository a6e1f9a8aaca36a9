#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcc {

//============================================================================
// Top-level bitstream container: magic "PCCX", version, section table, then
// length-prefixed payloads. The trailer echoes the encoder configuration as
// text for reproducibility.

enum class SectionTag : uint8_t {
  Geometry = 1,
  Attribute = 2,
  Vpcc = 3,
  Trailer = 4,
};

struct ContainerSection {
  SectionTag tag;
  std::vector<uint8_t> payload;
};

struct Container {
  std::vector<ContainerSection> sections;

  void add(SectionTag tag, std::vector<uint8_t> payload) {
    sections.push_back({tag, std::move(payload)});
  }

  const std::vector<uint8_t>* find(SectionTag tag) const {
    for (const ContainerSection& s : sections)
      if (s.tag == tag) return &s.payload;
    return nullptr;
  }

  std::vector<uint8_t> serialize() const;
  static Container parse(const std::vector<uint8_t>& bytes);
};

std::vector<uint8_t> readFile(const std::string& path);
void writeFile(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace pcc
