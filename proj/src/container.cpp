#include "pcc/container.h"

#include <fstream>
#include <stdexcept>

#include "pcc/bytes.h"

namespace pcc {

std::vector<uint8_t> Container::serialize() const {
  ByteWriter w;
  w.magic("PCCX");
  w.u8(1);
  w.u32(uint32_t(sections.size()));
  for (const ContainerSection& s : sections) {
    w.u8(uint8_t(s.tag));
    w.bytes(s.payload);
  }
  return w.take();
}

Container Container::parse(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  r.magic("PCCX");
  if (r.u8() != 1) throw std::runtime_error("unsupported container version");

  Container c;
  uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; i++) {
    ContainerSection s;
    s.tag = SectionTag(r.u8());
    s.payload = r.bytes();
    c.sections.push_back(std::move(s));
  }
  return c;
}

std::vector<uint8_t> readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

void writeFile(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pcc
