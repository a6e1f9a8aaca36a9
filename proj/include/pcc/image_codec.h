#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace pcc {

//============================================================================
// Pluggable 2D plane codec for the projection pipeline. Planes are row-major
// sample grids of 8- or 16-bit unsigned samples. qstep <= 1 is lossless;
// larger steps quantize samples uniformly (round to nearest) before coding.

class ImageCodec {
public:
  virtual ~ImageCodec() = default;

  virtual std::vector<uint8_t> encode(const std::vector<uint16_t>& samples,
                                      int width, int height, int qstep) const = 0;
  virtual std::vector<uint16_t> decode(const std::vector<uint8_t>& bytes,
                                       int width, int height) const = 0;
};

// Reference codec: uniform scalar quantization followed by deflate.
class ReferenceImageCodec : public ImageCodec {
public:
  std::vector<uint8_t> encode(const std::vector<uint16_t>& samples, int width,
                              int height, int qstep) const override;
  std::vector<uint16_t> decode(const std::vector<uint8_t>& bytes, int width,
                               int height) const override;
};

// Raw deflate helpers shared with the container layer.
std::vector<uint8_t> deflateBytes(const std::vector<uint8_t>& raw);
std::vector<uint8_t> inflateBytes(const std::vector<uint8_t>& compressed,
                                  size_t expectedSize);

}  // namespace pcc
