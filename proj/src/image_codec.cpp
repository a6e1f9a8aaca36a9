#include "pcc/image_codec.h"

#include <stdexcept>

#include <zlib.h>

#include "pcc/bytes.h"

namespace pcc {

std::vector<uint8_t> deflateBytes(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, raw.data(), uLong(raw.size()),
                     Z_BEST_COMPRESSION);
  if (rc != Z_OK) throw std::runtime_error("deflate failed");
  out.resize(bound);
  return out;
}

std::vector<uint8_t> inflateBytes(const std::vector<uint8_t>& compressed,
                                  size_t expectedSize) {
  std::vector<uint8_t> out(expectedSize);
  uLongf size = uLongf(expectedSize);
  int rc = uncompress(out.data(), &size,
                      compressed.data(), uLong(compressed.size()));
  if (rc != Z_OK || size != expectedSize)
    throw std::runtime_error("inflate failed: corrupt image payload");
  return out;
}

std::vector<uint8_t> ReferenceImageCodec::encode(
  const std::vector<uint16_t>& samples, int width, int height, int qstep) const {
  if (size_t(width) * size_t(height) != samples.size())
    throw std::invalid_argument("image dimensions do not match sample count");

  const int q = qstep > 1 ? qstep : 1;
  ByteWriter header;
  header.magic("IMGR");
  header.u32(uint32_t(width));
  header.u32(uint32_t(height));
  header.u32(uint32_t(q));

  std::vector<uint8_t> raw(samples.size() * 2);
  for (size_t i = 0; i < samples.size(); i++) {
    uint16_t s = uint16_t((uint32_t(samples[i]) + uint32_t(q) / 2) / uint32_t(q));
    raw[2 * i] = uint8_t(s);
    raw[2 * i + 1] = uint8_t(s >> 8);
  }

  std::vector<uint8_t> out = header.take();
  std::vector<uint8_t> body = deflateBytes(raw);
  ByteWriter tail;
  tail.bytes(body);
  std::vector<uint8_t> tailBytes = tail.take();
  out.insert(out.end(), tailBytes.begin(), tailBytes.end());
  return out;
}

std::vector<uint16_t> ReferenceImageCodec::decode(
  const std::vector<uint8_t>& bytes, int width, int height) const {
  ByteReader r(bytes);
  r.magic("IMGR");
  uint32_t w = r.u32(), h = r.u32(), q = r.u32();
  if (int(w) != width || int(h) != height)
    throw std::runtime_error("image payload dimensions mismatch");

  std::vector<uint8_t> body = r.bytes();
  std::vector<uint8_t> raw = inflateBytes(body, size_t(w) * size_t(h) * 2);

  std::vector<uint16_t> samples(size_t(w) * size_t(h));
  for (size_t i = 0; i < samples.size(); i++) {
    uint32_t s = uint32_t(raw[2 * i]) | uint32_t(raw[2 * i + 1]) << 8;
    samples[i] = uint16_t(std::min<uint32_t>(0xFFFF, s * q));
  }
  return samples;
}

}  // namespace pcc
