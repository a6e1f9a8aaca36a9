#include "pcc/entropy.h"

namespace pcc {

//============================================================================
// Exponential Golomb

void BitWriter::writeUintExpGolomb(uint64_t value, int k) {
  uint64_t u = value + (uint64_t(1) << k);
  int nbits = 63 - __builtin_clzll(u);
  for (int i = 0; i < nbits - k; i++) writeBit(0);
  writeBits(u, nbits + 1);
}

uint64_t BitReader::readUintExpGolomb(int k) {
  int zeros = 0;
  while (readBit() == 0) {
    zeros++;
    if (zeros > 64) throw std::runtime_error("malformed exp-Golomb code");
  }
  int nbits = zeros + k;
  uint64_t u = uint64_t(1) << nbits | readBits(nbits);
  return u - (uint64_t(1) << k);
}

//============================================================================
// Arithmetic coder. Carry propagation is handled byte-wise through a cached
// byte plus a run of pending 0xFF bytes.

void ArithmeticEncoder::shiftLow() {
  if (uint32_t(low_ >> 32) != 0 || uint32_t(low_) < 0xFF000000u) {
    uint8_t carry = uint8_t(low_ >> 32);
    do {
      out_.push_back(uint8_t(cache_ + carry));
      cache_ = 0xFF;
    } while (--cacheSize_);
    cache_ = uint8_t(low_ >> 24);
  }
  cacheSize_++;
  low_ = (low_ << 8) & 0xFFFFFFFFu;
}

void ArithmeticEncoder::encodeBit(ContextModel& ctx, int bit) {
  if (flushed_) throw std::logic_error("write after flush");
  uint32_t bound = (range_ >> 16) * ctx.probZero;
  if (!bit) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  ctx.update(bit);
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    shiftLow();
  }
}

void ArithmeticEncoder::encodeBypass(int bit) {
  if (flushed_) throw std::logic_error("write after flush");
  range_ >>= 1;
  if (bit) low_ += range_;
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    shiftLow();
  }
}

void ArithmeticEncoder::encodeBypassBits(uint64_t value, int count) {
  for (int i = count - 1; i >= 0; i--) encodeBypass(int((value >> i) & 1));
}

void ArithmeticEncoder::encodeUintExpGolombBypass(uint64_t value, int k) {
  uint64_t u = value + (uint64_t(1) << k);
  int nbits = 63 - __builtin_clzll(u);
  for (int i = 0; i < nbits - k; i++) encodeBypass(0);
  encodeBypassBits(u, nbits + 1);
}

std::vector<uint8_t> ArithmeticEncoder::flush() {
  if (flushed_) throw std::logic_error("double flush");
  flushed_ = true;
  for (int i = 0; i < 5; i++) shiftLow();
  return std::move(out_);
}

//============================================================================

ArithmeticDecoder::ArithmeticDecoder(const std::vector<uint8_t>& bytes)
  : buf_(bytes) {
  nextByte();  // encoder's first output byte is always the zero cache
  for (int i = 0; i < 4; i++) code_ = code_ << 8 | nextByte();
}

uint8_t ArithmeticDecoder::nextByte() {
  // reading past the end yields zeros; a truncated stream surfaces as a
  // decoded-symbol mismatch in the framing layers above
  return pos_ < buf_.size() ? buf_[pos_++] : 0;
}

int ArithmeticDecoder::decodeBit(ContextModel& ctx) {
  uint32_t bound = (range_ >> 16) * ctx.probZero;
  int bit;
  if (code_ < bound) {
    bit = 0;
    range_ = bound;
  } else {
    bit = 1;
    code_ -= bound;
    range_ -= bound;
  }
  ctx.update(bit);
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    code_ = code_ << 8 | nextByte();
  }
  return bit;
}

int ArithmeticDecoder::decodeBypass() {
  range_ >>= 1;
  int bit = 0;
  if (code_ >= range_) {
    bit = 1;
    code_ -= range_;
  }
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    code_ = code_ << 8 | nextByte();
  }
  return bit;
}

uint64_t ArithmeticDecoder::decodeBypassBits(int count) {
  uint64_t v = 0;
  for (int i = 0; i < count; i++) v = v << 1 | uint64_t(decodeBypass());
  return v;
}

uint64_t ArithmeticDecoder::decodeUintExpGolombBypass(int k) {
  int zeros = 0;
  while (decodeBypass() == 0) {
    zeros++;
    if (zeros > 64) throw std::runtime_error("malformed exp-Golomb code");
  }
  int nbits = zeros + k;
  uint64_t u = uint64_t(1) << nbits | decodeBypassBits(nbits);
  return u - (uint64_t(1) << k);
}

}  // namespace pcc
