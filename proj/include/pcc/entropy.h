#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pcc {

//============================================================================
// Bit-level I/O, MSB first within each byte.

class BitWriter {
public:
  void writeBit(int bit) {
    if (nbits_ == 0) {
      buf_.push_back(0);
      nbits_ = 8;
    }
    nbits_--;
    if (bit) buf_.back() |= uint8_t(1u << nbits_);
  }

  void writeBits(uint64_t value, int count) {
    for (int i = count - 1; i >= 0; i--) writeBit(int((value >> i) & 1));
  }

  // Order-k exponential Golomb, self-delimiting.
  void writeUintExpGolomb(uint64_t value, int k);

  size_t bitCount() const { return buf_.size() * 8 - nbits_; }
  const std::vector<uint8_t>& bytes() const { return buf_; }
  std::vector<uint8_t> take() { nbits_ = 0; return std::move(buf_); }

private:
  std::vector<uint8_t> buf_;
  int nbits_ = 0;  // unused bits in the last byte
};

class BitReader {
public:
  explicit BitReader(const std::vector<uint8_t>& bytes) : buf_(bytes) {}

  int readBit() {
    if (pos_ >= buf_.size() * 8) throw std::out_of_range("bit stream exhausted");
    int bit = (buf_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1;
    pos_++;
    return bit;
  }

  uint64_t readBits(int count) {
    uint64_t v = 0;
    for (int i = 0; i < count; i++) v = v << 1 | uint64_t(readBit());
    return v;
  }

  uint64_t readUintExpGolomb(int k);

  size_t bitPosition() const { return pos_; }

private:
  const std::vector<uint8_t>& buf_;
  size_t pos_ = 0;
};

//============================================================================
// Adaptive binary arithmetic coder.
//
// Contexts hold a 16-bit probability of the zero symbol, adapted with a
// shift-based update. The coded stream is byte aligned after flush and
// carries no framing of its own.

struct ContextModel {
  uint16_t probZero = 1 << 15;

  // probability estimate stays strictly inside (0, 1)
  void update(int bit) {
    if (bit)
      probZero -= probZero >> kAdaptShift;
    else
      probZero += (0xFFFFu - probZero) >> kAdaptShift;
  }

  static constexpr int kAdaptShift = 5;
};

class ArithmeticEncoder {
public:
  void encodeBit(ContextModel& ctx, int bit);
  void encodeBypass(int bit);
  void encodeBypassBits(uint64_t value, int count);
  void encodeUintExpGolombBypass(uint64_t value, int k);

  // Byte-aligns and seals the stream; further writes are an error.
  std::vector<uint8_t> flush();

  size_t byteCountUpperBound() const { return out_.size() + 8; }

private:
  void shiftLow();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cacheSize_ = 1;
  bool flushed_ = false;
  std::vector<uint8_t> out_;
};

class ArithmeticDecoder {
public:
  explicit ArithmeticDecoder(const std::vector<uint8_t>& bytes);

  int decodeBit(ContextModel& ctx);
  int decodeBypass();
  uint64_t decodeBypassBits(int count);
  uint64_t decodeUintExpGolombBypass(int k);

private:
  uint8_t nextByte();

  const std::vector<uint8_t>& buf_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

}  // namespace pcc
