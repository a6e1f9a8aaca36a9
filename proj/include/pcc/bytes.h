#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcc {

//============================================================================
// Little-endian byte serialization for the bitstream containers.

class ByteWriter {
public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }

  void bytes(const std::vector<uint8_t>& b) {
    u64(b.size());
    buf_.insert(buf_.end(), b.begin(), b.end());
  }

  void str(const std::string& s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  void magic(const char tag[4]) { raw(tag, 4); }

  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

private:
  void raw(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  std::vector<uint8_t> buf_;
};

class ByteReader {
public:
  explicit ByteReader(const std::vector<uint8_t>& buf) : buf_(buf) {}

  uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
  uint16_t u16() { uint16_t v; raw(&v, 2); return v; }
  uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
  uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
  int64_t i64() { int64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }

  std::vector<uint8_t> bytes() {
    uint64_t n = u64();
    checkAvail(n);
    std::vector<uint8_t> b(buf_.begin() + long(pos_), buf_.begin() + long(pos_ + n));
    pos_ += n;
    return b;
  }

  std::string str() {
    uint64_t n = u64();
    checkAvail(n);
    std::string s(buf_.begin() + long(pos_), buf_.begin() + long(pos_ + n));
    pos_ += n;
    return s;
  }

  void magic(const char tag[4]) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, tag, 4) != 0)
      throw std::runtime_error(std::string("bad magic, expected ") +
                               std::string(tag, 4));
  }

  bool atEnd() const { return pos_ == buf_.size(); }
  size_t position() const { return pos_; }

private:
  void checkAvail(uint64_t n) const {
    if (pos_ + n > buf_.size())
      throw std::runtime_error("corrupt stream: truncated at byte " +
                               std::to_string(pos_));
  }

  void raw(void* p, size_t n) {
    checkAvail(n);
    std::memcpy(p, &buf_[pos_], n);
    pos_ += n;
  }

  const std::vector<uint8_t>& buf_;
  size_t pos_ = 0;
};

}  // namespace pcc
