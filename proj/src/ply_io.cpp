#include "pcc/ply_io.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pcc {

namespace {

enum class PropType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

size_t propSize(PropType t) {
  switch (t) {
  case PropType::Int8:
  case PropType::UInt8: return 1;
  case PropType::Int16:
  case PropType::UInt16: return 2;
  case PropType::Int32:
  case PropType::UInt32:
  case PropType::Float32: return 4;
  case PropType::Float64: return 8;
  }
  return 0;
}

bool parsePropType(const std::string& s, PropType& out) {
  if (s == "char" || s == "int8") out = PropType::Int8;
  else if (s == "uchar" || s == "uint8") out = PropType::UInt8;
  else if (s == "short" || s == "int16") out = PropType::Int16;
  else if (s == "ushort" || s == "uint16") out = PropType::UInt16;
  else if (s == "int" || s == "int32") out = PropType::Int32;
  else if (s == "uint" || s == "uint32") out = PropType::UInt32;
  else if (s == "float" || s == "float32") out = PropType::Float32;
  else if (s == "double" || s == "float64") out = PropType::Float64;
  else return false;
  return true;
}

struct Property {
  std::string name;
  PropType type = PropType::Float32;
  bool isList = false;
  PropType listCountType = PropType::UInt8;
};

struct Element {
  std::string name;
  size_t count = 0;
  std::vector<Property> properties;
};

// Semantic slots a vertex property can fill. -1 = skipped.
enum Slot { kSkip = -1, kX, kY, kZ, kRed, kGreen, kBlue, kNx, kNy, kNz };

Slot slotForName(const std::string& n) {
  if (n == "x") return kX;
  if (n == "y") return kY;
  if (n == "z") return kZ;
  if (n == "red" || n == "r") return kRed;
  if (n == "green" || n == "g") return kGreen;
  if (n == "blue" || n == "b") return kBlue;
  if (n == "nx") return kNx;
  if (n == "ny") return kNy;
  if (n == "nz") return kNz;
  return kSkip;
}

class Reader {
public:
  explicit Reader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}

  PointCloud run() {
    parseHeader();
    PointCloud cloud;
    for (const Element& elem : elements_) {
      if (elem.name == "vertex")
        readVertices(elem, cloud);
      else
        skipElement(elem);
    }
    cloud.checkInvariants();
    return cloud;
  }

private:
  const std::vector<uint8_t>& bytes_;
  size_t pos_ = 0;
  PlyFormat format_ = PlyFormat::Ascii;
  std::vector<Element> elements_;

  [[noreturn]] void fail(const std::string& what) const { throw PlyError(what, pos_); }

  std::string readLine() {
    size_t start = pos_;
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') pos_++;
    if (pos_ >= bytes_.size()) fail("unterminated header line");
    std::string line(reinterpret_cast<const char*>(&bytes_[start]), pos_ - start);
    pos_++;  // consume '\n'
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  void parseHeader() {
    if (readLine() != "ply") fail("missing 'ply' magic");
    bool haveFormat = false, ended = false;
    while (pos_ < bytes_.size()) {
      std::string line = readLine();
      std::istringstream ss(line);
      std::string kw;
      ss >> kw;
      if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
      if (kw == "format") {
        std::string fmt, ver;
        ss >> fmt >> ver;
        if (fmt == "ascii") format_ = PlyFormat::Ascii;
        else if (fmt == "binary_little_endian") format_ = PlyFormat::BinaryLittleEndian;
        else if (fmt == "binary_big_endian") fail("unsupported format binary_big_endian");
        else fail("unknown format '" + fmt + "'");
        if (ver != "1.0") fail("unsupported PLY version '" + ver + "'");
        haveFormat = true;
      } else if (kw == "element") {
        Element elem;
        long long n = -1;
        ss >> elem.name >> n;
        if (elem.name.empty() || n < 0) fail("malformed element line");
        elem.count = size_t(n);
        elements_.push_back(elem);
      } else if (kw == "property") {
        if (elements_.empty()) fail("property before any element");
        Property p;
        std::string t;
        ss >> t;
        if (t == "list") {
          std::string ct, vt;
          ss >> ct >> vt >> p.name;
          p.isList = true;
          if (!parsePropType(ct, p.listCountType) || !parsePropType(vt, p.type))
            fail("malformed list property");
        } else {
          ss >> p.name;
          if (!parsePropType(t, p.type)) fail("unknown property type '" + t + "'");
        }
        if (p.name.empty()) fail("property without a name");
        elements_.back().properties.push_back(p);
      } else if (kw == "end_header") {
        ended = true;
        break;
      } else {
        fail("unknown header keyword '" + kw + "'");
      }
    }
    if (!ended) fail("missing end_header");
    if (!haveFormat) fail("missing format line");

    const auto vertex = std::find_if(elements_.begin(), elements_.end(),
                                     [](const Element& e) { return e.name == "vertex"; });
    if (vertex == elements_.end()) fail("no 'element vertex' declared");
    bool hx = false, hy = false, hz = false;
    for (const Property& p : vertex->properties) {
      Slot s = slotForName(p.name);
      hx |= s == kX;
      hy |= s == kY;
      hz |= s == kZ;
    }
    if (!hx || !hy || !hz) fail("vertex element lacks x/y/z properties");
  }

  double readBinaryScalar(PropType t) {
    size_t n = propSize(t);
    if (pos_ + n > bytes_.size()) fail("truncated body");
    const uint8_t* p = &bytes_[pos_];
    pos_ += n;
    switch (t) {
    case PropType::Int8: return double(int8_t(p[0]));
    case PropType::UInt8: return double(p[0]);
    case PropType::Int16: {
      int16_t v; std::memcpy(&v, p, 2); return double(v);
    }
    case PropType::UInt16: {
      uint16_t v; std::memcpy(&v, p, 2); return double(v);
    }
    case PropType::Int32: {
      int32_t v; std::memcpy(&v, p, 4); return double(v);
    }
    case PropType::UInt32: {
      uint32_t v; std::memcpy(&v, p, 4); return double(v);
    }
    case PropType::Float32: {
      float v; std::memcpy(&v, p, 4); return double(v);
    }
    case PropType::Float64: {
      double v; std::memcpy(&v, p, 8); return v;
    }
    }
    return 0;
  }

  double readAsciiScalar() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) pos_++;
    if (pos_ >= bytes_.size()) fail("truncated body");
    size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) pos_++;
    std::string tok(reinterpret_cast<const char*>(&bytes_[start]), pos_ - start);
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed numeric token '" + tok + "'");
    }
  }

  double readScalar(PropType t) {
    return format_ == PlyFormat::Ascii ? readAsciiScalar() : readBinaryScalar(t);
  }

  void readVertices(const Element& elem, PointCloud& cloud) {
    std::vector<Slot> slots;
    bool hasColor = false, hasNormal = false;
    for (const Property& p : elem.properties) {
      Slot s = p.isList ? kSkip : slotForName(p.name);
      slots.push_back(s);
      hasColor |= s == kRed || s == kGreen || s == kBlue;
      hasNormal |= s == kNx || s == kNy || s == kNz;
    }

    cloud.positions().reserve(elem.count);
    if (hasColor) cloud.colors().reserve(elem.count);
    if (hasNormal) cloud.normals().reserve(elem.count);

    for (size_t i = 0; i < elem.count; i++) {
      Vec3d pos{}, nrm{};
      Vec3<double> rgb{};
      for (size_t j = 0; j < elem.properties.size(); j++) {
        const Property& p = elem.properties[j];
        if (p.isList) {
          size_t n = size_t(readScalar(p.listCountType));
          for (size_t k = 0; k < n; k++) readScalar(p.type);
          continue;
        }
        double v = readScalar(p.type);
        switch (slots[j]) {
        case kX: pos.x = v; break;
        case kY: pos.y = v; break;
        case kZ: pos.z = v; break;
        case kRed: rgb.x = v; break;
        case kGreen: rgb.y = v; break;
        case kBlue: rgb.z = v; break;
        case kNx: nrm.x = v; break;
        case kNy: nrm.y = v; break;
        case kNz: nrm.z = v; break;
        default: break;
        }
      }
      cloud.positions().push_back(pos);
      if (hasColor) {
        auto clamp255 = [](double v) {
          return uint8_t(std::min(255.0, std::max(0.0, v)));
        };
        cloud.colors().push_back({clamp255(rgb.x), clamp255(rgb.y), clamp255(rgb.z)});
      }
      if (hasNormal) cloud.normals().push_back(nrm);
    }
  }

  void skipElement(const Element& elem) {
    for (size_t i = 0; i < elem.count; i++) {
      for (const Property& p : elem.properties) {
        if (p.isList) {
          size_t n = size_t(readScalar(p.listCountType));
          for (size_t k = 0; k < n; k++) readScalar(p.type);
        } else {
          readScalar(p.type);
        }
      }
    }
  }
};

void appendLE(std::vector<uint8_t>& out, const void* p, size_t n) {
  const uint8_t* b = static_cast<const uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

// Positions are written as double so that integer voxels up to 2^53 and
// pre-quantization reals round-trip exactly.
std::string formatPosition(double v) {
  if (v == std::llround(v) && std::abs(v) < 9e15) return std::to_string(int64_t(v));
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

PointCloud readPly(const std::vector<uint8_t>& bytes) {
  return Reader(bytes).run();
}

std::vector<uint8_t> writePly(const PointCloud& cloud, PlyFormat format) {
  cloud.checkInvariants();
  std::ostringstream header;
  header << "ply\n";
  header << "format "
         << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian")
         << " 1.0\n";
  header << "element vertex " << cloud.size() << "\n";
  header << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.hasColors())
    header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.hasNormals())
    header << "property double nx\nproperty double ny\nproperty double nz\n";
  header << "end_header\n";

  std::vector<uint8_t> out;
  const std::string h = header.str();
  out.insert(out.end(), h.begin(), h.end());

  for (size_t i = 0; i < cloud.size(); i++) {
    const Vec3d& p = cloud.position(i);
    if (format == PlyFormat::Ascii) {
      std::string line = formatPosition(p.x) + " " + formatPosition(p.y) + " " +
                         formatPosition(p.z);
      if (cloud.hasColors()) {
        const Vec3u8& c = cloud.color(i);
        line += " " + std::to_string(c.x) + " " + std::to_string(c.y) + " " +
                std::to_string(c.z);
      }
      if (cloud.hasNormals()) {
        const Vec3d& n = cloud.normal(i);
        line += " " + formatPosition(n.x) + " " + formatPosition(n.y) + " " +
                formatPosition(n.z);
      }
      line += "\n";
      out.insert(out.end(), line.begin(), line.end());
    } else {
      appendLE(out, &p.x, 8);
      appendLE(out, &p.y, 8);
      appendLE(out, &p.z, 8);
      if (cloud.hasColors()) {
        const Vec3u8& c = cloud.color(i);
        out.push_back(c.x);
        out.push_back(c.y);
        out.push_back(c.z);
      }
      if (cloud.hasNormals()) {
        const Vec3d& n = cloud.normal(i);
        appendLE(out, &n.x, 8);
        appendLE(out, &n.y, 8);
        appendLE(out, &n.z, 8);
      }
    }
  }
  return out;
}

PointCloud readPlyFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return readPly(bytes);
}

void writePlyFile(const PointCloud& cloud, const std::string& path,
                  PlyFormat format) {
  std::vector<uint8_t> bytes = writePly(cloud, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
}

}  // namespace pcc
