#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcc/point_cloud.h"

namespace pcc {

// Parse error with the byte offset at which the input stopped making sense.
class PlyError : public std::runtime_error {
public:
  PlyError(const std::string& what, size_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")")
    , offset_(offset)
  {}
  size_t offset() const { return offset_; }

private:
  size_t offset_;
};

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Parses a PLY 1.0 buffer into a point cloud. float/double positions are
// retained at full precision; red/green/blue (or r/g/b) uchar properties map
// to colors, nx/ny/nz to normals. Unknown vertex properties and non-vertex
// elements (faces, edges) are skipped.
PointCloud readPly(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> writePly(const PointCloud& cloud, PlyFormat format);

PointCloud readPlyFile(const std::string& path);
void writePlyFile(const PointCloud& cloud, const std::string& path,
                  PlyFormat format);

}  // namespace pcc
