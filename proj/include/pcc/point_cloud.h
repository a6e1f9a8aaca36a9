#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pcc/vec3.h"

namespace pcc {

enum class ColorSpace : uint8_t { RGB = 0, YUV = 1 };

//============================================================================
// The universal currency of every pipeline stage: an ordered list of
// positions with optional per-point color and normal attributes.
//
// Positions are real-valued before quantization and integer voxels after;
// both live in the same double storage so that quantization is the only
// lossy step.

class PointCloud {
public:
  PointCloud() = default;

  size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }

  bool hasColors() const { return !colors_.empty(); }
  bool hasNormals() const { return !normals_.empty(); }
  ColorSpace colorSpace() const { return colorSpace_; }
  void setColorSpace(ColorSpace cs) { colorSpace_ = cs; }

  std::vector<Vec3d>& positions() { return positions_; }
  const std::vector<Vec3d>& positions() const { return positions_; }
  std::vector<Vec3u8>& colors() { return colors_; }
  const std::vector<Vec3u8>& colors() const { return colors_; }
  std::vector<Vec3d>& normals() { return normals_; }
  const std::vector<Vec3d>& normals() const { return normals_; }

  Vec3d& position(size_t i) { return positions_[i]; }
  const Vec3d& position(size_t i) const { return positions_[i]; }
  Vec3u8& color(size_t i) { return colors_[i]; }
  const Vec3u8& color(size_t i) const { return colors_[i]; }
  Vec3d& normal(size_t i) { return normals_[i]; }
  const Vec3d& normal(size_t i) const { return normals_[i]; }

  void addPoint(const Vec3d& pos) { positions_.push_back(pos); }
  void addPoint(const Vec3d& pos, const Vec3u8& rgb) {
    positions_.push_back(pos);
    colors_.push_back(rgb);
  }

  void resize(size_t n) {
    positions_.resize(n);
    if (hasColors()) colors_.resize(n);
    if (hasNormals()) normals_.resize(n);
  }

  void allocColors() { colors_.resize(positions_.size()); }
  void allocNormals() { normals_.resize(positions_.size()); }
  void dropColors() { colors_.clear(); }
  void dropNormals() { normals_.clear(); }

  // Integer voxel view of a position. Valid only after quantization.
  Vec3i voxel(size_t i) const {
    const Vec3d& p = positions_[i];
    return {int64_t(std::llround(p.x)), int64_t(std::llround(p.y)),
            int64_t(std::llround(p.z))};
  }

  // Attribute arrays, when present, must cover every point exactly once.
  void checkInvariants() const {
    if (hasColors() && colors_.size() != positions_.size())
      throw std::logic_error("point cloud: color count != point count");
    if (hasNormals() && normals_.size() != positions_.size())
      throw std::logic_error("point cloud: normal count != point count");
  }

private:
  std::vector<Vec3d> positions_;
  std::vector<Vec3u8> colors_;
  std::vector<Vec3d> normals_;
  ColorSpace colorSpace_ = ColorSpace::RGB;
};

}  // namespace pcc
