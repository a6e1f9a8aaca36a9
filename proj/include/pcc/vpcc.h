#pragma once

#include <cstdint>
#include <vector>

#include "pcc/image_codec.h"
#include "pcc/point_cloud.h"

namespace pcc {

//============================================================================
// Projection-based pipeline: PCA normals, six-plane clustering, patch
// extraction, packing, occupancy map, near/far depth layers, padding, and
// reconstruction through a pluggable 2D codec.

struct VpccConfig {
  int normalNeighbors = 9;
  int surfaceThickness = 4;  // max far - near depth gap per pixel
  int blockSize = 16;
  int subBlockSize = 4;
  int gridWidth = 1280;
  int geomQstep = 1;  // image codec steps; <= 1 is lossless
  int texQstep = 1;
};

// Per-point unit normal from the k-NN covariance eigenvector of smallest
// eigenvalue, oriented away from the cloud centroid. Degenerate (collinear)
// neighborhoods fall back to a vector orthogonal to the dominant direction.
std::vector<Vec3d> estimateNormals(const PointCloud& cloud, int k);

// Plane label 0..5 = +X, -X, +Y, -Y, +Z, -Z maximizing dot(normal, axis);
// ties resolve to the earlier axis in that order.
std::vector<int> clusterToPlanes(const PointCloud& cloud,
                                 const std::vector<Vec3d>& normals);

struct Patch {
  int plane = 0;
  int u0 = 0, v0 = 0;  // placement on the packed grid
  int width = 0, height = 0;
  int64_t uOrigin = 0, vOrigin = 0;  // tangent minima in voxel units
  int64_t depthOrigin = 0;           // signed projection-depth minimum

  // local width*height rasters
  std::vector<uint8_t> occupied;
  std::vector<uint16_t> depthNear, depthFar;
  std::vector<Vec3u8> texNear, texFar;

  size_t area() const { return size_t(width) * size_t(height); }
};

// Connected components (26-connectivity) within each label, projected
// orthographically: near layer keeps the minimum depth, the far layer the
// maximum depth within the surface thickness.
std::vector<Patch> extractPatches(const PointCloud& cloud,
                                  const std::vector<int>& labels, int delta);

struct ProjectedFrames {
  int width = 0, height = 0;
  bool hasColor = false;
  ColorSpace colorSpace = ColorSpace::RGB;
  std::vector<Patch> patches;

  // packed full-grid planes, row major
  std::vector<uint8_t> occupancy;
  std::vector<uint16_t> geomNear, geomFar;
  std::vector<uint16_t> texNear[3], texFar[3];

  size_t pixelCount() const { return size_t(width) * size_t(height); }
};

// Greedy packing in descending footprint-area order, raster-scan first fit
// on a 16-pixel-aligned grid; the grid height grows when patches do not fit.
// Fills the frame planes from the placed patches.
ProjectedFrames packPatches(std::vector<Patch> patches, int gridWidth,
                            bool hasColor, ColorSpace colorSpace);

struct OccupancyMap {
  int width = 0, height = 0;
  int blockSize = 16, subBlockSize = 4;
  int subCols = 0, subRows = 0;
  int blockCols = 0, blockRows = 0;
  std::vector<uint8_t> subFlags;    // 1 iff the sub-block holds a real pixel
  std::vector<uint8_t> blockFlags;  // 1 iff every sub-block inside is full

  uint8_t subFlag(int bx, int by) const { return subFlags[by * subCols + bx]; }
  uint8_t blockFlag(int bx, int by) const { return blockFlags[by * blockCols + bx]; }
};

OccupancyMap buildOccupancyMap(const ProjectedFrames& frames, int subBlockSize,
                               int blockSize);

// Iterative 4-neighbor dilation averaging of filled pixels, at most
// maxIterations passes; occupied pixels are untouched and padding never
// marks pixels occupied.
void padImages(ProjectedFrames& frames, int maxIterations = 16);

// Re-emits a 3D point for every occupied pixel at its patch plane and depth;
// the far layer adds a second point when it differs from the near one.
PointCloud reconstructCloud(const ProjectedFrames& frames);

//============================================================================
// End-to-end bitstream

struct VpccBitstream {
  int width = 0, height = 0;
  bool hasColor = false;
  ColorSpace colorSpace = ColorSpace::RGB;
  int geomQstep = 1, texQstep = 1;
  std::vector<Patch> patchTable;        // metadata only, rasters not serialized
  std::vector<uint8_t> occupancyBits;   // deflated bit-packed row-major grid
  std::vector<uint8_t> geomNear, geomFar;
  std::vector<uint8_t> texNear[3], texFar[3];

  std::vector<uint8_t> serialize() const;
  static VpccBitstream parse(const std::vector<uint8_t>& bytes);
  size_t byteSize() const;
};

VpccBitstream vpccEncode(const PointCloud& voxels, const VpccConfig& config,
                         const ImageCodec& codec);
PointCloud vpccDecode(const VpccBitstream& stream, const ImageCodec& codec);

}  // namespace pcc
