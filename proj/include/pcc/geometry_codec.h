#pragma once

#include <cstdint>
#include <vector>

#include "pcc/point_cloud.h"
#include "pcc/spatial_index.h"

namespace pcc {

//============================================================================
// Coordinate normalization and position quantization

struct ConversionParams {
  Vec3d translation{0, 0, 0};
  double scale = 1.0;  // must be > 0
};

// frame = (world - translation) / scale
PointCloud convertCoordinates(const PointCloud& world, const ConversionParams& p);
// world = frame * scale + translation
PointCloud invertCoordinates(const PointCloud& frame, const ConversionParams& p);

struct QuantizationParams {
  double scale = 1.0;  // q, must be > 0
  Vec3d minimum{0, 0, 0};
  bool removeDuplicates = false;
};

struct DuplicateMap {
  std::vector<uint32_t> outputIndexOfInput;  // one entry per input point
  size_t uniqueCount = 0;
};

// voxel = Round((position - minimum) * q), round half away from zero.
// With removeDuplicates set, points collapsing to the same voxel are merged
// (first occurrence kept) and the map records where each input landed.
PointCloud quantizePositions(const PointCloud& cloud, const QuantizationParams& p,
                             DuplicateMap* map = nullptr);

PointCloud inverseQuantizePositions(const PointCloud& voxels,
                                    const QuantizationParams& p);

//============================================================================
// Slice partition

enum class PartitionMethod : uint8_t { LongestEdge = 0, Octree = 1 };

struct Slice {
  std::vector<uint32_t> pointIndices;
  Vec3d min, max;
  PartitionMethod method;
};

// Longest-edge mode cuts along the longest axis at intervals of the shortest
// extent (param ignored); octree mode groups points by occupied node at
// octree level param. Slices are disjoint and exhaustive.
std::vector<Slice> partitionSlices(const PointCloud& cloud, PartitionMethod method,
                                   int param = 0);

//============================================================================
// Geometry bitstream

enum class GeometryMode : uint8_t { Lossless = 0, Trisoup = 1, QuantizeOnly = 2 };

struct GeometryHeader {
  GeometryMode mode = GeometryMode::Lossless;
  int cubeLog2 = 0;  // minimal n with 2^n >= max coordinate
  int depth = 0;     // octree depth d (voxel addressability)
  int level = 0;     // coded level l; l == d for lossless
  bool dcmEnabled = false;
  ConversionParams conversion;
  QuantizationParams quantization;
};

struct GeometrySlicePayload {
  uint64_t pointCount = 0;
  std::vector<uint8_t> occupancy;  // arithmetic-coded occupancy + mode flags
  std::vector<uint8_t> dcm;        // bit-packed remaining coordinates
  std::vector<uint8_t> trisoup;    // arithmetic-coded vertex flags + positions
};

struct GeometryBitstream {
  GeometryHeader header;
  std::vector<GeometrySlicePayload> slices;

  std::vector<uint8_t> serialize() const;
  static GeometryBitstream parse(const std::vector<uint8_t>& bytes);
  size_t byteSize() const;
};

// Lossless octree coding of unique integer voxels. With DCM enabled, a node
// with exactly one descendant point and all six face neighbors empty at its
// level is coded as explicit remaining-bit coordinates.
// Throws on duplicate positions.
GeometryBitstream encodeGeometryLossless(const PointCloud& voxels, bool dcmEnabled);

// Triangle-surface lossy coding: octree to level l < d, then per-block edge
// vertices (presence flags + quantized relative positions).
GeometryBitstream encodeGeometryTrisoup(const PointCloud& voxels, int depth,
                                        int level);

// As above but the point set is first split into slices, each coded as an
// independent sub-stream and merged in slice order on decode.
GeometryBitstream encodeGeometrySliced(const PointCloud& voxels,
                                       const std::vector<Slice>& slices,
                                       GeometryMode mode, int trisoupLevelDelta,
                                       bool dcmEnabled);

// Decoded voxel cloud, sorted lexicographically by (x, y, z).
PointCloud decodeGeometry(const GeometryBitstream& stream);

}  // namespace pcc
