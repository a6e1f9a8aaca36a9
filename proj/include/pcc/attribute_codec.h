#pragma once

#include <cstdint>
#include <vector>

#include "pcc/geometry_codec.h"
#include "pcc/point_cloud.h"

namespace pcc {

//============================================================================
// Color transfer between point sets

// Assigns to every decoded point the color of its nearest original point
// (ties broken by lower index). Throws if the original lacks colors.
PointCloud recolor(const PointCloud& decodedGeom, const PointCloud& original);

// Attribute transfer onto quantized coordinates: the quantized points are
// inverse-quantized and matched against the originals, each voxel receiving
// the nearest original's color.
PointCloud attributeTransfer(const PointCloud& original,
                             const PointCloud& quantizedGeom,
                             const QuantizationParams& params);

//============================================================================
// Level-of-detail partition

struct LodPartition {
  uint32_t initialIndex = 0;
  std::vector<double> thresholds;                // dist_1 .. dist_S, dist_S == 0
  std::vector<std::vector<uint32_t>> refinements;  // R_1 .. R_S in visit order
  std::vector<uint32_t> order;       // full visit order: initial, R_1, ..., R_S
  std::vector<uint32_t> levelOf;     // per point index; 0 for the initial point
  std::vector<uint32_t> levelStart;  // rank at which each level begins in order

  size_t levelCount() const { return refinements.size(); }
};

// Thresholds must be strictly decreasing with the last equal to zero.
void validateLodThresholds(const std::vector<double>& thresholds);

// Distance-threshold subsampling: a point enters R_s iff unvisited and its
// minimum distance to the visited set is >= dist_s. Points are traversed in
// index order; the visited set absorbs everything because dist_S == 0.
LodPartition generateLod(const PointCloud& cloud,
                         const std::vector<double>& thresholds,
                         uint32_t initialIndex);

// Default geometric threshold ladder: dist_1 = cube side / 8, halved per
// level, final level forced to zero.
std::vector<double> defaultLodThresholds(const PointCloud& cloud, int levelCount);

//============================================================================
// Prediction neighborhoods

struct PredictorSet {
  // flattened per-rank neighbor lists over the LoD visit order; rank 0 (the
  // initial point) has no neighbors
  std::vector<uint32_t> offset;      // size order.size() + 1
  std::vector<uint32_t> neighborRank;
  std::vector<double> weight;        // normalized inverse-squared-distance
  std::vector<double> dist2;

  size_t degree(uint32_t rank) const { return offset[rank + 1] - offset[rank]; }
};

// Neighbors of each point are its k nearest among already-coded points. With
// strictlyLowerLevels set (lifting), candidates are restricted to lower
// refinement levels so the update pass stays invertible.
PredictorSet buildPredictors(const PointCloud& cloud, const LodPartition& lod,
                             int k, bool strictlyLowerLevels);

// Influence weights per visit rank: w = 1 plus the accumulated weighted
// contributions of every point this one helps predict.
std::vector<double> computeInfluenceWeights(const PredictorSet& predictors,
                                            size_t pointCount);

//============================================================================
// Attribute bitstream

enum class AttributeCoder : uint8_t { Raht = 0, Predict = 1, Lifting = 2 };

struct AttributeHeader {
  AttributeCoder coder = AttributeCoder::Raht;
  ColorSpace colorSpace = ColorSpace::RGB;
  Vec3d qsteps{0, 0, 0};  // per channel; 0 disables quantization
  int neighborCount = 3;
  uint32_t initialIndex = 0;
  std::vector<double> lodThresholds;
  uint64_t pointCount = 0;
};

struct AttributeBitstream {
  AttributeHeader header;
  std::vector<uint8_t> payload[3];  // per channel

  std::vector<uint8_t> serialize() const;
  static AttributeBitstream parse(const std::vector<uint8_t>& bytes);
  size_t byteSize() const;
};

// Interpolation-based prediction: each point's channels are predicted from
// the inverse-squared-distance weighted combination of its k nearest already
// coded neighbors' reconstructed values; residuals are uniformly quantized
// and entropy coded. qstep 1 (or 0) is lossless.
AttributeBitstream predictTransformEncode(const PointCloud& cloud,
                                          const LodPartition& lod, int k,
                                          const Vec3d& qsteps);

// Lifting transform: per-level prediction plus an update pass feeding
// residuals back into predictor points with influence weights; residuals are
// scaled by the square root of the influence weight before quantization.
// qstep 0 disables quantization and is perfectly reconstructing.
AttributeBitstream liftingTransformEncode(const PointCloud& cloud,
                                          const LodPartition& lod, int k,
                                          const Vec3d& qsteps);

// Region-adaptive hierarchical transform over occupied voxels: bottom-up
// weighted orthonormal butterflies along x, then y, then z per octree level.
// qstep 0 serializes raw coefficients (lossless for 8-bit attributes).
AttributeBitstream rahtEncode(const PointCloud& cloud, const Vec3d& qsteps);

// Unquantized transform coefficients in coding order (one high-pass per
// merge, DC last). The transform is orthonormal, so per-channel coefficient
// energy equals input energy.
std::vector<Vec3d> rahtCoefficients(const PointCloud& cloud);

// Inverse of the three encoders; geometry must already be decoded and match
// the stream's point count.
PointCloud attributeDecode(const AttributeBitstream& stream,
                           const PointCloud& decodedGeom);

}  // namespace pcc
