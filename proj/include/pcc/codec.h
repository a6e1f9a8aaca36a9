#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcc/attribute_codec.h"
#include "pcc/geometry_codec.h"
#include "pcc/point_cloud.h"
#include "pcc/vpcc.h"

namespace pcc {

//============================================================================
// Whole-cloud encode/decode pipeline behind the CLI: coordinate conversion,
// quantization, geometry coding, re-coloring, attribute coding (or the
// projection pipeline), all wrapped into the PCCX container.

enum class CoderSelection : uint8_t {
  GeometryOnly = 0,
  Raht = 1,
  Predict = 2,
  Lifting = 3,
  Vpcc = 4,
};

struct EncoderConfig {
  CoderSelection coder = CoderSelection::Raht;

  ConversionParams conversion;
  double pqs = 1.0;   // position quantization scale
  bool dedup = true;
  bool dcm = true;
  int dbodl = 0;      // depth minus coded level; > 0 selects trisoup

  bool slicing = false;
  PartitionMethod partitionMethod = PartitionMethod::LongestEdge;
  int partitionParam = 1;

  double qstep = 0;   // attribute quantization step; 0 is lossless
  int lodc = 8;       // level-of-detail count
  int k = 3;          // prediction neighbor count

  VpccConfig vpcc;    // geomQstep/texQstep map to the GQP/CQP ladders

  bool forceYuv = false;

  bool colorLossless() const;
  std::string coderName() const;
};

struct EncodeStats {
  size_t pointCount = 0;
  size_t geometryBytes = 0;
  size_t attributeBytes = 0;
  size_t totalBytes = 0;
  double bppGeometry = 0, bppColor = 0, bppTotal = 0;
};

std::vector<uint8_t> encodeCloud(const PointCloud& world,
                                 const EncoderConfig& config,
                                 EncodeStats* stats = nullptr);

// Inverse of encodeCloud per the codec contracts; returns world coordinates.
PointCloud decodeCloud(const std::vector<uint8_t>& containerBytes);

}  // namespace pcc
