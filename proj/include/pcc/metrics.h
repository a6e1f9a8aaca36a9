#pragma once

#include <cstdint>
#include <vector>

#include "pcc/point_cloud.h"

namespace pcc {

//============================================================================
// Point-to-point quality metrics

enum class MetricChannel { Geometry, Y, U, V };

// RMS of the per-point error from A to B: each point of A is matched to its
// geometrically nearest neighbor in B; the error is the Euclidean position
// difference for the geometry channel and the channel difference at that
// neighbor for color channels.
double rmsDistance(const PointCloud& a, const PointCloud& b, MetricChannel ch);

// Symmetric form: max of both directions.
double symmetricRmsDistance(const PointCloud& a, const PointCloud& b,
                            MetricChannel ch);

// Largest axis-aligned extent of the cloud, the geometry PSNR peak.
double geometryPeak(const PointCloud& cloud);

// 10*log10(peak^2 / d^2); a zero distance reports the 999 dB cap so lossless
// rows stay machine readable.
constexpr double kPsnrCap = 999.0;
double psnrFromDistance(double peak, double distance);

// Geometry PSNR with the peak computed on the original cloud (first arg).
double psnrGeometry(const PointCloud& original, const PointCloud& reconstructed);

// Color PSNR with peak 255. Throws when either cloud lacks colors.
double psnrColor(const PointCloud& original, const PointCloud& reconstructed,
                 MetricChannel ch);

struct DistanceReport {
  double rmsForward = 0;   // original -> reconstructed
  double rmsBackward = 0;  // reconstructed -> original
  double symmetricRms = 0;
  double peak = 0;         // geometry peak of the original
  double psnrGeom = 0;
  double psnrY = 0, psnrU = 0, psnrV = 0;  // valid when both clouds have colors
  bool hasColor = false;
};

DistanceReport computeDistanceReport(const PointCloud& original,
                                     const PointCloud& reconstructed);

//============================================================================
// Color space conversion (BT.709 full range, integer rounded)

Vec3u8 rgbToYuvValue(const Vec3u8& rgb);
Vec3u8 yuvToRgbValue(const Vec3u8& yuv);

// Whole-cloud conversion; throws if the cloud is not tagged with the
// expected source space.
PointCloud rgbToYuv(const PointCloud& cloud);
PointCloud yuvToRgb(const PointCloud& cloud);

//============================================================================
// Bjontegaard-delta statistics

struct RdPoint {
  double rate = 0;  // bits per point, > 0
  double psnr = 0;  // dB
};

struct BdStats {
  double bdPsnr = 0;  // dB, positive when curveB is above the benchmark
  double bdRate = 0;  // percent, positive when curveB spends more rate
};

// Cubic fit of PSNR against log10(rate) (and the inverse for the rate delta),
// integrated over the overlapping interval. Both curves need at least four
// points with positive rates; non-overlapping ranges are an error.
BdStats bdStats(const std::vector<RdPoint>& benchmark,
                const std::vector<RdPoint>& curve);

}  // namespace pcc
