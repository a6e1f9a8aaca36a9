#include "pcc/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcc/spatial_index.h"

namespace pcc {

namespace {

// pairwise summation keeps reductions deterministic and accurate
double pairwiseSum(const std::vector<double>& v, size_t begin, size_t end) {
  size_t n = end - begin;
  if (n == 0) return 0;
  if (n <= 8) {
    double s = 0;
    for (size_t i = begin; i < end; i++) s += v[i];
    return s;
  }
  size_t mid = begin + n / 2;
  return pairwiseSum(v, begin, mid) + pairwiseSum(v, mid, end);
}

int channelIndex(MetricChannel ch) {
  switch (ch) {
  case MetricChannel::Y: return 0;
  case MetricChannel::U: return 1;
  case MetricChannel::V: return 2;
  default: return -1;
  }
}

}  // namespace

//============================================================================

double rmsDistance(const PointCloud& a, const PointCloud& b, MetricChannel ch) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("rms distance of empty cloud");
  const int c = channelIndex(ch);
  if (c >= 0 && (!a.hasColors() || !b.hasColors()))
    throw std::invalid_argument("color channel metric requires colors on both clouds");

  KdTree tree(b.positions());
  std::vector<double> errors(a.size());
  for (size_t i = 0; i < a.size(); i++) {
    KdTree::Neighbor nn = tree.nearest(a.position(i));
    if (c < 0) {
      errors[i] = nn.dist2;
    } else {
      double d = double(a.color(i)[c]) - double(b.color(nn.index)[c]);
      errors[i] = d * d;
    }
  }
  return std::sqrt(pairwiseSum(errors, 0, errors.size()) / double(a.size()));
}

double symmetricRmsDistance(const PointCloud& a, const PointCloud& b,
                            MetricChannel ch) {
  return std::max(rmsDistance(a, b, ch), rmsDistance(b, a, ch));
}

double geometryPeak(const PointCloud& cloud) {
  Vec3d min, max;
  boundingExtremes(cloud, min, max);
  Vec3d extent = max - min;
  return std::max(extent.x, std::max(extent.y, extent.z));
}

double psnrFromDistance(double peak, double distance) {
  if (distance <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10((peak * peak) / (distance * distance)));
}

double psnrGeometry(const PointCloud& original, const PointCloud& reconstructed) {
  double d = symmetricRmsDistance(original, reconstructed, MetricChannel::Geometry);
  return psnrFromDistance(geometryPeak(original), d);
}

double psnrColor(const PointCloud& original, const PointCloud& reconstructed,
                 MetricChannel ch) {
  if (channelIndex(ch) < 0)
    throw std::invalid_argument("psnrColor needs a color channel");
  double d = symmetricRmsDistance(original, reconstructed, ch);
  return psnrFromDistance(255.0, d);
}

DistanceReport computeDistanceReport(const PointCloud& original,
                                     const PointCloud& reconstructed) {
  DistanceReport report;
  report.rmsForward =
    rmsDistance(original, reconstructed, MetricChannel::Geometry);
  report.rmsBackward =
    rmsDistance(reconstructed, original, MetricChannel::Geometry);
  report.symmetricRms = std::max(report.rmsForward, report.rmsBackward);
  report.peak = geometryPeak(original);
  report.psnrGeom = psnrFromDistance(report.peak, report.symmetricRms);
  report.hasColor = original.hasColors() && reconstructed.hasColors();
  if (report.hasColor) {
    report.psnrY = psnrColor(original, reconstructed, MetricChannel::Y);
    report.psnrU = psnrColor(original, reconstructed, MetricChannel::U);
    report.psnrV = psnrColor(original, reconstructed, MetricChannel::V);
  }
  return report;
}

//============================================================================
// BT.709 full-range color conversion

namespace {

constexpr double kR = 0.2126, kG = 0.7152, kB = 0.0722;
constexpr double kCbScale = 1.8556;  // 2 * (1 - kB)
constexpr double kCrScale = 1.5748;  // 2 * (1 - kR)

uint8_t roundClamp(double v) {
  return uint8_t(std::clamp<long long>(std::llround(v), 0, 255));
}

}  // namespace

Vec3u8 rgbToYuvValue(const Vec3u8& rgb) {
  double r = rgb.x, g = rgb.y, b = rgb.z;
  double y = kR * r + kG * g + kB * b;
  double u = (b - y) / kCbScale + 128.0;
  double v = (r - y) / kCrScale + 128.0;
  return {roundClamp(y), roundClamp(u), roundClamp(v)};
}

Vec3u8 yuvToRgbValue(const Vec3u8& yuv) {
  double y = yuv.x, u = double(yuv.y) - 128.0, v = double(yuv.z) - 128.0;
  double r = y + kCrScale * v;
  double b = y + kCbScale * u;
  double g = (y - kR * r - kB * b) / kG;
  return {roundClamp(r), roundClamp(g), roundClamp(b)};
}

PointCloud rgbToYuv(const PointCloud& cloud) {
  if (!cloud.hasColors()) throw std::invalid_argument("cloud has no colors");
  if (cloud.colorSpace() != ColorSpace::RGB)
    throw std::invalid_argument("cloud is not tagged RGB");
  PointCloud out = cloud;
  for (Vec3u8& c : out.colors()) c = rgbToYuvValue(c);
  out.setColorSpace(ColorSpace::YUV);
  return out;
}

PointCloud yuvToRgb(const PointCloud& cloud) {
  if (!cloud.hasColors()) throw std::invalid_argument("cloud has no colors");
  if (cloud.colorSpace() != ColorSpace::YUV)
    throw std::invalid_argument("cloud is not tagged YUV");
  PointCloud out = cloud;
  for (Vec3u8& c : out.colors()) c = yuvToRgbValue(c);
  out.setColorSpace(ColorSpace::RGB);
  return out;
}

//============================================================================
// Bjontegaard statistics

namespace {

struct Cubic {
  double c[4];  // c0 + c1 x + c2 x^2 + c3 x^3, x pre-shifted by xMean
  double xMean;

  double integral(double lo, double hi) const {
    auto anti = [&](double x) {
      double t = x - xMean;
      return c[0] * t + c[1] * t * t / 2 + c[2] * t * t * t / 3
        + c[3] * t * t * t * t / 4;
    };
    return anti(hi) - anti(lo);
  }
};

Cubic fitCubic(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n = xs.size();
  double xMean = 0;
  for (double x : xs) xMean += x;
  xMean /= double(n);

  // normal equations on the mean-shifted abscissa
  double a[4][5] = {};
  for (size_t i = 0; i < n; i++) {
    double t = xs[i] - xMean;
    double pw[7] = {1, t, t * t, t * t * t, 0, 0, 0};
    pw[4] = pw[3] * t;
    pw[5] = pw[4] * t;
    pw[6] = pw[5] * t;
    for (int r = 0; r < 4; r++) {
      for (int c = 0; c < 4; c++) a[r][c] += pw[r + c];
      a[r][4] += pw[r] * ys[i];
    }
  }

  for (int col = 0; col < 4; col++) {
    int pivot = col;
    for (int r = col + 1; r < 4; r++)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-30)
      throw std::invalid_argument("degenerate rate-distortion curve");
    for (int r = 0; r < 4; r++) {
      if (r == col) continue;
      double f = a[r][col] / a[col][col];
      for (int c = col; c < 5; c++) a[r][c] -= f * a[col][c];
    }
  }

  Cubic fit;
  fit.xMean = xMean;
  for (int r = 0; r < 4; r++) fit.c[r] = a[r][4] / a[r][r];
  return fit;
}

void validateCurve(const std::vector<RdPoint>& curve) {
  if (curve.size() < 4)
    throw std::invalid_argument("BD statistics need at least 4 points per curve");
  for (const RdPoint& p : curve) {
    if (!(p.rate > 0)) throw std::invalid_argument("BD rates must be positive");
    if (!std::isfinite(p.psnr))
      throw std::invalid_argument("BD PSNR values must be finite");
  }
}

double averageGap(const std::vector<double>& xA, const std::vector<double>& yA,
                  const std::vector<double>& xB, const std::vector<double>& yB) {
  double lo = std::max(*std::min_element(xA.begin(), xA.end()),
                       *std::min_element(xB.begin(), xB.end()));
  double hi = std::min(*std::max_element(xA.begin(), xA.end()),
                       *std::max_element(xB.begin(), xB.end()));
  if (!(hi > lo))
    throw std::invalid_argument("curves do not overlap");
  Cubic fa = fitCubic(xA, yA);
  Cubic fb = fitCubic(xB, yB);
  return (fb.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
}

}  // namespace

BdStats bdStats(const std::vector<RdPoint>& benchmark,
                const std::vector<RdPoint>& curve) {
  validateCurve(benchmark);
  validateCurve(curve);

  std::vector<double> logRa, psnrA, logRb, psnrB;
  for (const RdPoint& p : benchmark) {
    logRa.push_back(std::log10(p.rate));
    psnrA.push_back(p.psnr);
  }
  for (const RdPoint& p : curve) {
    logRb.push_back(std::log10(p.rate));
    psnrB.push_back(p.psnr);
  }

  BdStats stats;
  stats.bdPsnr = averageGap(logRa, psnrA, logRb, psnrB);
  double logGap = averageGap(psnrA, logRa, psnrB, logRb);
  stats.bdRate = (std::pow(10.0, logGap) - 1.0) * 100.0;
  return stats;
}

}  // namespace pcc
