// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcc/codec.h"
#include "pcc/metrics.h"
#include "pcc/spatial_index.h"
#include "pcc/vpcc.h"
#include "test_util.h"

using namespace pcc;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }
};

//----------------------------------------------------------------------------
// 1. Lossless round trip across geometry + all three attribute coders

bool criterion1(std::string& note) {
  Check c;
  auto start = Clock::now();
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> logSize(std::log(10.0),
                                                 std::log(10000.0));

  std::vector<PointCloud> clouds;
  for (int i = 0; i < 50; i++)
    clouds.push_back(
      test::randomVoxelCloud(rng, size_t(std::exp(logSize(rng))), 10));
  clouds.push_back(test::planeCloud(32, 17));
  clouds.push_back(test::sphereShellCloud(15));
  clouds.push_back(test::cubeShellCloud(12));

  const CoderSelection coders[] = {CoderSelection::Raht, CoderSelection::Predict,
                                   CoderSelection::Lifting};
  size_t idx = 0;
  for (const PointCloud& cloud : clouds) {
    CoderSelection coder = coders[idx++ % 3];
    EncoderConfig config;
    config.coder = coder;
    config.qstep = coder == CoderSelection::Predict ? 1.0 : 0.0;
    config.pqs = 1.0;
    config.dcm = true;
    PointCloud back = decodeCloud(encodeCloud(cloud, config));
    if (!test::sameCloud(cloud, back)) {
      c.expect(false, "round trip mismatch on cloud of " +
                        std::to_string(cloud.size()) + " points");
      break;
    }
  }
  // every structured shape additionally passes through all three coders
  for (const PointCloud* shape :
       {&clouds[50], &clouds[51], &clouds[52]}) {
    for (CoderSelection coder : coders) {
      EncoderConfig config;
      config.coder = coder;
      config.qstep = coder == CoderSelection::Predict ? 1.0 : 0.0;
      PointCloud back = decodeCloud(encodeCloud(*shape, config));
      c.expect(test::sameCloud(*shape, back), "structured shape mismatch");
    }
  }

  double elapsed = secondsSince(start);
  c.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s >= 60s");
  note = "53 clouds, 3 coders, " + std::to_string(elapsed).substr(0, 5) + " s";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 2. Lossless geometry compression sanity on clustered clouds

bool criterion2(std::string& note) {
  Check c;
  std::mt19937 rng(202);
  std::vector<PointCloud> clouds;
  clouds.push_back(test::planeCloud(64, 100, false));
  clouds.push_back(test::sphereShellCloud(40, false));
  clouds.push_back(test::clusteredSurfaceCloud(rng, 5000, 10, false));

  std::ostringstream bpps;
  for (const PointCloud& cloud : clouds) {
    EncoderConfig config;
    config.coder = CoderSelection::GeometryOnly;
    EncodeStats stats;
    encodeCloud(cloud, config, &stats);
    bpps << " " << stats.bppGeometry;
    c.expect(cloud.size() >= 1000, "cloud too small for the criterion");
    c.expect(stats.bppGeometry < 15.0,
             "geometry bpp " + std::to_string(stats.bppGeometry) + " >= 15");
  }
  note = "geometry bpp:" + bpps.str() + " (bound 15)";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 3. k-d tree correctness against brute force

bool criterion3(std::string& note) {
  Check c;
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> u(0, 1024);

  size_t instances = 0;
  for (int t = 0; t < 10 && c.ok; t++) {
    std::vector<Vec3d> pts(200 + t * 50);
    for (Vec3d& p : pts) p = {u(rng), u(rng), u(rng)};
    KdTree tree(pts, 4);
    for (int q = 0; q < 100 && c.ok; q++) {
      Vec3d query{u(rng), u(rng), u(rng)};
      instances++;

      uint32_t bestIdx = 0;
      double bestD = (pts[0] - query).norm2();
      for (uint32_t i = 1; i < pts.size(); i++) {
        double d = (pts[i] - query).norm2();
        if (d < bestD) {
          bestD = d;
          bestIdx = i;
        }
      }
      KdTree::Neighbor nn = tree.nearest(query);
      c.expect(nn.dist2 == bestD && nn.index == bestIdx,
               "nearest mismatch vs brute force");

      std::vector<double> dist(pts.size());
      for (uint32_t i = 0; i < pts.size(); i++) dist[i] = (pts[i] - query).norm2();
      std::sort(dist.begin(), dist.end());
      auto got = tree.kNearest(query, 8);
      for (int j = 0; j < 8; j++)
        c.expect(got[j].dist2 == dist[j], "k-NN distance mismatch");
    }
  }

  std::vector<Vec3d> fig = {{2, 3, 0}, {4, 7, 0}, {5, 4, 0},
                            {9, 6, 0}, {8, 1, 0}, {7, 2, 0}};
  KdTree tree(fig, 1);
  KdTree::Neighbor nn = tree.nearest({9, 7, 0});
  c.expect(nn.index == 3 && std::abs(std::sqrt(nn.dist2) - 1.0) < 1e-15,
           "2D six-point example failed");

  note = std::to_string(instances) + " random instances, exact equality";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 4. LoD hand trace and threshold validation

bool criterion4(std::string& note) {
  Check c;
  PointCloud cloud;
  cloud.addPoint({0, 0, 0});
  cloud.addPoint({1, 0, 0});
  cloud.addPoint({3, 0, 0});
  LodPartition lod = generateLod(cloud, {2.0, 0.0}, 0);
  c.expect(lod.refinements.size() == 2, "level count");
  c.expect(lod.refinements[0] == std::vector<uint32_t>{2}, "R_1 != {3}");
  c.expect(lod.refinements[1] == std::vector<uint32_t>{1}, "R_2 != {1}");

  bool threw = false;
  try {
    generateLod(cloud, {1.0, 2.0, 0.0}, 0);
  } catch (const std::exception&) {
    threw = true;
  }
  c.expect(threw, "increasing thresholds accepted");
  threw = false;
  try {
    generateLod(cloud, {2.0, 1.0}, 0);
  } catch (const std::exception&) {
    threw = true;
  }
  c.expect(threw, "nonzero final threshold accepted");

  note = "R_1={3}, R_2={1}; constraint violations rejected";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 5. RAHT energy conservation and lossless identity

bool criterion5(std::string& note) {
  Check c;
  std::mt19937 rng(505);
  double worstRel = 0;
  for (int t = 0; t < 100 && c.ok; t++) {
    PointCloud cloud = test::randomVoxelCloud(rng, 50 + size_t(t) * 5, 7);
    std::vector<Vec3d> coeffs = rahtCoefficients(cloud);
    for (int ch = 0; ch < 3; ch++) {
      double in = 0, out = 0;
      for (size_t i = 0; i < cloud.size(); i++) {
        double v = cloud.color(i)[ch];
        in += v * v;
      }
      for (const Vec3d& h : coeffs) out += h[ch] * h[ch];
      double rel = std::abs(out - in) / std::max(1.0, in);
      worstRel = std::max(worstRel, rel);
      c.expect(rel <= 1e-9, "energy mismatch " + std::to_string(rel));
    }
    if (t % 10 == 0) {
      PointCloud back = attributeDecode(rahtEncode(cloud, {0, 0, 0}), cloud);
      for (size_t i = 0; i < cloud.size(); i++)
        c.expect(back.color(i) == cloud.color(i), "identity at qstep 0 failed");
    }
  }
  std::ostringstream os;
  os.precision(3);
  os << "100 clouds, worst relative energy error " << worstRel;
  note = os.str();
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 6. Lifting perfect reconstruction and weight oracle

bool criterion6(std::string& note) {
  Check c;
  std::mt19937 rng(606);
  for (int t = 0; t < 100 && c.ok; t++) {
    size_t count = 20 + size_t(rng() % 181);  // up to 200 points
    PointCloud cloud = test::randomVoxelCloud(rng, count, 7);
    LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 4), 0);
    AttributeBitstream stream = liftingTransformEncode(cloud, lod, 3, {0, 0, 0});
    PointCloud back = attributeDecode(stream, cloud);
    for (size_t i = 0; i < cloud.size(); i++)
      c.expect(back.color(i) == cloud.color(i), "reconstruction mismatch");

    // direct re-implementation of the weight recursion: every point adds
    // zeta * (its weight) to each of its predictors, finest level first
    PredictorSet preds = buildPredictors(cloud, lod, 3, true);
    std::vector<double> oracle(lod.order.size(), 1.0);
    for (size_t s = lod.levelCount(); s >= 1; s--) {
      uint32_t begin = lod.levelStart[s];
      uint32_t end = s == lod.levelCount() ? uint32_t(lod.order.size())
                                           : lod.levelStart[s + 1];
      for (uint32_t r = begin; r < end; r++)
        for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++)
          oracle[preds.neighborRank[j]] +=
            (1.0 / preds.dist2[j]) * oracle[r];
    }
    std::vector<double> got = computeInfluenceWeights(preds, lod.order.size());
    for (size_t i = 0; i < got.size(); i++)
      c.expect(std::abs(got[i] - oracle[i]) <= 1e-9 * oracle[i],
               "weight mismatch vs oracle");
  }
  note = "100 clouds, exact reconstruction, weights match the oracle";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 7. Predict transform against direct formula evaluation

bool criterion7(std::string& note) {
  Check c;
  std::mt19937 rng(707);
  size_t configurations = 0;

  for (int t = 0; t < 10 && c.ok; t++) {
    PointCloud cloud = test::randomVoxelCloud(rng, 150, 7);
    LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 3), 0);
    const int k = 3;

    // all residuals quantize to zero, so decoded values are exactly the
    // recursive inverse-distance-weighted predictions
    AttributeBitstream stream =
      predictTransformEncode(cloud, lod, k, {1e9, 1e9, 1e9});
    PointCloud out = attributeDecode(stream, cloud);

    PredictorSet preds = buildPredictors(cloud, lod, k, false);
    std::vector<Vec3<int64_t>> recon(cloud.size());
    for (uint32_t r = 0; r < lod.order.size(); r++) {
      if (r == 0) {
        const Vec3u8& c0 = cloud.color(lod.order[0]);
        recon[0] = {c0.x, c0.y, c0.z};
      } else {
        configurations++;
        for (int ch = 0; ch < 3; ch++) {
          double acc = 0;
          for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++)
            acc += preds.weight[j] * double(recon[preds.neighborRank[j]][ch]);
          recon[r][ch] = std::clamp<int64_t>(std::llround(acc), 0, 255);
        }
      }
      const Vec3u8& got = out.color(lod.order[r]);
      for (int ch = 0; ch < 3; ch++)
        c.expect(int64_t(got[ch]) == recon[r][ch], "prediction mismatch vs direct formula");
    }

    // unit-step losslessness
    PointCloud exact = attributeDecode(
      predictTransformEncode(cloud, lod, k, {1, 1, 1}), cloud);
    for (size_t i = 0; i < cloud.size(); i++)
      c.expect(exact.color(i) == cloud.color(i), "qstep=1 not lossless");
  }

  note = std::to_string(configurations) + " predicted points match the direct formula exactly";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 8. Trisoup distance bound and DBODL monotonicity

bool criterion8(std::string& note) {
  Check c;
  std::ostringstream os;
  for (int shape = 0; shape < 2 && c.ok; shape++) {
    PointCloud cloud = shape == 0 ? test::planeCloud(32, 9, false)
                                  : test::sphereShellCloud(14, false);
    double prevPsnr = std::numeric_limits<double>::infinity();
    for (int dbodl : {1, 2}) {
      EncoderConfig config;
      config.coder = CoderSelection::GeometryOnly;
      config.dbodl = dbodl;
      PointCloud back = decodeCloud(encodeCloud(cloud, config));
      c.expect(!back.empty(), "empty trisoup reconstruction");
      double w = double(1 << dbodl);
      double d = symmetricRmsDistance(cloud, back, MetricChannel::Geometry);
      c.expect(d <= w * std::sqrt(3.0),
               "d_s_rms " + std::to_string(d) + " > W*sqrt(3)");
      double psnr = psnrGeometry(cloud, back);
      c.expect(psnr <= prevPsnr + 1e-12,
               "coarser DBODL produced higher geometry PSNR");
      prevPsnr = psnr;
      os << (shape == 0 ? " plane" : " sphere") << "/W" << int(w) << ":"
         << int(psnr * 100) / 100.0 << "dB";
    }
  }
  note = "bounds met;" + os.str();
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 9. Metric oracles and BD anchors

bool criterion9(std::string& note) {
  Check c;
  std::mt19937 rng(909);

  for (int t = 0; t < 5 && c.ok; t++) {
    PointCloud a = test::randomVoxelCloud(rng, 500, 8);
    PointCloud b = test::randomVoxelCloud(rng, 400, 8);
    for (MetricChannel ch : {MetricChannel::Geometry, MetricChannel::Y,
                             MetricChannel::U, MetricChannel::V}) {
      double sum = 0;
      for (size_t i = 0; i < a.size(); i++) {
        size_t best = 0;
        double bestD = (b.position(0) - a.position(i)).norm2();
        for (size_t j = 1; j < b.size(); j++) {
          double d = (b.position(j) - a.position(i)).norm2();
          if (d < bestD) {
            bestD = d;
            best = j;
          }
        }
        if (ch == MetricChannel::Geometry) {
          sum += bestD;
        } else {
          int ci = ch == MetricChannel::Y ? 0 : ch == MetricChannel::U ? 1 : 2;
          double d = double(a.color(i)[ci]) - double(b.color(best)[ci]);
          sum += d * d;
        }
      }
      double oracle = std::sqrt(sum / double(a.size()));
      c.expect(std::abs(rmsDistance(a, b, ch) - oracle) <= 1e-12,
               "rms differs from brute force beyond 1e-12");
    }
  }

  PointCloud span;
  span.addPoint({0, 0, 0});
  span.addPoint({1023, 500, 7});
  c.expect(geometryPeak(span) == 1023.0, "peak extent mismatch");
  c.expect(std::abs(psnrFromDistance(1023.0, 1.0)
                    - 10.0 * std::log10(1023.0 * 1023.0)) < 1e-12,
           "PSNR formula mismatch");

  std::vector<RdPoint> base = {{0.5, 30}, {1.0, 34}, {2.0, 37.5}, {4.0, 40}};
  std::vector<RdPoint> shifted = base;
  for (RdPoint& p : shifted) p.psnr += 1.0;
  BdStats s1 = bdStats(base, shifted);
  c.expect(std::abs(s1.bdPsnr - 1.0) <= 1e-6, "BD-PSNR shift anchor");

  std::vector<RdPoint> doubled = base;
  for (RdPoint& p : doubled) p.rate *= 2.0;
  BdStats s2 = bdStats(base, doubled);
  c.expect(std::abs(s2.bdRate - 100.0) <= 0.1, "BD-BR doubling anchor");

  note = "brute-force oracles within 1e-12; BD anchors 1.0 dB / +100%";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 10. Projection pipeline invariants

bool criterion10(std::string& note) {
  Check c;
  std::mt19937 rng(1010);

  // occupancy-map invariants on random packings
  for (int t = 0; t < 5; t++) {
    std::uniform_int_distribution<int> dim(1, 30);
    std::vector<Patch> patches;
    for (int i = 0; i < 12; i++) {
      Patch p;
      p.plane = 4;
      p.width = dim(rng);
      p.height = dim(rng);
      p.occupied.assign(p.area(), 0);
      for (uint8_t& o : p.occupied) o = rng() % 3 ? 1 : 0;
      p.depthNear.assign(p.area(), 0);
      p.depthFar.assign(p.area(), 0);
      p.texNear.assign(p.area(), {0, 0, 0});
      p.texFar.assign(p.area(), {0, 0, 0});
      patches.push_back(std::move(p));
    }
    ProjectedFrames frames = packPatches(patches, 96, false, ColorSpace::RGB);
    OccupancyMap map = buildOccupancyMap(frames, 4, 16);
    for (int sy = 0; sy < map.subRows && c.ok; sy++)
      for (int sx = 0; sx < map.subCols && c.ok; sx++) {
        bool any = false;
        for (int y = sy * 4; y < std::min((sy + 1) * 4, frames.height); y++)
          for (int x = sx * 4; x < std::min((sx + 1) * 4, frames.width); x++)
            any |= frames.occupancy[size_t(y) * size_t(frames.width) + size_t(x)];
        c.expect(map.subFlag(sx, sy) == (any ? 1 : 0), "sub-block flag invariant");
      }
    for (int by = 0; by < map.blockRows && c.ok; by++)
      for (int bx = 0; bx < map.blockCols && c.ok; bx++) {
        bool all = true;
        for (int sy = by * 4; sy < (by + 1) * 4; sy++)
          for (int sx = bx * 4; sx < (bx + 1) * 4; sx++)
            all &= map.subFlag(sx, sy) != 0;
        c.expect(map.blockFlag(bx, by) == (all ? 1 : 0), "block flag invariant");
      }
  }

  // lossless flat-patch reconstruction through the image codec
  PointCloud square = test::planeCloud(12, 5);
  VpccConfig config;
  config.gridWidth = 64;
  PointCloud back = vpccDecode(vpccEncode(square, config, ReferenceImageCodec()),
                               ReferenceImageCodec());
  c.expect(test::sameCloud(square, back), "flat patch not reconstructed exactly");

  // planar normals against the analytic plane
  PointCloud plane = test::planeCloud(16, 0, false);
  std::vector<Vec3d> normals = estimateNormals(plane, 9);
  for (const Vec3d& n : normals)
    c.expect(std::abs(std::abs(n.z) - 1.0) < 1e-6 && std::abs(n.x) < 1e-6
               && std::abs(n.y) < 1e-6,
             "planar normal outside 1e-6");

  note = "occupancy invariants, exact flat-patch path, analytic normals";
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

//----------------------------------------------------------------------------
// 11. Monotone rate-distortion ladders per attribute coder

bool criterion11(std::string& note) {
  Check c;
  auto start = Clock::now();
  PointCloud dense = test::sphereShellCloud(24);  // ~7k colored points

  std::ostringstream os;
  for (CoderSelection coder : {CoderSelection::Raht, CoderSelection::Predict,
                               CoderSelection::Lifting}) {
    std::vector<RdPoint> curve;
    PointCloud denseYuv = rgbToYuv(dense);
    for (double q : {2.0, 4.0, 8.0, 16.0}) {
      EncoderConfig config;
      config.coder = coder;
      config.qstep = q;
      EncodeStats stats;
      std::vector<uint8_t> bytes = encodeCloud(dense, config, &stats);
      PointCloud recon = rgbToYuv(decodeCloud(bytes));
      curve.push_back({stats.bppTotal, psnrColor(denseYuv, recon, MetricChannel::Y)});
    }
    for (size_t i = 1; i < curve.size(); i++) {
      c.expect(curve[i].rate <= curve[i - 1].rate + 1e-9,
               "rate not decreasing along the qstep ladder");
      c.expect(curve[i].psnr <= curve[i - 1].psnr + 1e-9,
               "PSNR rose while rate fell");
    }
    os << " " << (coder == CoderSelection::Raht ? "raht"
                  : coder == CoderSelection::Predict ? "predict" : "lifting")
       << "[" << curve.front().psnr << ".." << curve.back().psnr << "dB]";
  }

  double elapsed = secondsSince(start);
  c.expect(elapsed < 120.0, "runtime " + std::to_string(elapsed) + "s >= 120s");
  note = "monotone;" + os.str();
  if (!c.ok) note = c.detail.str();
  return c.ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    bool (*run)(std::string&);
  };
  const Criterion criteria[] = {
    {1, "lossless round trip, all coders", criterion1},
    {2, "lossless geometry compression sanity", criterion2},
    {3, "k-d tree exactness", criterion3},
    {4, "LoD hand trace and validation", criterion4},
    {5, "RAHT energy conservation and identity", criterion5},
    {6, "lifting perfect reconstruction and weights", criterion6},
    {7, "predict transform formula equivalence", criterion7},
    {8, "trisoup distance bound and monotonicity", criterion8},
    {9, "metric oracles and BD anchors", criterion9},
    {10, "projection pipeline invariants", criterion10},
    {11, "monotone rate-distortion ladders", criterion11},
  };

  int failures = 0;
  for (const Criterion& cr : criteria) {
    std::string note;
    bool ok = false;
    try {
      ok = cr.run(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", cr.id,
                cr.name, note.c_str());
    std::fflush(stdout);
    if (!ok) failures++;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
