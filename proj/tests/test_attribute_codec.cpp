#include <doctest.h>

#include <random>

#include "pcc/attribute_codec.h"
#include "pcc/metrics.h"
#include "test_util.h"

using namespace pcc;

namespace {

PointCloud coloredCloudOf(const std::vector<std::pair<Vec3d, Vec3u8>>& pts) {
  PointCloud c;
  for (const auto& [p, col] : pts) c.addPoint(p, col);
  return c;
}

uint32_t bruteNearest(const PointCloud& cloud, const Vec3d& q) {
  uint32_t best = 0;
  double bestD = (cloud.position(0) - q).norm2();
  for (uint32_t i = 1; i < cloud.size(); i++) {
    double d = (cloud.position(i) - q).norm2();
    if (d < bestD) {
      bestD = d;
      best = i;
    }
  }
  return best;
}

double channelMse(const PointCloud& a, const PointCloud& b, int c) {
  double sum = 0;
  for (size_t i = 0; i < a.size(); i++) {
    double d = double(a.color(i)[c]) - double(b.color(i)[c]);
    sum += d * d;
  }
  return sum / double(a.size());
}

}  // namespace

//============================================================================
// re-color and attribute transfer

TEST_CASE("recolor copies exactly when geometries coincide") {
  std::mt19937 rng(3);
  PointCloud original = test::randomVoxelCloud(rng, 100, 6);
  PointCloud bare = original;
  bare.dropColors();
  PointCloud out = recolor(bare, original);
  REQUIRE(out.hasColors());
  for (size_t i = 0; i < out.size(); i++)
    CHECK(out.color(i) == original.color(i));
}

TEST_CASE("recolor from a single point floods its color") {
  PointCloud original = coloredCloudOf({{{5, 5, 5}, {9, 8, 7}}});
  std::mt19937 rng(5);
  PointCloud target = test::randomVoxelCloud(rng, 50, 5, false);
  PointCloud out = recolor(target, original);
  for (size_t i = 0; i < out.size(); i++)
    CHECK(out.color(i) == Vec3u8{9, 8, 7});
}

TEST_CASE("recolor matches the brute-force nearest neighbor") {
  std::mt19937 rng(7);
  PointCloud original = test::randomVoxelCloud(rng, 200, 6);
  PointCloud target = test::randomVoxelCloud(rng, 150, 6, false);
  PointCloud out = recolor(target, original);
  for (size_t i = 0; i < target.size(); i++)
    CHECK(out.color(i) == original.color(bruteNearest(original, target.position(i))));

  PointCloud colorless = original;
  colorless.dropColors();
  CHECK_THROWS(recolor(target, colorless));
}

TEST_CASE("attribute transfer is the identity at unit scale") {
  std::mt19937 rng(11);
  PointCloud original = test::randomVoxelCloud(rng, 120, 6);
  QuantizationParams p;  // q = 1, no dedup
  PointCloud quantized = quantizePositions(original, p);
  PointCloud out = attributeTransfer(original, quantized, p);
  for (size_t i = 0; i < out.size(); i++)
    CHECK(out.color(i) == original.color(i));
}

TEST_CASE("collapsed voxels receive the nearest original color") {
  PointCloud original = coloredCloudOf(
    {{{0.0, 0, 0}, {10, 10, 10}}, {{0.9, 0, 0}, {200, 200, 200}}});
  QuantizationParams p;
  p.scale = 0.5;  // both quantize to voxel 0
  p.removeDuplicates = true;
  PointCloud quantized = quantizePositions(original, p);
  REQUIRE(quantized.size() == 1);
  PointCloud out = attributeTransfer(original, quantized, p);
  // voxel 0 inverse-quantizes to 0.0, nearest original is the first point
  CHECK(out.color(0) == Vec3u8{10, 10, 10});
}

//============================================================================
// LoD generation

TEST_CASE("single zero threshold visits everything in traversal order") {
  std::mt19937 rng(13);
  PointCloud cloud = test::randomVoxelCloud(rng, 60, 5);
  LodPartition lod = generateLod(cloud, {0.0}, 0);
  REQUIRE(lod.order.size() == cloud.size());
  CHECK(lod.order[0] == 0);
  for (size_t i = 1; i < lod.order.size(); i++) CHECK(lod.order[i] == i);
  CHECK(lod.refinements[0].size() == cloud.size() - 1);
}

TEST_CASE("collinear hand trace: R_1 = {3}, R_2 = {1}") {
  PointCloud cloud;
  cloud.addPoint({0, 0, 0});
  cloud.addPoint({1, 0, 0});
  cloud.addPoint({3, 0, 0});
  LodPartition lod = generateLod(cloud, {2.0, 0.0}, 0);

  REQUIRE(lod.refinements.size() == 2);
  REQUIRE(lod.refinements[0].size() == 1);
  CHECK(lod.refinements[0][0] == 2);  // the point at coordinate 3
  REQUIRE(lod.refinements[1].size() == 1);
  CHECK(lod.refinements[1][0] == 1);  // the point at coordinate 1
  CHECK(lod.levelOf[0] == 0);
  CHECK(lod.levelOf[2] == 1);
  CHECK(lod.levelOf[1] == 2);
  // LoD_1 = initial + R_1
  CHECK(lod.order == std::vector<uint32_t>{0, 2, 1});
}

TEST_CASE("coincident points all fall to the final level") {
  PointCloud cloud;
  for (int i = 0; i < 5; i++) cloud.addPoint({7, 7, 7});
  LodPartition lod = generateLod(cloud, {5.0, 0.0}, 0);
  CHECK(lod.refinements[0].empty());
  CHECK(lod.refinements[1].size() == 4);
}

TEST_CASE("threshold constraint violations are rejected") {
  PointCloud cloud;
  cloud.addPoint({0, 0, 0});
  CHECK_THROWS(generateLod(cloud, {}, 0));
  CHECK_THROWS(generateLod(cloud, {1.0, 1.0, 0.0}, 0));   // not decreasing
  CHECK_THROWS(generateLod(cloud, {2.0, 1.0}, 0));        // last not zero
  CHECK_THROWS(generateLod(cloud, {0.0, 0.0}, 0));        // not strictly less
  CHECK_NOTHROW(generateLod(cloud, {2.0, 1.0, 0.0}, 0));
}

TEST_CASE("every refinement point clears its level threshold") {
  std::mt19937 rng(17);
  PointCloud cloud = test::randomVoxelCloud(rng, 300, 7);
  std::vector<double> thresholds = {16.0, 8.0, 4.0, 2.0, 0.0};
  LodPartition lod = generateLod(cloud, thresholds, 0);

  // replay the trace: min distance to everything visited earlier
  for (size_t r = 1; r < lod.order.size(); r++) {
    uint32_t idx = lod.order[r];
    uint32_t level = lod.levelOf[idx];
    REQUIRE(level >= 1);
    if (level == thresholds.size()) continue;  // final level takes the rest
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t q = 0; q < r; q++)
      dmin = std::min(
        dmin, (cloud.position(lod.order[q]) - cloud.position(idx)).norm());
    CHECK(dmin >= thresholds[level - 1]);
  }

  // partition: every point in exactly one refinement (initial kept apart)
  std::vector<int> seen(cloud.size(), 0);
  seen[lod.initialIndex]++;
  for (const auto& level : lod.refinements)
    for (uint32_t i : level) seen[i]++;
  for (int s : seen) CHECK(s == 1);
}

//============================================================================
// predictors

TEST_CASE("prediction weights for two neighbors at distances 1 and 2") {
  PointCloud cloud;
  cloud.addPoint({0, 0, 0}, {100, 0, 0});  // initial
  cloud.addPoint({0, 0, 3}, {200, 0, 0});  // R_1 (distance 3 >= 2.5)
  cloud.addPoint({0, 0, 1}, {0, 0, 0});    // R_2, neighbors at distance 1 and 2
  LodPartition lod = generateLod(cloud, {2.5, 0.0}, 0);
  REQUIRE(lod.order == std::vector<uint32_t>{0, 1, 2});

  PredictorSet preds = buildPredictors(cloud, lod, 2, false);
  REQUIRE(preds.degree(2) == 2);
  // nearest first: distance 1 -> weight 0.8, distance 2 -> weight 0.2
  CHECK(preds.weight[preds.offset[2]] == doctest::Approx(0.8));
  CHECK(preds.weight[preds.offset[2] + 1] == doctest::Approx(0.2));
  CHECK(preds.dist2[preds.offset[2]] == doctest::Approx(1.0));
  CHECK(preds.dist2[preds.offset[2] + 1] == doctest::Approx(4.0));
}

TEST_CASE("predictor neighbors always precede the point in coding order") {
  std::mt19937 rng(19);
  PointCloud cloud = test::randomVoxelCloud(rng, 200, 6);
  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 4), 0);
  for (bool strict : {false, true}) {
    PredictorSet preds = buildPredictors(cloud, lod, 3, strict);
    for (uint32_t r = 1; r < lod.order.size(); r++)
      for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++) {
        CHECK(preds.neighborRank[j] < r);
        if (strict)
          CHECK(lod.levelOf[lod.order[preds.neighborRank[j]]]
                < lod.levelOf[lod.order[r]]);
      }
  }
}

TEST_CASE("influence weight doubles for a single unit-distance influencer") {
  PointCloud cloud;
  cloud.addPoint({0, 0, 0}, {1, 1, 1});
  cloud.addPoint({1, 0, 0}, {2, 2, 2});
  LodPartition lod = generateLod(cloud, {0.0}, 0);
  PredictorSet preds = buildPredictors(cloud, lod, 3, true);
  std::vector<double> w = computeInfluenceWeights(preds, 2);
  CHECK(w[0] == doctest::Approx(2.0));  // 1 + zeta(=1) * w(=1)
  CHECK(w[1] == doctest::Approx(1.0));
}

//============================================================================
// predict transform

TEST_CASE("uniform colors predict to zero residuals everywhere") {
  std::mt19937 rng(23);
  PointCloud cloud = test::randomVoxelCloud(rng, 150, 6, false);
  cloud.allocColors();
  for (auto& c : cloud.colors()) c = {77, 88, 99};

  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 3), 0);
  AttributeBitstream stream = predictTransformEncode(cloud, lod, 3, {1, 1, 1});
  PointCloud out = attributeDecode(stream, cloud);
  for (size_t i = 0; i < out.size(); i++) CHECK(out.color(i) == Vec3u8{77, 88, 99});
  // near-zero payload: every residual is a single zero flag
  CHECK(stream.payload[0].size() < 80);
}

TEST_CASE("predict transform is lossless at unit step") {
  std::mt19937 rng(29);
  for (int iter = 0; iter < 4; iter++) {
    PointCloud cloud = test::randomVoxelCloud(rng, 300, 7);
    LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 4), 0);
    AttributeBitstream stream = predictTransformEncode(cloud, lod, 3, {1, 1, 1});
    PointCloud out = attributeDecode(stream, cloud);
    for (size_t i = 0; i < cloud.size(); i++) CHECK(out.color(i) == cloud.color(i));
  }
}

TEST_CASE("huge quantization exposes the raw prediction chain") {
  // with every residual quantized to zero, decoded values are exactly the
  // recursive inverse-distance-weighted predictions
  std::mt19937 rng(31);
  PointCloud cloud = test::randomVoxelCloud(rng, 120, 6);
  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 3), 0);
  const int k = 3;
  AttributeBitstream stream =
    predictTransformEncode(cloud, lod, k, {1e9, 1e9, 1e9});
  PointCloud out = attributeDecode(stream, cloud);

  // independent oracle: replay the weighted prediction over decoded values
  PredictorSet preds = buildPredictors(cloud, lod, k, false);
  std::vector<Vec3<int64_t>> recon(cloud.size());
  for (uint32_t r = 0; r < lod.order.size(); r++) {
    if (r == 0) {
      const Vec3u8& c0 = cloud.color(lod.order[0]);
      recon[0] = {c0.x, c0.y, c0.z};
    } else {
      for (int c = 0; c < 3; c++) {
        double acc = 0;
        for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++)
          acc += preds.weight[j] * double(recon[preds.neighborRank[j]][c]);
        recon[r][c] = std::clamp<int64_t>(std::llround(acc), 0, 255);
      }
    }
    const Vec3u8& got = out.color(lod.order[r]);
    for (int c = 0; c < 3; c++) CHECK(int64_t(got[c]) == recon[r][c]);
  }
}

//============================================================================
// lifting transform

TEST_CASE("lifting with quantization disabled reconstructs perfectly") {
  std::mt19937 rng(37);
  for (int iter = 0; iter < 4; iter++) {
    PointCloud cloud = test::randomVoxelCloud(rng, 200, 7);
    LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 4), 0);
    AttributeBitstream stream = liftingTransformEncode(cloud, lod, 3, {0, 0, 0});
    PointCloud out = attributeDecode(stream, cloud);
    for (size_t i = 0; i < cloud.size(); i++) CHECK(out.color(i) == cloud.color(i));
  }
}

TEST_CASE("uniform colors leave lifting attributes unchanged") {
  std::mt19937 rng(41);
  PointCloud cloud = test::randomVoxelCloud(rng, 100, 6, false);
  cloud.allocColors();
  for (auto& c : cloud.colors()) c = {50, 60, 70};
  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 3), 0);
  AttributeBitstream stream = liftingTransformEncode(cloud, lod, 3, {0, 0, 0});
  PointCloud out = attributeDecode(stream, cloud);
  for (size_t i = 0; i < out.size(); i++) CHECK(out.color(i) == Vec3u8{50, 60, 70});
}

TEST_CASE("influence weights strictly increase with each update") {
  std::mt19937 rng(43);
  PointCloud cloud = test::randomVoxelCloud(rng, 150, 6);
  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 4), 0);
  PredictorSet preds = buildPredictors(cloud, lod, 3, true);
  std::vector<double> w = computeInfluenceWeights(preds, cloud.size());
  for (double v : w) CHECK(v >= 1.0);
  // a point with at least one influencer ends strictly above 1
  std::vector<char> influenced(cloud.size(), 0);
  for (uint32_t r = 1; r < lod.order.size(); r++)
    for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++)
      influenced[preds.neighborRank[j]] = 1;
  for (size_t i = 0; i < cloud.size(); i++)
    if (influenced[i]) CHECK(w[i] > 1.0);
}

//============================================================================
// RAHT

TEST_CASE("two equal-weight points: DC and AC follow the sign convention") {
  PointCloud cloud;
  cloud.addPoint({0, 0, 0}, {10, 10, 10});
  cloud.addPoint({1, 0, 0}, {20, 20, 20});
  std::vector<Vec3d> coeffs = rahtCoefficients(cloud);
  REQUIRE(coeffs.size() == 2);
  CHECK(coeffs[0].x == doctest::Approx(-10.0 / std::sqrt(2.0)));  // high pass
  CHECK(coeffs[1].x == doctest::Approx(30.0 / std::sqrt(2.0)));   // DC
}

TEST_CASE("single point transforms to its own value") {
  PointCloud cloud;
  cloud.addPoint({4, 5, 6}, {123, 45, 67});
  std::vector<Vec3d> coeffs = rahtCoefficients(cloud);
  REQUIRE(coeffs.size() == 1);
  CHECK(coeffs[0].x == doctest::Approx(123));
  CHECK(coeffs[0].y == doctest::Approx(45));
  CHECK(coeffs[0].z == doctest::Approx(67));
}

TEST_CASE("RAHT conserves energy per channel") {
  std::mt19937 rng(47);
  for (int iter = 0; iter < 6; iter++) {
    PointCloud cloud = test::randomVoxelCloud(rng, 256, 6);
    std::vector<Vec3d> coeffs = rahtCoefficients(cloud);
    for (int c = 0; c < 3; c++) {
      double in = 0, out = 0;
      for (size_t i = 0; i < cloud.size(); i++) {
        double v = cloud.color(i)[c];
        in += v * v;
      }
      for (const Vec3d& h : coeffs) out += h[c] * h[c];
      CHECK(std::abs(out - in) <= 1e-9 * std::max(1.0, in));
    }
  }
}

TEST_CASE("RAHT decode-encode identity at zero quantization") {
  std::mt19937 rng(53);
  for (int iter = 0; iter < 4; iter++) {
    PointCloud cloud = test::randomVoxelCloud(rng, 300, 7);
    AttributeBitstream stream = rahtEncode(cloud, {0, 0, 0});
    PointCloud out = attributeDecode(stream, cloud);
    for (size_t i = 0; i < cloud.size(); i++) CHECK(out.color(i) == cloud.color(i));
  }
}

//============================================================================
// shared stream behavior

TEST_CASE("attribute decode rejects mismatched geometry") {
  std::mt19937 rng(59);
  PointCloud cloud = test::randomVoxelCloud(rng, 64, 5);
  AttributeBitstream stream = rahtEncode(cloud, {2, 2, 2});
  PointCloud smaller = cloud;
  smaller.resize(32);
  CHECK_THROWS(attributeDecode(stream, smaller));
}

TEST_CASE("attribute bitstream survives serialization") {
  std::mt19937 rng(61);
  PointCloud cloud = test::randomVoxelCloud(rng, 64, 5);
  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 3), 0);
  AttributeBitstream stream = liftingTransformEncode(cloud, lod, 3, {2, 2, 2});
  AttributeBitstream back = AttributeBitstream::parse(stream.serialize());
  CHECK(back.header.coder == stream.header.coder);
  CHECK(back.header.lodThresholds == stream.header.lodThresholds);
  PointCloud a = attributeDecode(stream, cloud);
  PointCloud b = attributeDecode(back, cloud);
  for (size_t i = 0; i < cloud.size(); i++) CHECK(a.color(i) == b.color(i));
}

TEST_CASE("channel error is nonincreasing as the step shrinks") {
  std::mt19937 rng(67);
  PointCloud cloud = test::randomVoxelCloud(rng, 400, 7);
  LodPartition lod = generateLod(cloud, defaultLodThresholds(cloud, 4), 0);

  auto run = [&](int which, double q) {
    Vec3d steps{q, q, q};
    AttributeBitstream stream = which == 0 ? rahtEncode(cloud, steps)
      : which == 1 ? predictTransformEncode(cloud, lod, 3, steps)
                   : liftingTransformEncode(cloud, lod, 3, steps);
    return attributeDecode(stream, cloud);
  };

  for (int which : {0, 1, 2}) {
    double prev[3] = {1e30, 1e30, 1e30};
    for (double q : {16.0, 8.0, 4.0, 2.0}) {
      PointCloud out = run(which, q);
      for (int c = 0; c < 3; c++) {
        double mse = channelMse(cloud, out, c);
        CHECK(mse <= prev[c] + 1e-9);
        prev[c] = mse;
      }
    }
  }
}
