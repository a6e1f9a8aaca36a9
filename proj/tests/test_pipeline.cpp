#include <doctest.h>

#include <random>

#include "pcc/codec.h"
#include "pcc/container.h"
#include "pcc/metrics.h"
#include "test_util.h"

using namespace pcc;

TEST_CASE("container serialization round-trips sections") {
  Container c;
  c.add(SectionTag::Geometry, {1, 2, 3});
  c.add(SectionTag::Trailer, {9});
  Container back = Container::parse(c.serialize());
  REQUIRE(back.sections.size() == 2);
  CHECK(*back.find(SectionTag::Geometry) == std::vector<uint8_t>{1, 2, 3});
  CHECK(*back.find(SectionTag::Trailer) == std::vector<uint8_t>{9});
  CHECK(back.find(SectionTag::Vpcc) == nullptr);

  std::vector<uint8_t> corrupt = c.serialize();
  corrupt[1] = 'x';
  CHECK_THROWS(Container::parse(corrupt));
}

TEST_CASE("lossless pipeline reproduces integer clouds exactly") {
  std::mt19937 rng(3);
  PointCloud cloud = test::randomVoxelCloud(rng, 500, 8);

  for (CoderSelection coder : {CoderSelection::Raht, CoderSelection::Predict,
                               CoderSelection::Lifting}) {
    EncoderConfig config;
    config.coder = coder;
    config.qstep = coder == CoderSelection::Predict ? 1.0 : 0.0;
    EncodeStats stats;
    std::vector<uint8_t> bytes = encodeCloud(cloud, config, &stats);
    CHECK(stats.pointCount == cloud.size());
    CHECK(stats.bppTotal > 0);

    PointCloud back = decodeCloud(bytes);
    CHECK(test::sameCloud(cloud, back));
  }
}

TEST_CASE("geometry-only pipeline drops colors but keeps positions") {
  std::mt19937 rng(5);
  PointCloud cloud = test::randomVoxelCloud(rng, 300, 7);
  EncoderConfig config;
  config.coder = CoderSelection::GeometryOnly;
  std::vector<uint8_t> bytes = encodeCloud(cloud, config);
  PointCloud back = decodeCloud(bytes);
  CHECK(!back.hasColors());
  CHECK(test::sortedVoxels(back) == test::sortedVoxels(cloud));
}

TEST_CASE("quantize-only mode scales positions back to world") {
  std::mt19937 rng(7);
  PointCloud cloud = test::randomVoxelCloud(rng, 400, 8, false);
  EncoderConfig config;
  config.coder = CoderSelection::GeometryOnly;
  config.pqs = 0.5;
  std::vector<uint8_t> bytes = encodeCloud(cloud, config);
  PointCloud back = decodeCloud(bytes);
  double d = symmetricRmsDistance(cloud, back, MetricChannel::Geometry);
  CHECK(d <= std::sqrt(3.0) * (0.5 / 0.5 + 1e-9));
}

TEST_CASE("trisoup mode decodes near the original surface") {
  PointCloud plane = test::planeCloud(32, 9);
  EncoderConfig config;
  config.coder = CoderSelection::Raht;
  config.qstep = 4;
  config.dbodl = 1;
  std::vector<uint8_t> bytes = encodeCloud(plane, config);
  PointCloud back = decodeCloud(bytes);
  REQUIRE(!back.empty());
  CHECK(back.hasColors());
  double d = symmetricRmsDistance(plane, back, MetricChannel::Geometry);
  CHECK(d <= 2.0 * std::sqrt(3.0));
}

TEST_CASE("vpcc pipeline reconstructs a surface losslessly end to end") {
  PointCloud square = test::planeCloud(10, 4);
  EncoderConfig config;
  config.coder = CoderSelection::Vpcc;
  config.vpcc.gridWidth = 64;
  EncodeStats stats;
  std::vector<uint8_t> bytes = encodeCloud(square, config, &stats);
  CHECK(stats.bppGeometry > 0);
  CHECK(stats.bppColor > 0);
  PointCloud back = decodeCloud(bytes);
  CHECK(test::sameCloud(square, back));
}

TEST_CASE("world conversion and quantization survive the round trip") {
  std::mt19937 rng(11);
  PointCloud cloud;
  std::uniform_real_distribution<double> u(-40, 40);
  for (int i = 0; i < 300; i++)
    cloud.addPoint({u(rng) + 100, u(rng) - 50, u(rng)},
                   test::fieldColor({double(i), 0, 0}, 20.0));

  EncoderConfig config;
  config.coder = CoderSelection::Raht;
  config.qstep = 0;
  config.conversion.translation = {100, -50, 0};
  config.conversion.scale = 1.0;
  config.pqs = 2.0;

  std::vector<uint8_t> bytes = encodeCloud(cloud, config);
  PointCloud back = decodeCloud(bytes);
  REQUIRE(!back.empty());
  double d = symmetricRmsDistance(cloud, back, MetricChannel::Geometry);
  CHECK(d <= 0.5);  // half a voxel at q = 2
}

TEST_CASE("slicing leaves the decoded set unchanged") {
  std::mt19937 rng(13);
  PointCloud cloud = test::clusteredSurfaceCloud(rng, 2000, 9);
  EncoderConfig plain;
  plain.coder = CoderSelection::GeometryOnly;
  EncoderConfig sliced = plain;
  sliced.slicing = true;
  sliced.partitionMethod = PartitionMethod::Octree;
  sliced.partitionParam = 1;

  PointCloud a = decodeCloud(encodeCloud(cloud, plain));
  PointCloud b = decodeCloud(encodeCloud(cloud, sliced));
  CHECK(test::sortedVoxels(a) == test::sortedVoxels(b));
}

TEST_CASE("lossy color pipelines run through YUV and back") {
  std::mt19937 rng(17);
  PointCloud cloud = test::randomVoxelCloud(rng, 400, 7);
  for (CoderSelection coder : {CoderSelection::Raht, CoderSelection::Predict,
                               CoderSelection::Lifting}) {
    EncoderConfig config;
    config.coder = coder;
    config.qstep = 8;
    PointCloud back = decodeCloud(encodeCloud(cloud, config));
    REQUIRE(back.hasColors());
    CHECK(back.colorSpace() == ColorSpace::RGB);
    CHECK(test::sortedVoxels(back) == test::sortedVoxels(cloud));
  }
}

TEST_CASE("a container without geometry or vpcc sections is rejected") {
  Container c;
  c.add(SectionTag::Trailer, {1});
  CHECK_THROWS(decodeCloud(c.serialize()));
}
