#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "pcc/point_cloud.h"
#include "pcc/vec3.h"

namespace pcc {

//============================================================================
// Cubical bounding box with side 2^cubeLog2, extremes (0,0,0)-(2^n,2^n,2^n).

struct BoundingBox {
  Vec3d min;
  Vec3d max;
  int cubeLog2 = 0;
};

// Minimal n with 2^n >= max coordinate, positions assumed offset to a
// non-negative origin. Throws on an empty cloud.
BoundingBox boundingCube(const PointCloud& cloud);

// Axis-aligned extremes of arbitrary (real-valued) positions.
void boundingExtremes(const PointCloud& cloud, Vec3d& min, Vec3d& max);

//============================================================================
// Breadth-first octree decomposition of integer voxels.
//
// Child bit index = 4*(x bit) + 2*(y bit) + 1*(z bit), bit 0 least
// significant. A node is subdivided while it holds more than one point and
// the target depth is not reached; single-point nodes become leaves early.

struct OctreeNode {
  Vec3i origin;        // node cube origin in voxel units
  uint32_t begin = 0;  // range into OctreeCursor::pointIndices
  uint32_t end = 0;
  uint8_t occupancy = 0;  // child byte; 0 for leaves
  bool isLeaf = false;
};

struct OctreeCursor {
  int depth = 0;
  std::vector<std::vector<OctreeNode>> levels;  // levels[l], l = 0 is root
  std::vector<uint32_t> pointIndices;           // reordered input indices

  // Occupancy bytes of all internal nodes in breadth-first order.
  std::vector<uint8_t> occupancyBytes() const;

  // Multiset of voxels held by the leaves (each leaf reports its points).
  std::vector<Vec3i> leafVoxels(const PointCloud& cloud) const;
};

// Positions must be integer voxels in [0, 2^depth). Throws if any point
// falls outside the cube.
OctreeCursor octreeDecompose(const PointCloud& cloud, int depth);

//============================================================================
// k-d tree over 3D points: longest-edge split at the (lower) median,
// immutable after construction, exact nearest-neighbor queries.

class KdTree {
public:
  struct Neighbor {
    uint32_t index;
    double dist2;
  };

  KdTree() = default;
  KdTree(const std::vector<Vec3d>& points, int leafCapacity = 8);

  bool empty() const { return points_.empty(); }
  size_t size() const { return points_.size(); }

  Neighbor nearest(const Vec3d& query) const;

  // k smallest distances in nondecreasing order, ties broken by lower point
  // index. k larger than the point count returns all points.
  std::vector<Neighbor> kNearest(const Vec3d& query, size_t k) const;

  // As kNearest but only over points accepted by the predicate. Pruning uses
  // geometric bounds only, so results stay exact for any predicate.
  std::vector<Neighbor> kNearestIf(
    const Vec3d& query, size_t k,
    const std::function<bool(uint32_t)>& accept) const;

  // Structural checks used by tests: every index in exactly one leaf and the
  // split ordering invariant at every internal node.
  bool checkInvariants() const;

private:
  struct Node {
    int axis = -1;         // -1 for leaf
    double split = 0;
    int32_t left = -1;     // children for internal nodes
    int32_t right = -1;
    uint32_t begin = 0;    // index range for leaves
    uint32_t end = 0;
  };

  int32_t build(uint32_t begin, uint32_t end, int leafCapacity);

  template<typename Sink>
  void search(int32_t nodeId, const Vec3d& query, Sink& sink) const;

  std::vector<Vec3d> points_;
  std::vector<uint32_t> indices_;
  std::vector<Node> nodes_;
  int32_t root_ = -1;
};

}  // namespace pcc
