#include "pcc/spatial_index.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pcc {

//============================================================================
// Bounding boxes

void boundingExtremes(const PointCloud& cloud, Vec3d& min, Vec3d& max) {
  if (cloud.empty()) throw std::invalid_argument("bounding box of empty cloud");
  min = max = cloud.position(0);
  for (const Vec3d& p : cloud.positions()) {
    for (int a = 0; a < 3; a++) {
      min[a] = std::min(min[a], p[a]);
      max[a] = std::max(max[a], p[a]);
    }
  }
}

BoundingBox boundingCube(const PointCloud& cloud) {
  Vec3d min, max;
  boundingExtremes(cloud, min, max);
  if (min.x < 0 || min.y < 0 || min.z < 0)
    throw std::invalid_argument("bounding cube requires non-negative positions");

  double maxc = std::max(max.x, std::max(max.y, max.z));
  int n = 0;
  while (std::ldexp(1.0, n) < maxc) n++;

  BoundingBox box;
  box.min = {0, 0, 0};
  double side = std::ldexp(1.0, n);
  box.max = {side, side, side};
  box.cubeLog2 = n;
  return box;
}

//============================================================================
// Octree decomposition

std::vector<uint8_t> OctreeCursor::occupancyBytes() const {
  std::vector<uint8_t> bytes;
  for (const auto& level : levels)
    for (const OctreeNode& node : level)
      if (!node.isLeaf) bytes.push_back(node.occupancy);
  return bytes;
}

std::vector<Vec3i> OctreeCursor::leafVoxels(const PointCloud& cloud) const {
  std::vector<Vec3i> voxels;
  for (const auto& level : levels)
    for (const OctreeNode& node : level)
      if (node.isLeaf)
        for (uint32_t i = node.begin; i < node.end; i++)
          voxels.push_back(cloud.voxel(pointIndices[i]));
  return voxels;
}

OctreeCursor octreeDecompose(const PointCloud& cloud, int depth) {
  if (cloud.empty()) throw std::invalid_argument("octree of empty cloud");
  if (depth < 0 || depth > 62) throw std::invalid_argument("bad octree depth");

  const int64_t side = int64_t(1) << depth;
  std::vector<Vec3i> voxels(cloud.size());
  for (size_t i = 0; i < cloud.size(); i++) {
    voxels[i] = cloud.voxel(i);
    const Vec3i& v = voxels[i];
    if (v.x < 0 || v.y < 0 || v.z < 0 || v.x >= side || v.y >= side || v.z >= side)
      throw std::out_of_range("point outside the bounding cube");
  }

  OctreeCursor cursor;
  cursor.depth = depth;
  cursor.pointIndices.resize(cloud.size());
  std::iota(cursor.pointIndices.begin(), cursor.pointIndices.end(), 0u);

  OctreeNode root;
  root.origin = {0, 0, 0};
  root.begin = 0;
  root.end = uint32_t(cloud.size());
  root.isLeaf = depth == 0;
  cursor.levels.push_back({root});

  std::vector<uint32_t> scratch;
  for (int level = 0; level < depth; level++) {
    const int childBit = depth - level - 1;
    std::vector<OctreeNode> next;
    for (OctreeNode& node : cursor.levels[level]) {
      uint32_t counts[8] = {};
      for (uint32_t i = node.begin; i < node.end; i++) {
        const Vec3i& v = voxels[cursor.pointIndices[i]];
        int child = int(((v.x >> childBit) & 1) << 2 | ((v.y >> childBit) & 1) << 1
                        | ((v.z >> childBit) & 1));
        counts[child]++;
      }

      uint32_t offsets[8];
      uint32_t acc = node.begin;
      for (int c = 0; c < 8; c++) {
        offsets[c] = acc;
        acc += counts[c];
      }

      scratch.assign(cursor.pointIndices.begin() + node.begin,
                     cursor.pointIndices.begin() + node.end);
      uint32_t fill[8];
      std::copy(offsets, offsets + 8, fill);
      for (uint32_t idx : scratch) {
        const Vec3i& v = voxels[idx];
        int child = int(((v.x >> childBit) & 1) << 2 | ((v.y >> childBit) & 1) << 1
                        | ((v.z >> childBit) & 1));
        cursor.pointIndices[fill[child]++] = idx;
      }

      node.occupancy = 0;
      for (int c = 0; c < 8; c++) {
        if (!counts[c]) continue;
        node.occupancy |= uint8_t(1u << c);
        OctreeNode child;
        child.origin = {node.origin.x + (int64_t((c >> 2) & 1) << childBit),
                        node.origin.y + (int64_t((c >> 1) & 1) << childBit),
                        node.origin.z + (int64_t(c & 1) << childBit)};
        child.begin = offsets[c];
        child.end = offsets[c] + counts[c];
        child.isLeaf = level + 1 == depth;
        next.push_back(child);
      }
    }
    cursor.levels.push_back(std::move(next));
  }
  return cursor;
}

//============================================================================
// k-d tree

KdTree::KdTree(const std::vector<Vec3d>& points, int leafCapacity)
  : points_(points) {
  if (points_.empty()) throw std::invalid_argument("k-d tree of empty point set");
  if (leafCapacity < 1) throw std::invalid_argument("leaf capacity must be >= 1");
  indices_.resize(points_.size());
  std::iota(indices_.begin(), indices_.end(), 0u);
  nodes_.reserve(2 * points_.size() / size_t(leafCapacity) + 4);
  root_ = build(0, uint32_t(points_.size()), leafCapacity);
}

int32_t KdTree::build(uint32_t begin, uint32_t end, int leafCapacity) {
  const uint32_t count = end - begin;
  int32_t id = int32_t(nodes_.size());
  nodes_.emplace_back();

  if (count <= uint32_t(leafCapacity)) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Vec3d lo = points_[indices_[begin]], hi = lo;
  for (uint32_t i = begin; i < end; i++) {
    const Vec3d& p = points_[indices_[i]];
    for (int a = 0; a < 3; a++) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  int axis = 0;
  double extent = hi.x - lo.x;
  if (hi.y - lo.y > extent) { axis = 1; extent = hi.y - lo.y; }
  if (hi.z - lo.z > extent) axis = 2;

  // lower median keeps both halves nonempty for any duplicate pattern
  uint32_t mid = begin + (count - 1) / 2;
  std::nth_element(indices_.begin() + begin, indices_.begin() + mid,
                   indices_.begin() + end, [&](uint32_t a, uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  double split = points_[indices_[mid]][axis];

  nodes_[id].axis = axis;
  nodes_[id].split = split;
  int32_t left = build(begin, mid + 1, leafCapacity);
  int32_t right = build(mid + 1, end, leafCapacity);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {

// Bounded best-k set ordered by (distance, index).
struct NeighborHeap {
  size_t k;
  std::vector<KdTree::Neighbor> heap;

  static bool worse(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.index < b.index;
  }

  void offer(uint32_t index, double dist2) {
    KdTree::Neighbor cand{index, dist2};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), worse);
    } else if (worse(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }

  // Geometric pruning bound; ties must still be visited so the lower-index
  // rule can fire, hence callers compare with <=.
  double bound() const {
    return heap.size() < k ? std::numeric_limits<double>::infinity()
                           : heap.front().dist2;
  }

  std::vector<KdTree::Neighbor> sorted() {
    std::sort(heap.begin(), heap.end(), worse);
    return std::move(heap);
  }
};

struct AllSink {
  NeighborHeap inner;
  bool accepts(uint32_t) const { return true; }
};

struct FilterSink {
  NeighborHeap inner;
  const std::function<bool(uint32_t)>* accept;
  bool accepts(uint32_t i) const { return (*accept)(i); }
};

}  // namespace

template<typename Sink>
void KdTree::search(int32_t nodeId, const Vec3d& query, Sink& sink) const {
  const Node& node = nodes_[nodeId];
  if (node.axis < 0) {
    for (uint32_t i = node.begin; i < node.end; i++) {
      uint32_t idx = indices_[i];
      if (!sink.accepts(idx)) continue;
      sink.inner.offer(idx, (points_[idx] - query).norm2());
    }
    return;
  }

  double delta = query[node.axis] - node.split;
  int32_t near = delta <= 0 ? node.left : node.right;
  int32_t far = delta <= 0 ? node.right : node.left;
  search(near, query, sink);
  if (delta * delta <= sink.inner.bound()) search(far, query, sink);
}

KdTree::Neighbor KdTree::nearest(const Vec3d& query) const {
  AllSink sink{NeighborHeap{1, {}}};
  search(root_, query, sink);
  return sink.inner.heap.front();
}

std::vector<KdTree::Neighbor> KdTree::kNearest(const Vec3d& query, size_t k) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  AllSink sink{NeighborHeap{k, {}}};
  sink.inner.heap.reserve(std::min(k, size()));
  search(root_, query, sink);
  return sink.inner.sorted();
}

std::vector<KdTree::Neighbor> KdTree::kNearestIf(
  const Vec3d& query, size_t k,
  const std::function<bool(uint32_t)>& accept) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  FilterSink sink{NeighborHeap{k, {}}, &accept};
  search(root_, query, sink);
  return sink.inner.sorted();
}

bool KdTree::checkInvariants() const {
  std::vector<int> seen(points_.size(), 0);
  for (const Node& node : nodes_) {
    if (node.axis < 0) {
      for (uint32_t i = node.begin; i < node.end; i++) seen[indices_[i]]++;
      continue;
    }
    // all left-subtree coordinates <= split <= all right-subtree coordinates
    auto checkSide = [&](int32_t child, bool isLeft) {
      std::vector<int32_t> stack{child};
      while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (n.axis >= 0) {
          stack.push_back(n.left);
          stack.push_back(n.right);
          continue;
        }
        for (uint32_t i = n.begin; i < n.end; i++) {
          double c = points_[indices_[i]][node.axis];
          if (isLeft ? c > node.split : c < node.split) return false;
        }
      }
      return true;
    };
    if (!checkSide(node.left, true) || !checkSide(node.right, false)) return false;
  }
  for (int s : seen)
    if (s != 1) return false;
  return true;
}

}  // namespace pcc
