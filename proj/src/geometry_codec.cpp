#include "pcc/geometry_codec.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "pcc/bytes.h"
#include "pcc/entropy.h"

namespace pcc {

//============================================================================
// Coordinate conversion and quantization

PointCloud convertCoordinates(const PointCloud& world, const ConversionParams& p) {
  if (p.scale <= 0) throw std::invalid_argument("conversion scale must be > 0");
  PointCloud out = world;
  for (Vec3d& pos : out.positions())
    pos = (pos - p.translation) / p.scale;
  return out;
}

PointCloud invertCoordinates(const PointCloud& frame, const ConversionParams& p) {
  if (p.scale <= 0) throw std::invalid_argument("conversion scale must be > 0");
  PointCloud out = frame;
  for (Vec3d& pos : out.positions())
    pos = pos * p.scale + p.translation;
  return out;
}

namespace {

// round half away from zero, the tie rule fixed for bitstream determinism
double roundHalfAway(double v) { return double(std::llround(v)); }

struct Vec3iHash {
  size_t operator()(const Vec3i& v) const {
    uint64_t h = uint64_t(v.x) * 0x9E3779B97F4A7C15ull;
    h ^= uint64_t(v.y) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= uint64_t(v.z) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return size_t(h);
  }
};

}  // namespace

PointCloud quantizePositions(const PointCloud& cloud, const QuantizationParams& p,
                             DuplicateMap* map) {
  if (p.scale <= 0) throw std::invalid_argument("quantization scale must be > 0");

  PointCloud out;
  if (cloud.hasColors()) out.setColorSpace(cloud.colorSpace());
  if (map) {
    map->outputIndexOfInput.assign(cloud.size(), 0);
    map->uniqueCount = 0;
  }

  std::unordered_map<Vec3i, uint32_t, Vec3iHash> voxelOf;
  if (p.removeDuplicates) voxelOf.reserve(cloud.size());

  for (size_t i = 0; i < cloud.size(); i++) {
    const Vec3d& pos = cloud.position(i);
    Vec3i v{int64_t(roundHalfAway((pos.x - p.minimum.x) * p.scale)),
            int64_t(roundHalfAway((pos.y - p.minimum.y) * p.scale)),
            int64_t(roundHalfAway((pos.z - p.minimum.z) * p.scale))};

    uint32_t outIndex;
    if (p.removeDuplicates) {
      auto [it, inserted] = voxelOf.try_emplace(v, uint32_t(out.size()));
      outIndex = it->second;
      if (!inserted) {
        if (map) map->outputIndexOfInput[i] = outIndex;
        continue;
      }
    } else {
      outIndex = uint32_t(out.size());
    }

    out.positions().push_back({double(v.x), double(v.y), double(v.z)});
    if (cloud.hasColors()) out.colors().push_back(cloud.color(i));
    if (map) map->outputIndexOfInput[i] = outIndex;
  }
  if (map) map->uniqueCount = out.size();
  return out;
}

PointCloud inverseQuantizePositions(const PointCloud& voxels,
                                    const QuantizationParams& p) {
  if (p.scale <= 0) throw std::invalid_argument("quantization scale must be > 0");
  PointCloud out = voxels;
  for (Vec3d& pos : out.positions())
    pos = pos / p.scale + p.minimum;
  return out;
}

//============================================================================
// Slice partition

std::vector<Slice> partitionSlices(const PointCloud& cloud, PartitionMethod method,
                                   int param) {
  if (cloud.empty()) throw std::invalid_argument("cannot partition empty cloud");

  Vec3d min, max;
  boundingExtremes(cloud, min, max);
  Vec3d extent = max - min;

  std::vector<Slice> slices;
  if (method == PartitionMethod::LongestEdge) {
    int longAxis = 0;
    for (int a = 1; a < 3; a++)
      if (extent[a] > extent[longAxis]) longAxis = a;
    double interval = std::min(extent.x, std::min(extent.y, extent.z));
    if (interval <= 0) interval = std::max(extent[longAxis], 1.0);

    size_t count = size_t(std::max(1.0, std::ceil(extent[longAxis] / interval)));
    slices.resize(count);
    for (Slice& s : slices) s.method = method;
    for (size_t i = 0; i < cloud.size(); i++) {
      double offset = cloud.position(i)[longAxis] - min[longAxis];
      size_t k = std::min(count - 1, size_t(std::max(0.0, std::floor(offset / interval))));
      slices[k].pointIndices.push_back(uint32_t(i));
    }
    slices.erase(std::remove_if(slices.begin(), slices.end(),
                                [](const Slice& s) { return s.pointIndices.empty(); }),
                 slices.end());
  } else {
    // group by occupied octree node at the partition depth, breadth-first order
    int depth = 0;
    double maxc = std::max(max.x, std::max(max.y, max.z));
    while (std::ldexp(1.0, depth) <= maxc) depth++;
    int level = std::clamp(param, 0, depth);
    int shift = depth - level;

    std::unordered_map<uint64_t, uint32_t> sliceOf;
    std::vector<uint64_t> mortonOf;
    for (size_t i = 0; i < cloud.size(); i++) {
      Vec3i v = cloud.voxel(i);
      uint64_t gx = uint64_t(v.x) >> shift, gy = uint64_t(v.y) >> shift,
               gz = uint64_t(v.z) >> shift;
      uint64_t morton = 0;
      for (int b = level - 1; b >= 0; b--)
        morton = morton << 3 | ((gx >> b) & 1) << 2 | ((gy >> b) & 1) << 1
          | ((gz >> b) & 1);
      auto [it, inserted] = sliceOf.try_emplace(morton, uint32_t(slices.size()));
      if (inserted) {
        slices.emplace_back();
        slices.back().method = method;
        mortonOf.push_back(morton);
      }
      slices[it->second].pointIndices.push_back(uint32_t(i));
    }
    std::vector<size_t> order(slices.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return mortonOf[a] < mortonOf[b]; });
    std::vector<Slice> sorted;
    sorted.reserve(slices.size());
    for (size_t i : order) sorted.push_back(std::move(slices[i]));
    slices = std::move(sorted);
  }

  for (Slice& s : slices) {
    s.min = cloud.position(s.pointIndices.front());
    s.max = s.min;
    for (uint32_t i : s.pointIndices) {
      const Vec3d& p = cloud.position(i);
      for (int a = 0; a < 3; a++) {
        s.min[a] = std::min(s.min[a], p[a]);
        s.max[a] = std::max(s.max[a], p[a]);
      }
    }
  }
  return slices;
}

//============================================================================
// Octree coding

namespace {

constexpr int kMaxDepth = 20;

struct GeomContexts {
  ContextModel occupancy[2][8][4];
  ContextModel dcmFlag;
  ContextModel vertexFlag;
};

int parentBucket(int pop) {
  return pop <= 1 ? 0 : pop == 2 ? 1 : pop <= 4 ? 2 : 3;
}

uint64_t packNode(int64_t x, int64_t y, int64_t z) {
  return uint64_t(x) << 42 | uint64_t(y) << 21 | uint64_t(z);
}

// edge key: axis plus edge origin, 20-bit fields
uint64_t packEdge(int axis, const Vec3i& o) {
  return uint64_t(axis) << 60 | uint64_t(o.x) << 40 | uint64_t(o.y) << 20
    | uint64_t(o.z);
}

struct EncNode {
  Vec3i origin;
  uint32_t begin, end;
  uint8_t parentPop;
};

struct DecNode {
  Vec3i origin;
  uint8_t parentPop;
};

template<typename Node>
std::unordered_set<uint64_t> levelOccupancy(const std::vector<Node>& nodes,
                                            int shift) {
  std::unordered_set<uint64_t> occ;
  occ.reserve(nodes.size() * 2);
  for (const Node& n : nodes)
    occ.insert(packNode(n.origin.x >> shift, n.origin.y >> shift,
                        n.origin.z >> shift));
  return occ;
}

bool faceNeighborsEmpty(const std::unordered_set<uint64_t>& occ, const Vec3i& origin,
                        int shift, int64_t gridSize) {
  int64_t g[3] = {origin.x >> shift, origin.y >> shift, origin.z >> shift};
  for (int a = 0; a < 3; a++) {
    for (int d = -1; d <= 1; d += 2) {
      int64_t n[3] = {g[0], g[1], g[2]};
      n[a] += d;
      if (n[a] < 0 || n[a] >= gridSize) continue;
      if (occ.count(packNode(n[0], n[1], n[2]))) return false;
    }
  }
  return true;
}

void encodeOccupancyByte(ArithmeticEncoder& enc, GeomContexts& ctx, uint8_t byte,
                         int levelClass, int parentPop) {
  int bucket = parentBucket(parentPop);
  int ones = 0;
  for (int b = 0; b < 8; b++) {
    int bit = (byte >> b) & 1;
    enc.encodeBit(ctx.occupancy[levelClass][ones][bucket], bit);
    ones += bit;
  }
}

uint8_t decodeOccupancyByte(ArithmeticDecoder& dec, GeomContexts& ctx,
                            int levelClass, int parentPop) {
  int bucket = parentBucket(parentPop);
  uint8_t byte = 0;
  int ones = 0;
  for (int b = 0; b < 8; b++) {
    int bit = dec.decodeBit(ctx.occupancy[levelClass][ones][bucket]);
    byte |= uint8_t(bit << b);
    ones += bit;
  }
  return byte;
}

//----------------------------------------------------------------------------
// Breadth-first slice coder. The encode side produces the arithmetic
// occupancy stream, the bit-packed DCM coordinate list, and (for trisoup)
// the block list at the coded level; the decode side mirrors it exactly.

class SliceCoder {
public:
  SliceCoder(int depth, int level, bool dcmEnabled)
    : depth_(depth), level_(level), dcmEnabled_(dcmEnabled) {}

  // encode octree levels [0, level); returns open encoder and block origins
  void encode(const std::vector<Vec3i>& voxels, ArithmeticEncoder& enc,
              BitWriter& dcmBits, std::vector<Vec3i>& blocks) {
    std::vector<uint32_t> order(voxels.size());
    std::iota(order.begin(), order.end(), 0u);

    std::vector<EncNode> nodes{{{0, 0, 0}, 0, uint32_t(voxels.size()), 1}};
    std::vector<uint32_t> scratch;

    for (int level = 0; level < level_; level++) {
      const int childBit = depth_ - level - 1;
      const int shift = depth_ - level;
      const int levelClass = this->levelClass(level);
      std::unordered_set<uint64_t> occ;
      if (dcmAllowed(level)) occ = levelOccupancy(nodes, shift);

      std::vector<EncNode> next;
      for (const EncNode& node : nodes) {
        if (dcmAllowed(level)
            && faceNeighborsEmpty(occ, node.origin, shift, int64_t(1) << level)) {
          bool single = node.end - node.begin == 1;
          enc.encodeBit(ctx_.dcmFlag, single);
          if (single) {
            const Vec3i& v = voxels[order[node.begin]];
            for (int a = 0; a < 3; a++)
              dcmBits.writeBits(uint64_t(v[a] - node.origin[a]), depth_ - level);
            continue;
          }
        }

        uint32_t counts[8] = {};
        for (uint32_t i = node.begin; i < node.end; i++) {
          const Vec3i& v = voxels[order[i]];
          counts[childIndex(v, node.origin, childBit)]++;
        }
        uint8_t byte = 0;
        for (int c = 0; c < 8; c++)
          if (counts[c]) byte |= uint8_t(1u << c);
        encodeOccupancyByte(enc, ctx_, byte, levelClass, node.parentPop);

        uint32_t offsets[8];
        uint32_t acc = node.begin;
        for (int c = 0; c < 8; c++) {
          offsets[c] = acc;
          acc += counts[c];
        }
        scratch.assign(order.begin() + node.begin, order.begin() + node.end);
        uint32_t fill[8];
        std::copy(offsets, offsets + 8, fill);
        for (uint32_t idx : scratch)
          order[fill[childIndex(voxels[idx], node.origin, childBit)]++] = idx;

        int pop = __builtin_popcount(byte);
        for (int c = 0; c < 8; c++) {
          if (!counts[c]) continue;
          next.push_back({childOrigin(node.origin, c, childBit), offsets[c],
                          offsets[c] + counts[c], uint8_t(pop)});
        }
      }
      nodes = std::move(next);
    }

    blocks.clear();
    blocks.reserve(nodes.size());
    for (const EncNode& n : nodes) blocks.push_back(n.origin);
  }

  // decode counterpart: emits DCM voxels and returns level-l node origins
  std::vector<Vec3i> decode(ArithmeticDecoder& dec, BitReader& dcmBits,
                            std::vector<Vec3i>& dcmVoxels) {
    std::vector<DecNode> nodes{{{0, 0, 0}, 1}};
    for (int level = 0; level < level_; level++) {
      const int childBit = depth_ - level - 1;
      const int shift = depth_ - level;
      const int levelClass = this->levelClass(level);
      std::unordered_set<uint64_t> occ;
      if (dcmAllowed(level)) occ = levelOccupancy(nodes, shift);

      std::vector<DecNode> next;
      for (const DecNode& node : nodes) {
        if (dcmAllowed(level)
            && faceNeighborsEmpty(occ, node.origin, shift, int64_t(1) << level)) {
          if (dec.decodeBit(ctx_.dcmFlag)) {
            Vec3i v = node.origin;
            for (int a = 0; a < 3; a++)
              v[a] += int64_t(dcmBits.readBits(depth_ - level));
            dcmVoxels.push_back(v);
            continue;
          }
        }
        uint8_t byte = decodeOccupancyByte(dec, ctx_, levelClass, node.parentPop);
        if (!byte) throw std::runtime_error("corrupt stream: empty occupancy byte");
        int pop = __builtin_popcount(byte);
        for (int c = 0; c < 8; c++)
          if (byte & (1u << c))
            next.push_back({childOrigin(node.origin, c, childBit), uint8_t(pop)});
      }
      nodes = std::move(next);
    }
    std::vector<Vec3i> blocks;
    blocks.reserve(nodes.size());
    for (const DecNode& n : nodes) blocks.push_back(n.origin);
    return blocks;
  }

  GeomContexts& contexts() { return ctx_; }

private:
  static int childIndex(const Vec3i& v, const Vec3i& origin, int childBit) {
    return int((((v.x - origin.x) >> childBit) & 1) << 2
               | (((v.y - origin.y) >> childBit) & 1) << 1
               | (((v.z - origin.z) >> childBit) & 1));
  }

  static Vec3i childOrigin(const Vec3i& o, int c, int childBit) {
    return {o.x + (int64_t((c >> 2) & 1) << childBit),
            o.y + (int64_t((c >> 1) & 1) << childBit),
            o.z + (int64_t(c & 1) << childBit)};
  }

  int levelClass(int level) const { return level < (depth_ + 1) / 2 ? 0 : 1; }

  bool dcmAllowed(int level) const {
    return dcmEnabled_ && level >= 1 && level < depth_;
  }

  int depth_;
  int level_;
  bool dcmEnabled_;
  GeomContexts ctx_;
};

//----------------------------------------------------------------------------
// Trisoup edge vertices

struct EdgeRef {
  int axis;
  Vec3i origin;
};

std::array<EdgeRef, 12> blockEdges(const Vec3i& o, int64_t w) {
  std::array<EdgeRef, 12> edges;
  int n = 0;
  for (int d1 = 0; d1 < 2; d1++)
    for (int d2 = 0; d2 < 2; d2++)
      edges[n++] = {0, {o.x, o.y + d1 * w, o.z + d2 * w}};
  for (int d1 = 0; d1 < 2; d1++)
    for (int d2 = 0; d2 < 2; d2++)
      edges[n++] = {1, {o.x + d1 * w, o.y, o.z + d2 * w}};
  for (int d1 = 0; d1 < 2; d1++)
    for (int d2 = 0; d2 < 2; d2++)
      edges[n++] = {2, {o.x + d1 * w, o.y + d2 * w, o.z}};
  return edges;
}

// Average position along the edge of all occupied voxels adjacent to it,
// gathered over every block sharing the edge. Returns -1 when no adjacent
// voxel is occupied.
double edgeVertexPosition(const std::unordered_set<Vec3i, Vec3iHash, std::equal_to<Vec3i>>& occupied,
                          const EdgeRef& edge, int64_t w) {
  const int a = edge.axis;
  const int b1 = a == 0 ? 1 : 0;
  const int b2 = a == 2 ? 1 : 2;

  double sum = 0;
  int64_t count = 0;
  for (int64_t o1 = -1; o1 <= 0; o1++) {
    for (int64_t o2 = -1; o2 <= 0; o2++) {
      for (int64_t t = 0; t < w; t++) {
        Vec3i v = edge.origin;
        v[a] += t;
        v[b1] += o1;
        v[b2] += o2;
        if (v[b1] < 0 || v[b2] < 0) continue;
        if (occupied.count(v)) {
          sum += double(t) + 0.5;
          count++;
        }
      }
    }
  }
  return count ? sum / double(count) : -1.0;
}

void rasterizeTriangle(const Vec3d& a, const Vec3d& b, const Vec3d& c,
                       const Vec3i& blockOrigin, int64_t w, int64_t gridSize,
                       std::unordered_set<Vec3i, Vec3iHash>& out) {
  double maxEdge = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
  int64_t steps = std::max<int64_t>(1, int64_t(std::ceil(2.0 * maxEdge)));
  for (int64_t i = 0; i <= steps; i++) {
    for (int64_t j = 0; j + i <= steps; j++) {
      double s = double(i) / double(steps), t = double(j) / double(steps);
      Vec3d p = a + (b - a) * s + (c - a) * t;
      Vec3i v{int64_t(std::floor(p.x)), int64_t(std::floor(p.y)),
              int64_t(std::floor(p.z))};
      for (int ax = 0; ax < 3; ax++)
        v[ax] = std::clamp(v[ax], std::max<int64_t>(0, blockOrigin[ax]),
                           std::min(gridSize - 1, blockOrigin[ax] + w - 1));
      out.insert(v);
    }
  }
}

// Fan the block's edge vertices into triangles around their centroid and
// sample them at unit pitch. Fewer than three vertices degrade to snapped
// points.
void reconstructBlock(const std::vector<Vec3d>& vertices, const Vec3i& origin,
                      int64_t w, int64_t gridSize,
                      std::vector<Vec3i>& out) {
  std::unordered_set<Vec3i, Vec3iHash> voxels;
  auto snap = [&](const Vec3d& p) {
    Vec3i v{int64_t(std::floor(p.x)), int64_t(std::floor(p.y)),
            int64_t(std::floor(p.z))};
    for (int ax = 0; ax < 3; ax++)
      v[ax] = std::clamp(v[ax], std::max<int64_t>(0, origin[ax]),
                         std::min(gridSize - 1, origin[ax] + w - 1));
    voxels.insert(v);
  };

  const size_t m = vertices.size();
  if (m == 0) return;
  if (m <= 2) {
    for (const Vec3d& v : vertices) snap(v);
  } else if (m == 3) {
    rasterizeTriangle(vertices[0], vertices[1], vertices[2], origin, w, gridSize,
                      voxels);
  } else {
    Vec3d centroid{0, 0, 0};
    for (const Vec3d& v : vertices) centroid += v;
    centroid = centroid / double(m);

    // dominant normal axis: the one with least vertex spread
    Vec3d var{0, 0, 0};
    for (const Vec3d& v : vertices) {
      Vec3d d = v - centroid;
      var += {d.x * d.x, d.y * d.y, d.z * d.z};
    }
    int normalAxis = 0;
    for (int ax = 1; ax < 3; ax++)
      if (var[ax] < var[normalAxis]) normalAxis = ax;
    int u = normalAxis == 0 ? 1 : 0;
    int v2 = normalAxis == 2 ? 1 : 2;

    std::vector<size_t> ring(m);
    std::iota(ring.begin(), ring.end(), size_t(0));
    std::stable_sort(ring.begin(), ring.end(), [&](size_t i, size_t j) {
      double ai = std::atan2(vertices[i][v2] - centroid[v2],
                             vertices[i][u] - centroid[u]);
      double aj = std::atan2(vertices[j][v2] - centroid[v2],
                             vertices[j][u] - centroid[u]);
      return ai < aj;
    });

    for (size_t i = 0; i < m; i++) {
      const Vec3d& a = vertices[ring[i]];
      const Vec3d& b = vertices[ring[(i + 1) % m]];
      rasterizeTriangle(centroid, a, b, origin, w, gridSize, voxels);
    }
  }
  out.insert(out.end(), voxels.begin(), voxels.end());
}

//----------------------------------------------------------------------------

std::vector<Vec3i> cloudVoxels(const PointCloud& cloud) {
  std::vector<Vec3i> voxels(cloud.size());
  for (size_t i = 0; i < cloud.size(); i++) voxels[i] = cloud.voxel(i);
  return voxels;
}

int bitsNeeded(const std::vector<Vec3i>& voxels) {
  int64_t maxc = 0;
  for (const Vec3i& v : voxels) {
    if (v.x < 0 || v.y < 0 || v.z < 0)
      throw std::invalid_argument("geometry coder requires non-negative voxels");
    maxc = std::max({maxc, v.x, v.y, v.z});
  }
  int d = 0;
  while ((int64_t(1) << d) <= maxc) d++;
  return d;
}

int eq1CubeLog2(const std::vector<Vec3i>& voxels) {
  int64_t maxc = 0;
  for (const Vec3i& v : voxels) maxc = std::max({maxc, v.x, v.y, v.z});
  int n = 0;
  while ((int64_t(1) << n) < maxc) n++;
  return n;
}

void checkUnique(const std::vector<Vec3i>& voxels) {
  std::unordered_set<Vec3i, Vec3iHash> seen;
  seen.reserve(voxels.size() * 2);
  for (const Vec3i& v : voxels)
    if (!seen.insert(v).second)
      throw std::invalid_argument("duplicate positions present; dedup required");
}

GeometrySlicePayload encodeSlice(const std::vector<Vec3i>& voxels, int depth,
                                 int level, bool dcmEnabled) {
  GeometrySlicePayload payload;
  payload.pointCount = voxels.size();

  SliceCoder coder(depth, level, dcmEnabled);
  ArithmeticEncoder enc;
  BitWriter dcmBits;
  std::vector<Vec3i> blocks;
  coder.encode(voxels, enc, dcmBits, blocks);

  if (level < depth) {
    // trisoup payload: per unique edge in block order, presence flag and
    // quantized position, coded into a second arithmetic stream
    const int64_t w = int64_t(1) << (depth - level);
    const int posBits = depth - level;
    std::unordered_set<Vec3i, Vec3iHash> occupied(voxels.begin(), voxels.end());

    ArithmeticEncoder triEnc;
    std::unordered_set<uint64_t> codedEdges;
    for (const Vec3i& block : blocks) {
      for (const EdgeRef& edge : blockEdges(block, w)) {
        if (!codedEdges.insert(packEdge(edge.axis, edge.origin)).second) continue;
        double avg = edgeVertexPosition(occupied, edge, w);
        int present = avg >= 0;
        triEnc.encodeBit(coder.contexts().vertexFlag, present);
        if (present) {
          auto qv = uint64_t(std::min<int64_t>(w - 1, int64_t(avg)));
          triEnc.encodeBypassBits(qv, posBits);
        }
      }
    }
    payload.trisoup = triEnc.flush();
  }

  payload.occupancy = enc.flush();
  payload.dcm = dcmBits.take();
  return payload;
}

void decodeSlice(const GeometrySlicePayload& payload, const GeometryHeader& h,
                 std::vector<Vec3i>& out) {
  SliceCoder coder(h.depth, h.level, h.dcmEnabled);
  ArithmeticDecoder dec(payload.occupancy);
  BitReader dcmBits(payload.dcm);

  std::vector<Vec3i> dcmVoxels;
  std::vector<Vec3i> blocks = coder.decode(dec, dcmBits, dcmVoxels);

  if (h.level == h.depth) {
    out.insert(out.end(), blocks.begin(), blocks.end());
    out.insert(out.end(), dcmVoxels.begin(), dcmVoxels.end());
    return;
  }

  const int64_t w = int64_t(1) << (h.depth - h.level);
  const int posBits = h.depth - h.level;
  const int64_t gridSize = int64_t(1) << h.depth;

  ArithmeticDecoder triDec(payload.trisoup);
  std::unordered_map<uint64_t, double> edgeVertex;  // -1 when absent
  for (const Vec3i& block : blocks) {
    std::vector<Vec3d> vertices;
    for (const EdgeRef& edge : blockEdges(block, w)) {
      uint64_t key = packEdge(edge.axis, edge.origin);
      auto it = edgeVertex.find(key);
      double pos;
      if (it != edgeVertex.end()) {
        pos = it->second;
      } else {
        pos = -1;
        if (triDec.decodeBit(coder.contexts().vertexFlag))
          pos = double(triDec.decodeBypassBits(posBits)) + 0.5;
        edgeVertex.emplace(key, pos);
      }
      if (pos >= 0) {
        Vec3d v{double(edge.origin.x), double(edge.origin.y),
                double(edge.origin.z)};
        v[edge.axis] += pos;
        vertices.push_back(v);
      }
    }
    reconstructBlock(vertices, block, w, gridSize, out);
  }
  out.insert(out.end(), dcmVoxels.begin(), dcmVoxels.end());
}

}  // namespace

//============================================================================

GeometryBitstream encodeGeometryLossless(const PointCloud& cloud, bool dcmEnabled) {
  if (cloud.empty()) throw std::invalid_argument("cannot encode empty cloud");
  std::vector<Vec3i> voxels = cloudVoxels(cloud);
  checkUnique(voxels);
  int depth = bitsNeeded(voxels);
  if (depth > kMaxDepth) throw std::invalid_argument("octree depth too large");

  GeometryBitstream stream;
  stream.header.mode = GeometryMode::Lossless;
  stream.header.cubeLog2 = eq1CubeLog2(voxels);
  stream.header.depth = depth;
  stream.header.level = depth;
  stream.header.dcmEnabled = dcmEnabled;
  stream.slices.push_back(encodeSlice(voxels, depth, depth, dcmEnabled));
  return stream;
}

GeometryBitstream encodeGeometryTrisoup(const PointCloud& cloud, int depth,
                                        int level) {
  if (cloud.empty()) throw std::invalid_argument("cannot encode empty cloud");
  if (level >= depth)
    throw std::invalid_argument("trisoup requires level < depth");
  if (level < 1) throw std::invalid_argument("trisoup requires level >= 1");
  if (depth > kMaxDepth - 1) throw std::invalid_argument("octree depth too large");

  std::vector<Vec3i> voxels = cloudVoxels(cloud);
  if (bitsNeeded(voxels) > depth)
    throw std::out_of_range("point outside the bounding cube");

  GeometryBitstream stream;
  stream.header.mode = GeometryMode::Trisoup;
  stream.header.cubeLog2 = eq1CubeLog2(voxels);
  stream.header.depth = depth;
  stream.header.level = level;
  stream.header.dcmEnabled = false;
  stream.slices.push_back(encodeSlice(voxels, depth, level, false));
  return stream;
}

GeometryBitstream encodeGeometrySliced(const PointCloud& cloud,
                                       const std::vector<Slice>& slices,
                                       GeometryMode mode, int trisoupLevelDelta,
                                       bool dcmEnabled) {
  if (cloud.empty()) throw std::invalid_argument("cannot encode empty cloud");
  std::vector<Vec3i> voxels = cloudVoxels(cloud);
  int depth = bitsNeeded(voxels);
  const bool trisoup = mode == GeometryMode::Trisoup;
  if (trisoup) {
    if (trisoupLevelDelta < 1 || trisoupLevelDelta >= depth)
      throw std::invalid_argument("trisoup requires 1 <= depth - level < depth");
    if (depth > kMaxDepth - 1)
      throw std::invalid_argument("octree depth too large");
  } else {
    checkUnique(voxels);
    if (depth > kMaxDepth) throw std::invalid_argument("octree depth too large");
  }
  int level = trisoup ? depth - trisoupLevelDelta : depth;

  GeometryBitstream stream;
  stream.header.mode = mode;
  stream.header.cubeLog2 = eq1CubeLog2(voxels);
  stream.header.depth = depth;
  stream.header.level = level;
  stream.header.dcmEnabled = !trisoup && dcmEnabled;

  for (const Slice& slice : slices) {
    std::vector<Vec3i> sliceVoxels;
    sliceVoxels.reserve(slice.pointIndices.size());
    for (uint32_t i : slice.pointIndices) sliceVoxels.push_back(voxels[i]);
    stream.slices.push_back(
      encodeSlice(sliceVoxels, depth, level, stream.header.dcmEnabled));
  }
  return stream;
}

PointCloud decodeGeometry(const GeometryBitstream& stream) {
  const GeometryHeader& h = stream.header;
  if (h.depth < 0 || h.depth > kMaxDepth || h.level < 0 || h.level > h.depth)
    throw std::runtime_error("corrupt stream: bad octree dimensions");

  std::vector<Vec3i> voxels;
  for (const GeometrySlicePayload& payload : stream.slices)
    decodeSlice(payload, h, voxels);

  std::sort(voxels.begin(), voxels.end());
  voxels.erase(std::unique(voxels.begin(), voxels.end()), voxels.end());

  PointCloud out;
  out.positions().reserve(voxels.size());
  for (const Vec3i& v : voxels)
    out.positions().push_back({double(v.x), double(v.y), double(v.z)});
  return out;
}

//============================================================================
// Serialization: magic, version byte, then little-endian length-prefixed
// sections so a stream decodes without side information.

std::vector<uint8_t> GeometryBitstream::serialize() const {
  ByteWriter w;
  w.magic("GPCB");
  w.u8(1);
  w.u8(uint8_t(header.mode));
  w.u8(uint8_t(header.cubeLog2));
  w.u8(uint8_t(header.depth));
  w.u8(uint8_t(header.level));
  w.u8(header.dcmEnabled);
  w.f64(header.conversion.translation.x);
  w.f64(header.conversion.translation.y);
  w.f64(header.conversion.translation.z);
  w.f64(header.conversion.scale);
  w.f64(header.quantization.scale);
  w.f64(header.quantization.minimum.x);
  w.f64(header.quantization.minimum.y);
  w.f64(header.quantization.minimum.z);
  w.u8(header.quantization.removeDuplicates);
  w.u32(uint32_t(slices.size()));
  for (const GeometrySlicePayload& s : slices) {
    w.u64(s.pointCount);
    w.bytes(s.occupancy);
    w.bytes(s.dcm);
    w.bytes(s.trisoup);
  }
  return w.take();
}

GeometryBitstream GeometryBitstream::parse(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  r.magic("GPCB");
  if (r.u8() != 1) throw std::runtime_error("unsupported geometry stream version");

  GeometryBitstream stream;
  GeometryHeader& h = stream.header;
  h.mode = GeometryMode(r.u8());
  h.cubeLog2 = r.u8();
  h.depth = r.u8();
  h.level = r.u8();
  h.dcmEnabled = r.u8();
  h.conversion.translation = {r.f64(), r.f64(), r.f64()};
  h.conversion.scale = r.f64();
  h.quantization.scale = r.f64();
  h.quantization.minimum = {r.f64(), r.f64(), r.f64()};
  h.quantization.removeDuplicates = r.u8();
  uint32_t sliceCount = r.u32();
  for (uint32_t i = 0; i < sliceCount; i++) {
    GeometrySlicePayload s;
    s.pointCount = r.u64();
    s.occupancy = r.bytes();
    s.dcm = r.bytes();
    s.trisoup = r.bytes();
    stream.slices.push_back(std::move(s));
  }
  return stream;
}

size_t GeometryBitstream::byteSize() const {
  size_t n = 6 + 9 * 8 + 1 + 1 + 4;  // fixed header fields
  for (const GeometrySlicePayload& s : slices)
    n += 8 + 24 + s.occupancy.size() + s.dcm.size() + s.trisoup.size();
  return n;
}

}  // namespace pcc
