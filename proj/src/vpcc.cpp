#include "pcc/vpcc.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Dense>

#include "pcc/bytes.h"
#include "pcc/spatial_index.h"

namespace pcc {

namespace {

const Vec3d kPlaneNormals[6] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};

// projection conventions per plane: axis carrying depth, tangent axes (u, v)
struct PlaneBasis {
  int depthAxis;
  int uAxis, vAxis;
  int sign;  // +1 toward +axis, -1 toward -axis
};

PlaneBasis planeBasis(int plane) {
  const int axis = plane / 2;
  const int sign = plane % 2 == 0 ? 1 : -1;
  const int u = axis == 0 ? 1 : 0;
  const int v = axis == 2 ? 1 : 2;
  return {axis, u, v, sign};
}

struct Vec3iHash {
  size_t operator()(const Vec3i& v) const {
    uint64_t h = uint64_t(v.x) * 0x9E3779B97F4A7C15ull;
    h ^= uint64_t(v.y) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= uint64_t(v.z) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return size_t(h);
  }
};

}  // namespace

//============================================================================
// Normal estimation

std::vector<Vec3d> estimateNormals(const PointCloud& cloud, int k) {
  if (k < 3) throw std::invalid_argument("normal estimation requires k >= 3");
  if (cloud.empty()) throw std::invalid_argument("normals of empty cloud");

  KdTree tree(cloud.positions());
  Vec3d centroid{0, 0, 0};
  for (const Vec3d& p : cloud.positions()) centroid += p;
  centroid = centroid / double(cloud.size());

  std::vector<Vec3d> normals(cloud.size());
  for (size_t i = 0; i < cloud.size(); i++) {
    auto nbrs = tree.kNearest(cloud.position(i), size_t(k));

    Vec3d mean{0, 0, 0};
    for (const auto& n : nbrs) mean += cloud.position(n.index);
    mean = mean / double(nbrs.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& n : nbrs) {
      Vec3d d = cloud.position(n.index) - mean;
      Eigen::Vector3d e(d.x, d.y, d.z);
      cov += e * e.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Eigen::Vector3d n = solver.eigenvectors().col(0);  // smallest eigenvalue
    Vec3d normal{n.x(), n.y(), n.z()};
    double len = normal.norm();
    if (len < 1e-12) {
      normal = {0, 0, 1};
      len = 1;
    }
    normal = normal / len;

    double toward = normal.dot(cloud.position(i) - centroid);
    if (toward < -1e-12) {
      normal = normal * -1.0;
    } else if (std::abs(toward) <= 1e-12) {
      // ambiguous sign; make the largest-magnitude component positive
      int m = 0;
      for (int a = 1; a < 3; a++)
        if (std::abs(normal[a]) > std::abs(normal[m])) m = a;
      if (normal[m] < 0) normal = normal * -1.0;
    }
    normals[i] = normal;
  }
  return normals;
}

std::vector<int> clusterToPlanes(const PointCloud& cloud,
                                 const std::vector<Vec3d>& normals) {
  if (normals.size() != cloud.size())
    throw std::invalid_argument("normal count does not match cloud");
  std::vector<int> labels(normals.size());
  for (size_t i = 0; i < normals.size(); i++) {
    int best = 0;
    double bestDot = normals[i].dot(kPlaneNormals[0]);
    for (int p = 1; p < 6; p++) {
      double d = normals[i].dot(kPlaneNormals[p]);
      if (d > bestDot) {
        bestDot = d;
        best = p;
      }
    }
    labels[i] = best;
  }
  return labels;
}

//============================================================================
// Patch extraction

std::vector<Patch> extractPatches(const PointCloud& cloud,
                                  const std::vector<int>& labels, int delta) {
  if (labels.size() != cloud.size())
    throw std::invalid_argument("label count does not match cloud");
  if (delta < 0) throw std::invalid_argument("surface thickness must be >= 0");

  std::unordered_map<Vec3i, uint32_t, Vec3iHash> voxelIndex;
  voxelIndex.reserve(cloud.size() * 2);
  for (size_t i = 0; i < cloud.size(); i++)
    voxelIndex.emplace(cloud.voxel(i), uint32_t(i));

  std::vector<char> seen(cloud.size(), 0);
  std::vector<Patch> patches;

  for (size_t seed = 0; seed < cloud.size(); seed++) {
    if (seen[seed]) continue;
    seen[seed] = 1;

    // gather the 26-connected component sharing the seed's label
    std::vector<uint32_t> component{uint32_t(seed)};
    std::deque<uint32_t> frontier{uint32_t(seed)};
    const int label = labels[seed];
    while (!frontier.empty()) {
      uint32_t cur = frontier.front();
      frontier.pop_front();
      Vec3i v = cloud.voxel(cur);
      for (int dx = -1; dx <= 1; dx++)
        for (int dy = -1; dy <= 1; dy++)
          for (int dz = -1; dz <= 1; dz++) {
            if (!dx && !dy && !dz) continue;
            auto it = voxelIndex.find({v.x + dx, v.y + dy, v.z + dz});
            if (it == voxelIndex.end()) continue;
            uint32_t n = it->second;
            if (seen[n] || labels[n] != label) continue;
            seen[n] = 1;
            component.push_back(n);
            frontier.push_back(n);
          }
    }

    const PlaneBasis basis = planeBasis(label);
    int64_t uMin = INT64_MAX, vMin = INT64_MAX, uMax = INT64_MIN,
            vMax = INT64_MIN, dMin = INT64_MAX;
    for (uint32_t idx : component) {
      Vec3i p = cloud.voxel(idx);
      uMin = std::min(uMin, p[basis.uAxis]);
      uMax = std::max(uMax, p[basis.uAxis]);
      vMin = std::min(vMin, p[basis.vAxis]);
      vMax = std::max(vMax, p[basis.vAxis]);
      dMin = std::min(dMin, int64_t(basis.sign) * p[basis.depthAxis]);
    }

    Patch patch;
    patch.plane = label;
    patch.width = int(uMax - uMin + 1);
    patch.height = int(vMax - vMin + 1);
    patch.uOrigin = uMin;
    patch.vOrigin = vMin;
    patch.depthOrigin = dMin;
    patch.occupied.assign(patch.area(), 0);
    patch.depthNear.assign(patch.area(), 0);
    patch.depthFar.assign(patch.area(), 0);
    patch.texNear.assign(patch.area(), {0, 0, 0});
    patch.texFar.assign(patch.area(), {0, 0, 0});

    for (uint32_t idx : component) {
      Vec3i p = cloud.voxel(idx);
      size_t pix = size_t(p[basis.vAxis] - vMin) * size_t(patch.width)
        + size_t(p[basis.uAxis] - uMin);
      int64_t depth = int64_t(basis.sign) * p[basis.depthAxis] - dMin;
      if (depth > 0xFFFF)
        throw std::invalid_argument("patch depth range exceeds 16 bits");

      Vec3u8 color = cloud.hasColors() ? cloud.color(idx) : Vec3u8{0, 0, 0};
      if (!patch.occupied[pix]) {
        patch.occupied[pix] = 1;
        patch.depthNear[pix] = uint16_t(depth);
        patch.depthFar[pix] = uint16_t(depth);
        patch.texNear[pix] = color;
        patch.texFar[pix] = color;
        continue;
      }
      if (depth < patch.depthNear[pix]) {
        patch.depthNear[pix] = uint16_t(depth);
        patch.texNear[pix] = color;
      }
      // far layer records the maximum depth within the thickness window
      if (depth > patch.depthFar[pix]
          && depth <= int64_t(patch.depthNear[pix]) + delta) {
        patch.depthFar[pix] = uint16_t(depth);
        patch.texFar[pix] = color;
      }
    }

    // a later near-layer update can strand a far depth outside the window
    for (size_t pix = 0; pix < patch.area(); pix++) {
      if (!patch.occupied[pix]) continue;
      if (patch.depthFar[pix] > patch.depthNear[pix] + delta) {
        patch.depthFar[pix] = patch.depthNear[pix];
        patch.texFar[pix] = patch.texNear[pix];
      }
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

//============================================================================
// Packing

namespace {

int alignUp(int v, int align) { return (v + align - 1) / align * align; }

struct Rect {
  int u0, v0, w, h;
  bool overlaps(const Rect& o) const {
    return u0 < o.u0 + o.w && o.u0 < u0 + w && v0 < o.v0 + o.h && o.v0 < v0 + h;
  }
};

}  // namespace

ProjectedFrames packPatches(std::vector<Patch> patches, int gridWidth,
                            bool hasColor, ColorSpace colorSpace) {
  constexpr int kAlign = 16;

  ProjectedFrames frames;
  frames.hasColor = hasColor;
  frames.colorSpace = colorSpace;

  std::vector<size_t> order(patches.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return patches[a].area() > patches[b].area();
  });

  int width = alignUp(std::max(gridWidth, 1), kAlign);
  for (const Patch& p : patches)
    width = std::max(width, alignUp(p.width, kAlign));
  int height = kAlign;

  std::vector<Rect> placed;
  for (size_t id : order) {
    Patch& patch = patches[id];
    Rect rect{0, 0, patch.width, patch.height};
    bool done = false;
    while (!done) {
      for (rect.v0 = 0; rect.v0 + rect.h <= height && !done; rect.v0 += kAlign) {
        for (rect.u0 = 0; rect.u0 + rect.w <= width && !done; rect.u0 += kAlign) {
          bool free = true;
          for (const Rect& other : placed)
            if (rect.overlaps(other)) {
              free = false;
              break;
            }
          if (free) {
            patch.u0 = rect.u0;
            patch.v0 = rect.v0;
            placed.push_back(rect);
            done = true;
          }
        }
      }
      if (!done) height += alignUp(std::max(patch.height, 1), kAlign);
    }
  }

  frames.width = width;
  frames.height = alignUp(height, kAlign);
  frames.patches = std::move(patches);

  const size_t n = frames.pixelCount();
  frames.occupancy.assign(n, 0);
  frames.geomNear.assign(n, 0);
  frames.geomFar.assign(n, 0);
  if (hasColor)
    for (int c = 0; c < 3; c++) {
      frames.texNear[c].assign(n, 0);
      frames.texFar[c].assign(n, 0);
    }

  for (const Patch& p : frames.patches) {
    for (int v = 0; v < p.height; v++) {
      for (int u = 0; u < p.width; u++) {
        size_t local = size_t(v) * size_t(p.width) + size_t(u);
        if (!p.occupied[local]) continue;
        size_t pix = size_t(p.v0 + v) * size_t(frames.width) + size_t(p.u0 + u);
        frames.occupancy[pix] = 1;
        frames.geomNear[pix] = p.depthNear[local];
        frames.geomFar[pix] = p.depthFar[local];
        if (hasColor)
          for (int c = 0; c < 3; c++) {
            frames.texNear[c][pix] = p.texNear[local][c];
            frames.texFar[c][pix] = p.texFar[local][c];
          }
      }
    }
  }
  return frames;
}

//============================================================================
// Occupancy map

OccupancyMap buildOccupancyMap(const ProjectedFrames& frames, int subBlockSize,
                               int blockSize) {
  if (subBlockSize < 1 || blockSize < subBlockSize
      || blockSize % subBlockSize != 0)
    throw std::invalid_argument("block size must be a multiple of sub-block size");

  OccupancyMap map;
  map.width = frames.width;
  map.height = frames.height;
  map.blockSize = blockSize;
  map.subBlockSize = subBlockSize;
  map.subCols = (frames.width + subBlockSize - 1) / subBlockSize;
  map.subRows = (frames.height + subBlockSize - 1) / subBlockSize;
  map.blockCols = (frames.width + blockSize - 1) / blockSize;
  map.blockRows = (frames.height + blockSize - 1) / blockSize;
  map.subFlags.assign(size_t(map.subCols) * size_t(map.subRows), 0);
  map.blockFlags.assign(size_t(map.blockCols) * size_t(map.blockRows), 0);

  for (int y = 0; y < frames.height; y++)
    for (int x = 0; x < frames.width; x++)
      if (frames.occupancy[size_t(y) * size_t(frames.width) + size_t(x)])
        map.subFlags[size_t(y / subBlockSize) * size_t(map.subCols)
                     + size_t(x / subBlockSize)] = 1;

  const int subPerBlock = blockSize / subBlockSize;
  for (int by = 0; by < map.blockRows; by++) {
    for (int bx = 0; bx < map.blockCols; bx++) {
      bool full = true;
      for (int sy = 0; sy < subPerBlock && full; sy++)
        for (int sx = 0; sx < subPerBlock && full; sx++) {
          int gx = bx * subPerBlock + sx, gy = by * subPerBlock + sy;
          if (gx >= map.subCols || gy >= map.subRows || !map.subFlag(gx, gy))
            full = false;
        }
      map.blockFlags[size_t(by) * size_t(map.blockCols) + size_t(bx)] = full;
    }
  }
  return map;
}

//============================================================================
// Padding

namespace {

void padPlane(std::vector<uint16_t>& plane, const std::vector<uint8_t>& occupancy,
              int width, int height, int maxIterations) {
  if (plane.empty()) return;
  std::vector<uint8_t> filled = occupancy;
  std::vector<uint8_t> nextFilled(filled);
  std::vector<uint16_t> next(plane);

  for (int iter = 0; iter < maxIterations; iter++) {
    bool changed = false;
    for (int y = 0; y < height; y++) {
      for (int x = 0; x < width; x++) {
        size_t pix = size_t(y) * size_t(width) + size_t(x);
        if (filled[pix]) continue;
        double sum = 0;
        int count = 0;
        auto probe = [&](int nx, int ny) {
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) return;
          size_t np = size_t(ny) * size_t(width) + size_t(nx);
          if (filled[np]) {
            sum += plane[np];
            count++;
          }
        };
        probe(x - 1, y);
        probe(x + 1, y);
        probe(x, y - 1);
        probe(x, y + 1);
        if (count) {
          next[pix] = uint16_t(std::llround(sum / count));
          nextFilled[pix] = 1;
          changed = true;
        }
      }
    }
    plane = next;
    filled = nextFilled;
    if (!changed) break;
  }
}

}  // namespace

void padImages(ProjectedFrames& frames, int maxIterations) {
  padPlane(frames.geomNear, frames.occupancy, frames.width, frames.height,
           maxIterations);
  padPlane(frames.geomFar, frames.occupancy, frames.width, frames.height,
           maxIterations);
  if (frames.hasColor)
    for (int c = 0; c < 3; c++) {
      padPlane(frames.texNear[c], frames.occupancy, frames.width, frames.height,
               maxIterations);
      padPlane(frames.texFar[c], frames.occupancy, frames.width, frames.height,
               maxIterations);
    }
}

//============================================================================
// Reconstruction

PointCloud reconstructCloud(const ProjectedFrames& frames) {
  PointCloud out;
  if (frames.hasColor) {
    out.setColorSpace(frames.colorSpace);
  }

  std::unordered_map<Vec3i, uint32_t, Vec3iHash> emitted;
  auto emit = [&](const Vec3i& v, const Vec3u8& color) {
    auto [it, inserted] = emitted.try_emplace(v, uint32_t(out.size()));
    if (!inserted) return;
    out.positions().push_back({double(v.x), double(v.y), double(v.z)});
    if (frames.hasColor) out.colors().push_back(color);
  };

  for (const Patch& patch : frames.patches) {
    const PlaneBasis basis = planeBasis(patch.plane);
    for (int v = 0; v < patch.height; v++) {
      for (int u = 0; u < patch.width; u++) {
        size_t pix = size_t(patch.v0 + v) * size_t(frames.width)
          + size_t(patch.u0 + u);
        if (!frames.occupancy[pix]) continue;

        int64_t near = frames.geomNear[pix];
        int64_t far = std::max<int64_t>(near, frames.geomFar[pix]);

        Vec3i p;
        p[basis.uAxis] = patch.uOrigin + u;
        p[basis.vAxis] = patch.vOrigin + v;
        p[basis.depthAxis] = int64_t(basis.sign) * (patch.depthOrigin + near);
        Vec3u8 cNear{0, 0, 0}, cFar{0, 0, 0};
        if (frames.hasColor) {
          for (int c = 0; c < 3; c++) {
            cNear[c] = uint8_t(std::min<uint16_t>(255, frames.texNear[c][pix]));
            cFar[c] = uint8_t(std::min<uint16_t>(255, frames.texFar[c][pix]));
          }
        }
        emit(p, cNear);
        if (far != near) {
          p[basis.depthAxis] = int64_t(basis.sign) * (patch.depthOrigin + far);
          emit(p, cFar);
        }
      }
    }
  }

  // deterministic output order
  std::vector<uint32_t> order(out.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return out.voxel(a) < out.voxel(b);
  });
  PointCloud sorted;
  sorted.setColorSpace(out.colorSpace());
  for (uint32_t i : order) {
    if (frames.hasColor)
      sorted.addPoint(out.position(i), out.color(i));
    else
      sorted.addPoint(out.position(i));
  }
  return sorted;
}

//============================================================================
// Bitstream

namespace {

std::vector<uint8_t> packBits(const std::vector<uint8_t>& flags) {
  std::vector<uint8_t> out((flags.size() + 7) / 8, 0);
  for (size_t i = 0; i < flags.size(); i++)
    if (flags[i]) out[i >> 3] |= uint8_t(1u << (7 - (i & 7)));
  return out;
}

std::vector<uint8_t> unpackBits(const std::vector<uint8_t>& bytes, size_t count) {
  std::vector<uint8_t> flags(count, 0);
  if (bytes.size() * 8 < count)
    throw std::runtime_error("corrupt stream: occupancy bits truncated");
  for (size_t i = 0; i < count; i++)
    flags[i] = (bytes[i >> 3] >> (7 - (i & 7))) & 1;
  return flags;
}

}  // namespace

VpccBitstream vpccEncode(const PointCloud& voxels, const VpccConfig& config,
                         const ImageCodec& codec) {
  if (voxels.empty()) throw std::invalid_argument("cannot encode empty cloud");

  const int k = std::max(3, std::min(config.normalNeighbors, int(voxels.size())));
  std::vector<Vec3d> normals = estimateNormals(voxels, k);
  std::vector<int> labels = clusterToPlanes(voxels, normals);
  std::vector<Patch> patches =
    extractPatches(voxels, labels, config.surfaceThickness);
  ProjectedFrames frames = packPatches(std::move(patches), config.gridWidth,
                                       voxels.hasColors(), voxels.colorSpace());
  padImages(frames);

  VpccBitstream stream;
  stream.width = frames.width;
  stream.height = frames.height;
  stream.hasColor = frames.hasColor;
  stream.colorSpace = frames.colorSpace;
  stream.geomQstep = std::max(1, config.geomQstep);
  stream.texQstep = std::max(1, config.texQstep);

  stream.patchTable = frames.patches;
  for (Patch& p : stream.patchTable) {
    p.occupied.clear();
    p.depthNear.clear();
    p.depthFar.clear();
    p.texNear.clear();
    p.texFar.clear();
  }

  stream.occupancyBits = deflateBytes(packBits(frames.occupancy));
  stream.geomNear = codec.encode(frames.geomNear, frames.width, frames.height,
                                 stream.geomQstep);
  stream.geomFar = codec.encode(frames.geomFar, frames.width, frames.height,
                                stream.geomQstep);
  if (frames.hasColor)
    for (int c = 0; c < 3; c++) {
      stream.texNear[c] = codec.encode(frames.texNear[c], frames.width,
                                       frames.height, stream.texQstep);
      stream.texFar[c] = codec.encode(frames.texFar[c], frames.width,
                                      frames.height, stream.texQstep);
    }
  return stream;
}

PointCloud vpccDecode(const VpccBitstream& stream, const ImageCodec& codec) {
  ProjectedFrames frames;
  frames.width = stream.width;
  frames.height = stream.height;
  frames.hasColor = stream.hasColor;
  frames.colorSpace = stream.colorSpace;
  frames.patches = stream.patchTable;

  std::vector<uint8_t> packed =
    inflateBytes(stream.occupancyBits, (frames.pixelCount() + 7) / 8);
  frames.occupancy = unpackBits(packed, frames.pixelCount());

  frames.geomNear = codec.decode(stream.geomNear, frames.width, frames.height);
  frames.geomFar = codec.decode(stream.geomFar, frames.width, frames.height);
  if (frames.hasColor)
    for (int c = 0; c < 3; c++) {
      frames.texNear[c] =
        codec.decode(stream.texNear[c], frames.width, frames.height);
      frames.texFar[c] =
        codec.decode(stream.texFar[c], frames.width, frames.height);
    }
  return reconstructCloud(frames);
}

std::vector<uint8_t> VpccBitstream::serialize() const {
  ByteWriter w;
  w.magic("GPCV");
  w.u8(1);
  w.u32(uint32_t(width));
  w.u32(uint32_t(height));
  w.u8(hasColor);
  w.u8(uint8_t(colorSpace));
  w.u32(uint32_t(geomQstep));
  w.u32(uint32_t(texQstep));
  w.u32(uint32_t(patchTable.size()));
  for (const Patch& p : patchTable) {
    w.u8(uint8_t(p.plane));
    w.u32(uint32_t(p.u0));
    w.u32(uint32_t(p.v0));
    w.u32(uint32_t(p.width));
    w.u32(uint32_t(p.height));
    w.i64(p.uOrigin);
    w.i64(p.vOrigin);
    w.i64(p.depthOrigin);
  }
  w.bytes(occupancyBits);
  w.bytes(geomNear);
  w.bytes(geomFar);
  if (hasColor)
    for (int c = 0; c < 3; c++) {
      w.bytes(texNear[c]);
      w.bytes(texFar[c]);
    }
  return w.take();
}

VpccBitstream VpccBitstream::parse(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  r.magic("GPCV");
  if (r.u8() != 1) throw std::runtime_error("unsupported vpcc stream version");

  VpccBitstream s;
  s.width = int(r.u32());
  s.height = int(r.u32());
  s.hasColor = r.u8();
  s.colorSpace = ColorSpace(r.u8());
  s.geomQstep = int(r.u32());
  s.texQstep = int(r.u32());
  uint32_t patchCount = r.u32();
  s.patchTable.resize(patchCount);
  for (Patch& p : s.patchTable) {
    p.plane = r.u8();
    p.u0 = int(r.u32());
    p.v0 = int(r.u32());
    p.width = int(r.u32());
    p.height = int(r.u32());
    p.uOrigin = r.i64();
    p.vOrigin = r.i64();
    p.depthOrigin = r.i64();
  }
  s.occupancyBits = r.bytes();
  s.geomNear = r.bytes();
  s.geomFar = r.bytes();
  if (s.hasColor)
    for (int c = 0; c < 3; c++) {
      s.texNear[c] = r.bytes();
      s.texFar[c] = r.bytes();
    }
  return s;
}

size_t VpccBitstream::byteSize() const {
  size_t n = 5 + 4 + 4 + 2 + 8 + 4 + patchTable.size() * (1 + 16 + 24);
  n += 8 + occupancyBits.size();
  n += 8 + geomNear.size() + 8 + geomFar.size();
  if (hasColor)
    for (int c = 0; c < 3; c++)
      n += 16 + texNear[c].size() + texFar[c].size();
  return n;
}

}  // namespace pcc
