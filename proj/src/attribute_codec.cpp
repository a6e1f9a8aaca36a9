#include "pcc/attribute_codec.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "pcc/bytes.h"
#include "pcc/entropy.h"
#include "pcc/spatial_index.h"

namespace pcc {

namespace {

constexpr double kMinDist2 = 1e-12;
constexpr int kFixedShift = 8;  // lifting fixed-point precision

int64_t llroundAway(double v) { return std::llround(v); }

uint8_t clamp255(int64_t v) {
  return uint8_t(std::clamp<int64_t>(v, 0, 255));
}

}  // namespace

//============================================================================
// Color transfer

PointCloud recolor(const PointCloud& decodedGeom, const PointCloud& original) {
  if (!original.hasColors())
    throw std::invalid_argument("recolor requires colors on the original cloud");
  if (original.empty()) throw std::invalid_argument("recolor from empty cloud");

  KdTree tree(original.positions());
  PointCloud out = decodedGeom;
  out.setColorSpace(original.colorSpace());
  out.allocColors();
  for (size_t i = 0; i < out.size(); i++) {
    KdTree::Neighbor nn = tree.nearest(out.position(i));
    out.color(i) = original.color(nn.index);
  }
  return out;
}

PointCloud attributeTransfer(const PointCloud& original,
                             const PointCloud& quantizedGeom,
                             const QuantizationParams& params) {
  PointCloud reconstructed = inverseQuantizePositions(quantizedGeom, params);
  PointCloud colored = recolor(reconstructed, original);
  PointCloud out = quantizedGeom;
  out.setColorSpace(colored.colorSpace());
  out.colors() = std::move(colored.colors());
  return out;
}

//============================================================================
// Level of detail

void validateLodThresholds(const std::vector<double>& thresholds) {
  if (thresholds.empty())
    throw std::invalid_argument("LoD requires at least one threshold");
  for (size_t s = 1; s < thresholds.size(); s++)
    if (!(thresholds[s] < thresholds[s - 1]))
      throw std::invalid_argument("LoD thresholds must be strictly decreasing");
  if (thresholds.back() != 0.0)
    throw std::invalid_argument("final LoD threshold must be zero");
  if (thresholds.front() < 0)
    throw std::invalid_argument("LoD thresholds must be non-negative");
}

std::vector<double> defaultLodThresholds(const PointCloud& cloud, int levelCount) {
  if (levelCount < 1) throw std::invalid_argument("LoD level count must be >= 1");
  double side = std::ldexp(1.0, boundingCube(cloud).cubeLog2);
  std::vector<double> thresholds(levelCount);
  double d = side / 8.0;
  for (int s = 0; s < levelCount; s++) {
    thresholds[s] = d;
    d /= 2;
  }
  thresholds.back() = 0.0;
  if (levelCount > 1 && thresholds[levelCount - 2] <= 0.0)
    throw std::invalid_argument("degenerate cloud extent for this level count");
  return thresholds;
}

LodPartition generateLod(const PointCloud& cloud,
                         const std::vector<double>& thresholds,
                         uint32_t initialIndex) {
  validateLodThresholds(thresholds);
  if (cloud.empty()) throw std::invalid_argument("LoD of empty cloud");
  if (initialIndex >= cloud.size())
    throw std::invalid_argument("initial index out of range");

  const size_t T = cloud.size();
  const size_t S = thresholds.size();

  LodPartition lod;
  lod.initialIndex = initialIndex;
  lod.thresholds = thresholds;
  lod.refinements.resize(S);
  lod.levelOf.assign(T, 0);
  lod.order.reserve(T);
  lod.order.push_back(initialIndex);

  std::vector<char> visited(T, 0);
  visited[initialIndex] = 1;

  // distance to the visited set = min over a snapshot tree of the levels
  // completed so far and a linear scan of this level's additions
  std::vector<Vec3d> snapshot{cloud.position(initialIndex)};
  std::vector<Vec3d> added;

  for (size_t s = 0; s < S; s++) {
    const double dist = thresholds[s];
    KdTree tree(snapshot);
    added.clear();

    for (uint32_t i = 0; i < T; i++) {
      if (visited[i]) continue;
      if (dist > 0) {
        const Vec3d& p = cloud.position(i);
        double d2 = tree.nearest(p).dist2;
        for (const Vec3d& a : added)
          d2 = std::min(d2, (a - p).norm2());
        if (std::sqrt(d2) < dist) continue;
      }
      visited[i] = 1;
      lod.refinements[s].push_back(i);
      lod.levelOf[i] = uint32_t(s + 1);
      lod.order.push_back(i);
      added.push_back(cloud.position(i));
    }
    snapshot.insert(snapshot.end(), added.begin(), added.end());
  }

  lod.levelStart.resize(S + 1);
  lod.levelStart[0] = 0;
  uint32_t rank = 1;
  for (size_t s = 0; s < S; s++) {
    lod.levelStart[s + 1] = rank;
    rank += uint32_t(lod.refinements[s].size());
  }
  return lod;
}

//============================================================================
// Prediction neighborhoods

PredictorSet buildPredictors(const PointCloud& cloud, const LodPartition& lod,
                             int k, bool strictlyLowerLevels) {
  if (k < 1) throw std::invalid_argument("neighbor count must be >= 1");
  const size_t T = lod.order.size();

  std::vector<uint32_t> rankOf(T);
  for (uint32_t r = 0; r < T; r++) rankOf[lod.order[r]] = r;

  KdTree tree(cloud.positions());
  PredictorSet preds;
  preds.offset.assign(T + 1, 0);

  for (uint32_t r = 1; r < T; r++) {
    const uint32_t index = lod.order[r];
    uint32_t limit = r;
    if (strictlyLowerLevels) limit = lod.levelStart[lod.levelOf[index]];

    auto neighbors = tree.kNearestIf(
      cloud.position(index), std::min<size_t>(size_t(k), limit),
      [&](uint32_t candidate) { return rankOf[candidate] < limit; });

    double sum = 0;
    for (const auto& n : neighbors)
      sum += 1.0 / std::max(n.dist2, kMinDist2);
    for (const auto& n : neighbors) {
      double d2 = std::max(n.dist2, kMinDist2);
      preds.neighborRank.push_back(rankOf[n.index]);
      preds.weight.push_back((1.0 / d2) / sum);
      preds.dist2.push_back(d2);
    }
    preds.offset[r + 1] = uint32_t(preds.neighborRank.size());
  }
  // rank 0 has no neighbors; make offsets cumulative
  for (uint32_t r = 1; r <= T; r++)
    preds.offset[r] = std::max(preds.offset[r], preds.offset[r - 1]);
  return preds;
}

std::vector<double> computeInfluenceWeights(const PredictorSet& predictors,
                                            size_t pointCount) {
  std::vector<double> w(pointCount, 1.0);
  for (size_t r = pointCount; r-- > 1;) {
    for (uint32_t j = predictors.offset[r]; j < predictors.offset[r + 1]; j++) {
      double zeta = 1.0 / predictors.dist2[j];
      w[predictors.neighborRank[j]] += zeta * w[r];
    }
  }
  return w;
}

//============================================================================
// Residual symbol coding: zero flag and sign are context coded, magnitudes
// ride exp-Golomb bypass bins.

namespace {

struct SymbolEncoder {
  ArithmeticEncoder enc;
  ContextModel zeroCtx, signCtx;
  int egOrder;

  explicit SymbolEncoder(int order) : egOrder(order) {}

  void put(int64_t v) {
    enc.encodeBit(zeroCtx, v != 0);
    if (!v) return;
    enc.encodeBit(signCtx, v < 0);
    enc.encodeUintExpGolombBypass(uint64_t(std::abs(v)) - 1, egOrder);
  }

  void putRaw8(uint8_t v) { enc.encodeBypassBits(v, 8); }
  void putRaw64(uint64_t v) { enc.encodeBypassBits(v, 64); }
};

struct SymbolDecoder {
  ArithmeticDecoder dec;
  ContextModel zeroCtx, signCtx;
  int egOrder;

  SymbolDecoder(const std::vector<uint8_t>& bytes, int order)
    : dec(bytes), egOrder(order) {}

  int64_t get() {
    if (!dec.decodeBit(zeroCtx)) return 0;
    bool negative = dec.decodeBit(signCtx);
    int64_t mag = int64_t(dec.decodeUintExpGolombBypass(egOrder)) + 1;
    return negative ? -mag : mag;
  }

  uint8_t getRaw8() { return uint8_t(dec.decodeBypassBits(8)); }
  uint64_t getRaw64() { return dec.decodeBypassBits(64); }
};

AttributeHeader makeLodHeader(AttributeCoder coder, const PointCloud& cloud,
                              const LodPartition& lod, int k,
                              const Vec3d& qsteps) {
  AttributeHeader h;
  h.coder = coder;
  h.colorSpace = cloud.colorSpace();
  h.qsteps = qsteps;
  h.neighborCount = k;
  h.initialIndex = lod.initialIndex;
  h.lodThresholds = lod.thresholds;
  h.pointCount = cloud.size();
  return h;
}

void checkAttributeInput(const PointCloud& cloud, const LodPartition& lod) {
  if (!cloud.hasColors())
    throw std::invalid_argument("attribute coder requires colors");
  if (lod.order.size() != cloud.size())
    throw std::invalid_argument("LoD partition does not cover the cloud");
}

}  // namespace

//============================================================================
// Predict transform: closed loop over reconstructed neighbor values

namespace {

Vec3<int64_t> predictFromNeighbors(const PredictorSet& preds, uint32_t rank,
                                   const std::vector<Vec3<int64_t>>& recon) {
  Vec3d acc{0, 0, 0};
  for (uint32_t j = preds.offset[rank]; j < preds.offset[rank + 1]; j++) {
    const auto& nb = recon[preds.neighborRank[j]];
    const double w = preds.weight[j];
    acc += {w * double(nb.x), w * double(nb.y), w * double(nb.z)};
  }
  return {llroundAway(acc.x), llroundAway(acc.y), llroundAway(acc.z)};
}

}  // namespace

AttributeBitstream predictTransformEncode(const PointCloud& cloud,
                                          const LodPartition& lod, int k,
                                          const Vec3d& qsteps) {
  checkAttributeInput(cloud, lod);
  const size_t T = cloud.size();
  PredictorSet preds = buildPredictors(cloud, lod, k, false);

  SymbolEncoder channel[3] = {SymbolEncoder(0), SymbolEncoder(0),
                              SymbolEncoder(0)};
  std::vector<Vec3<int64_t>> recon(T);

  for (uint32_t r = 0; r < T; r++) {
    const Vec3u8& orig = cloud.color(lod.order[r]);
    if (r == 0) {
      for (int c = 0; c < 3; c++) {
        channel[c].putRaw8(orig[c]);
        recon[0][c] = orig[c];
      }
      continue;
    }
    Vec3<int64_t> pred = predictFromNeighbors(preds, r, recon);
    for (int c = 0; c < 3; c++) {
      double q = qsteps[c] > 0 ? qsteps[c] : 1.0;
      int64_t residual = int64_t(orig[c]) - pred[c];
      int64_t sym = llroundAway(double(residual) / q);
      channel[c].put(sym);
      recon[r][c] = clamp255(pred[c] + llroundAway(double(sym) * q));
    }
  }

  AttributeBitstream stream;
  stream.header = makeLodHeader(AttributeCoder::Predict, cloud, lod, k, qsteps);
  for (int c = 0; c < 3; c++) stream.payload[c] = channel[c].enc.flush();
  return stream;
}

namespace {

void predictTransformDecode(const AttributeBitstream& stream,
                            const LodPartition& lod, PointCloud& out) {
  const AttributeHeader& h = stream.header;
  const size_t T = out.size();
  PredictorSet preds = buildPredictors(out, lod, h.neighborCount, false);

  SymbolDecoder channel[3] = {SymbolDecoder(stream.payload[0], 0),
                              SymbolDecoder(stream.payload[1], 0),
                              SymbolDecoder(stream.payload[2], 0)};
  std::vector<Vec3<int64_t>> recon(T);

  for (uint32_t r = 0; r < T; r++) {
    if (r == 0) {
      for (int c = 0; c < 3; c++) recon[0][c] = channel[c].getRaw8();
    } else {
      Vec3<int64_t> pred = predictFromNeighbors(preds, r, recon);
      for (int c = 0; c < 3; c++) {
        double q = h.qsteps[c] > 0 ? h.qsteps[c] : 1.0;
        int64_t sym = channel[c].get();
        recon[r][c] = clamp255(pred[c] + llroundAway(double(sym) * q));
      }
    }
    Vec3u8& color = out.color(lod.order[r]);
    for (int c = 0; c < 3; c++) color[c] = uint8_t(recon[r][c]);
  }
}

}  // namespace

//============================================================================
// Lifting transform. Attributes are carried as int64 fixed point so the
// inverse replays the forward deltas exactly; quantization disabled is
// perfect reconstruction.

namespace {

struct LiftingPasses {
  const PredictorSet& preds;
  const LodPartition& lod;
  std::vector<Vec3<int64_t>>& attr;
  std::vector<double> num[3];
  std::vector<double> den;

  LiftingPasses(const PredictorSet& p, const LodPartition& l,
                std::vector<Vec3<int64_t>>& a)
    : preds(p), lod(l), attr(a) {
    for (auto& n : num) n.assign(a.size(), 0.0);
    den.assign(a.size(), 0.0);
  }

  uint32_t levelBegin(size_t s) const { return lod.levelStart[s]; }
  uint32_t levelEnd(size_t s) const {
    return s == lod.levelCount() ? uint32_t(lod.order.size())
                                 : lod.levelStart[s + 1];
  }

  void predict(size_t s, bool forward) {
    for (uint32_t r = levelBegin(s); r < levelEnd(s); r++) {
      Vec3d acc{0, 0, 0};
      for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++) {
        const auto& nb = attr[preds.neighborRank[j]];
        const double w = preds.weight[j];
        acc += {w * double(nb.x), w * double(nb.y), w * double(nb.z)};
      }
      Vec3<int64_t> delta{llroundAway(acc.x), llroundAway(acc.y),
                          llroundAway(acc.z)};
      if (forward)
        attr[r] -= delta;
      else
        attr[r] += delta;
    }
  }

  // each predictor point moves by the zeta- and weight-averaged
  // residual of the points it influenced.
  void update(size_t s, bool forward, const std::vector<double>& influence) {
    const uint32_t begin = levelBegin(s), end = levelEnd(s);
    const uint32_t limit = begin;
    for (uint32_t i = 0; i < limit; i++) {
      den[i] = 0;
      for (auto& n : num) n[i] = 0;
    }
    for (uint32_t r = begin; r < end; r++) {
      for (uint32_t j = preds.offset[r]; j < preds.offset[r + 1]; j++) {
        double zw = (1.0 / preds.dist2[j]) * influence[r];
        uint32_t target = preds.neighborRank[j];
        den[target] += zw;
        for (int c = 0; c < 3; c++) num[c][target] += zw * double(attr[r][c]);
      }
    }
    for (uint32_t i = 0; i < limit; i++) {
      if (den[i] <= 0) continue;
      Vec3<int64_t> delta{llroundAway(num[0][i] / den[i]),
                          llroundAway(num[1][i] / den[i]),
                          llroundAway(num[2][i] / den[i])};
      if (forward)
        attr[i] += delta;
      else
        attr[i] -= delta;
    }
  }
};

}  // namespace

AttributeBitstream liftingTransformEncode(const PointCloud& cloud,
                                          const LodPartition& lod, int k,
                                          const Vec3d& qsteps) {
  checkAttributeInput(cloud, lod);
  const size_t T = cloud.size();
  const size_t S = lod.levelCount();
  PredictorSet preds = buildPredictors(cloud, lod, k, true);
  std::vector<double> influence = computeInfluenceWeights(preds, T);

  std::vector<Vec3<int64_t>> attr(T);
  for (uint32_t r = 0; r < T; r++) {
    const Vec3u8& c = cloud.color(lod.order[r]);
    attr[r] = {int64_t(c.x) << kFixedShift, int64_t(c.y) << kFixedShift,
               int64_t(c.z) << kFixedShift};
  }

  LiftingPasses passes(preds, lod, attr);
  for (size_t s = S; s >= 1; s--) {
    passes.predict(s, true);
    passes.update(s, true, influence);
  }

  SymbolEncoder channel[3] = {SymbolEncoder(2), SymbolEncoder(2),
                              SymbolEncoder(2)};
  for (uint32_t r = 0; r < T; r++) {
    double root = std::sqrt(influence[r]);
    for (int c = 0; c < 3; c++) {
      int64_t sym;
      if (qsteps[c] <= 0)
        sym = attr[r][c];
      else
        sym = llroundAway(std::ldexp(double(attr[r][c]), -kFixedShift) * root
                          / qsteps[c]);
      channel[c].put(sym);
    }
  }

  AttributeBitstream stream;
  stream.header = makeLodHeader(AttributeCoder::Lifting, cloud, lod, k, qsteps);
  for (int c = 0; c < 3; c++) stream.payload[c] = channel[c].enc.flush();
  return stream;
}

namespace {

void liftingTransformDecode(const AttributeBitstream& stream,
                            const LodPartition& lod, PointCloud& out) {
  const AttributeHeader& h = stream.header;
  const size_t T = out.size();
  const size_t S = lod.levelCount();
  PredictorSet preds = buildPredictors(out, lod, h.neighborCount, true);
  std::vector<double> influence = computeInfluenceWeights(preds, T);

  SymbolDecoder channel[3] = {SymbolDecoder(stream.payload[0], 2),
                              SymbolDecoder(stream.payload[1], 2),
                              SymbolDecoder(stream.payload[2], 2)};

  std::vector<Vec3<int64_t>> attr(T);
  for (uint32_t r = 0; r < T; r++) {
    double root = std::sqrt(influence[r]);
    for (int c = 0; c < 3; c++) {
      int64_t sym = channel[c].get();
      if (h.qsteps[c] <= 0)
        attr[r][c] = sym;
      else
        attr[r][c] = llroundAway(double(sym) * h.qsteps[c] / root
                                 * std::ldexp(1.0, kFixedShift));
    }
  }

  LiftingPasses passes(preds, lod, attr);
  for (size_t s = 1; s <= S; s++) {
    passes.update(s, false, influence);
    passes.predict(s, false);
  }

  for (uint32_t r = 0; r < T; r++) {
    Vec3u8& color = out.color(lod.order[r]);
    for (int c = 0; c < 3; c++)
      color[c] = clamp255(llroundAway(std::ldexp(double(attr[r][c]), -kFixedShift)));
  }
}

}  // namespace

//============================================================================
// Region-adaptive hierarchical transform

namespace {

struct RahtMerge {
  uint32_t left, right, merged;
  double w1, w2;
};

struct RahtStructure {
  std::vector<uint32_t> sortedToCloud;  // leaf order over the voxel set
  std::vector<RahtMerge> merges;        // T - 1 entries
  uint32_t nodeCount = 0;
  uint32_t rootId = 0;
};

// The merge hierarchy is a function of the voxel set alone, so encoder and
// decoder rebuild it identically from the decoded geometry.
RahtStructure buildRahtStructure(const PointCloud& cloud) {
  const size_t T = cloud.size();
  struct Node {
    Vec3i coord;
    double weight;
    uint32_t id;
  };

  std::vector<Node> nodes(T);
  for (size_t i = 0; i < T; i++)
    nodes[i] = {cloud.voxel(i), 1.0, uint32_t(i)};

  std::sort(nodes.begin(), nodes.end(),
            [](const Node& a, const Node& b) { return a.coord < b.coord; });

  RahtStructure st;
  st.sortedToCloud.resize(T);
  for (size_t i = 0; i < T; i++) {
    st.sortedToCloud[i] = nodes[i].id;
    nodes[i].id = uint32_t(i);
  }
  st.nodeCount = uint32_t(T);

  int64_t maxc = 0;
  for (const Node& n : nodes)
    maxc = std::max({maxc, n.coord.x, n.coord.y, n.coord.z});
  int depth = 0;
  while ((int64_t(1) << depth) <= maxc) depth++;

  for (int level = 0; level < depth && nodes.size() > 1; level++) {
    for (int axis = 0; axis < 3 && nodes.size() > 1; axis++) {
      const int b1 = axis == 0 ? 1 : 0;
      const int b2 = axis == 2 ? 1 : 2;
      std::sort(nodes.begin(), nodes.end(), [&](const Node& a, const Node& b) {
        if (a.coord[b1] != b.coord[b1]) return a.coord[b1] < b.coord[b1];
        if (a.coord[b2] != b.coord[b2]) return a.coord[b2] < b.coord[b2];
        return a.coord[axis] < b.coord[axis];
      });

      std::vector<Node> next;
      next.reserve(nodes.size());
      for (size_t i = 0; i < nodes.size();) {
        Node cur = nodes[i];
        bool paired = i + 1 < nodes.size()
          && nodes[i + 1].coord[b1] == cur.coord[b1]
          && nodes[i + 1].coord[b2] == cur.coord[b2]
          && (nodes[i + 1].coord[axis] >> 1) == (cur.coord[axis] >> 1);
        if (paired) {
          const Node& partner = nodes[i + 1];
          uint32_t mergedId = st.nodeCount++;
          st.merges.push_back({cur.id, partner.id, mergedId, cur.weight,
                               partner.weight});
          cur.weight += partner.weight;
          cur.id = mergedId;
          i += 2;
        } else {
          i += 1;
        }
        cur.coord[axis] >>= 1;
        next.push_back(cur);
      }
      nodes = std::move(next);
    }
  }
  st.rootId = nodes.front().id;
  return st;
}

}  // namespace

namespace {

std::vector<Vec3d> rahtForward(const PointCloud& cloud, const RahtStructure& st) {
  const size_t T = cloud.size();
  std::vector<Vec3d> value(st.nodeCount);
  for (size_t i = 0; i < T; i++) {
    const Vec3u8& c = cloud.color(st.sortedToCloud[i]);
    value[i] = {double(c.x), double(c.y), double(c.z)};
  }

  // coefficient order: one high-pass per merge, DC last
  std::vector<Vec3d> coeffs;
  coeffs.reserve(T);
  for (const RahtMerge& m : st.merges) {
    double g1 = std::sqrt(m.w1 / (m.w1 + m.w2));
    double g2 = std::sqrt(m.w2 / (m.w1 + m.w2));
    const Vec3d& v1 = value[m.left];
    const Vec3d& v2 = value[m.right];
    value[m.merged] = v1 * g1 + v2 * g2;
    coeffs.push_back(v1 * g2 - v2 * g1);
  }
  coeffs.push_back(value[st.rootId]);
  return coeffs;
}

}  // namespace

std::vector<Vec3d> rahtCoefficients(const PointCloud& cloud) {
  if (!cloud.hasColors())
    throw std::invalid_argument("attribute coder requires colors");
  if (cloud.empty()) throw std::invalid_argument("cannot encode empty cloud");
  RahtStructure st = buildRahtStructure(cloud);
  return rahtForward(cloud, st);
}

AttributeBitstream rahtEncode(const PointCloud& cloud, const Vec3d& qsteps) {
  if (!cloud.hasColors())
    throw std::invalid_argument("attribute coder requires colors");
  if (cloud.empty()) throw std::invalid_argument("cannot encode empty cloud");

  RahtStructure st = buildRahtStructure(cloud);
  std::vector<Vec3d> coeffs = rahtForward(cloud, st);

  AttributeBitstream stream;
  stream.header.coder = AttributeCoder::Raht;
  stream.header.colorSpace = cloud.colorSpace();
  stream.header.qsteps = qsteps;
  stream.header.pointCount = cloud.size();

  for (int c = 0; c < 3; c++) {
    SymbolEncoder enc(2);
    for (const Vec3d& coef : coeffs) {
      if (qsteps[c] <= 0)
        enc.putRaw64(std::bit_cast<uint64_t>(coef[c]));
      else
        enc.put(llroundAway(coef[c] / qsteps[c]));
    }
    stream.payload[c] = enc.enc.flush();
  }
  return stream;
}

namespace {

void rahtDecode(const AttributeBitstream& stream, PointCloud& out) {
  const AttributeHeader& h = stream.header;
  const size_t T = out.size();
  RahtStructure st = buildRahtStructure(out);

  std::vector<Vec3d> coeffs(T);
  for (int c = 0; c < 3; c++) {
    SymbolDecoder dec(stream.payload[c], 2);
    for (size_t i = 0; i < T; i++) {
      if (h.qsteps[c] <= 0)
        coeffs[i][c] = std::bit_cast<double>(dec.getRaw64());
      else
        coeffs[i][c] = double(dec.get()) * h.qsteps[c];
    }
  }

  std::vector<Vec3d> value(st.nodeCount);
  value[st.rootId] = coeffs[T - 1];
  for (size_t e = st.merges.size(); e-- > 0;) {
    const RahtMerge& m = st.merges[e];
    double g1 = std::sqrt(m.w1 / (m.w1 + m.w2));
    double g2 = std::sqrt(m.w2 / (m.w1 + m.w2));
    const Vec3d l = value[m.merged];
    const Vec3d& hp = coeffs[e];
    value[m.left] = l * g1 + hp * g2;
    value[m.right] = l * g2 - hp * g1;
  }

  for (size_t i = 0; i < T; i++) {
    Vec3u8& color = out.color(st.sortedToCloud[i]);
    for (int c = 0; c < 3; c++) color[c] = clamp255(llroundAway(value[i][c]));
  }
}

}  // namespace

//============================================================================

PointCloud attributeDecode(const AttributeBitstream& stream,
                           const PointCloud& decodedGeom) {
  const AttributeHeader& h = stream.header;
  if (h.pointCount != decodedGeom.size())
    throw std::runtime_error("attribute stream does not match geometry point count");

  PointCloud out = decodedGeom;
  out.setColorSpace(h.colorSpace);
  out.allocColors();

  switch (h.coder) {
  case AttributeCoder::Raht:
    rahtDecode(stream, out);
    break;
  case AttributeCoder::Predict:
  case AttributeCoder::Lifting: {
    LodPartition lod = generateLod(out, h.lodThresholds, h.initialIndex);
    if (h.coder == AttributeCoder::Predict)
      predictTransformDecode(stream, lod, out);
    else
      liftingTransformDecode(stream, lod, out);
    break;
  }
  default:
    throw std::runtime_error("unknown attribute coder tag");
  }
  return out;
}

//============================================================================
// Serialization

std::vector<uint8_t> AttributeBitstream::serialize() const {
  ByteWriter w;
  w.magic("GPCA");
  w.u8(1);
  w.u8(uint8_t(header.coder));
  w.u8(uint8_t(header.colorSpace));
  w.f64(header.qsteps.x);
  w.f64(header.qsteps.y);
  w.f64(header.qsteps.z);
  w.u32(uint32_t(header.neighborCount));
  w.u32(header.initialIndex);
  w.u32(uint32_t(header.lodThresholds.size()));
  for (double t : header.lodThresholds) w.f64(t);
  w.u64(header.pointCount);
  for (const auto& p : payload) w.bytes(p);
  return w.take();
}

AttributeBitstream AttributeBitstream::parse(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  r.magic("GPCA");
  if (r.u8() != 1) throw std::runtime_error("unsupported attribute stream version");

  AttributeBitstream stream;
  AttributeHeader& h = stream.header;
  h.coder = AttributeCoder(r.u8());
  h.colorSpace = ColorSpace(r.u8());
  h.qsteps = {r.f64(), r.f64(), r.f64()};
  h.neighborCount = int(r.u32());
  h.initialIndex = r.u32();
  uint32_t levels = r.u32();
  h.lodThresholds.resize(levels);
  for (uint32_t s = 0; s < levels; s++) h.lodThresholds[s] = r.f64();
  h.pointCount = r.u64();
  for (auto& p : stream.payload) p = r.bytes();
  return stream;
}

size_t AttributeBitstream::byteSize() const {
  size_t n = 5 + 1 + 1 + 24 + 4 + 4 + 4 + header.lodThresholds.size() * 8 + 8;
  for (const auto& p : payload) n += 8 + p.size();
  return n;
}

}  // namespace pcc
