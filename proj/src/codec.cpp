#include "pcc/codec.h"

#include <stdexcept>

#include <json.hpp>

#include "pcc/bytes.h"
#include "pcc/container.h"
#include "pcc/metrics.h"

namespace pcc {

bool EncoderConfig::colorLossless() const {
  switch (coder) {
  case CoderSelection::GeometryOnly: return true;
  case CoderSelection::Predict: return qstep <= 1;
  case CoderSelection::Raht:
  case CoderSelection::Lifting: return qstep <= 0;
  case CoderSelection::Vpcc: return vpcc.texQstep <= 1;
  }
  return false;
}

std::string EncoderConfig::coderName() const {
  switch (coder) {
  case CoderSelection::GeometryOnly: return "geometry";
  case CoderSelection::Raht: return "raht";
  case CoderSelection::Predict: return "predict";
  case CoderSelection::Lifting: return "lifting";
  case CoderSelection::Vpcc: return "vpcc";
  }
  return "?";
}

namespace {

std::string configEcho(const EncoderConfig& c, size_t pointCount) {
  nlohmann::json j;
  j["coder"] = c.coderName();
  j["pqs"] = c.pqs;
  j["dbodl"] = c.dbodl;
  j["dcm"] = c.dcm;
  j["dedup"] = c.dedup;
  j["qstep"] = c.qstep;
  j["lodc"] = c.lodc;
  j["k"] = c.k;
  j["gqp"] = c.vpcc.geomQstep;
  j["cqp"] = c.vpcc.texQstep;
  j["points"] = pointCount;
  return j.dump();
}

// conversion/quantization parameters prefixed to the vpcc payload so it
// decodes without side information, like the geometry stream header
std::vector<uint8_t> frameParamsBlob(const ConversionParams& conv,
                                     const QuantizationParams& quant) {
  ByteWriter w;
  w.f64(conv.translation.x);
  w.f64(conv.translation.y);
  w.f64(conv.translation.z);
  w.f64(conv.scale);
  w.f64(quant.scale);
  w.f64(quant.minimum.x);
  w.f64(quant.minimum.y);
  w.f64(quant.minimum.z);
  return w.take();
}

void readFrameParams(ByteReader& r, ConversionParams& conv,
                     QuantizationParams& quant) {
  conv.translation = {r.f64(), r.f64(), r.f64()};
  conv.scale = r.f64();
  quant.scale = r.f64();
  quant.minimum = {r.f64(), r.f64(), r.f64()};
}

size_t vpccTextureBytes(const VpccBitstream& s) {
  size_t n = 0;
  if (s.hasColor)
    for (int c = 0; c < 3; c++) n += s.texNear[c].size() + s.texFar[c].size();
  return n;
}

}  // namespace

std::vector<uint8_t> encodeCloud(const PointCloud& world,
                                 const EncoderConfig& config,
                                 EncodeStats* stats) {
  if (world.empty()) throw std::invalid_argument("cannot encode empty cloud");
  world.checkInvariants();

  PointCloud frame = convertCoordinates(world, config.conversion);

  QuantizationParams quant;
  quant.scale = config.pqs;
  quant.removeDuplicates = config.dedup;
  Vec3d minPos, maxPos;
  boundingExtremes(frame, minPos, maxPos);
  quant.minimum = minPos;

  PointCloud quantized = quantizePositions(frame, quant);
  const bool hasColors = world.hasColors();
  const bool toYuv = hasColors && (config.forceYuv || !config.colorLossless());

  Container container;
  size_t geometryBytes = 0, attributeBytes = 0;

  if (config.coder == CoderSelection::Vpcc) {
    PointCloud coded = quantized;
    if (hasColors) {
      coded = attributeTransfer(frame, quantized, quant);
      if (toYuv) coded = rgbToYuv(coded);
    }
    VpccBitstream stream = vpccEncode(coded, config.vpcc, ReferenceImageCodec());
    std::vector<uint8_t> payload = frameParamsBlob(config.conversion, quant);
    std::vector<uint8_t> body = stream.serialize();
    payload.insert(payload.end(), body.begin(), body.end());
    attributeBytes = vpccTextureBytes(stream);
    geometryBytes = payload.size() - attributeBytes;
    container.add(SectionTag::Vpcc, std::move(payload));
  } else {
    GeometryMode mode = GeometryMode::Lossless;
    if (config.dbodl > 0)
      mode = GeometryMode::Trisoup;
    else if (config.pqs != 1.0)
      mode = GeometryMode::QuantizeOnly;

    std::vector<Slice> slices;
    if (config.slicing) {
      slices = partitionSlices(quantized, config.partitionMethod,
                               config.partitionParam);
    } else {
      Slice all;
      all.method = config.partitionMethod;
      all.pointIndices.resize(quantized.size());
      for (uint32_t i = 0; i < quantized.size(); i++) all.pointIndices[i] = i;
      boundingExtremes(quantized, all.min, all.max);
      slices.push_back(std::move(all));
    }

    GeometryBitstream geomStream = encodeGeometrySliced(
      quantized, slices, mode, config.dbodl, config.dcm);
    geomStream.header.conversion = config.conversion;
    geomStream.header.quantization = quant;

    std::vector<uint8_t> geomBytes = geomStream.serialize();
    geometryBytes = geomBytes.size();
    container.add(SectionTag::Geometry, std::move(geomBytes));

    if (hasColors && config.coder != CoderSelection::GeometryOnly) {
      // attribute coding runs on the decoded voxel set so encoder and
      // decoder agree on point order
      PointCloud decodedVoxels = decodeGeometry(geomStream);
      PointCloud decodedFrame = inverseQuantizePositions(decodedVoxels, quant);
      PointCloud recolored = recolor(decodedFrame, frame);
      PointCloud attrCloud = decodedVoxels;
      attrCloud.setColorSpace(recolored.colorSpace());
      attrCloud.colors() = std::move(recolored.colors());
      if (toYuv) attrCloud = rgbToYuv(attrCloud);

      Vec3d qsteps{config.qstep, config.qstep, config.qstep};
      AttributeBitstream attrStream;
      if (config.coder == CoderSelection::Raht) {
        attrStream = rahtEncode(attrCloud, qsteps);
      } else {
        LodPartition lod = generateLod(
          attrCloud, defaultLodThresholds(attrCloud, config.lodc), 0);
        attrStream = config.coder == CoderSelection::Predict
          ? predictTransformEncode(attrCloud, lod, config.k, qsteps)
          : liftingTransformEncode(attrCloud, lod, config.k, qsteps);
      }
      std::vector<uint8_t> attrBytes = attrStream.serialize();
      attributeBytes = attrBytes.size();
      container.add(SectionTag::Attribute, std::move(attrBytes));
    }
  }

  std::string echo = configEcho(config, world.size());
  container.add(SectionTag::Trailer,
                std::vector<uint8_t>(echo.begin(), echo.end()));

  std::vector<uint8_t> bytes = container.serialize();
  if (stats) {
    stats->pointCount = world.size();
    stats->geometryBytes = geometryBytes;
    stats->attributeBytes = attributeBytes;
    stats->totalBytes = bytes.size();
    double T = double(world.size());
    stats->bppGeometry = double(geometryBytes) * 8.0 / T;
    stats->bppColor = double(attributeBytes) * 8.0 / T;
    stats->bppTotal = double(bytes.size()) * 8.0 / T;
  }
  return bytes;
}

PointCloud decodeCloud(const std::vector<uint8_t>& containerBytes) {
  Container container = Container::parse(containerBytes);

  if (const std::vector<uint8_t>* vpccPayload = container.find(SectionTag::Vpcc)) {
    ByteReader r(*vpccPayload);
    ConversionParams conv;
    QuantizationParams quant;
    readFrameParams(r, conv, quant);
    std::vector<uint8_t> body(vpccPayload->begin() + long(r.position()),
                              vpccPayload->end());
    PointCloud voxels = vpccDecode(VpccBitstream::parse(body),
                                   ReferenceImageCodec());
    if (voxels.hasColors() && voxels.colorSpace() == ColorSpace::YUV)
      voxels = yuvToRgb(voxels);
    return invertCoordinates(inverseQuantizePositions(voxels, quant), conv);
  }

  const std::vector<uint8_t>* geomPayload = container.find(SectionTag::Geometry);
  if (!geomPayload)
    throw std::runtime_error("container has no geometry or vpcc section");

  GeometryBitstream geomStream = GeometryBitstream::parse(*geomPayload);
  PointCloud voxels = decodeGeometry(geomStream);

  if (const std::vector<uint8_t>* attrPayload =
        container.find(SectionTag::Attribute)) {
    AttributeBitstream attrStream = AttributeBitstream::parse(*attrPayload);
    voxels = attributeDecode(attrStream, voxels);
    if (voxels.colorSpace() == ColorSpace::YUV) voxels = yuvToRgb(voxels);
  }

  PointCloud frame =
    inverseQuantizePositions(voxels, geomStream.header.quantization);
  return invertCoordinates(frame, geomStream.header.conversion);
}

}  // namespace pcc
