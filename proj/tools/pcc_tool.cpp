#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcc/codec.h"
#include "pcc/container.h"
#include "pcc/metrics.h"
#include "pcc/ply_io.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCodecError = 1;
constexpr int kExitUsage = 2;

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

pcc::CoderSelection parseCoder(const std::string& name) {
  if (name == "raht") return pcc::CoderSelection::Raht;
  if (name == "predict") return pcc::CoderSelection::Predict;
  if (name == "lifting") return pcc::CoderSelection::Lifting;
  if (name == "vpcc") return pcc::CoderSelection::Vpcc;
  if (name == "geometry") return pcc::CoderSelection::GeometryOnly;
  throw CLI::ValidationError("unknown coder '" + name + "'");
}

const char* kCsvHeader =
  "dataset,case,coder,bpp_geom,bpp_color,bpp_total,"
  "psnr_g,psnr_y,psnr_u,psnr_v,enc_s,dec_s";

struct CsvRow {
  std::string dataset;
  int caseId = 0;
  std::string coder;
  pcc::EncodeStats stats;
  pcc::DistanceReport report;
  double encSeconds = 0, decSeconds = 0;
};

std::string formatRow(const CsvRow& row) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << row.dataset << ',' << row.caseId << ',' << row.coder << ','
     << row.stats.bppGeometry << ',' << row.stats.bppColor << ','
     << row.stats.bppTotal << ',' << row.report.psnrGeom << ','
     << row.report.psnrY << ',' << row.report.psnrU << ',' << row.report.psnrV
     << ',' << row.encSeconds << ',' << row.decSeconds;
  return os.str();
}

//----------------------------------------------------------------------------

int runEncode(const std::string& inPath, const std::string& outPath,
              const pcc::EncoderConfig& config) {
  pcc::PointCloud cloud = pcc::readPlyFile(inPath);

  pcc::EncodeStats stats;
  auto start = Clock::now();
  std::vector<uint8_t> bytes = pcc::encodeCloud(cloud, config, &stats);
  double seconds = secondsSince(start);

  pcc::writeFile(outPath, bytes);
  std::cout << "points:        " << stats.pointCount << "\n"
            << "geometry bpp:  " << stats.bppGeometry << "\n"
            << "color bpp:     " << stats.bppColor << "\n"
            << "total bpp:     " << stats.bppTotal << "\n"
            << "encode time:   " << seconds << " s\n";
  return kExitOk;
}

int runDecode(const std::string& inPath, const std::string& outPath,
              bool ascii) {
  std::vector<uint8_t> bytes = pcc::readFile(inPath);
  auto start = Clock::now();
  pcc::PointCloud cloud = pcc::decodeCloud(bytes);
  double seconds = secondsSince(start);
  pcc::writePlyFile(cloud, outPath,
                    ascii ? pcc::PlyFormat::Ascii
                          : pcc::PlyFormat::BinaryLittleEndian);
  std::cout << "points:      " << cloud.size() << "\n"
            << "decode time: " << seconds << " s\n";
  return kExitOk;
}

int runEval(const std::string& origPath, const std::string& reconPath,
            const std::string& bitstreamPath, const std::string& dataset,
            int caseId, const std::string& coder) {
  pcc::PointCloud orig = pcc::readPlyFile(origPath);
  pcc::PointCloud recon = pcc::readPlyFile(reconPath);
  if (orig.hasColors() && recon.hasColors()) {
    orig = pcc::rgbToYuv(orig);
    recon = pcc::rgbToYuv(recon);
  }

  CsvRow row;
  row.dataset = dataset.empty() ? origPath : dataset;
  row.caseId = caseId;
  row.coder = coder;
  row.report = pcc::computeDistanceReport(orig, recon);
  if (!bitstreamPath.empty()) {
    std::vector<uint8_t> bytes = pcc::readFile(bitstreamPath);
    pcc::Container container = pcc::Container::parse(bytes);
    double T = double(orig.size());
    size_t geom = 0, attr = 0;
    if (const auto* g = container.find(pcc::SectionTag::Geometry))
      geom = g->size();
    if (const auto* a = container.find(pcc::SectionTag::Attribute))
      attr = a->size();
    if (const auto* v = container.find(pcc::SectionTag::Vpcc)) geom = v->size();
    row.stats.bppGeometry = double(geom) * 8.0 / T;
    row.stats.bppColor = double(attr) * 8.0 / T;
    row.stats.bppTotal = double(bytes.size()) * 8.0 / T;
  }

  std::cout << kCsvHeader << "\n" << formatRow(row) << "\n";
  return kExitOk;
}

//----------------------------------------------------------------------------
// Sweep: run encode/decode/eval ladders per coder, emit the rate-distortion
// CSV and the pairwise BD table against the benchmark coder.

struct SweepPoint {
  pcc::EncoderConfig config;
  CsvRow row;
};

std::vector<double> ladderOf(const nlohmann::json& j, const std::string& key) {
  std::vector<double> v;
  if (j.contains(key)) {
    for (const auto& x : j.at(key)) v.push_back(x.get<double>());
  }
  return v;
}

double qstepForCoder(const nlohmann::json& cfg, const std::string& coder,
                     size_t index) {
  std::string key = coder == "raht" ? "rqs"
    : coder == "predict"            ? "ptqs"
    : coder == "lifting"            ? "ltqs"
                                    : "";
  if (key.empty()) return 0;
  std::vector<double> ladder = ladderOf(cfg, key);
  if (ladder.empty()) throw std::runtime_error("missing ladder '" + key + "'");
  return ladder[index % ladder.size()];
}

int runSweep(const std::string& configPath, const std::string& outputDir) {
  std::ifstream in(configPath);
  if (!in) throw std::runtime_error("cannot open " + configPath);
  nlohmann::json cfg = nlohmann::json::parse(in);

  const std::string inputPath = cfg.at("input").get<std::string>();
  const std::string dataset = cfg.value("dataset", inputPath);
  const int caseId = cfg.value("case", 2);
  const std::string benchmark = cfg.value("benchmark", std::string("raht"));
  const int lodc = cfg.value("lodc", 8);
  const int k = cfg.value("k", 3);

  std::vector<std::string> coders;
  for (const auto& c : cfg.at("coders")) coders.push_back(c.get<std::string>());

  pcc::PointCloud original = pcc::readPlyFile(inputPath);
  pcc::PointCloud originalYuv =
    original.hasColors() ? pcc::rgbToYuv(original) : original;

  // ladder length per case: case 1 is a single lossless point
  size_t ladderLen = 1;
  if (caseId == 2) {
    for (const char* key : {"rqs", "ptqs", "ltqs", "cqp"})
      ladderLen = std::max(ladderLen, ladderOf(cfg, key).size());
  } else if (caseId == 3) {
    for (const char* key : {"pqs", "dbodl", "rqs", "ptqs", "ltqs", "gqp", "cqp"})
      ladderLen = std::max(ladderLen, ladderOf(cfg, key).size());
  }

  std::vector<SweepPoint> points;
  for (const std::string& coder : coders) {
    for (size_t i = 0; i < ladderLen; i++) {
      SweepPoint pt;
      pt.config.coder = parseCoder(coder);
      pt.config.lodc = lodc;
      pt.config.k = k;
      pt.row.dataset = dataset;
      pt.row.caseId = caseId;
      pt.row.coder = coder;

      if (caseId == 1) {
        pt.config.pqs = 1.0;
        pt.config.qstep = 0;
      } else if (caseId == 2) {
        pt.config.pqs = 1.0;
        if (coder == "vpcc") {
          auto cqp = ladderOf(cfg, "cqp");
          if (cqp.empty()) throw std::runtime_error("missing ladder 'cqp'");
          pt.config.vpcc.texQstep = int(cqp[i % cqp.size()]);
        } else {
          pt.config.qstep = qstepForCoder(cfg, coder, i);
        }
      } else {
        auto pqs = ladderOf(cfg, "pqs");
        auto dbodl = ladderOf(cfg, "dbodl");
        if (!pqs.empty()) pt.config.pqs = pqs[i % pqs.size()];
        if (!dbodl.empty()) pt.config.dbodl = int(dbodl[i % dbodl.size()]);
        if (coder == "vpcc") {
          auto gqp = ladderOf(cfg, "gqp");
          auto cqp = ladderOf(cfg, "cqp");
          if (!gqp.empty()) pt.config.vpcc.geomQstep = int(gqp[i % gqp.size()]);
          if (!cqp.empty()) pt.config.vpcc.texQstep = int(cqp[i % cqp.size()]);
          pt.config.dbodl = 0;
        } else {
          pt.config.qstep = qstepForCoder(cfg, coder, i);
        }
      }
      points.push_back(std::move(pt));
    }
  }

  // pure pipeline per ladder point; rows land in config order
  std::vector<std::future<void>> jobs;
  jobs.reserve(points.size());
  for (SweepPoint& pt : points) {
    jobs.push_back(std::async(std::launch::async, [&pt, &original,
                                                   &originalYuv]() {
      auto encStart = Clock::now();
      std::vector<uint8_t> bytes = pcc::encodeCloud(original, pt.config,
                                                    &pt.row.stats);
      pt.row.encSeconds = secondsSince(encStart);
      auto decStart = Clock::now();
      pcc::PointCloud recon = pcc::decodeCloud(bytes);
      pt.row.decSeconds = secondsSince(decStart);
      pcc::PointCloud reconYuv =
        recon.hasColors() ? pcc::rgbToYuv(recon) : recon;
      pt.row.report = pcc::computeDistanceReport(originalYuv, reconYuv);
    }));
  }
  for (auto& job : jobs) job.get();

  std::filesystem::create_directories(outputDir);
  std::ofstream rd(outputDir + "/rd.csv");
  rd << kCsvHeader << "\n";
  for (const SweepPoint& pt : points) rd << formatRow(pt.row) << "\n";

  // monotone-rate check per coder curve
  for (const std::string& coder : coders) {
    std::vector<double> rates;
    for (const SweepPoint& pt : points)
      if (pt.row.coder == coder) rates.push_back(pt.row.stats.bppTotal);
    for (size_t i = 1; i < rates.size(); i++)
      if (rates[i] > rates[i - 1]) {
        std::cerr << "warning: non-monotone rate ladder for coder " << coder
                  << "\n";
        break;
      }
  }

  // BD table against the benchmark coder
  std::ofstream bd(outputDir + "/bd.csv");
  bd << "dataset,case,coder,benchmark,channel,bd_psnr_db,bd_br_percent\n";
  auto curveOf = [&](const std::string& coder, pcc::MetricChannel ch) {
    std::vector<pcc::RdPoint> curve;
    for (const SweepPoint& pt : points) {
      if (pt.row.coder != coder) continue;
      double psnr = ch == pcc::MetricChannel::Y ? pt.row.report.psnrY
        : ch == pcc::MetricChannel::U           ? pt.row.report.psnrU
        : ch == pcc::MetricChannel::V           ? pt.row.report.psnrV
                                                : pt.row.report.psnrGeom;
      if (psnr >= pcc::kPsnrCap) continue;  // lossless rows carry no curve info
      curve.push_back({pt.row.stats.bppTotal, psnr});
    }
    return curve;
  };

  const struct {
    pcc::MetricChannel ch;
    const char* name;
  } channels[] = {{pcc::MetricChannel::Y, "Y"},
                  {pcc::MetricChannel::U, "U"},
                  {pcc::MetricChannel::V, "V"}};
  for (const std::string& coder : coders) {
    if (coder == benchmark) continue;
    for (const auto& chan : channels) {
      try {
        auto base = curveOf(benchmark, chan.ch);
        auto curve = curveOf(coder, chan.ch);
        pcc::BdStats stats = pcc::bdStats(base, curve);
        bd << dataset << ',' << caseId << ',' << coder << ',' << benchmark
           << ',' << chan.name << ',' << stats.bdPsnr << ',' << stats.bdRate
           << "\n";
      } catch (const std::exception& e) {
        std::cerr << "warning: BD " << coder << "/" << chan.name << ": "
                  << e.what() << "\n";
      }
    }
  }

  std::cout << "wrote " << outputDir << "/rd.csv and " << outputDir
            << "/bd.csv (" << points.size() << " points)\n";
  return kExitOk;
}

}  // namespace

//============================================================================

int main(int argc, char** argv) {
  CLI::App app{"geometry-based point cloud codec and evaluation harness"};
  app.require_subcommand(1);

  // encode
  auto* encode = app.add_subcommand("encode", "encode a PLY file");
  std::string encIn, encOut;
  std::string coderName = "raht";
  pcc::EncoderConfig config;
  bool noDcm = false, noDedup = false, trisoupFlag = false, yuvFlag = false;
  std::string sliceMode = "none";
  double rqs = -1, ptqs = -1, ltqs = -1;
  encode->add_option("input", encIn, "input .ply")->required();
  encode->add_option("output", encOut, "output .pcc")->required();
  encode->add_option("--coder", coderName,
                     "raht | predict | lifting | vpcc | geometry");
  encode->add_option("--pqs", config.pqs, "position quantization scale (PQS)");
  encode->add_option("--dbodl", config.dbodl,
                     "octree depth minus coded level (DBODL); > 0 enables trisoup");
  encode->add_flag("--trisoup", trisoupFlag, "require trisoup mode");
  encode->add_flag("--no-dcm", noDcm, "disable direct coding mode");
  encode->add_flag("--no-dedup", noDedup, "keep duplicate quantized points");
  encode->add_option("--qstep", config.qstep, "attribute quantization step");
  encode->add_option("--rqs", rqs, "RAHT color quantization step (alias)");
  encode->add_option("--ptqs", ptqs, "predict transform step (alias)");
  encode->add_option("--ltqs", ltqs, "lifting transform step (alias)");
  encode->add_option("--lodc", config.lodc, "level of detail count (LODC)");
  encode->add_option("--k", config.k, "prediction neighbor count");
  encode->add_option("--slices", sliceMode, "none | longest-edge | octree");
  encode->add_option("--partition-depth", config.partitionParam,
                     "octree slice partition depth");
  encode->add_option("--gqp", config.vpcc.geomQstep, "vpcc geometry image step");
  encode->add_option("--cqp", config.vpcc.texQstep, "vpcc texture image step");
  encode->add_option("--delta", config.vpcc.surfaceThickness,
                     "vpcc surface thickness");
  encode->add_flag("--yuv", yuvFlag, "force YUV color conversion");

  // decode
  auto* decode = app.add_subcommand("decode", "decode a .pcc container");
  std::string decIn, decOut;
  bool decAscii = false;
  decode->add_option("input", decIn, "input .pcc")->required();
  decode->add_option("output", decOut, "output .ply")->required();
  decode->add_flag("--ascii", decAscii, "write ASCII PLY");

  // eval
  auto* eval = app.add_subcommand("eval", "point-to-point quality report");
  std::string evalOrig, evalRecon, evalBits, evalDataset, evalCoder = "?";
  int evalCase = 0;
  eval->add_option("--original", evalOrig)->required();
  eval->add_option("--reconstructed", evalRecon)->required();
  eval->add_option("--bitstream", evalBits, "container for bpp columns");
  eval->add_option("--dataset", evalDataset);
  eval->add_option("--case", evalCase);
  eval->add_option("--coder", evalCoder);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "rate-distortion ladder runs");
  std::string sweepConfig, sweepOut = "sweep_out";
  sweep->add_option("--config", sweepConfig, "JSON experiment config")
    ->required();
  sweep->add_option("--output", sweepOut, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (encode->parsed()) {
      config.coder = parseCoder(coderName);
      config.dcm = !noDcm;
      config.dedup = !noDedup;
      config.forceYuv = yuvFlag;
      if (rqs >= 0) config.qstep = rqs;
      if (ptqs >= 0) config.qstep = ptqs;
      if (ltqs >= 0) config.qstep = ltqs;
      if (trisoupFlag && config.dbodl < 1) {
        std::cerr << "error: trisoup requires DBODL >= 1 (coded level below "
                     "the octree depth)\n";
        return kExitUsage;
      }
      if (sliceMode == "longest-edge") {
        config.slicing = true;
        config.partitionMethod = pcc::PartitionMethod::LongestEdge;
      } else if (sliceMode == "octree") {
        config.slicing = true;
        config.partitionMethod = pcc::PartitionMethod::Octree;
      } else if (sliceMode != "none") {
        std::cerr << "error: unknown slice mode '" << sliceMode << "'\n";
        return kExitUsage;
      }
      if (!std::filesystem::exists(encIn)) {
        std::cerr << "error: no such file: " << encIn << "\n";
        return kExitUsage;
      }
      return runEncode(encIn, encOut, config);
    }
    if (decode->parsed()) {
      if (!std::filesystem::exists(decIn)) {
        std::cerr << "error: no such file: " << decIn << "\n";
        return kExitUsage;
      }
      return runDecode(decIn, decOut, decAscii);
    }
    if (eval->parsed())
      return runEval(evalOrig, evalRecon, evalBits, evalDataset, evalCase,
                     evalCoder);
    if (sweep->parsed()) return runSweep(sweepConfig, sweepOut);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCodecError;
  }
  return kExitUsage;
}
