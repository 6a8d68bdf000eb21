#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssimrc/codec.hpp"
#include "ssimrc/common.hpp"
#include "ssimrc/estimation.hpp"

namespace ssimrc {

using OrderedJson = nlohmann::ordered_json;

// Per-CTU log row. Parameter fields are the snapshot that was in effect
// while the CTU was encoded, before any end-of-frame update.
struct CtuLogRecord {
  int index = 0;
  Rect rect;
  int64_t pixel_count = 0;
  double alloc_bits = 0.0;  // R*; 0 when the scheme does not allocate
  int64_t bits = 0;
  double bpp = 0.0;
  double d_mse = 0.0;
  double d_ssim = 0.0;
  double satd = 0.0;
  double sigma2 = 0.0;
  double lambda_used = 0.0;  // the multiplier handed to RDO
  double lambda_ssim = 0.0;  // SSIM-domain multiplier, when one exists
  CtuParams params;
  CodingMode mode;
  double chosen_cost = 0.0;
  std::vector<ModeCost> mode_costs;
};

struct FrameLogRecord {
  int index = 0;
  bool bootstrap = false;
  double target_bits = 0.0;
  double lambda_star = 0.0;
  bool allocation_clamped = false;
  bool allocation_converged = true;
  int64_t total_bits = 0;
  double frame_d_ssim = 0.0;
  double frame_ssim = 0.0;
  double frame_d_mse = 0.0;
  double frame_psnr = 0.0;
  int64_t ssim_evals_in_mode_loop = 0;
  std::vector<CtuLogRecord> ctus;
};

struct RunLog {
  OrderedJson config;
  std::vector<FrameLogRecord> frames;
  // CTU payloads per frame when the producer kept them. Not part of the
  // jsonl serialization; used for bitstream dumps and decode tests.
  std::vector<std::vector<std::vector<uint8_t>>> payloads;
};

inline OrderedJson ctu_to_json(const CtuLogRecord& c) {
  OrderedJson j;
  j["i"] = c.index;
  j["x"] = c.rect.x;
  j["y"] = c.rect.y;
  j["w"] = c.rect.w;
  j["h"] = c.rect.h;
  j["m"] = c.pixel_count;
  j["alloc_bits"] = c.alloc_bits;
  j["bits"] = c.bits;
  j["bpp"] = c.bpp;
  j["d_mse"] = c.d_mse;
  j["d_ssim"] = c.d_ssim;
  j["satd"] = c.satd;
  j["sigma2"] = c.sigma2;
  j["lambda_used"] = c.lambda_used;
  j["lambda_ssim"] = c.lambda_ssim;
  j["alpha"] = c.params.rd.alpha;
  j["beta"] = c.params.rd.beta;
  j["c"] = c.params.rl.c;
  j["k"] = c.params.rl.k;
  j["theta"] = c.params.dd.theta;
  j["eta"] = c.params.dd.eta;
  j["qp"] = c.mode.qp;
  j["tsize"] = c.mode.transform_size;
  j["cost"] = c.chosen_cost;
  OrderedJson costs = OrderedJson::array();
  for (const auto& mc : c.mode_costs) {
    costs.push_back({mc.mode.qp, mc.mode.transform_size, mc.bits, mc.sse, mc.cost});
  }
  j["mode_costs"] = std::move(costs);
  return j;
}

inline CtuLogRecord ctu_from_json(const OrderedJson& j) {
  CtuLogRecord c;
  c.index = j.at("i").get<int>();
  c.rect = Rect{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
                j.at("h").get<int>()};
  c.pixel_count = j.at("m").get<int64_t>();
  c.alloc_bits = j.at("alloc_bits").get<double>();
  c.bits = j.at("bits").get<int64_t>();
  c.bpp = j.at("bpp").get<double>();
  c.d_mse = j.at("d_mse").get<double>();
  c.d_ssim = j.at("d_ssim").get<double>();
  c.satd = j.at("satd").get<double>();
  c.sigma2 = j.at("sigma2").get<double>();
  c.lambda_used = j.at("lambda_used").get<double>();
  c.lambda_ssim = j.at("lambda_ssim").get<double>();
  c.params.rd.alpha = j.at("alpha").get<double>();
  c.params.rd.beta = j.at("beta").get<double>();
  c.params.rl.c = j.at("c").get<double>();
  c.params.rl.k = j.at("k").get<double>();
  c.params.dd.theta = j.at("theta").get<double>();
  c.params.dd.eta = j.at("eta").get<double>();
  c.mode.qp = j.at("qp").get<int>();
  c.mode.transform_size = j.at("tsize").get<int>();
  c.chosen_cost = j.at("cost").get<double>();
  for (const auto& entry : j.at("mode_costs")) {
    ModeCost mc;
    mc.mode.qp = entry.at(0).get<int>();
    mc.mode.transform_size = entry.at(1).get<int>();
    mc.bits = entry.at(2).get<int64_t>();
    mc.sse = entry.at(3).get<int64_t>();
    mc.cost = entry.at(4).get<double>();
    c.mode_costs.push_back(mc);
  }
  return c;
}

inline OrderedJson frame_to_json(const FrameLogRecord& f) {
  OrderedJson j;
  j["type"] = "frame";
  j["index"] = f.index;
  j["bootstrap"] = f.bootstrap;
  j["target_bits"] = f.target_bits;
  j["lambda_star"] = f.lambda_star;
  j["allocation_clamped"] = f.allocation_clamped;
  j["allocation_converged"] = f.allocation_converged;
  j["total_bits"] = f.total_bits;
  j["frame_d_ssim"] = f.frame_d_ssim;
  j["frame_ssim"] = f.frame_ssim;
  j["frame_d_mse"] = f.frame_d_mse;
  j["frame_psnr"] = f.frame_psnr;
  j["ssim_evals_in_mode_loop"] = f.ssim_evals_in_mode_loop;
  OrderedJson ctus = OrderedJson::array();
  for (const auto& c : f.ctus) {
    ctus.push_back(ctu_to_json(c));
  }
  j["ctus"] = std::move(ctus);
  return j;
}

inline FrameLogRecord frame_from_json(const OrderedJson& j) {
  FrameLogRecord f;
  f.index = j.at("index").get<int>();
  f.bootstrap = j.at("bootstrap").get<bool>();
  f.target_bits = j.at("target_bits").get<double>();
  f.lambda_star = j.at("lambda_star").get<double>();
  f.allocation_clamped = j.at("allocation_clamped").get<bool>();
  f.allocation_converged = j.at("allocation_converged").get<bool>();
  f.total_bits = j.at("total_bits").get<int64_t>();
  f.frame_d_ssim = j.at("frame_d_ssim").get<double>();
  f.frame_ssim = j.at("frame_ssim").get<double>();
  f.frame_d_mse = j.at("frame_d_mse").get<double>();
  f.frame_psnr = j.at("frame_psnr").get<double>();
  f.ssim_evals_in_mode_loop = j.at("ssim_evals_in_mode_loop").get<int64_t>();
  for (const auto& c : j.at("ctus")) {
    f.ctus.push_back(ctu_from_json(c));
  }
  return f;
}

inline void write_run_log(const std::string& path, const RunLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write run log: " + path);
  }
  out << log.config.dump() << "\n";
  for (const auto& frame : log.frames) {
    out << frame_to_json(frame).dump() << "\n";
  }
}

inline RunLog read_run_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open run log: " + path);
  }
  RunLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    OrderedJson j;
    try {
      j = OrderedJson::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad log line: " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "config") {
      log.config = std::move(j);
    } else if (type == "frame") {
      try {
        log.frames.push_back(frame_from_json(j));
      } catch (const std::exception& e) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": bad frame record: " + e.what());
      }
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown record type '" + type + "'");
    }
  }
  if (log.config.is_null()) {
    throw std::runtime_error(path + ": missing config record");
  }
  return log;
}

}  // namespace ssimrc
