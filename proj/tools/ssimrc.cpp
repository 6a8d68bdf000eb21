// Command line front end: synthetic corpus generation, scheme encoding with
// JSON-lines run logs, report generation, and the D-D model analysis runs.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssimrc/codec.hpp"
#include "ssimrc/evaluation.hpp"
#include "ssimrc/media.hpp"
#include "ssimrc/run_log.hpp"
#include "ssimrc/schemes.hpp"
#include "ssimrc/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ssimrc;

struct InputArgs {
  std::string path;
  std::string format = "y4m";
  int width = 0;
  int height = 0;
  int frames = 0;
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--input", in.path, "input sequence (file or pgm directory)")->required();
  cmd->add_option("--format", in.format, "input format: y4m, yuv (raw 4:2:0), pgm")
      ->check(CLI::IsMember({"y4m", "yuv", "raw", "raw-yuv420-luma", "pgm", "pgm-sequence"}));
  cmd->add_option("--width", in.width, "frame width (raw input only)");
  cmd->add_option("--height", in.height, "frame height (raw input only)");
  cmd->add_option("--frames", in.frames, "number of frames to read")->required();
}

std::vector<LumaFrame> load_input(const InputArgs& in) {
  return load_sequence(in.path, parse_format(in.format), in.frames, in.width, in.height);
}

std::string corpus_name(const std::string& input_path) {
  return fs::path(input_path).stem().string();
}

std::vector<int> parse_qp_list(std::string spec) {
  if (spec.rfind("qp=", 0) == 0) {
    spec = spec.substr(3);
  }
  std::vector<int> qps;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) qps.push_back(std::stoi(tok));
  }
  require(!qps.empty(), "empty qp list: " + spec);
  return qps;
}

std::string run_file_name(const std::string& corpus, const SchemeConfig& config) {
  if (config.fixed_qp()) {
    return corpus + "_anchor_qp" + std::to_string(config.qp) + ".jsonl";
  }
  return corpus + "_" + scheme_name(config.scheme) + "_" +
         std::to_string(int64_t(std::llround(config.frame_budget_bits))) + ".jsonl";
}

RunLog execute_and_write(const std::vector<LumaFrame>& frames, SchemeConfig config,
                         const InputArgs& in, const std::string& out_dir,
                         bool dump_bitstream) {
  config.keep_payloads = dump_bitstream;
  RunLog log = run_scheme(frames, config);
  log.config = effective_config(config, corpus_name(in.path), in.path, in.format,
                                frames.front().width, frames.front().height,
                                int(frames.size()));
  fs::create_directories(out_dir);
  const std::string name = run_file_name(corpus_name(in.path), config);
  const std::string path = (fs::path(out_dir) / name).string();
  write_run_log(path, log);
  std::cout << "wrote " << path << "\n";
  if (dump_bitstream) {
    const auto data = pack_bitstream(frames.front().width, frames.front().height,
                                     config.ctu_size, log.payloads);
    const std::string bin = path.substr(0, path.size() - 6) + ".bin";
    write_bitstream_file(bin, data);
    std::cout << "wrote " << bin << "\n";
  }
  return log;
}

double mean_bits_per_frame_all(const RunLog& log) {
  double total = 0.0;
  for (const auto& f : log.frames) total += double(f.total_bits);
  return total / double(log.frames.size());
}

struct EncodeArgs {
  InputArgs in;
  std::string scheme = "anchor";
  int qp = 32;
  int ctu_size = 64;
  int mode_span = 6;
  int threads = 1;
  bool freeze = false;
  bool bitstream = false;
  double joint_blend = SchemeConfig{}.joint_blend;
  std::vector<double> budgets;
  std::string budget_from_anchor;
  std::string out_dir = "runs";
  UpdateRates rates;
};

void add_rate_options(CLI::App* cmd, UpdateRates& rates) {
  cmd->add_option("--delta-c", rates.delta_c, "R-lambda regression rate for c");
  cmd->add_option("--delta-k", rates.delta_k, "R-lambda regression rate for k");
  cmd->add_option("--delta-alpha", rates.delta_alpha, "R-D regression rate for alpha");
  cmd->add_option("--delta-beta", rates.delta_beta, "R-D regression rate for beta");
  cmd->add_option("--delta-theta", rates.delta_theta, "D-D LMS rate for theta");
  cmd->add_option("--delta-eta", rates.delta_eta, "D-D LMS rate for eta");
}

int cmd_encode(const EncodeArgs& args) {
  const std::vector<LumaFrame> frames = load_input(args.in);
  SchemeConfig base;
  base.scheme = parse_scheme(args.scheme);
  base.qp = args.qp;
  base.ctu_size = args.ctu_size;
  base.mode_span = args.mode_span;
  base.threads = args.threads;
  base.freeze_parameters = args.freeze;
  base.joint_blend = args.joint_blend;
  base.rates = args.rates;

  std::vector<std::pair<double, int>> budget_qp;  // (budget, bootstrap qp)
  if (!args.budget_from_anchor.empty()) {
    for (int qp : parse_qp_list(args.budget_from_anchor)) {
      SchemeConfig anchor = base;
      anchor.scheme = Scheme::Anchor;
      anchor.frame_budget_bits = 0.0;
      anchor.qp = qp;
      const RunLog log =
          execute_and_write(frames, anchor, args.in, args.out_dir, args.bitstream);
      budget_qp.emplace_back(mean_bits_per_frame_all(log), qp);
    }
  }
  for (double b : args.budgets) {
    budget_qp.emplace_back(b, args.qp);
  }

  if (budget_qp.empty()) {
    require(base.scheme == Scheme::Anchor,
            "scheme '" + args.scheme + "' needs --budget or --budget-from-anchor");
    base.frame_budget_bits = 0.0;
    execute_and_write(frames, base, args.in, args.out_dir, args.bitstream);
    return 0;
  }
  for (const auto& [budget, qp] : budget_qp) {
    SchemeConfig config = base;
    config.frame_budget_bits = budget;
    config.qp = qp;
    execute_and_write(frames, config, args.in, args.out_dir, args.bitstream);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& log_paths, const std::string& out_dir) {
  std::vector<RunLog> runs;
  for (const auto& path : log_paths) {
    runs.push_back(read_run_log(path));
  }
  const ReportFiles files = emit_report(runs, out_dir);
  std::cout << "wrote " << files.csv_path << "\nwrote " << files.json_path << "\n";
  return 0;
}

int cmd_analyze_dd(const InputArgs& in, const std::vector<int>& qps, const std::string& out_dir,
                   int threads, bool assert_trends, const UpdateRates& rates) {
  const std::vector<LumaFrame> frames = load_input(in);
  std::vector<RunLog> runs;
  for (int qp : qps) {
    SchemeConfig config;
    config.scheme = Scheme::Anchor;
    config.frame_budget_bits = 0.0;
    config.qp = qp;
    config.threads = threads;
    config.rates = rates;
    runs.push_back(execute_and_write(frames, config, in, out_dir, false));
  }
  std::vector<const RunLog*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);

  const PccReport pcc_rep = pcc_report(ptrs);
  const DdModelReport dd_rep = dd_model_report(ptrs);
  std::optional<HyperbolicFitReport> fit_rep;
  if (runs.size() >= 2) {
    fit_rep = hyperbolic_fit_report(ptrs);
  }

  OrderedJson j;
  j["corpus"] = corpus_name(in.path);
  j["qps"] = qps;
  if (pcc_rep.degenerate) {
    j["pcc"] = "degenerate";
  } else {
    j["pcc"] = {{"dmse", pcc_rep.raw},
                {"yeo", pcc_rep.yeo},
                {"satd", pcc_rep.satd_norm},
                {"samples", pcc_rep.samples}};
  }
  if (dd_rep.degenerate) {
    j["dd_models"] = "degenerate";
  } else {
    j["dd_models"] = {{"p_yeo", dd_rep.p_yeo},
                      {"p_global", dd_rep.p_global},
                      {"p_local", dd_rep.p_local},
                      {"theta_global", dd_rep.theta_global},
                      {"h_global", dd_rep.h_global},
                      {"samples", dd_rep.samples}};
  }
  if (fit_rep) {
    j["hyperbolic_fit"] = {{"median_correlation", fit_rep->median_correlation},
                           {"mean_correlation", fit_rep->mean_correlation},
                           {"fits", fit_rep->fits},
                           {"skipped", fit_rep->skipped}};
  }

  fs::create_directories(out_dir);
  const std::string json_path = (fs::path(out_dir) / "dd_analysis.json").string();
  {
    std::ofstream out(json_path, std::ios::binary);
    out << j.dump(2) << "\n";
  }
  std::cout << j.dump(2) << "\nwrote " << json_path << "\n";

  if (assert_trends) {
    if (pcc_rep.degenerate || dd_rep.degenerate) {
      std::cerr << "trend assertion failed: degenerate corpus (flat content?)\n";
      return 2;
    }
    bool ok = pcc_rep.satd_norm > pcc_rep.raw;
    ok = ok && dd_rep.p_local < dd_rep.p_global && dd_rep.p_global < dd_rep.p_yeo;
    if (!ok) {
      std::cerr << "trend assertion failed: expected pcc(D_SSIM, D_MSE/S) > "
                   "pcc(D_SSIM, D_MSE) and P_local < P_global < P_yeo\n";
      return 2;
    }
    std::cout << "trend assertions passed\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSIM-driven rate control research toolkit"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a deterministic test sequence");
  std::string synth_kind = "mixed";
  int synth_w = 416, synth_h = 240, synth_frames = 64;
  uint64_t synth_salt = 0;
  double synth_speed = 1.0;
  std::string synth_out = "sequence.y4m";
  synth->add_option("--kind", synth_kind, "gradient|waves|noise|checker|mixed");
  synth->add_option("--width", synth_w, "frame width");
  synth->add_option("--height", synth_h, "frame height");
  synth->add_option("--frames", synth_frames, "frame count");
  synth->add_option("--salt", synth_salt, "seed salt for content variation");
  synth->add_option("--speed", synth_speed, "temporal speed factor (1 = default motion)");
  synth->add_option("--out", synth_out, "output .y4m path")->required();

  // encode
  auto* encode = app.add_subcommand("encode", "run an encoding scheme and write run logs");
  EncodeArgs enc;
  add_input_options(encode, enc.in);
  encode->add_option("--scheme", enc.scheme, "anchor|somr|somr-plus|sosr")
      ->check(CLI::IsMember({"anchor", "somr", "somr-plus", "sosr"}));
  encode->add_option("--qp", enc.qp, "fixed / bootstrap QP")->check(CLI::Range(6, 45));
  encode->add_option("--ctu-size", enc.ctu_size, "CTU size (16, 32, 64)")
      ->check(CLI::IsMember({16, 32, 64}));
  encode->add_option("--mode-span", enc.mode_span, "QP span of the mode set");
  encode->add_option("--threads", enc.threads, "worker threads")->envname("RC_THREADS");
  encode->add_flag("--freeze-params", enc.freeze, "skip all model updates (replay)");
  encode->add_flag("--bitstream", enc.bitstream, "also dump the coded bitstream");
  encode->add_option("--joint-blend", enc.joint_blend,
                     "slope-memory weight of the joint parameter solve (1 = raw)");
  encode->add_option("--budget", enc.budgets, "per-frame bit budget (repeatable)");
  encode->add_option("--budget-from-anchor", enc.budget_from_anchor,
                     "derive budgets from fixed-QP anchor runs, e.g. qp=22,27,32,37");
  encode->add_option("--out", enc.out_dir, "output directory for run logs");
  add_rate_options(encode, enc.rates);

  // report
  auto* report = app.add_subcommand("report", "aggregate run logs into report.csv/report.json");
  std::vector<std::string> report_logs;
  std::string report_out = "reports";
  report->add_option("logs", report_logs, "run log files (.jsonl)")->required();
  report->add_option("--out", report_out, "output directory");

  // analyze-dd
  auto* analyze = app.add_subcommand("analyze-dd",
                                     "fixed-QP encodes + D-D model accuracy tables");
  InputArgs dd_in;
  add_input_options(analyze, dd_in);
  std::string dd_qps = "22,27,32,37";
  std::string dd_out = "dd";
  int dd_threads = 1;
  bool dd_assert = false;
  UpdateRates dd_rates;
  analyze->add_option("--qps", dd_qps, "comma-separated QP list");
  analyze->add_option("--out", dd_out, "output directory");
  analyze->add_option("--threads", dd_threads, "worker threads")->envname("RC_THREADS");
  analyze->add_flag("--assert-trends", dd_assert,
                    "exit nonzero unless the model-accuracy orderings hold");
  add_rate_options(analyze, dd_rates);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto frames =
          synth_sequence(synth_kind, synth_w, synth_h, synth_frames, synth_salt, synth_speed);
      write_y4m(synth_out, frames);
      std::cout << "wrote " << synth_out << " (" << frames.size() << " frames "
                << synth_w << "x" << synth_h << ")\n";
      return 0;
    }
    if (encode->parsed()) {
      return cmd_encode(enc);
    }
    if (report->parsed()) {
      return cmd_report(report_logs, report_out);
    }
    if (analyze->parsed()) {
      return cmd_analyze_dd(dd_in, parse_qp_list(dd_qps), dd_out, dd_threads, dd_assert,
                            dd_rates);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
