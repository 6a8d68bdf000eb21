#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssimrc/common.hpp"
#include "ssimrc/rd_models.hpp"
#include "ssimrc/run_log.hpp"

namespace ssimrc {

struct RdCurvePoint {
  double bitrate = 0.0;  // bits per frame
  double quality = 0.0;  // SSIM or PSNR
};

enum class BdMode { Rate, Quality };

namespace detail {

// Least-squares cubic in a mean-centered variable; exact interpolation for
// four points. Returns {center, a0..a3}.
struct Cubic {
  double center = 0.0;
  std::array<double, 4> coef{};

  double integrate(double lo, double hi) const {
    auto anti = [&](double x) {
      const double u = x - center;
      return coef[0] * u + coef[1] * u * u / 2.0 + coef[2] * u * u * u / 3.0 +
             coef[3] * u * u * u * u / 4.0;
    };
    return anti(hi) - anti(lo);
  }

  double eval(double x) const {
    const double u = x - center;
    return coef[0] + coef[1] * u + coef[2] * u * u + coef[3] * u * u * u;
  }
};

inline Cubic fit_cubic(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 4, "cubic fit: need at least 4 points");
  Cubic c;
  for (double x : xs) c.center += x;
  c.center /= double(xs.size());

  // Normal equations A^T A a = A^T y on the centered powers.
  double m[4][5] = {};
  for (size_t i = 0; i < xs.size(); ++i) {
    const double u = xs[i] - c.center;
    const double pow_u[4] = {1.0, u, u * u, u * u * u};
    for (int r = 0; r < 4; ++r) {
      for (int col = 0; col < 4; ++col) {
        m[r][col] += pow_u[r] * pow_u[col];
      }
      m[r][4] += pow_u[r] * ys[i];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    require(std::abs(m[pivot][col]) > 1e-12, "cubic fit: singular system");
    if (pivot != col) std::swap(m[pivot], m[col]);
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 5; ++k) m[r][k] -= f * m[col][k];
    }
  }
  for (int r = 0; r < 4; ++r) c.coef[r] = m[r][4] / m[r][r];
  return c;
}

inline void validate_curve(const std::vector<RdCurvePoint>& curve, const char* which) {
  require(curve.size() >= 4, std::string(which) + ": BD metrics need at least 4 points");
  for (const auto& p : curve) {
    require(p.bitrate > 0.0, std::string(which) + ": bitrates must be positive");
  }
  for (size_t i = 0; i < curve.size(); ++i) {
    for (size_t j = i + 1; j < curve.size(); ++j) {
      require(curve[i].bitrate != curve[j].bitrate,
              std::string(which) + ": bitrates must be distinct");
    }
  }
}

}  // namespace detail

// Classic 4-point Bjontegaard delta. BdMode::Rate integrates log10(bitrate)
// over the overlapping quality interval and reports the percent bitrate
// change of curve_b against curve_a; BdMode::Quality integrates quality over
// the overlapping log-rate interval and reports the mean quality delta.
inline double bd_metric(const std::vector<RdCurvePoint>& curve_a,
                        const std::vector<RdCurvePoint>& curve_b, BdMode mode) {
  detail::validate_curve(curve_a, "curve_a");
  detail::validate_curve(curve_b, "curve_b");

  auto xs_of = [&](const std::vector<RdCurvePoint>& c, bool quality_axis) {
    std::vector<double> v;
    v.reserve(c.size());
    for (const auto& p : c) {
      v.push_back(quality_axis ? p.quality : std::log10(p.bitrate));
    }
    return v;
  };

  const bool rate_mode = mode == BdMode::Rate;
  // Rate mode: x = quality, y = log10 rate. Quality mode: x = log10 rate,
  // y = quality.
  const std::vector<double> xa = xs_of(curve_a, rate_mode);
  const std::vector<double> ya = xs_of(curve_a, !rate_mode);
  const std::vector<double> xb = xs_of(curve_b, rate_mode);
  const std::vector<double> yb = xs_of(curve_b, !rate_mode);

  const double lo = std::max(*std::min_element(xa.begin(), xa.end()),
                             *std::min_element(xb.begin(), xb.end()));
  const double hi = std::min(*std::max_element(xa.begin(), xa.end()),
                             *std::max_element(xb.begin(), xb.end()));
  if (!(hi > lo)) {
    throw std::runtime_error("bd_metric: curves do not overlap (overlap interval [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "])");
  }
  const detail::Cubic pa = detail::fit_cubic(xa, ya);
  const detail::Cubic pb = detail::fit_cubic(xb, yb);
  const double avg_diff = (pb.integrate(lo, hi) - pa.integrate(lo, hi)) / (hi - lo);
  if (rate_mode) {
    return (std::pow(10.0, avg_diff) - 1.0) * 100.0;  // percent
  }
  return avg_diff;
}

// CTU-level bits error: |R* - R_act| / R*.
inline double bits_error(double allocated, double actual) {
  require(allocated > 0.0, "bits_error: allocated bits must be positive");
  return std::abs(allocated - actual) / allocated;
}

// ---- run-log aggregation ------------------------------------------------

// Bootstrap frames are excluded from every corpus statistic: they are
// encoded at a fixed QP before any model exists.
struct RunStats {
  double mean_bits_per_frame = 0.0;
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;
  double mean_bits_error = 0.0;
  int64_t bits_error_samples = 0;
  int frames = 0;
};

inline RunStats run_stats(const RunLog& log) {
  RunStats s;
  double err_sum = 0.0;
  for (const auto& f : log.frames) {
    if (f.bootstrap) continue;
    ++s.frames;
    s.mean_bits_per_frame += double(f.total_bits);
    s.mean_ssim += f.frame_ssim;
    s.mean_psnr += f.frame_psnr;
    for (const auto& c : f.ctus) {
      if (c.alloc_bits > 0.0) {
        err_sum += bits_error(c.alloc_bits, double(c.bits));
        ++s.bits_error_samples;
      }
    }
  }
  if (s.frames > 0) {
    s.mean_bits_per_frame /= s.frames;
    s.mean_ssim /= s.frames;
    s.mean_psnr /= s.frames;
  }
  s.mean_bits_error = s.bits_error_samples > 0 ? err_sum / double(s.bits_error_samples) : 0.0;
  return s;
}

inline RdCurvePoint curve_point(const RunLog& log, bool psnr_quality) {
  const RunStats s = run_stats(log);
  return {s.mean_bits_per_frame, psnr_quality ? s.mean_psnr : s.mean_ssim};
}

// Pearson correlations of D_SSIM against raw, variance-normalized, and
// SATD-normalized D_MSE, pooled over the given logs.
struct PccReport {
  double raw = 0.0;
  double yeo = 0.0;
  double satd_norm = 0.0;
  int64_t samples = 0;
  bool degenerate = false;
};

inline PccReport pcc_report(const std::vector<const RunLog*>& logs) {
  std::vector<double> d, raw, yeo, satd_norm;
  for (const RunLog* log : logs) {
    for (const auto& f : log->frames) {
      if (f.bootstrap) continue;
      for (const auto& c : f.ctus) {
        if (c.satd <= 0.0) continue;  // flat units carry no structure to relate
        d.push_back(c.d_ssim);
        raw.push_back(c.d_mse);
        yeo.push_back(c.d_mse / (2.0 * c.sigma2 + kYeoEpsilon));
        satd_norm.push_back(c.d_mse / c.satd);
      }
    }
  }
  PccReport r;
  r.samples = int64_t(d.size());
  try {
    r.raw = pcc(raw, d);
    r.yeo = pcc(yeo, d);
    r.satd_norm = pcc(satd_norm, d);
  } catch (const std::exception&) {
    r.degenerate = true;
  }
  return r;
}

// Mean Eq.-(24)-style prediction errors of the three D_SSIM-D_MSE models.
// The global line is a single least-squares fit pooled over all given logs;
// the local predictions come from the per-CTU parameter snapshots that were
// in effect when each CTU was encoded.
struct DdModelReport {
  double p_yeo = 0.0;
  double p_global = 0.0;
  double p_local = 0.0;
  double theta_global = 0.0;
  double h_global = 0.0;
  int64_t samples = 0;
  bool degenerate = false;
};

inline DdModelReport dd_model_report(const std::vector<const RunLog*>& logs) {
  struct Sample {
    double d_ssim, d_mse, satd, sigma2, theta, eta;
  };
  std::vector<Sample> samples;
  for (const RunLog* log : logs) {
    for (const auto& f : log->frames) {
      if (f.bootstrap) continue;
      for (const auto& c : f.ctus) {
        if (c.d_ssim <= 0.0 || c.satd <= 0.0) continue;
        samples.push_back(
            {c.d_ssim, c.d_mse, c.satd, c.sigma2, c.params.dd.theta, c.params.dd.eta});
      }
    }
  }
  DdModelReport rep;
  rep.samples = int64_t(samples.size());
  if (samples.size() < 3) {
    rep.degenerate = true;
    return rep;
  }

  // Global least-squares line: d_ssim = Theta * (d_mse/S) + H.
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    mx += s.d_mse / s.satd;
    my += s.d_ssim;
  }
  mx /= double(samples.size());
  my /= double(samples.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = s.d_mse / s.satd - mx;
    sxx += dx * dx;
    sxy += dx * (s.d_ssim - my);
  }
  if (sxx <= 0.0) {
    rep.degenerate = true;
    return rep;
  }
  rep.theta_global = sxy / sxx;
  rep.h_global = my - rep.theta_global * mx;

  double e_yeo = 0.0, e_global = 0.0, e_local = 0.0;
  for (const auto& s : samples) {
    e_yeo += prediction_error(s.d_ssim, dd_yeo_excess(s.d_mse, s.sigma2));
    e_global +=
        prediction_error(s.d_ssim, rep.theta_global * s.d_mse / s.satd + rep.h_global);
    e_local += prediction_error(s.d_ssim, dd_linear(s.d_mse, s.satd, s.theta, s.eta));
  }
  rep.p_yeo = e_yeo / double(samples.size());
  rep.p_global = e_global / double(samples.size());
  rep.p_local = e_local / double(samples.size());
  return rep;
}

// Per-(CTU, frame) 4-point hyperbolic fit quality across a set of fixed-QP
// runs of the same sequence (the Table-I style accuracy check).
struct HyperbolicFitReport {
  double median_correlation = 0.0;
  double mean_correlation = 0.0;
  int64_t fits = 0;
  int64_t skipped = 0;
};

inline HyperbolicFitReport hyperbolic_fit_report(const std::vector<const RunLog*>& runs) {
  require(runs.size() >= 2, "hyperbolic_fit_report: need at least 2 runs");
  const size_t frame_count = runs.front()->frames.size();
  const size_t ctu_count = runs.front()->frames.front().ctus.size();
  for (const RunLog* run : runs) {
    require(run->frames.size() == frame_count &&
                run->frames.front().ctus.size() == ctu_count,
            "hyperbolic_fit_report: runs do not align");
  }
  HyperbolicFitReport rep;
  std::vector<double> correlations;
  for (size_t j = 0; j < frame_count; ++j) {
    for (size_t i = 0; i < ctu_count; ++i) {
      std::vector<RdPoint> points;
      for (const RunLog* run : runs) {
        const auto& c = run->frames[j].ctus[i];
        points.push_back({c.bpp, c.d_ssim});
      }
      try {
        const HyperbolicFit fit = fit_hyperbolic_4pt(points);
        if (fit.points_used >= 3) {
          correlations.push_back(fit.correlation);
        } else {
          ++rep.skipped;
        }
      } catch (const std::exception&) {
        ++rep.skipped;
      }
    }
  }
  rep.fits = int64_t(correlations.size());
  if (!correlations.empty()) {
    std::sort(correlations.begin(), correlations.end());
    rep.median_correlation = correlations[correlations.size() / 2];
    double sum = 0.0;
    for (double c : correlations) sum += c;
    rep.mean_correlation = sum / double(correlations.size());
  }
  return rep;
}

// ---- report emission ------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string("n/a");
}

struct SchemeGroup {
  std::vector<const RunLog*> budget_runs;  // sorted by budget
  std::vector<const RunLog*> fixed_runs;   // sorted by qp
};

inline std::map<std::string, std::map<std::string, SchemeGroup>> group_runs(
    const std::vector<RunLog>& runs) {
  std::map<std::string, std::map<std::string, SchemeGroup>> grouped;
  for (const auto& run : runs) {
    const std::string corpus = run.config.value("corpus", "unknown");
    const std::string scheme = run.config.value("scheme", "unknown");
    const double budget = run.config.value("budget_bits_per_frame", 0.0);
    SchemeGroup& g = grouped[corpus][scheme];
    if (budget > 0.0) {
      g.budget_runs.push_back(&run);
    } else {
      g.fixed_runs.push_back(&run);
    }
  }
  for (auto& [corpus, schemes] : grouped) {
    for (auto& [scheme, g] : schemes) {
      std::sort(g.budget_runs.begin(), g.budget_runs.end(),
                [](const RunLog* a, const RunLog* b) {
                  return a->config.value("budget_bits_per_frame", 0.0) <
                         b->config.value("budget_bits_per_frame", 0.0);
                });
      std::sort(g.fixed_runs.begin(), g.fixed_runs.end(), [](const RunLog* a, const RunLog* b) {
        return a->config.value("qp", 0) < b->config.value("qp", 0);
      });
    }
  }
  return grouped;
}

inline std::vector<RdCurvePoint> curve_of(const std::vector<const RunLog*>& runs,
                                          bool psnr_quality) {
  std::vector<RdCurvePoint> curve;
  for (const RunLog* run : runs) {
    curve.push_back(curve_point(*run, psnr_quality));
  }
  return curve;
}

inline std::optional<double> try_bd(const std::vector<RdCurvePoint>& anchor,
                                    const std::vector<RdCurvePoint>& scheme, BdMode mode) {
  if (anchor.size() < 4 || scheme.size() < 4) {
    return std::nullopt;
  }
  try {
    return bd_metric(anchor, scheme, mode);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

struct ReportFiles {
  std::string csv_path;
  std::string json_path;
  OrderedJson summary;
};

// Builds report.csv / report.json from a set of run logs. Rows are sorted by
// corpus, then by a fixed scheme order; byte-identical output for identical
// inputs.
inline ReportFiles emit_report(const std::vector<RunLog>& runs, const std::string& out_dir) {
  require(!runs.empty(), "emit_report: no runs");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const auto grouped = detail::group_runs(runs);
  const std::vector<std::string> scheme_order = {"anchor", "somr", "somr-plus", "sosr"};

  std::string csv;
  csv +=
      "corpus,scheme,budget_runs,fixed_qp_runs,bdbr_ssim_pct,bd_ssim,bdbr_psnr_pct,bd_psnr_db,"
      "mean_bits_error,p_yeo,p_global,p_local,pcc_dmse,pcc_yeo,pcc_satd,"
      "hyperbolic_fit_median_corr\n";

  OrderedJson summary;
  summary["tool"] = "ssimrc";
  summary["corpora"] = OrderedJson::object();

  for (const auto& [corpus, schemes] : grouped) {
    OrderedJson corpus_json;

    const detail::SchemeGroup* anchor_group = nullptr;
    if (auto it = schemes.find("anchor"); it != schemes.end()) {
      anchor_group = &it->second;
    }
    std::vector<RdCurvePoint> anchor_ssim, anchor_psnr;
    if (anchor_group && anchor_group->budget_runs.size() >= 4) {
      anchor_ssim = detail::curve_of(anchor_group->budget_runs, false);
      anchor_psnr = detail::curve_of(anchor_group->budget_runs, true);
    }

    std::vector<std::string> present;
    for (const auto& name : scheme_order) {
      if (schemes.count(name)) present.push_back(name);
    }
    for (const auto& [name, g] : schemes) {
      if (std::find(scheme_order.begin(), scheme_order.end(), name) == scheme_order.end()) {
        present.push_back(name);
      }
    }

    for (const std::string& name : present) {
      const detail::SchemeGroup& g = schemes.at(name);
      OrderedJson scheme_json;

      std::optional<double> bdbr_ssim, bd_ssim, bdbr_psnr, bd_psnr;
      if (name != "anchor" && !g.budget_runs.empty() && !anchor_ssim.empty()) {
        const auto ssim_curve = detail::curve_of(g.budget_runs, false);
        const auto psnr_curve = detail::curve_of(g.budget_runs, true);
        bdbr_ssim = detail::try_bd(anchor_ssim, ssim_curve, BdMode::Rate);
        bd_ssim = detail::try_bd(anchor_ssim, ssim_curve, BdMode::Quality);
        bdbr_psnr = detail::try_bd(anchor_psnr, psnr_curve, BdMode::Rate);
        bd_psnr = detail::try_bd(anchor_psnr, psnr_curve, BdMode::Quality);
      }

      std::optional<double> mean_err;
      {
        double err = 0.0;
        int64_t count = 0;
        for (const RunLog* run : g.budget_runs) {
          const RunStats s = run_stats(*run);
          err += s.mean_bits_error * double(s.bits_error_samples);
          count += s.bits_error_samples;
        }
        if (count > 0) mean_err = err / double(count);
      }

      std::vector<const RunLog*> all_runs = g.budget_runs;
      all_runs.insert(all_runs.end(), g.fixed_runs.begin(), g.fixed_runs.end());
      const PccReport pcc_rep = pcc_report(all_runs);
      const DdModelReport dd_rep = dd_model_report(all_runs);

      std::optional<double> fit_median;
      if (g.fixed_runs.size() >= 2) {
        try {
          fit_median = hyperbolic_fit_report(g.fixed_runs).median_correlation;
        } catch (const std::exception&) {
        }
      }

      csv += corpus + "," + name + "," + std::to_string(g.budget_runs.size()) + "," +
             std::to_string(g.fixed_runs.size()) + "," + detail::fmt_opt(bdbr_ssim) + "," +
             detail::fmt_opt(bd_ssim) + "," + detail::fmt_opt(bdbr_psnr) + "," +
             detail::fmt_opt(bd_psnr) + "," + detail::fmt_opt(mean_err) + ",";
      if (dd_rep.degenerate) {
        csv += "degenerate,degenerate,degenerate,";
      } else {
        csv += detail::fmt_double(dd_rep.p_yeo) + "," + detail::fmt_double(dd_rep.p_global) +
               "," + detail::fmt_double(dd_rep.p_local) + ",";
      }
      if (pcc_rep.degenerate) {
        csv += "degenerate,degenerate,degenerate,";
      } else {
        csv += detail::fmt_double(pcc_rep.raw) + "," + detail::fmt_double(pcc_rep.yeo) + "," +
               detail::fmt_double(pcc_rep.satd_norm) + ",";
      }
      csv += detail::fmt_opt(fit_median) + "\n";

      scheme_json["budget_runs"] = OrderedJson::array();
      for (const RunLog* run : g.budget_runs) {
        const RunStats s = run_stats(*run);
        OrderedJson r;
        r["budget_bits_per_frame"] = run->config.value("budget_bits_per_frame", 0.0);
        r["qp"] = run->config.value("qp", 0);
        r["mean_bits_per_frame"] = s.mean_bits_per_frame;
        r["mean_ssim"] = s.mean_ssim;
        r["mean_psnr"] = s.mean_psnr;
        r["mean_bits_error"] = s.mean_bits_error;
        scheme_json["budget_runs"].push_back(std::move(r));
      }
      scheme_json["fixed_qp_runs"] = OrderedJson::array();
      for (const RunLog* run : g.fixed_runs) {
        const RunStats s = run_stats(*run);
        OrderedJson r;
        r["qp"] = run->config.value("qp", 0);
        r["mean_bits_per_frame"] = s.mean_bits_per_frame;
        r["mean_ssim"] = s.mean_ssim;
        r["mean_psnr"] = s.mean_psnr;
        scheme_json["fixed_qp_runs"].push_back(std::move(r));
      }
      if (bdbr_ssim) scheme_json["bdbr_ssim_pct"] = *bdbr_ssim;
      if (bd_ssim) scheme_json["bd_ssim"] = *bd_ssim;
      if (bdbr_psnr) scheme_json["bdbr_psnr_pct"] = *bdbr_psnr;
      if (bd_psnr) scheme_json["bd_psnr_db"] = *bd_psnr;
      if (mean_err) scheme_json["mean_bits_error"] = *mean_err;
      if (!pcc_rep.degenerate) {
        scheme_json["pcc"] = {{"dmse", pcc_rep.raw},
                              {"yeo", pcc_rep.yeo},
                              {"satd", pcc_rep.satd_norm},
                              {"samples", pcc_rep.samples}};
      } else {
        scheme_json["pcc"] = "degenerate";
      }
      if (!dd_rep.degenerate) {
        scheme_json["dd_models"] = {{"p_yeo", dd_rep.p_yeo},
                                    {"p_global", dd_rep.p_global},
                                    {"p_local", dd_rep.p_local},
                                    {"theta_global", dd_rep.theta_global},
                                    {"h_global", dd_rep.h_global},
                                    {"samples", dd_rep.samples}};
      } else {
        scheme_json["dd_models"] = "degenerate";
      }
      if (fit_median) scheme_json["hyperbolic_fit_median_corr"] = *fit_median;

      corpus_json[name] = std::move(scheme_json);
    }
    summary["corpora"][corpus] = std::move(corpus_json);
  }

  ReportFiles files;
  files.csv_path = (fs::path(out_dir) / "report.csv").string();
  files.json_path = (fs::path(out_dir) / "report.json").string();
  files.summary = summary;
  {
    std::ofstream out(files.csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + files.csv_path);
    out << csv;
  }
  {
    std::ofstream out(files.json_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + files.json_path);
    out << summary.dump(2) << "\n";
  }
  return files;
}

}  // namespace ssimrc
