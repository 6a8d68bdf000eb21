#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ssimrc/allocation.hpp"
#include "ssimrc/codec.hpp"
#include "ssimrc/common.hpp"
#include "ssimrc/estimation.hpp"
#include "ssimrc/media.hpp"
#include "ssimrc/metrics.hpp"
#include "ssimrc/rd_models.hpp"
#include "ssimrc/run_log.hpp"

namespace ssimrc {

enum class Scheme { Anchor, Somr, SomrPlus, Sosr };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Anchor: return "anchor";
    case Scheme::Somr: return "somr";
    case Scheme::SomrPlus: return "somr-plus";
    case Scheme::Sosr: return "sosr";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "anchor") return Scheme::Anchor;
  if (s == "somr") return Scheme::Somr;
  if (s == "somr-plus" || s == "somr_plus" || s == "somrplus") return Scheme::SomrPlus;
  if (s == "sosr") return Scheme::Sosr;
  throw std::invalid_argument("unknown scheme: " + s +
                              " (want anchor|somr|somr-plus|sosr)");
}

struct SchemeConfig {
  Scheme scheme = Scheme::Anchor;
  // Per-frame bit budget R_c. A non-positive budget selects the fixed-QP
  // anchor (no allocation, constant qp), which is only valid for Anchor.
  double frame_budget_bits = 0.0;
  int qp = 32;  // bootstrap QP, and the operating QP of fixed-QP runs
  int ctu_size = 64;
  int mode_span = 6;
  int threads = 1;
  bool freeze_parameters = false;  // replay mode: skip all model updates
  bool keep_payloads = false;      // retain CTU bitstreams for dumping
  // Slope-memory weight of the joint R-D_SSIM-lambda solve (1 = raw
  // one-observation solve). See damped_joint_solve.
  double joint_blend = 0.4;
  UpdateRates rates;

  bool fixed_qp() const { return scheme == Scheme::Anchor && frame_budget_bits <= 0.0; }
};

// QP-to-lambda seed for the bootstrap frame, before any model exists.
// Follows the familiar 0.85 * 2^((qp-12)/3) encoder convention.
inline double bootstrap_lambda(int qp) {
  return 0.85 * std::exp2((qp - 12) / 3.0);
}

namespace detail {

struct CtuPlan {
  double alloc_bits = 0.0;
  double lambda_used = 0.0;
  double lambda_ssim = 0.0;
  double dd_scale = 1.0;  // lambda_used / lambda_ssim for SOSR bookkeeping
};

}  // namespace detail

// Runs one scheme over a frame sequence and returns the per-frame logs.
// Frames are strictly sequential (model state propagates); CTUs inside a
// frame are encoded in parallel into index-owned slots.
inline RunLog run_scheme(const std::vector<LumaFrame>& frames, const SchemeConfig& config) {
  require(!frames.empty(), "run_scheme: no frames");
  require(config.qp >= 6 && config.qp <= 45, "run_scheme: qp out of [6, 45]");
  require(!config.fixed_qp() || config.scheme == Scheme::Anchor,
          "only the anchor supports fixed-QP operation");
  const int width = frames.front().width;
  const int height = frames.front().height;
  for (const auto& f : frames) {
    require(f.width == width && f.height == height, "run_scheme: mixed frame sizes");
  }
  const CtuGrid grid = partition(width, height, config.ctu_size);
  const int n_ctus = grid.count();
  const int64_t m_frame = int64_t(width) * height;
  const std::vector<CodingMode> managed_modes = mode_set_for_frame(config.qp, config.mode_span);
  const std::vector<CodingMode> bootstrap_modes = {{config.qp, 8}, {config.qp, 16}};
  const double lambda_boot = bootstrap_lambda(config.qp);
  const double min_budget = double(n_ctus) * kMinBitsPerCtu;

  RunLog log;
  CtuParamStore store;
  store.rates = config.rates;
  bool store_ready = false;

  for (size_t j = 0; j < frames.size(); ++j) {
    const LumaFrame& src = frames[j];
    const bool bootstrap_frame = (j == 0);
    const bool fixed = config.fixed_qp();
    const bool managed = !bootstrap_frame && !fixed;

    std::vector<double> satd(n_ctus), sigma2(n_ctus);
    parallel_for(n_ctus, config.threads, [&](int i) {
      satd[i] = double(satd_ctu(src, grid.rects[i]));
      sigma2[i] = ctu_variance(src, grid.rects[i]);
    });

    FrameLogRecord rec;
    rec.index = int(j);
    rec.bootstrap = bootstrap_frame;

    std::vector<detail::CtuPlan> plan(n_ctus);
    std::vector<CodingMode> const* modes = &bootstrap_modes;
    CostSpec::Metric metric = CostSpec::Metric::MseCost;

    if (!managed) {
      for (int i = 0; i < n_ctus; ++i) {
        plan[i].lambda_used = lambda_boot;
      }
    } else {
      double target = config.frame_budget_bits;
      if (target < min_budget) {
        target = min_budget;
        rec.allocation_clamped = true;
      }
      rec.target_bits = target;
      modes = &managed_modes;

      std::vector<double> fallback_satds(n_ctus);
      std::vector<LinearDdParams> fallback_dds(n_ctus);
      for (int i = 0; i < n_ctus; ++i) {
        fallback_satds[i] = satd[i];
        fallback_dds[i] = store.ctus[i].dd;
      }
      const double fallback = frame_fallback_scale(fallback_satds, fallback_dds);

      switch (config.scheme) {
        case Scheme::Anchor: {
          // Equal-bpp split; lambda from the per-CTU R-lambda model.
          const double bpp_c = target / double(m_frame);
          for (int i = 0; i < n_ctus; ++i) {
            plan[i].alloc_bits = bpp_c * double(grid.pixel_counts[i]);
            plan[i].lambda_used = clamp_to(lambda_mse_from_bpp(store.ctus[i].rl, bpp_c),
                                           kLambdaMseMin, kLambdaMseMax);
          }
          break;
        }
        case Scheme::Somr:
        case Scheme::SomrPlus: {
          std::vector<HyperbolicRdParams> models(n_ctus);
          for (int i = 0; i < n_ctus; ++i) models[i] = store.ctus[i].rd;
          const AllocationResult alloc =
              solve_frame_allocation(models, grid.pixel_counts, target);
          rec.lambda_star = alloc.lambda_ssim_star;
          rec.allocation_clamped = rec.allocation_clamped || alloc.clamped;
          rec.allocation_converged = alloc.converged;
          for (int i = 0; i < n_ctus; ++i) {
            plan[i].alloc_bits = alloc.per_ctu_bits[i];
            plan[i].lambda_used =
                clamp_to(lambda_mse_from_bpp(store.ctus[i].rl, alloc.per_ctu_bpp[i]),
                         kLambdaMseMin, kLambdaMseMax);
          }
          break;
        }
        case Scheme::Sosr: {
          std::vector<HyperbolicRdParams> models(n_ctus);
          for (int i = 0; i < n_ctus; ++i) models[i] = store.ctus[i].rd;
          const AllocationResult alloc =
              solve_frame_allocation(models, grid.pixel_counts, target);
          rec.lambda_star = alloc.lambda_ssim_star;
          rec.allocation_clamped = rec.allocation_clamped || alloc.clamped;
          rec.allocation_converged = alloc.converged;
          metric = CostSpec::Metric::MappedSsimCost;
          for (int i = 0; i < n_ctus; ++i) {
            plan[i].alloc_bits = alloc.per_ctu_bits[i];
            plan[i].dd_scale = dd_lambda_scale(satd[i], store.ctus[i].dd, fallback);
            plan[i].lambda_used = clamp_to(alloc.lambda_ssim_star * plan[i].dd_scale,
                                           kLambdaMseMin, kLambdaMseMax);
            // The SSIM-domain multiplier actually realized after clamping.
            plan[i].lambda_ssim = plan[i].lambda_used / plan[i].dd_scale;
          }
          break;
        }
      }
    }

    // Step 2: mode decision and encoding. SSIM must never be touched here.
    const int64_t ssim_before = ssim_eval_count();
    std::vector<RdoResult> results(n_ctus);
    parallel_for(n_ctus, config.threads, [&](int i) {
      CostSpec cost{metric, plan[i].lambda_used};
      results[i] = rdo_encode_ctu(src, grid.rects[i], *modes, cost);
    });
    rec.ssim_evals_in_mode_loop = ssim_eval_count() - ssim_before;

    LumaFrame recon = make_frame(width, height);
    for (int i = 0; i < n_ctus; ++i) {
      const Rect& r = grid.rects[i];
      const auto& samples = results[i].best.recon;
      for (int yy = 0; yy < r.h; ++yy) {
        std::copy(samples.begin() + size_t(yy) * r.w, samples.begin() + size_t(yy + 1) * r.w,
                  recon.samples.begin() + size_t(r.y + yy) * width + r.x);
      }
    }

    // Step 3 entry: one SSIM map for the whole encoded frame.
    const SsimMap map = ssim_map(src, recon, config.threads);

    std::vector<DistortionRecord> dist(n_ctus);
    rec.ctus.resize(n_ctus);
    int64_t total_bits = 0;
    int64_t total_sse = 0;
    for (int i = 0; i < n_ctus; ++i) {
      const EncodeOutcome& best = results[i].best;
      dist[i] = {d_ssim_unit(map, grid.rects[i]), best.d_mse, satd[i],
                 grid.pixel_counts[i]};
      total_bits += best.bits;
      total_sse += best.sse;

      CtuLogRecord& c = rec.ctus[i];
      c.index = i;
      c.rect = grid.rects[i];
      c.pixel_count = grid.pixel_counts[i];
      c.alloc_bits = plan[i].alloc_bits;
      c.bits = best.bits;
      c.bpp = best.bpp;
      c.d_mse = best.d_mse;
      c.d_ssim = dist[i].d_ssim;
      c.satd = satd[i];
      c.sigma2 = sigma2[i];
      c.lambda_used = plan[i].lambda_used;
      c.lambda_ssim = plan[i].lambda_ssim;
      c.params = store_ready ? store.ctus[i] : CtuParams{};
      c.mode = best.mode;
      c.chosen_cost = results[i].best_cost;
      c.mode_costs = results[i].costs;
    }
    rec.total_bits = total_bits;
    rec.frame_d_ssim = frame_d_ssim_from_ctus(dist, m_frame);
    rec.frame_ssim = 1.0 - rec.frame_d_ssim;
    rec.frame_d_mse = double(total_sse) / double(m_frame);
    rec.frame_psnr = psnr_from_mse(rec.frame_d_mse);

    if (config.keep_payloads) {
      std::vector<std::vector<uint8_t>> frame_payloads(n_ctus);
      for (int i = 0; i < n_ctus; ++i) {
        frame_payloads[i] = results[i].best.payload;
      }
      log.payloads.push_back(std::move(frame_payloads));
    }

    // Parameter estimation for the subsequent frame.
    if (!config.freeze_parameters) {
      if (!store_ready) {
        // Probe qp +-2 around the chosen mode to measure each CTU's
        // operational -dD_MSE/dR; the HM-style formula lambda is only the
        // fallback. Seeds the models where the codec actually operates.
        std::vector<BootstrapObservation> obs(n_ctus);
        parallel_for(n_ctus, config.threads, [&](int i) {
          const EncodeOutcome& best = results[i].best;
          double lambda_op = 0.0;
          const int qp_lo = std::max(0, config.qp - 2);
          const int qp_hi = std::min(51, config.qp + 2);
          if (qp_lo < qp_hi) {
            const EncodeOutcome low =
                code_ctu_with_mode(src, grid.rects[i], {qp_lo, best.mode.transform_size});
            const EncodeOutcome high =
                code_ctu_with_mode(src, grid.rects[i], {qp_hi, best.mode.transform_size});
            if (low.bits > high.bits && high.sse > low.sse) {
              lambda_op = double(high.sse - low.sse) / double(low.bits - high.bits);
            }
          }
          obs[i] = {best.bits, dist[i].d_ssim, best.d_mse, satd[i], grid.pixel_counts[i],
                    lambda_op};
        });
        store = init_params(obs, lambda_boot, config.rates);
        store_ready = true;
      } else {
        // SOMR+ recovers lambda_SSIM through the mapping with the thetas
        // that were in effect while the frame was encoded.
        std::vector<LinearDdParams> dds_before(n_ctus);
        for (int i = 0; i < n_ctus; ++i) dds_before[i] = store.ctus[i].dd;
        const double update_fallback = frame_fallback_scale(satd, dds_before);

        for (int i = 0; i < n_ctus; ++i) {
          CtuParams& p = store.ctus[i];
          const double bpp_act = results[i].best.bpp;
          const double d_ssim_act = dist[i].d_ssim;
          const double d_mse_act = results[i].best.d_mse;
          const LinearDdParams dd_before = dds_before[i];

          if (fixed) {
            // Fixed-QP runs only track the D-D line (model-accuracy studies).
            if (satd[i] > 0.0) {
              p.dd = update_linear_dd_lms(dd_before, store.rates, d_ssim_act, d_mse_act,
                                          satd[i]);
            }
          } else {
            switch (config.scheme) {
              case Scheme::Anchor:
                p.rl = update_r_lambda_regression(p.rl, store.rates, plan[i].lambda_used,
                                                  bpp_act);
                break;
              case Scheme::Somr:
                p.rl = update_r_lambda_regression(p.rl, store.rates, plan[i].lambda_used,
                                                  bpp_act);
                p.rd = update_rd_ssim_regression(p.rd, store.rates, d_ssim_act, bpp_act);
                break;
              case Scheme::SomrPlus: {
                p.rl = update_r_lambda_regression(p.rl, store.rates, plan[i].lambda_used,
                                                  bpp_act);
                const double lambda_ssim_eff = lambda_ssim_from_mse(
                    plan[i].lambda_used, satd[i], dd_before, update_fallback);
                if (auto solved = damped_joint_solve(p.rd, d_ssim_act, bpp_act,
                                                     lambda_ssim_eff, config.joint_blend)) {
                  p.rd = *solved;
                }
                if (satd[i] > 0.0) {
                  p.dd = update_linear_dd_lms(dd_before, store.rates, d_ssim_act, d_mse_act,
                                              satd[i]);
                }
                break;
              }
              case Scheme::Sosr: {
                const double lambda_ssim_eff = plan[i].lambda_used / plan[i].dd_scale;
                if (auto solved = damped_joint_solve(p.rd, d_ssim_act, bpp_act,
                                                     lambda_ssim_eff, config.joint_blend)) {
                  p.rd = *solved;
                }
                if (satd[i] > 0.0) {
                  p.dd = update_linear_dd_lms(dd_before, store.rates, d_ssim_act, d_mse_act,
                                              satd[i]);
                }
                break;
              }
            }
          }
          p.satd = satd[i];
        }
      }
    }

    log.frames.push_back(std::move(rec));
  }
  return log;
}

inline RunLog run_anchor(const std::vector<LumaFrame>& frames, SchemeConfig config) {
  config.scheme = Scheme::Anchor;
  return run_scheme(frames, config);
}

inline RunLog run_somr(const std::vector<LumaFrame>& frames, SchemeConfig config) {
  config.scheme = Scheme::Somr;
  return run_scheme(frames, config);
}

inline RunLog run_somr_plus(const std::vector<LumaFrame>& frames, SchemeConfig config) {
  config.scheme = Scheme::SomrPlus;
  return run_scheme(frames, config);
}

inline RunLog run_sosr(const std::vector<LumaFrame>& frames, SchemeConfig config) {
  config.scheme = Scheme::Sosr;
  return run_scheme(frames, config);
}

// Every tunable the pipeline consumes, echoed verbatim into the run log so a
// run is reproducible from its log header alone.
inline OrderedJson effective_config(const SchemeConfig& config, const std::string& corpus,
                                    const std::string& input, const std::string& format,
                                    int width, int height, int frame_count) {
  OrderedJson j;
  j["type"] = "config";
  j["tool"] = "ssimrc";
  j["corpus"] = corpus;
  j["input"] = input;
  j["format"] = format;
  j["width"] = width;
  j["height"] = height;
  j["frames"] = frame_count;
  j["ctu_size"] = config.ctu_size;
  j["scheme"] = scheme_name(config.scheme);
  j["qp"] = config.qp;
  j["budget_bits_per_frame"] = config.frame_budget_bits;
  j["mode_span"] = config.mode_span;
  j["threads"] = config.threads;
  j["freeze_parameters"] = config.freeze_parameters;
  j["joint_blend"] = config.joint_blend;
  j["bootstrap_lambda"] = bootstrap_lambda(config.qp);
  OrderedJson rates;
  rates["delta_c"] = config.rates.delta_c;
  rates["delta_k"] = config.rates.delta_k;
  rates["delta_alpha"] = config.rates.delta_alpha;
  rates["delta_beta"] = config.rates.delta_beta;
  rates["delta_theta"] = config.rates.delta_theta;
  rates["delta_eta"] = config.rates.delta_eta;
  j["update_rates"] = std::move(rates);
  OrderedJson limits;
  limits["beta_min"] = kBetaMin;
  limits["beta_max"] = kBetaMax;
  limits["alpha_min"] = kAlphaMin;
  limits["alpha_max"] = kAlphaMax;
  limits["c_min"] = kCMin;
  limits["c_max"] = kCMax;
  limits["theta_min"] = kThetaMin;
  limits["bpp_min"] = kBppMin;
  limits["bpp_max"] = kBppMax;
  limits["lambda_search_lo"] = kLambdaSearchLo;
  limits["lambda_search_hi"] = kLambdaSearchHi;
  limits["allocation_rel_tol"] = kAllocationRelTol;
  limits["allocation_max_iters"] = kAllocationMaxIters;
  limits["lambda_mse_min"] = kLambdaMseMin;
  limits["lambda_mse_max"] = kLambdaMseMax;
  limits["min_bits_per_ctu"] = kMinBitsPerCtu;
  limits["yeo_epsilon"] = kYeoEpsilon;
  j["limits"] = std::move(limits);
  OrderedJson ssim;
  ssim["window"] = kSsimWindow;
  ssim["sigma"] = kSsimSigma;
  ssim["c1"] = kSsimC1;
  ssim["c2"] = kSsimC2;
  j["ssim"] = std::move(ssim);
  return j;
}

}  // namespace ssimrc
