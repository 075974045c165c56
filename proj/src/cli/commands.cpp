#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mcx/badic.hpp"
#include "mcx/cascades.hpp"
#include "mcx/common.hpp"
#include "mcx/coverings.hpp"
#include "mcx/experiment.hpp"
#include "mcx/gaussian.hpp"
#include "mcx/kernels.hpp"
#include "mcx/spectral.hpp"
#include "mcx/theory.hpp"

namespace mcx {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void emit_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot write " + path);
  out << text;
}

void emit_json(const json& j, const std::string& path) {
  emit_text(j.dump(2) + "\n", path);
}

// band,log_freq,log_stat,n_points -- the shared plot-ready table shape
std::string scaling_csv(const std::vector<std::array<double, 3>>& rows,
                        const std::vector<int64_t>& counts) {
  std::string text = "band,log_freq,log_stat,n_points\n";
  char line[128];
  for (size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%lld\n",
                  static_cast<int>(rows[i][0]), rows[i][1], rows[i][2],
                  static_cast<long long>(counts[i]));
    text += line;
  }
  return text;
}

int derive_level(int d, int b, int m) {
  int cap = 0;
  int64_t cells = 1;
  while (true) {
    bool ok = true;
    int64_t next = cells;
    for (int a = 0; a < d; ++a) {
      if (next > kDefaultMaxCells / b) {
        ok = false;
        break;
      }
      next *= b;
    }
    if (!ok) break;
    cells = next;
    ++cap;
  }
  return std::min(m + (d == 1 ? 2 : 3), cap);
}

KernelDecomposition make_decomposition(const std::string& kernel, int b, int d) {
  if (kernel == "exact-log") {
    if (d != 1) throw ArgumentError("the exact-log kernel is one-dimensional");
    return make_exact_log_decomposition(b);
  }
  if (kernel != "star-scale")
    throw ArgumentError("kernel must be star-scale or exact-log");
  return make_star_scale_decomposition(bump_selfconvolve(BumpSpec{}, d), b);
}

std::vector<DensityField> read_fields(const std::vector<std::string>& paths) {
  std::vector<DensityField> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_field(p));
  for (size_t i = 1; i < out.size(); ++i) {
    if (!out[i].grid.same_as(out[0].grid))
      throw ArgumentError("field grids differ: " + paths[i] + " vs " + paths[0]);
  }
  return out;
}

json condition_json(const ConditionReport& c) {
  return json{{"pass", c.pass},
              {"worst_value", c.worst_value},
              {"worst_location", json{{"j", c.worst_j}, {"t", c.worst_t}}}};
}

std::vector<int> default_window(int hi_raw) {
  const int hi = std::max(2, hi_raw);
  const int lo = std::max(0, std::min(2, hi - 2));
  std::vector<int> levels;
  for (int k = lo; k <= hi; ++k) levels.push_back(k);
  return levels;
}

// ---- theory ---------------------------------------------------------------

void setup_theory(CLI::App& app) {
  auto* theory =
      app.add_subcommand("theory", "closed-form dimension predictions and bounds");
  theory->require_subcommand(1);

  {
    struct O {
      double gamma = 0.5;
      int d = 1;
    };
    auto o = std::make_shared<O>();
    auto* sub = theory->add_subcommand("d-gamma", "Gaussian chaos dimension");
    sub->add_option("--gamma", o->gamma, "intermittency parameter")->required();
    sub->add_option("--d", o->d, "ambient dimension")->required();
    sub->callback([o] {
      emit_json(json{{"gamma", o->gamma},
                     {"d", o->d},
                     {"d_gamma", d_gamma(o->gamma, o->d)}},
                "");
    });
  }

  {
    struct O {
      double sigma = 0.0;
      int b = 2;
    };
    auto o = std::make_shared<O>();
    auto* sub =
        theory->add_subcommand("d-sigma", "geometric-Brownian cascade dimension");
    sub->add_option("--sigma", o->sigma, "volatility")->required();
    sub->add_option("--b", o->b, "branching base")->required();
    sub->callback([o] {
      emit_json(json{{"sigma", o->sigma},
                     {"b", o->b},
                     {"d_sigma", d_sigma(o->sigma, o->b)}},
                "");
    });
  }

  {
    struct O {
      double alpha = -1.0;
      std::string lambda;
      int b = 2;
      int bands = 40;
      double a = -1.0;
      std::vector<int> bases;
    };
    auto o = std::make_shared<O>();
    auto* sub = theory->add_subcommand(
        "chi-bound", "band-mass ratio chi and the covering dimension bounds");
    sub->add_option("--alpha", o->alpha, "canonical intensity parameter");
    sub->add_option("--lambda", o->lambda, "intensity spec JSON");
    sub->add_option("--b", o->b, "branching base");
    sub->add_option("--bands", o->bands, "bands inspected");
    sub->add_option("--a", o->a, "Poisson chaos thinning, adds the PMC bound");
    sub->add_option("--bases", o->bases, "extra bases for the min over b")
        ->delimiter(',');
    sub->callback([o] {
      if (o->lambda.empty() == (o->alpha < 0.0))
        throw ArgumentError("give exactly one of --alpha or --lambda");
      const LambdaMeasure lambda = o->lambda.empty()
                                       ? LambdaMeasure::canonical_alpha(o->alpha)
                                       : parse_lambda_spec(o->lambda);
      const double c = chi(lambda, o->b, o->bands);
      json out{{"b", o->b},
               {"bands", o->bands},
               {"chi", c},
               {"one_minus_chi", 1.0 - c},
               {"degenerate", c >= 1.0}};
      if (o->a >= 0.0) {
        if (o->a <= 0.0 || o->a >= 1.0)
          throw ArgumentError("--a must lie in (0, 1)");
        out["pmc_bound"] = 1.0 - (1.0 - o->a) * (1.0 - o->a) * c;
      }
      if (!o->bases.empty()) out["chi_min"] = chi_min(lambda, o->bases, o->bands);
      emit_json(out, "");
    });
  }

  {
    struct O {
      std::string model;
      double gamma = 0.5;
      double chi_v = -1.0;
      double alpha = -1.0;
      double a = 0.5;
      double alpha0 = -1.0;
      double p0 = 2.0;
      int b = 2;
      int d = 1;
    };
    auto o = std::make_shared<O>();
    auto* sub = theory->add_subcommand(
        "lf", "Fourier-decay lower bound from the layer moment profile");
    sub->add_option("--model", o->model, "gmc | mrc | pmc")
        ->required()
        ->check(CLI::IsMember({"gmc", "mrc", "pmc"}));
    sub->add_option("--gamma", o->gamma, "gmc intermittency");
    sub->add_option("--chi", o->chi_v, "covering band-mass ratio");
    sub->add_option("--alpha", o->alpha, "canonical intensity (chi computed)");
    sub->add_option("--a", o->a, "Poisson chaos thinning");
    sub->add_option("--alpha0", o->alpha0, "regularity exponent (default by model)");
    sub->add_option("--p0", o->p0, "moment exponent ceiling");
    sub->add_option("--b", o->b, "branching base");
    sub->add_option("--d", o->d, "ambient dimension");
    sub->callback([o] {
      MomentProfile profile;
      double alpha0 = o->alpha0;
      if (o->model == "gmc") {
        profile = gmc_profile(o->gamma, o->b);
        if (alpha0 < 0.0) alpha0 = 1.0;
      } else {
        double c = o->chi_v;
        if (c < 0.0) {
          if (o->alpha < 0.0)
            throw ArgumentError("mrc/pmc needs --chi or --alpha");
          c = chi(LambdaMeasure::canonical_alpha(o->alpha), o->b, 40);
        }
        profile = o->model == "mrc" ? mrc_profile(c, o->b)
                                    : pmc_profile(o->a, c, o->b);
        if (alpha0 < 0.0) alpha0 = 0.5;
      }
      const SupResult sup = sup_theta_ratio(profile, o->b, o->d, o->p0);
      emit_json(json{{"model", o->model},
                     {"b", o->b},
                     {"d", o->d},
                     {"alpha0", alpha0},
                     {"p0", o->p0},
                     {"sup", json{{"value", sup.value}, {"argmax_p", sup.argmax_p}}},
                     {"lf", lf_bound(alpha0, o->p0, profile, o->b, o->d)}},
                "");
    });
  }

  {
    struct O {
      std::string weight;
      int b = 2;
      int d = 1;
      double alpha0 = 1.0;
      double p0 = 2.0;
    };
    auto o = std::make_shared<O>();
    auto* sub = theory->add_subcommand(
        "cascade-bound", "Fourier dimension bound for a cascade weight");
    sub->add_option("--weight", o->weight, "weight spec JSON")->required();
    sub->add_option("--b", o->b, "branching base");
    sub->add_option("--d", o->d, "ambient dimension");
    sub->add_option("--alpha0", o->alpha0, "regularity exponent");
    sub->add_option("--p0", o->p0, "moment exponent ceiling");
    sub->callback([o] {
      const WeightSpec w = parse_weight_spec(o->weight);
      const auto moment = [w](double p) { return w.moment(p); };
      const CascadeBoundResult r =
          cascade_bound(moment, o->b, o->d, o->alpha0, o->p0, w.degenerate());
      emit_json(json{{"bound", r.value},
                     {"sup_bracket", r.sup_bracket},
                     {"argmax_p", r.argmax_p},
                     {"degenerate", r.degenerate},
                     {"wlogw", w.wlogw()},
                     {"wlogw_threshold", o->d * std::log(double(o->b))}},
                "");
    });
  }
}

// ---- verify ---------------------------------------------------------------

void setup_verify(CLI::App& app, int* rc) {
  auto* verify = app.add_subcommand("verify", "check model assumptions numerically");
  verify->require_subcommand(1);

  struct O {
    std::string kernel = "star-scale";
    int b = 2;
    double alpha0 = 0.0;
    int j_max = 10;
    int k_max = 12;
    std::string out;
  };
  auto o = std::make_shared<O>();
  auto* sub = verify->add_subcommand(
      "kernel", "layer regularity (H1/H2'/H3) and positive definiteness");
  sub->add_option("--kernel", o->kernel, "star-scale | exact-log")
      ->check(CLI::IsMember({"star-scale", "exact-log"}));
  sub->add_option("--b", o->b, "branching base");
  sub->add_option("--alpha0", o->alpha0,
                  "Holder exponent (default: 1 star-scale, 0.5 exact-log)");
  sub->add_option("--j-max", o->j_max, "layers checked");
  sub->add_option("--k-max", o->k_max, "mesh depth per layer");
  sub->add_option("--out", o->out, "write the report here instead of stdout");
  sub->callback([o, rc] {
    const KernelDecomposition dec = make_decomposition(o->kernel, o->b, 1);
    const double alpha0 =
        o->alpha0 > 0.0 ? o->alpha0 : (dec.kind == KernelDecomposition::Kind::exact_log
                                           ? 0.5
                                           : 1.0);
    const SigmaRegReport rep = check_sigma_regular(dec, alpha0, o->j_max, o->k_max);
    const LayerKernel probe = dec.layer(std::max(dec.j0, 1));
    const PsdReport psd = check_positive_definite(probe.eval, probe.support);
    const bool pass = rep.pass && psd.pass;
    emit_json(
        json{{"kernel", o->kernel},
             {"b", o->b},
             {"alpha0", alpha0},
             {"j_max", o->j_max},
             {"h1", condition_json(rep.h1)},
             {"h2", condition_json(rep.h2)},
             {"h3", condition_json(rep.h3)},
             {"psd", json{{"pass", psd.pass},
                          {"worst_value", psd.min_value},
                          {"worst_location",
                           json{{"j", probe.j}, {"frequency", psd.worst_frequency}}}}},
             {"pass", pass}},
        o->out);
    if (!pass) *rc = 2;
  });
}

// ---- simulate -------------------------------------------------------------

struct SimCommon {
  int d = 1;
  int b = 2;
  int m = 8;
  int grid_level = 0;
  int64_t samples = 16;
  uint64_t seed = 1;
  std::string out;
};

void add_sim_options(CLI::App* sub, SimCommon& c, bool with_d) {
  if (with_d) sub->add_option("--d", c.d, "ambient dimension");
  sub->add_option("--b", c.b, "branching base");
  sub->add_option("--m", c.m, "martingale level");
  sub->add_option("--grid-level", c.grid_level, "grid refinement (0 = derive)");
  sub->add_option("--samples", c.samples, "ensemble size");
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--out", c.out, "output directory")->required();
}

// Writes field_%04d.mcxf (and optional mask_%04d.mcxf) for each sample,
// prints a JSON manifest.
void write_samples(
    const SimCommon& c, const std::string& model, int level,
    const std::function<DensityField(uint64_t, std::vector<uint8_t>*)>& draw,
    const json& extra) {
  if (c.samples < 1) throw ArgumentError("--samples must be >= 1");
  fs::create_directories(fs::path(c.out));
  json files = json::array();
  double mass_sum = 0.0;
  for (int64_t s = 0; s < c.samples; ++s) {
    const FieldSeedPath seed{c.seed, static_cast<uint64_t>(s)};
    std::vector<uint8_t> mask;
    const DensityField f = draw(static_cast<uint64_t>(s), &mask);
    char name[32];
    std::snprintf(name, sizeof(name), "field_%04lld.mcxf", static_cast<long long>(s));
    write_field((fs::path(c.out) / name).string(), f, seed);
    files.push_back(name);
    if (!mask.empty()) {
      char mname[32];
      std::snprintf(mname, sizeof(mname), "mask_%04lld.mcxf",
                    static_cast<long long>(s));
      write_mask((fs::path(c.out) / mname).string(), f.grid, mask, seed);
      files.push_back(mname);
    }
    mass_sum += total_mass(f);
  }
  json out{{"model", model},
           {"samples", c.samples},
           {"grid_level", level},
           {"out", c.out},
           {"mass_mean", mass_sum / static_cast<double>(c.samples)},
           {"files", files}};
  out.update(extra);
  emit_json(out, "");
}

void setup_simulate(CLI::App& app) {
  auto* simulate =
      app.add_subcommand("simulate", "draw ensembles and persist fields");
  simulate->require_subcommand(1);

  {
    struct O : SimCommon {
      double gamma = 0.5;
      std::string kernel = "star-scale";
    };
    auto o = std::make_shared<O>();
    auto* sub = simulate->add_subcommand("gmc", "Gaussian multiplicative chaos");
    sub->add_option("--gamma", o->gamma, "intermittency parameter")->required();
    sub->add_option("--kernel", o->kernel, "star-scale | exact-log");
    add_sim_options(sub, *o, true);
    sub->callback([o] {
      const int level =
          o->grid_level > 0 ? o->grid_level : derive_level(o->d, o->b, o->m);
      GmcOptions opt;
      opt.gamma = o->gamma;
      opt.d = o->d;
      opt.b = o->b;
      opt.m = o->m;
      opt.grid_level = level;
      opt.decomposition = make_decomposition(o->kernel, o->b, o->d);
      const GmcSampler sampler(opt);
      write_samples(
          *o, "gmc", level,
          [&](uint64_t s, std::vector<uint8_t>*) { return sampler.sample(o->seed, s); },
          json{{"gamma", o->gamma}, {"kernel", o->kernel}});
    });
  }

  {
    struct O : SimCommon {
      std::string weight;
    };
    auto o = std::make_shared<O>();
    auto* sub = simulate->add_subcommand("cascade", "multiplicative cascade");
    sub->add_option("--weight", o->weight,
                    "weight spec JSON: {kind: discrete|lognormal|gbm, ...}")
        ->required();
    add_sim_options(sub, *o, true);
    sub->callback([o] {
      const int level =
          o->grid_level > 0 ? o->grid_level : derive_level(o->d, o->b, o->m);
      json wj;
      try {
        wj = json::parse(o->weight);
      } catch (const json::parse_error& e) {
        throw ArgumentError(std::string("weight spec parse error: ") + e.what());
      }
      if (wj.is_object() && wj.value("kind", "") == "gbm") {
        if (!wj.contains("sigma") || !wj.at("sigma").is_number())
          throw ArgumentError("gbm weight needs a numeric sigma");
        if (o->d != 1) throw ArgumentError("the gbm cascade is one-dimensional");
        const double sigma = wj.at("sigma").get<double>();
        write_samples(
            *o, "cascade", level,
            [&](uint64_t s, std::vector<uint8_t>*) {
              return sample_gbm_cascade(sigma, o->b, o->m, level, o->seed, s);
            },
            json{{"weight_kind", "gbm"}, {"sigma", sigma}});
        return;
      }
      const WeightSpec w = parse_weight_spec(o->weight);
      write_samples(
          *o, "cascade", level,
          [&](uint64_t s, std::vector<uint8_t>*) {
            return sample_canonical_cascade(w, o->d, o->b, o->m, level, o->seed, s);
          },
          json{{"weight_kind", wj.value("kind", "")}});
    });
  }

  {
    struct O : SimCommon {
      std::string lambda;
    };
    auto o = std::make_shared<O>();
    auto* sub = simulate->add_subcommand("mrc", "random covering leftover measure");
    sub->add_option("--lambda", o->lambda, "intensity spec JSON")->required();
    add_sim_options(sub, *o, false);
    sub->callback([o] {
      const int level =
          o->grid_level > 0 ? o->grid_level : derive_level(1, o->b, o->m);
      const LambdaMeasure lambda = parse_lambda_spec(o->lambda);
      const double c = chi(lambda, o->b, 40);
      if (c >= 1.0)
        std::fprintf(stderr,
                     "warning: degenerate regime: chi >= 1 (chi = %.6g), the "
                     "covering leaves nothing asymptotically\n",
                     c);
      write_samples(
          *o, "mrc", level,
          [&](uint64_t s, std::vector<uint8_t>* mask) {
            MrcSample ms = sample_mrc(lambda, o->b, o->m, level, o->seed, s);
            *mask = std::move(ms.uncovered);
            return std::move(ms.field);
          },
          json{{"chi", c}});
    });
  }

  {
    struct O : SimCommon {
      std::string lambda;
      double a = 0.5;
    };
    auto o = std::make_shared<O>();
    auto* sub = simulate->add_subcommand("pmc", "Poisson multiplicative chaos");
    sub->add_option("--lambda", o->lambda, "intensity spec JSON")->required();
    sub->add_option("--a", o->a, "thinning parameter in (0, 1)")->required();
    add_sim_options(sub, *o, false);
    sub->callback([o] {
      const int level =
          o->grid_level > 0 ? o->grid_level : derive_level(1, o->b, o->m);
      const LambdaMeasure lambda = parse_lambda_spec(o->lambda);
      const double c = chi(lambda, o->b, 40);
      if (c >= 1.0)
        std::fprintf(stderr, "warning: degenerate regime: chi >= 1 (chi = %.6g)\n",
                     c);
      write_samples(
          *o, "pmc", level,
          [&](uint64_t s, std::vector<uint8_t>*) {
            return sample_pmc(lambda, o->a, o->b, o->m, level, o->seed, s);
          },
          json{{"chi", c}, {"a", o->a}});
    });
  }
}

// ---- estimate -------------------------------------------------------------

void setup_estimate(CLI::App& app) {
  auto* estimate =
      app.add_subcommand("estimate", "dimension estimators over saved ensembles");
  estimate->require_subcommand(1);

  {
    struct O {
      std::vector<std::string> files;
      int64_t n_max = 0;
      FitOptions fit;
      std::string mode = "ensemble";
      std::string format = "json";
      std::string out;
    };
    auto o = std::make_shared<O>();
    auto* sub =
        estimate->add_subcommand("fourier", "spectral decay slope across bands");
    sub->add_option("files", o->files, "field files")->required();
    sub->add_option("--n-max", o->n_max, "frequency cutoff (0 = grid Nyquist)");
    sub->add_option("--drop-low", o->fit.drop_low, "low bands discarded");
    sub->add_option("--drop-high", o->fit.drop_high, "high bands discarded");
    sub->add_option("--mode", o->mode, "ensemble | pathwise")
        ->check(CLI::IsMember({"ensemble", "pathwise"}));
    sub->add_option("--format", o->format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", o->out, "write here instead of stdout");
    sub->callback([o] {
      const std::vector<DensityField> fields = read_fields(o->files);
      const BAdicGrid& g = fields[0].grid;
      const int64_t n_max = o->n_max > 0 ? o->n_max : g.n_axis / 2;
      FourierDimAccumulator acc(g.d, n_max, g.b, o->fit);
      for (const auto& f : fields) acc.add(fourier_coefficients(f, n_max));
      if (o->format == "csv") {
        std::vector<std::array<double, 3>> rows;
        std::vector<int64_t> counts;
        for (const auto& s : acc.mean_band_statistics()) {
          rows.push_back({double(s.band), s.mean_log_freq, s.mean_log_sq});
          counts.push_back(s.count);
        }
        emit_text(scaling_csv(rows, counts), o->out);
        return;
      }
      const DimensionEstimate e = acc.estimate(o->mode == "pathwise"
                                                   ? FourierDimMode::pathwise_max
                                                   : FourierDimMode::ensemble_mean);
      emit_json(json{{"slope", e.slope},
                     {"stderr", e.std_error},
                     {"bands", json::array({e.band_lo, e.band_hi})},
                     {"method", e.method},
                     {"samples", static_cast<int64_t>(fields.size())},
                     {"degenerate", e.degenerate}},
                o->out);
    });
  }

  {
    struct O {
      std::vector<std::string> files;
      std::vector<int> levels;
      std::string format = "json";
      std::string out;
    };
    auto o = std::make_shared<O>();
    auto* sub = estimate->add_subcommand(
        "corrdim", "correlation dimension from b-adic second moments");
    sub->add_option("files", o->files, "field files")->required();
    sub->add_option("--levels", o->levels, "coarsening levels")->delimiter(',');
    sub->add_option("--format", o->format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", o->out, "write here instead of stdout");
    sub->callback([o] {
      const std::vector<DensityField> fields = read_fields(o->files);
      const BAdicGrid& g = fields[0].grid;
      std::vector<int> levels = o->levels;
      if (levels.empty()) {
        const int top = fields[0].m >= 0 ? std::min(fields[0].m, g.level) : g.level;
        levels = default_window(top - 1);
      }
      std::vector<double> mean(levels.size(), 0.0);
      for (const auto& f : fields) {
        const std::vector<double> s2 = correlation_sums(f, levels);
        for (size_t i = 0; i < levels.size(); ++i) mean[i] += s2[i];
      }
      const double logb = std::log(static_cast<double>(g.b));
      std::vector<double> x, y;
      for (size_t i = 0; i < levels.size(); ++i) {
        mean[i] /= static_cast<double>(fields.size());
        x.push_back(-levels[i] * logb);
        y.push_back(std::log(std::max(mean[i], 1e-300)));
      }
      if (o->format == "csv") {
        std::vector<std::array<double, 3>> rows;
        std::vector<int64_t> counts;
        for (size_t i = 0; i < levels.size(); ++i) {
          rows.push_back({double(levels[i]), levels[i] * logb, y[i]});
          counts.push_back(static_cast<int64_t>(fields.size()));
        }
        emit_text(scaling_csv(rows, counts), o->out);
        return;
      }
      const LineFit f = fit_line(x, y);
      emit_json(
          json{{"slope", f.slope},
               {"stderr", f.std_error},
               {"bands", json::array({levels.front(), levels.back()})},
               {"method", "correlation"},
               {"samples", static_cast<int64_t>(fields.size())}},
          o->out);
    });
  }

  {
    struct O {
      std::vector<std::string> files;
      std::vector<int> levels;
      std::string format = "json";
      std::string out;
    };
    auto o = std::make_shared<O>();
    auto* sub = estimate->add_subcommand(
        "boxdim", "box-counting dimension of saved occupancy masks");
    sub->add_option("files", o->files, "mask files")->required();
    sub->add_option("--levels", o->levels, "coarsening levels")->delimiter(',');
    sub->add_option("--format", o->format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", o->out, "write here instead of stdout");
    sub->callback([o] {
      std::vector<std::vector<uint8_t>> masks;
      BAdicGrid grid;
      for (size_t i = 0; i < o->files.size(); ++i) {
        BAdicGrid g;
        masks.push_back(read_mask(o->files[i], &g));
        if (i == 0)
          grid = g;
        else if (!g.same_as(grid))
          throw ArgumentError("mask grids differ: " + o->files[i]);
      }
      std::vector<int> levels = o->levels;
      if (levels.empty()) levels = default_window(grid.level - 1);
      std::vector<double> mean(levels.size(), 0.0);
      for (const auto& mask : masks) {
        const std::vector<int64_t> counts = box_counts(mask, grid, levels);
        for (size_t i = 0; i < levels.size(); ++i)
          mean[i] += static_cast<double>(counts[i]);
      }
      const double logb = std::log(static_cast<double>(grid.b));
      std::vector<double> x, y;
      std::vector<std::array<double, 3>> rows;
      std::vector<int64_t> counts_col;
      for (size_t i = 0; i < levels.size(); ++i) {
        mean[i] /= static_cast<double>(masks.size());
        if (mean[i] > 0.0) {
          x.push_back(levels[i] * logb);
          y.push_back(std::log(mean[i]));
        }
        rows.push_back({double(levels[i]), levels[i] * logb,
                        std::log(std::max(mean[i], 1e-300))});
        counts_col.push_back(static_cast<int64_t>(masks.size()));
      }
      if (o->format == "csv") {
        emit_text(scaling_csv(rows, counts_col), o->out);
        return;
      }
      json out;
      if (x.size() < 3) {
        out = json{{"method", "box-count"},
                   {"degenerate", true},
                   {"samples", static_cast<int64_t>(masks.size())}};
      } else {
        const LineFit f = fit_line(x, y);
        out = json{{"slope", f.slope},
                   {"stderr", f.std_error},
                   {"bands", json::array({levels.front(), levels.back()})},
                   {"method", "box-count"},
                   {"samples", static_cast<int64_t>(masks.size())},
                   {"degenerate", false}};
      }
      emit_json(out, o->out);
    });
  }
}

// ---- run / compare ---------------------------------------------------------

void setup_run(CLI::App& app) {
  struct O {
    std::string config;
    int threads = 0;
    std::string out;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand(
      "run", "full experiment from a config file: sample, estimate, predict");
  sub->add_option("config", o->config, "config JSON path")->required();
  sub->add_option("--threads", o->threads, "worker threads (0 = OpenMP default)");
  sub->add_option("--out", o->out, "override the config output directory");
  sub->callback([o] {
    ExperimentConfig cfg = load_config_file(o->config);
    if (!o->out.empty()) cfg.output_dir = o->out;
    const RunResult r = run_experiment(cfg, o->threads);
    for (const auto& w : r.warnings)
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::cout << r.record_json;
  });
}

void setup_compare(CLI::App& app, int* rc) {
  struct O {
    std::string record;
    CompareTolerances tol;
    std::string format = "json";
    std::string out;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand(
      "compare", "estimate-versus-prediction verdicts for a run record");
  sub->add_option("record", o->record, "record JSON path")->required();
  sub->add_option("--tol-fourier", o->tol.fourier, "Fourier slope tolerance");
  sub->add_option("--tol-corrdim", o->tol.corrdim, "correlation dim tolerance");
  sub->add_option("--tol-boxdim", o->tol.boxdim, "box dim tolerance");
  sub->add_option("--format", o->format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--out", o->out, "write here instead of stdout");
  sub->callback([o, rc] {
    std::ifstream in(o->record, std::ios::binary);
    if (!in) throw ArgumentError("cannot open record: " + o->record);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    const CompareReport rep = compare_record(text, o->tol);
    if (o->format == "csv") {
      std::string csv = "estimator,estimate,prediction,gap,tol,status\n";
      char line[160];
      for (const auto& row : rep.rows) {
        if (row.has_estimate) {
          std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%.17g,%s\n",
                        row.estimator.c_str(), row.estimate, row.prediction, row.gap,
                        row.tol, row.status.c_str());
        } else {
          std::snprintf(line, sizeof(line), "%s,,%.17g,,%.17g,%s\n",
                        row.estimator.c_str(), row.prediction, row.tol,
                        row.status.c_str());
        }
        csv += line;
      }
      emit_text(csv, o->out);
    } else {
      json rows = json::array();
      for (const auto& row : rep.rows) {
        json r{{"estimator", row.estimator},
               {"prediction", row.prediction},
               {"tol", row.tol},
               {"status", row.status}};
        if (row.has_estimate) {
          r["estimate"] = row.estimate;
          r["gap"] = row.gap;
        }
        rows.push_back(r);
      }
      emit_json(json{{"rows", rows}, {"pass", rep.pass}}, o->out);
    }
    if (!rep.pass) *rc = 3;
  });
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"multiplicative chaos toolkit: samplers, spectra, dimension bounds"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  int rc = 0;
  setup_theory(app);
  setup_verify(app, &rc);
  setup_simulate(app);
  setup_estimate(app);
  setup_run(app);
  setup_compare(app, &rc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return rc;
}

}  // namespace mcx
