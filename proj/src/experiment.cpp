#include "mcx/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "mcx/common.hpp"
#include "mcx/gaussian.hpp"
#include "mcx/kernels.hpp"
#include "mcx/theory.hpp"

namespace mcx {

namespace {

using nlohmann::json;

[[noreturn]] void rethrow_stage(const char* stage) {
  try {
    throw;
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string(stage) + ": " + e.what());
  } catch (const ContractError& e) {
    throw ContractError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what(), e.worst_value);
  } catch (const ResourceError& e) {
    throw ResourceError(std::string(stage) + ": " + e.what());
  }
}

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ArgumentError(std::string("config: unknown key '") + key + "' in " + where);
  }
}

const json& need(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key))
    throw ArgumentError(std::string("config: missing key '") + key + "' in " + where);
  return obj.at(key);
}

double need_num(const json& obj, const char* key, const char* where) {
  const json& v = need(obj, key, where);
  if (!v.is_number())
    throw ArgumentError(std::string("config: '") + key + "' in " + where +
                        " must be a number");
  return v.get<double>();
}

int64_t need_int(const json& obj, const char* key, const char* where) {
  const json& v = need(obj, key, where);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ArgumentError(std::string("config: '") + key + "' in " + where +
                        " must be an integer");
  return v.get<int64_t>();
}

std::string need_str(const json& obj, const char* key, const char* where) {
  const json& v = need(obj, key, where);
  if (!v.is_string())
    throw ArgumentError(std::string("config: '") + key + "' in " + where +
                        " must be a string");
  return v.get<std::string>();
}

std::vector<int> int_list(const json& v, const char* where) {
  if (!v.is_array())
    throw ArgumentError(std::string("config: ") + where + " must be an array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() && !e.is_number_unsigned())
      throw ArgumentError(std::string("config: ") + where + " must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<double> num_list(const json& v, const char* where) {
  if (!v.is_array())
    throw ArgumentError(std::string("config: ") + where + " must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number())
      throw ArgumentError(std::string("config: ") + where + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

LambdaMeasure parse_lambda(const json& v) {
  if (!v.is_object())
    throw ArgumentError("config: params.lambda must be an object");
  check_keys(v, "params.lambda", {"builtin", "atoms", "density"});
  if (v.contains("builtin")) {
    if (v.contains("atoms") || v.contains("density"))
      throw ArgumentError(
          "config: builtin intensity cannot be combined with atoms or density");
    const json& bi = v.at("builtin");
    if (!bi.is_object())
      throw ArgumentError("config: params.lambda.builtin must be an object");
    check_keys(bi, "params.lambda.builtin", {"canonical_alpha"});
    return LambdaMeasure::canonical_alpha(
        need_num(bi, "canonical_alpha", "params.lambda.builtin"));
  }
  LambdaMeasure l;
  if (v.contains("atoms")) {
    const json& arr = v.at("atoms");
    if (!arr.is_array())
      throw ArgumentError("config: params.lambda.atoms must be an array");
    std::vector<std::pair<double, double>> atoms;
    for (const auto& e : arr) {
      const std::vector<double> pair = num_list(e, "params.lambda.atoms entries");
      if (pair.size() != 2)
        throw ArgumentError("config: each atom must be a [location, mass] pair");
      atoms.emplace_back(pair[0], pair[1]);
    }
    l = LambdaMeasure::from_atoms(std::move(atoms));
  }
  if (v.contains("density")) {
    const json& dv = v.at("density");
    if (!dv.is_object())
      throw ArgumentError("config: params.lambda.density must be an object");
    check_keys(dv, "params.lambda.density", {"kind", "c"});
    const std::string kind = need_str(dv, "kind", "params.lambda.density");
    if (kind != "constant")
      throw ArgumentError("config: unsupported density kind '" + kind +
                          "' (only 'constant')");
    const double c = need_num(dv, "c", "params.lambda.density");
    if (!(c >= 0.0)) throw ArgumentError("config: density constant must be >= 0");
    l.density = [c](double) { return c; };
  }
  return l;
}

WeightSpec weight_from_json(const json& w, const char* where) {
  if (!w.is_object())
    throw ArgumentError(std::string("config: ") + where + " must be an object");
  check_keys(w, where, {"kind", "values", "probs", "sigma_w"});
  const std::string kind = need_str(w, "kind", where);
  if (kind == "discrete") {
    return WeightSpec::discrete(
        num_list(need(w, "values", where), "weight values"),
        num_list(need(w, "probs", where), "weight probs"));
  }
  if (kind == "lognormal") return WeightSpec::lognormal(need_num(w, "sigma_w", where));
  throw ArgumentError("config: weight kind must be discrete or lognormal");
}

json estimate_to_json(const DimensionEstimate& e) {
  return json{{"slope", e.slope},         {"intercept", e.intercept},
              {"std_error", e.std_error}, {"band_lo", e.band_lo},
              {"band_hi", e.band_hi},     {"method", e.method},
              {"degenerate", e.degenerate}};
}

int max_level_for(int d, int b, int64_t budget) {
  int level = 0;
  int64_t cells = 1;
  while (true) {
    bool ok = true;
    int64_t next = cells;
    for (int a = 0; a < d; ++a) {
      if (next > budget / b) {
        ok = false;
        break;
      }
      next *= b;
    }
    if (!ok) return level;
    cells = next;
    ++level;
  }
}

struct SampleError {
  int64_t sample_id = -1;
  int kind = 0;  // 1 arg, 2 contract, 3 numeric, 4 resource, 5 other
  std::string msg;
  double worst = 0.0;
};

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    const size_t stop = e.byte > 0 ? e.byte - 1 : 0;
    for (size_t i = 0; i < stop && i < json_text.size(); ++i) {
      if (json_text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ArgumentError("config parse error at line " + std::to_string(line) +
                        ", column " + std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw ArgumentError("config: top level must be an object");
  check_keys(j, "the top level",
             {"model", "params", "grid", "ensemble", "estimators", "spectrum", "levels",
              "output_dir"});

  ExperimentConfig cfg;
  cfg.raw_json = j.dump();
  cfg.model = need_str(j, "model", "the top level");
  if (cfg.model != "gmc" && cfg.model != "cascade" && cfg.model != "mrc" &&
      cfg.model != "pmc")
    throw ArgumentError("config: model must be gmc, cascade, mrc, or pmc");

  const json& grid = need(j, "grid", "the top level");
  check_keys(grid, "grid", {"d", "b", "m", "grid_level"});
  cfg.d = static_cast<int>(need_int(grid, "d", "grid"));
  cfg.b = static_cast<int>(need_int(grid, "b", "grid"));
  cfg.m = static_cast<int>(need_int(grid, "m", "grid"));
  if (grid.contains("grid_level"))
    cfg.grid_level = static_cast<int>(need_int(grid, "grid_level", "grid"));

  const json& ens = need(j, "ensemble", "the top level");
  check_keys(ens, "ensemble", {"samples", "master_seed"});
  cfg.samples = need_int(ens, "samples", "ensemble");
  cfg.master_seed = static_cast<uint64_t>(need_int(ens, "master_seed", "ensemble"));

  const json& params = need(j, "params", "the top level");
  if (!params.is_object()) throw ArgumentError("config: params must be an object");
  if (cfg.model == "gmc") {
    check_keys(params, "params", {"gamma", "kernel"});
    cfg.gamma = need_num(params, "gamma", "params");
    if (params.contains("kernel")) cfg.kernel = need_str(params, "kernel", "params");
    if (cfg.kernel != "star-scale" && cfg.kernel != "exact-log")
      throw ArgumentError("config: kernel must be star-scale or exact-log");
  } else if (cfg.model == "cascade") {
    check_keys(params, "params", {"weight"});
    const json& w = need(params, "weight", "params");
    if (!w.is_object()) throw ArgumentError("config: params.weight must be an object");
    check_keys(w, "params.weight", {"kind", "values", "probs", "sigma_w", "sigma"});
    const std::string kind = need_str(w, "kind", "params.weight");
    if (kind == "gbm") {
      cfg.gbm = true;
      cfg.gbm_sigma = need_num(w, "sigma", "params.weight");
    } else if (kind == "discrete" || kind == "lognormal") {
      cfg.weight = weight_from_json(w, "params.weight");
    } else {
      throw ArgumentError("config: weight kind must be discrete, lognormal, or gbm");
    }
  } else {  // mrc | pmc
    if (cfg.model == "pmc") {
      check_keys(params, "params", {"lambda", "a"});
      cfg.pmc_a = need_num(params, "a", "params");
    } else {
      check_keys(params, "params", {"lambda"});
    }
    cfg.lambda = parse_lambda(need(params, "lambda", "params"));
  }

  if (j.contains("estimators")) {
    const json& est = j.at("estimators");
    if (!est.is_array())
      throw ArgumentError("config: estimators must be an array of names");
    cfg.est_fourier = cfg.est_corrdim = cfg.est_boxdim = false;
    for (const auto& e : est) {
      if (!e.is_string())
        throw ArgumentError("config: estimators must be an array of names");
      const std::string name = e.get<std::string>();
      if (name == "fourier")
        cfg.est_fourier = true;
      else if (name == "corrdim")
        cfg.est_corrdim = true;
      else if (name == "boxdim")
        cfg.est_boxdim = true;
      else
        throw ArgumentError("config: unknown estimator '" + name + "'");
    }
  }

  if (j.contains("spectrum")) {
    const json& sp = j.at("spectrum");
    check_keys(sp, "spectrum", {"n_max", "drop_low", "drop_high"});
    if (sp.contains("n_max")) cfg.n_max = need_int(sp, "n_max", "spectrum");
    if (sp.contains("drop_low"))
      cfg.fit.drop_low = static_cast<int>(need_int(sp, "drop_low", "spectrum"));
    if (sp.contains("drop_high"))
      cfg.fit.drop_high = static_cast<int>(need_int(sp, "drop_high", "spectrum"));
  }

  if (j.contains("levels")) {
    const json& lv = j.at("levels");
    check_keys(lv, "levels", {"corrdim", "boxdim"});
    if (lv.contains("corrdim"))
      cfg.corr_levels = int_list(lv.at("corrdim"), "levels.corrdim");
    if (lv.contains("boxdim"))
      cfg.box_levels = int_list(lv.at("boxdim"), "levels.boxdim");
  }

  if (j.contains("output_dir"))
    cfg.output_dir = need_str(j, "output_dir", "the top level");
  return cfg;
}

LambdaMeasure parse_lambda_spec(const std::string& json_text) {
  json v;
  try {
    v = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("lambda spec parse error: ") + e.what());
  }
  return parse_lambda(v);
}

WeightSpec parse_weight_spec(const std::string& json_text) {
  json v;
  try {
    v = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("weight spec parse error: ") + e.what());
  }
  return weight_from_json(v, "the weight spec");
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : cfg.raw_json) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

RunResult run_impl(const ExperimentConfig& cfg, int threads, bool parallel) {
  const auto wall_start = std::chrono::steady_clock::now();
  RunResult res;
  res.hash = config_hash(cfg);

  // ---- configuration stage: normalize and validate derived parameters
  int level = cfg.grid_level;
  int64_t n_max = cfg.n_max;
  std::vector<int> corr_levels = cfg.corr_levels;
  std::vector<int> box_levels = cfg.box_levels;
  std::function<DensityField(uint64_t)> draw;
  std::unique_ptr<GmcSampler> gmc;
  try {
    if (cfg.samples < 2) throw ArgumentError("ensemble needs at least 2 samples");
    if (cfg.m < 0) throw ArgumentError("m must be >= 0");
    if (cfg.b < 2) throw ArgumentError("b must be >= 2");
    if (cfg.d < 1) throw ArgumentError("d must be >= 1");

    const int cap = max_level_for(cfg.d, cfg.b, kDefaultMaxCells);
    if (level == 0) level = std::min(cfg.m + (cfg.d == 1 ? 2 : 3), cap);
    if (level < cfg.m)
      throw ArgumentError("grid_level must be at least m (or 0 to derive)");
    const BAdicGrid grid = make_grid(cfg.d, cfg.b, level);
    if (n_max == 0) n_max = grid.n_axis / 2;

    if (cfg.est_boxdim && cfg.model != "mrc")
      throw ArgumentError("the boxdim estimator needs the mrc model's mask");

    if (cfg.est_corrdim && corr_levels.empty()) {
      int hi = std::max(2, std::min(cfg.m, level) - 1);
      int lo = std::max(0, std::min(2, hi - 2));
      for (int k = lo; k <= hi; ++k) corr_levels.push_back(k);
    }
    if (cfg.est_boxdim && box_levels.empty()) {
      int hi = std::max(2, std::min(level, cfg.m - 1));
      int lo = std::max(0, std::min(2, hi - 2));
      for (int k = lo; k <= hi; ++k) box_levels.push_back(k);
    }

    if (cfg.model == "gmc") {
      KernelDecomposition dec;
      if (cfg.kernel == "exact-log") {
        if (cfg.d != 1)
          throw ArgumentError("the exact-log kernel is one-dimensional");
        dec = make_exact_log_decomposition(cfg.b);
      } else {
        const RadialProfile phi = bump_selfconvolve(BumpSpec{}, cfg.d);
        dec = make_star_scale_decomposition(phi, cfg.b);
      }
      GmcOptions opt;
      opt.gamma = cfg.gamma;
      opt.d = cfg.d;
      opt.b = cfg.b;
      opt.m = cfg.m;
      opt.grid_level = level;
      opt.decomposition = dec;
      gmc = std::make_unique<GmcSampler>(opt);
      const uint64_t seed = cfg.master_seed;
      GmcSampler* s = gmc.get();
      draw = [s, seed](uint64_t id) { return s->sample(seed, id); };
    } else if (cfg.model == "cascade") {
      if (cfg.gbm) {
        if (cfg.d != 1) throw ArgumentError("the gbm cascade is one-dimensional");
        const double sigma = cfg.gbm_sigma;
        const int b = cfg.b, m = cfg.m, lv = level;
        const uint64_t seed = cfg.master_seed;
        draw = [sigma, b, m, lv, seed](uint64_t id) {
          return sample_gbm_cascade(sigma, b, m, lv, seed, id);
        };
      } else {
        const WeightSpec w = cfg.weight;
        const int d = cfg.d, b = cfg.b, m = cfg.m, lv = level;
        const uint64_t seed = cfg.master_seed;
        draw = [w, d, b, m, lv, seed](uint64_t id) {
          return sample_canonical_cascade(w, d, b, m, lv, seed, id);
        };
      }
    } else if (cfg.model == "mrc") {
      if (cfg.d != 1) throw ArgumentError("coverings are one-dimensional");
      const LambdaMeasure l = cfg.lambda;
      const int b = cfg.b, m = cfg.m, lv = level;
      const uint64_t seed = cfg.master_seed;
      draw = [l, b, m, lv, seed](uint64_t id) {
        return sample_mrc(l, b, m, lv, seed, id).field;
      };
    } else {
      if (cfg.d != 1) throw ArgumentError("coverings are one-dimensional");
      const LambdaMeasure l = cfg.lambda;
      const double a = cfg.pmc_a;
      const int b = cfg.b, m = cfg.m, lv = level;
      const uint64_t seed = cfg.master_seed;
      draw = [l, a, b, m, lv, seed](uint64_t id) {
        return sample_pmc(l, a, b, m, lv, seed, id);
      };
    }
  } catch (...) {
    rethrow_stage("configuration");
  }

  // ---- theory stage: attach the closed-form prediction
  double chi_value = 0.0;
  try {
    if (cfg.model == "gmc") {
      res.prediction_name = "d_gamma";
      res.prediction = d_gamma(cfg.gamma, cfg.d);
      res.bound = "two-sided";
    } else if (cfg.model == "mrc") {
      chi_value = chi(cfg.lambda, cfg.b, 40);
      res.prediction_name = "one_minus_chi";
      res.prediction = 1.0 - chi_value;
      res.bound = "two-sided";
      if (chi_value >= 1.0) res.warnings.push_back("degenerate regime: chi >= 1");
    } else if (cfg.model == "pmc") {
      chi_value = chi(cfg.lambda, cfg.b, 40);
      res.prediction_name = "pmc_bound";
      res.prediction = 1.0 - (1.0 - cfg.pmc_a) * (1.0 - cfg.pmc_a) * chi_value;
      res.bound = "lower";
      if (chi_value >= 1.0) res.warnings.push_back("degenerate regime: chi >= 1");
    } else if (cfg.gbm) {
      res.prediction_name = "d_sigma";
      res.prediction = d_sigma(cfg.gbm_sigma, cfg.b);
      res.bound = "lower";
    } else {
      res.prediction_name = "cascade_bound";
      res.bound = "lower";
      if (cfg.weight.degenerate()) {
        res.warnings.push_back("degenerate weight: W == 1 almost surely");
        res.prediction = 0.0;
      } else {
        double p0 = 0.0;
        for (double p = 2.0; p > 1.0 + 1e-9; p -= 0.05) {
          const double thr = std::pow(static_cast<double>(cfg.b),
                                      static_cast<double>(cfg.d) * (p - 1.0));
          if (cfg.weight.moment(p) < thr) {
            p0 = p;
            break;
          }
        }
        if (p0 == 0.0) {
          res.warnings.push_back(
              "no moment exponent in (1,2] meets the moment condition; no prediction");
          res.prediction = 0.0;
        } else {
          const WeightSpec w = cfg.weight;
          const auto moment = [&w](double p) { return w.moment(p); };
          // Canonical weights are constant on each cell, so the Holder
          // condition holds at exponent 1 and the regularity cap is 2.
          res.prediction =
              cascade_bound(moment, cfg.b, cfg.d, 1.0, p0).value;
        }
      }
    }
  } catch (...) {
    rethrow_stage("theory");
  }

  // ---- sampling and estimation stage
  const int64_t S = cfg.samples;
  std::vector<double> masses(static_cast<size_t>(S), 0.0);
  std::vector<double> corr_rows;
  if (cfg.est_corrdim)
    corr_rows.assign(static_cast<size_t>(S) * corr_levels.size(), 0.0);
  std::vector<int64_t> box_rows;
  if (cfg.est_boxdim)
    box_rows.assign(static_cast<size_t>(S) * box_levels.size(), 0);
  std::unique_ptr<FourierDimAccumulator> facc;
  if (cfg.est_fourier)
    facc = std::make_unique<FourierDimAccumulator>(cfg.d, n_max, cfg.b, cfg.fit);

  // one sample's work, minus the order-sensitive spectrum reduction
  const auto sample_one = [&](int64_t s, FourierSpectrum& spec) {
    const DensityField field = draw(static_cast<uint64_t>(s));
    masses[static_cast<size_t>(s)] = total_mass(field);
    if (cfg.est_corrdim) {
      const std::vector<double> s2 = correlation_sums(field, corr_levels);
      std::copy(s2.begin(), s2.end(),
                corr_rows.begin() + static_cast<size_t>(s) * corr_levels.size());
    }
    if (cfg.est_boxdim) {
      std::vector<uint8_t> mask(field.values.size());
      for (size_t i = 0; i < mask.size(); ++i) mask[i] = field.values[i] > 0.0;
      const std::vector<int64_t> counts = box_counts(mask, field.grid, box_levels);
      std::copy(counts.begin(), counts.end(),
                box_rows.begin() + static_cast<size_t>(s) * box_levels.size());
    }
    if (cfg.est_fourier) spec = fourier_coefficients(field, n_max);
  };

  SampleError err;
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  if (!parallel) {
    for (int64_t s = 0; s < S && err.sample_id < 0; ++s) {
      FourierSpectrum spec;
      try {
        sample_one(s, spec);
        if (cfg.est_fourier) facc->add(spec);
      } catch (const ArgumentError& e) {
        err = {s, 1, e.what(), 0.0};
      } catch (const ContractError& e) {
        err = {s, 2, e.what(), 0.0};
      } catch (const NumericError& e) {
        err = {s, 3, e.what(), e.worst_value};
      } catch (const std::exception& e) {
        err = {s, 4, e.what(), 0.0};
      }
    }
  } else {
#pragma omp parallel for ordered schedule(dynamic, 1) num_threads(nthreads)
    for (int64_t s = 0; s < S; ++s) {
      bool ok = false;
      FourierSpectrum spec;
      try {
        sample_one(s, spec);
        ok = true;
      } catch (const ArgumentError& e) {
#pragma omp critical(mcx_run_err)
        if (err.sample_id < 0 || s < err.sample_id) err = {s, 1, e.what(), 0.0};
      } catch (const ContractError& e) {
#pragma omp critical(mcx_run_err)
        if (err.sample_id < 0 || s < err.sample_id) err = {s, 2, e.what(), 0.0};
      } catch (const NumericError& e) {
#pragma omp critical(mcx_run_err)
        if (err.sample_id < 0 || s < err.sample_id)
          err = {s, 3, e.what(), e.worst_value};
      } catch (const std::exception& e) {
#pragma omp critical(mcx_run_err)
        if (err.sample_id < 0 || s < err.sample_id) err = {s, 4, e.what(), 0.0};
      }
#pragma omp ordered
      {
        bool doomed = false;
#pragma omp critical(mcx_run_err)
        doomed = err.sample_id >= 0;
        if (ok && cfg.est_fourier && !doomed) {
          try {
            facc->add(spec);
          } catch (const ArgumentError& e) {
#pragma omp critical(mcx_run_err)
            if (err.sample_id < 0 || s < err.sample_id) err = {s, 1, e.what(), 0.0};
          } catch (const std::exception& e) {
#pragma omp critical(mcx_run_err)
            if (err.sample_id < 0 || s < err.sample_id) err = {s, 4, e.what(), 0.0};
          }
        }
      }
    }
  }
  if (err.sample_id >= 0) {
    const std::string msg = "sampling (sample " + std::to_string(err.sample_id) +
                            "): " + err.msg;
    switch (err.kind) {
      case 1:
        throw ArgumentError(msg);
      case 2:
        throw ContractError(msg);
      case 3:
        throw NumericError(msg, err.worst);
      default:
        throw ResourceError(msg);
    }
  }

  // ---- reduction stage: ensemble statistics and fits
  std::vector<BandStat> mean_bands;
  try {
    double mean = 0.0;
    for (double v : masses) mean += v;
    mean /= static_cast<double>(S);
    double var = 0.0;
    for (double v : masses) var += (v - mean) * (v - mean);
    res.mass_mean = mean;
    res.mass_std_error =
        std::sqrt(var / static_cast<double>(S - 1) / static_cast<double>(S));

    if (cfg.est_fourier) {
      res.fourier_ensemble = facc->estimate(FourierDimMode::ensemble_mean);
      res.fourier_pathwise = facc->estimate(FourierDimMode::pathwise_max);
      mean_bands = facc->mean_band_statistics();
    }

    if (cfg.est_corrdim) {
      const double logb = std::log(static_cast<double>(cfg.b));
      std::vector<double> x, y;
      for (size_t i = 0; i < corr_levels.size(); ++i) {
        double s2 = 0.0;
        for (int64_t s = 0; s < S; ++s)
          s2 += corr_rows[static_cast<size_t>(s) * corr_levels.size() + i];
        s2 /= static_cast<double>(S);
        x.push_back(-static_cast<double>(corr_levels[i]) * logb);
        y.push_back(std::log(std::max(s2, 1e-300)));
      }
      const LineFit f = fit_line(x, y);
      DimensionEstimate est;
      est.slope = f.slope;
      est.intercept = f.intercept;
      est.std_error = f.std_error;
      est.band_lo = corr_levels.front();
      est.band_hi = corr_levels.back();
      est.method = "correlation";
      res.corrdim = est;
    }

    if (cfg.est_boxdim) {
      const double logb = std::log(static_cast<double>(cfg.b));
      std::vector<double> x, y;
      bool any = false;
      for (size_t i = 0; i < box_levels.size(); ++i) {
        double count = 0.0;
        for (int64_t s = 0; s < S; ++s)
          count += static_cast<double>(
              box_rows[static_cast<size_t>(s) * box_levels.size() + i]);
        count /= static_cast<double>(S);
        if (count > 0.0) {
          any = true;
          x.push_back(static_cast<double>(box_levels[i]) * logb);
          y.push_back(std::log(count));
        }
      }
      DimensionEstimate est;
      est.method = "box-count";
      est.band_lo = box_levels.front();
      est.band_hi = box_levels.back();
      if (!any || x.size() < 3) {
        est.degenerate = true;
      } else {
        const LineFit f = fit_line(x, y);
        est.slope = f.slope;
        est.intercept = f.intercept;
        est.std_error = f.std_error;
      }
      res.boxdim = est;
    }
  } catch (...) {
    rethrow_stage("reduction");
  }

  // ---- record stage: canonical JSON (no wall-clock content)
  try {
    json record;
    record["version"] = kVersion;
    record["config"] =
        cfg.raw_json.empty() ? json(nullptr) : json::parse(cfg.raw_json);
    record["config_hash"] = res.hash;
    record["model"] = cfg.model;
    json pred{{"name", res.prediction_name},
              {"value", res.prediction},
              {"bound", res.bound}};
    if (cfg.model == "mrc" || cfg.model == "pmc") pred["chi"] = chi_value;
    record["prediction"] = pred;
    record["warnings"] = res.warnings;
    record["grid"] = {{"d", cfg.d}, {"b", cfg.b}, {"m", cfg.m}, {"level", level}};
    record["spectrum_n_max"] = n_max;
    json mass{{"mean", res.mass_mean},
              {"std_error", res.mass_std_error},
              {"per_sample", masses}};
    record["mass"] = mass;
    json est = json::object();
    if (res.fourier_ensemble)
      est["fourier_ensemble"] = estimate_to_json(*res.fourier_ensemble);
    if (res.fourier_pathwise)
      est["fourier_pathwise"] = estimate_to_json(*res.fourier_pathwise);
    if (res.corrdim) est["corrdim"] = estimate_to_json(*res.corrdim);
    if (res.boxdim) est["boxdim"] = estimate_to_json(*res.boxdim);
    record["estimates"] = est;
    res.record_json = record.dump(2) + "\n";
  } catch (...) {
    rethrow_stage("record");
  }

  // ---- persistence stage: record.json, bands.csv, run_meta.json
  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    std::vector<fs::path> written;
    try {
      const fs::path dir(cfg.output_dir);
      fs::create_directories(dir);

      const fs::path record_path = dir / "record.json";
      {
        std::ofstream out(record_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot write " + record_path.string());
        out << res.record_json;
      }
      written.push_back(record_path);
      res.record_path = record_path.string();

      if (cfg.est_fourier) {
        const fs::path bands_path = dir / "bands.csv";
        std::ofstream out(bands_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot write " + bands_path.string());
        out << "band,log_freq,log_stat,n_points\n";
        char line[128];
        for (const auto& s : mean_bands) {
          std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%lld\n", s.band,
                        s.mean_log_freq, s.mean_log_sq,
                        static_cast<long long>(s.count));
          out << line;
        }
        written.push_back(bands_path);
        res.bands_path = bands_path.string();
      }

      // wall clock and thread count live in a sidecar so the record itself
      // stays byte-stable across reruns
      const fs::path meta_path = dir / "run_meta.json";
      {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          wall_start)
                .count();
        json meta{{"wall_seconds", seconds},
                  {"threads", nthreads},
                  {"version", kVersion}};
        std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot write " + meta_path.string());
        out << meta.dump(2) << "\n";
      }
      written.push_back(meta_path);
      res.meta_path = meta_path.string();
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) std::filesystem::remove(p, ec);
      rethrow_stage("persistence");
    }
  }
  return res;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, int threads) {
  return run_impl(cfg, threads, true);
}

RunResult run_experiment_serial(const ExperimentConfig& cfg) {
  return run_impl(cfg, 1, false);
}

CompareReport compare_record(const std::string& record_json,
                             const CompareTolerances& tol) {
  json record;
  try {
    record = json::parse(record_json);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("record parse error: ") + e.what());
  }
  if (!record.contains("prediction") || !record.contains("estimates"))
    throw ArgumentError("record is missing prediction or estimates");
  const double prediction = record["prediction"].at("value").get<double>();
  const std::string bound = record["prediction"].value("bound", "two-sided");
  const json& est = record["estimates"];

  CompareReport rep;
  const auto add_row = [&](const char* name, const char* key, double tolerance) {
    CompareRow row;
    row.estimator = name;
    row.prediction = prediction;
    row.tol = tolerance;
    if (!est.contains(key)) {
      row.status = "not run";
      rep.rows.push_back(row);
      return;
    }
    const json& e = est.at(key);
    row.has_estimate = true;
    row.estimate = e.at("slope").get<double>();
    if (e.value("degenerate", false)) {
      row.status = "fail";
      rep.pass = false;
      rep.rows.push_back(row);
      return;
    }
    row.gap = row.estimate - prediction;
    const bool ok = bound == "lower" ? row.estimate >= prediction - tolerance
                                     : std::abs(row.gap) <= tolerance;
    row.status = ok ? "pass" : "fail";
    if (!ok) rep.pass = false;
    rep.rows.push_back(row);
  };
  add_row("fourier", "fourier_ensemble", tol.fourier);
  add_row("corrdim", "corrdim", tol.corrdim);
  add_row("boxdim", "boxdim", tol.boxdim);
  return rep;
}

}  // namespace mcx
