// Times the OpenMP experiment driver against the serial reference on one
// config per model and checks that both produce byte-identical records.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mcx/experiment.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct BenchCase {
  const char* name;
  std::string config;
};

std::vector<BenchCase> make_cases(bool quick) {
  if (quick) {
    return {
        {"gmc", R"({"model": "gmc",
                    "params": {"gamma": 0.5, "kernel": "exact-log"},
                    "grid": {"d": 1, "b": 2, "m": 4, "grid_level": 8},
                    "ensemble": {"samples": 8, "master_seed": 41}})"},
        {"cascade", R"({"model": "cascade",
                        "params": {"weight": {"kind": "discrete",
                                              "values": [0.5, 1.5],
                                              "probs": [0.5, 0.5]}},
                        "grid": {"d": 1, "b": 2, "m": 6, "grid_level": 8},
                        "ensemble": {"samples": 8, "master_seed": 42},
                        "estimators": ["fourier", "corrdim"]})"},
    };
  }
  return {
      {"gmc", R"({"model": "gmc",
                  "params": {"gamma": 0.5, "kernel": "exact-log"},
                  "grid": {"d": 1, "b": 2, "m": 10, "grid_level": 12},
                  "ensemble": {"samples": 32, "master_seed": 41}})"},
      {"cascade", R"({"model": "cascade",
                      "params": {"weight": {"kind": "discrete",
                                            "values": [0.5, 1.5],
                                            "probs": [0.5, 0.5]}},
                      "grid": {"d": 1, "b": 2, "m": 10, "grid_level": 12},
                      "ensemble": {"samples": 32, "master_seed": 42},
                      "estimators": ["fourier", "corrdim"]})"},
      {"mrc", R"({"model": "mrc",
                  "params": {"lambda": {"builtin": {"canonical_alpha": 0.5}}},
                  "grid": {"d": 1, "b": 2, "m": 10, "grid_level": 12},
                  "ensemble": {"samples": 32, "master_seed": 43}})"},
      {"pmc", R"({"model": "pmc",
                  "params": {"lambda": {"builtin": {"canonical_alpha": 0.5}},
                             "a": 0.5},
                  "grid": {"d": 1, "b": 2, "m": 10, "grid_level": 12},
                  "ensemble": {"samples": 32, "master_seed": 44}})"},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial reference vs OpenMP driver"};
  bool quick = false;
  int threads = 0;
  app.add_flag("--quick", quick, "small configs for the test suite");
  app.add_option("--threads", threads, "parallel worker count (0 = OpenMP default)");
  CLI11_PARSE(app, argc, argv);

  const int workers = threads > 0 ? threads : omp_get_max_threads();
  std::printf("%-8s %9s %8s %10s %12s %8s  %s\n", "model", "cells", "samples",
              "serial_s", "parallel_s", "speedup", "records");

  int mismatches = 0;
  for (const BenchCase& bc : make_cases(quick)) {
    try {
      const mcx::ExperimentConfig cfg = mcx::parse_config(bc.config);

      auto t0 = std::chrono::steady_clock::now();
      const mcx::RunResult serial = mcx::run_experiment_serial(cfg);
      const double serial_s = seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      const mcx::RunResult parallel = mcx::run_experiment(cfg, threads);
      const double parallel_s = seconds_since(t0);

      const bool match = serial.record_json == parallel.record_json;
      if (!match) ++mismatches;

      int64_t cells = 1;
      int level = cfg.grid_level;
      // grid_level 0 in the config means the driver derives it; recompute here
      if (level == 0) level = cfg.m + (cfg.d == 1 ? 2 : 3);
      for (int a = 0; a < cfg.d; ++a)
        for (int l = 0; l < level; ++l) cells *= cfg.b;
      std::printf("%-8s %9lld %8lld %10.3f %12.3f %8.2f  %s\n", bc.name,
                  static_cast<long long>(cells),
                  static_cast<long long>(cfg.samples), serial_s, parallel_s,
                  parallel_s > 0.0 ? serial_s / parallel_s : 0.0,
                  match ? "match" : "MISMATCH");
    } catch (const std::exception& e) {
      ++mismatches;
      std::printf("%-8s failed: %s\n", bc.name, e.what());
    }
  }
  std::printf("parallel workers: %d\n", workers);
  return mismatches == 0 ? 0 : 1;
}
