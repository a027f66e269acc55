#pragma once

#include "stockcast/forecast.hpp"
#include "stockcast/policy.hpp"
#include "stockcast/synth.hpp"

#include <map>
#include <string>

#include <json.hpp>

namespace stockcast {

// Everything a run needs, loadable from one JSON file. The root seed feeds
// every stochastic component through named substreams.
struct RunConfig {
    std::string sales_path;
    std::string flags_path;
    std::string inventory_path; // optional
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 0; // <= 0 means all available cores
    double phi = 1.0;

    CostParams costs;
    SplitSpec split;
    FeatureSpec features;
    HpoConfig hpo;
    TrainConfig train_base;
    std::vector<double> phi_grid;
    int benchmark_coverage_weeks = 4;
    int simulate_rounds = 6;
    SyntheticSpec synth;

    RunConfig();

    int effective_threads() const;
    static RunConfig load(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Hashing / manifests
// ---------------------------------------------------------------------------

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a_string(const std::string& s);
std::uint64_t fnv1a_file(const std::string& path);
std::uint64_t panel_content_hash(const SalesPanel& panel);
std::string hash_hex(std::uint64_t h);

// manifest.json: config + config hash + seed + input file hashes. No clocks,
// so reruns with the same inputs are byte-identical.
void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::map<std::string, std::string>& input_files,
                    const SalesPanel* panel);

// ---------------------------------------------------------------------------
// Orchestrated runs
// ---------------------------------------------------------------------------

struct BacktestArtifacts {
    SplitBounds bounds;
    std::array<TrainConfig, kHorizons> best_configs;
    std::array<int, kHorizons> best_iterations;
    std::array<double, kHorizons> best_maes; // validation, original units
    BacktestReport forecast_report;          // holdout
    CalibrationResult calibration;
    double policy_cost = 0.0;
    double benchmark_cost = 0.0;
    double delta_pct = 0.0; // cost reduction vs the benchmark, in percent
};

// features -> HPO -> refit -> phi calibration on the validation window ->
// holdout replay of the cost-aware policy against the coverage benchmark.
// Writes summary.json, phi_curve.csv, and both episode reports into
// cfg.out_dir when write_files is set.
BacktestArtifacts run_backtest(const SalesPanel& panel, const RunConfig& cfg,
                               bool write_files);

struct TrainArtifacts {
    ModelBundle bundle;
    std::array<TrainConfig, kHorizons> best_configs;
    std::array<int, kHorizons> best_iterations;
    std::array<double, kHorizons> best_maes;
};

// features -> HPO -> live refit on all history; the bundle predicts from the
// last observed week.
TrainArtifacts run_train_live(const SalesPanel& panel, const RunConfig& cfg);

nlohmann::json backtest_summary_json(const BacktestArtifacts& art, const RunConfig& cfg,
                                     const SalesPanel& panel);
void save_phi_curve_csv(const CalibrationResult& calibration, const std::string& path);

} // namespace stockcast
