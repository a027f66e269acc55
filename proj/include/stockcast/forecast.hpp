#pragma once

#include "stockcast/features.hpp"
#include "stockcast/gbdt.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace stockcast {

inline constexpr int kHorizons = 3;

struct SplitSpec {
    int test_holdout_weeks = 18;
    double valid_fraction_of_train = 0.10;

    void validate() const;
};

// Inclusive last-week indices of each chronological partition.
struct SplitBounds {
    int train_end = 0;
    int valid_end = 0;
    int test_end = 0;
};

SplitBounds split_bounds(std::size_t n_weeks, const SplitSpec& split);

struct HpoRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct HpoConfig {
    int trials = 100;
    std::uint64_t seed = 0;
    int max_depth_lo = 3;
    int max_depth_hi = 10;
    HpoRange learning_rate{0.01, 0.3}; // log-scale
    HpoRange l2_leaf_reg{0.1, 30.0};   // log-scale
    HpoRange feature_subsample{0.5, 1.0};
    HpoRange row_subsample{0.5, 1.0};
    int min_samples_leaf_lo = 1; // log-scale
    int min_samples_leaf_hi = 100;

    void validate() const;
};

// Point forecasts per item for the three protection-period weeks after the
// decision week.
struct ForecastSet {
    int decision_week = 0;
    std::vector<std::array<double, kHorizons>> values; // panel item order

    std::size_t n_items() const { return values.size(); }
};

// One horizon's chronological partitions with the bookkeeping needed to
// score in original units.
struct SplitDatasets {
    Dataset train;
    Dataset valid;
    Dataset test;
    std::vector<double> valid_scale;
    std::vector<double> test_scale;
    std::vector<std::size_t> valid_matrix_rows;
    std::vector<std::size_t> test_matrix_rows;
    SplitBounds bounds;
};

// Rows with a missing horizon-h target are dropped; the rest partition
// chronologically by week. The matrix must already be imputed.
SplitDatasets assemble_dataset(const FeatureMatrix& matrix, int horizon,
                               const SplitSpec& split);

struct TrialResult {
    TrainConfig config;
    double valid_mae = 0.0; // original units
    int best_iteration = 0;
};

struct HpoResult {
    TrainConfig best;
    int best_iteration = 0;
    double best_mae = 0.0;
    int best_trial = 0;
    std::vector<TrialResult> trials;
};

// Seeded uniform random search over the HpoConfig ranges, one independent
// stream per horizon. Fit scores RMSE on the scaled target; selection is
// plain MAE after inverse scaling. Ties go to the earlier trial.
HpoResult hpo_search(const SplitDatasets& data, const HpoConfig& hpo,
                     const TrainConfig& base, int horizon, int n_threads = 1);

enum class FitMode { backtest, live };

struct BacktestReport {
    std::array<double, kHorizons> mae{};  // original units, per horizon
    std::array<double, kHorizons> bias{}; // mean(prediction - actual)
    std::array<std::size_t, kHorizons> rows{};
    double mae_overall = 0.0;
};

struct FinalFit {
    std::array<Ensemble, kHorizons> models;
    BacktestReport report; // populated in backtest mode only
    bool has_report = false;
};

// Refit each horizon at a fixed tree budget (the HPO best trial's
// best_iteration): backtest mode on train+valid scored against the holdout,
// live mode on everything with a target.
FinalFit fit_final(const FeatureMatrix& matrix, const SplitSpec& split,
                   const std::array<TrainConfig, kHorizons>& configs,
                   const std::array<int, kHorizons>& iterations, FitMode mode,
                   int n_threads = 1);

// Real-valued forecasts from the item rows at one decision week, inverse
// scaled to original units.
ForecastSet predict_horizons(const std::array<Ensemble, kHorizons>& models,
                             const FeatureMatrix& matrix, int decision_week);

// Round half up, floored at zero.
ForecastSet postprocess(const ForecastSet& forecasts);

// Trailing 13-week mean of effective sales times a causal week-of-year
// seasonal index; the benchmark forecaster.
ForecastSet baseline_seasonal_ma(const SalesPanel& panel, int decision_week);

void save_forecasts_csv(const ForecastSet& forecasts, const SalesPanel& panel,
                        const std::string& path);

// ---------------------------------------------------------------------------
// Trained-artifact bundle
// ---------------------------------------------------------------------------

struct ModelBundle {
    FeatureSpec feature_spec;
    Imputer imputer;
    std::array<Ensemble, kHorizons> models;
};

nlohmann::json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& j);
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// FeatureSpec / Imputer serialization used by the bundle and run configs.
void to_json(nlohmann::json& j, const FeatureSpec& spec);
void from_json(const nlohmann::json& j, FeatureSpec& spec);
nlohmann::json imputer_to_json(const Imputer& imputer);
Imputer imputer_from_json(const nlohmann::json& j);

} // namespace stockcast
