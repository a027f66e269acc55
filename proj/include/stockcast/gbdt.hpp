#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace stockcast {

// Boosting hyperparameters. Defaults are a reasonable mid-range starting
// point; the HPO layer overrides most of them.
struct TrainConfig {
    int max_iterations = 2000;
    double learning_rate = 0.05;
    int max_depth = 6;
    double l2_leaf_reg = 3.0;
    double feature_subsample = 1.0;
    double row_subsample = 1.0;
    int min_samples_leaf = 1;
    int histogram_bins = 255;
    int early_stopping_rounds = 500;
    double cat_prior_strength = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Column-typed training table. Numeric cells may be NaN (routed left at
// splits); weights empty means unit weights.
struct Dataset {
    std::vector<std::string> numeric_names;
    std::vector<std::string> categorical_names;
    std::size_t n_rows = 0;
    std::vector<double> numeric;           // row-major, n_rows x numeric
    std::vector<std::int32_t> categorical; // row-major, n_rows x categorical
    std::vector<double> target;
    std::vector<double> weight;

    std::size_t n_numeric() const { return numeric_names.size(); }
    std::size_t n_categorical() const { return categorical_names.size(); }
    std::size_t n_features() const { return n_numeric() + n_categorical(); }
    double num(std::size_t row, std::size_t col) const {
        return numeric[row * n_numeric() + col];
    }
    std::int32_t cat(std::size_t row, std::size_t col) const {
        return categorical[row * n_categorical() + col];
    }
    double row_weight(std::size_t row) const { return weight.empty() ? 1.0 : weight[row]; }
};

// Smoothed target-mean statistics for one categorical column; unseen
// categories fall back to the global weighted mean.
struct CategoricalEncoder {
    std::map<std::int32_t, double> table;
    double fallback = 0.0;

    double encode(std::int32_t v) const {
        auto it = table.find(v);
        return it != table.end() ? it->second : fallback;
    }
};

struct TreeNode {
    int feature = -1;       // global index: numerics first, then categoricals
    double threshold = 0.0; // value <= threshold (or missing) goes left
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf payload, applied with learning-rate shrinkage
    double gain = 0.0;

    bool is_leaf() const { return left < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // node 0 is the root
};

struct Ensemble {
    TrainConfig config;
    std::vector<std::string> numeric_names;
    std::vector<std::string> categorical_names;
    double base_score = 0.0;
    int best_iteration = 0; // trees used at predict time
    std::vector<Tree> trees;
    std::vector<CategoricalEncoder> encoders;     // one per categorical column
    std::vector<std::vector<double>> bin_edges;   // per global feature
    std::vector<double> train_rmse_log;           // weighted, per iteration
    std::vector<double> valid_rmse_log;           // weighted, per iteration

    std::size_t n_features() const { return numeric_names.size() + categorical_names.size(); }
};

// Fit the smoothed encoding on one column: enc(v) = (sum_w_y(v) + prior *
// ybar) / (sum_w(v) + prior), ybar the global weighted mean.
CategoricalEncoder encode_categoricals(const std::vector<std::int32_t>& column,
                                       const std::vector<double>& target,
                                       const std::vector<double>& weights,
                                       double prior_strength);

// Weighted squared-error boosting with histogram trees. `valid` may be empty
// (no early stopping). Deterministic for a fixed (data order, config, seed),
// independent of n_threads.
Ensemble fit(const Dataset& train, const Dataset& valid, const TrainConfig& config,
             int n_threads = 1);

std::vector<double> predict(const Ensemble& model, const Dataset& rows);

// Split-gain totals over the trees in use, as percentages summing to 100
// (all zeros for a treeless model). Indexed like the global feature order.
std::vector<double> feature_importance(const Ensemble& model);

nlohmann::json ensemble_to_json(const Ensemble& model);
Ensemble ensemble_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

} // namespace stockcast
