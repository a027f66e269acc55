#pragma once

#include "stockcast/panel.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stockcast {

// Windows, spans, and decay constants of the engineered feature set.
struct FeatureSpec {
    std::vector<int> short_lags{0, 1, 2, 3};
    std::vector<int> seasonal_lags{51, 52, 53};
    std::vector<int> roll_windows{3, 5, 13}; // rolling mean and median
    std::vector<int> ewm_spans{5, 10};
    int std_window = 8;
    int iqr_window = 13;
    std::vector<int> momentum_ks{1, 5};
    int slope_window = 4;
    int fourier_harmonics = 3;
    int season_period = 52;
    int spike_window = 13;
    double spike_z_threshold = 3.0;
    int time_since_spike_cap = 104;
    int nonzero_rate_window = 12;
    int seasonality_window = 52;
    int seasonality_min_pairs = 8;
    // last-year window: effective values at offsets [p-2, p+2] behind t
    int last_year_offset = 52;
    int last_year_halfwidth = 2;
    int warmstart_min_obs = 45;
    int scale_window = 53;
    double scale_floor = 1.0;
    double decay_factor = 0.5;
    int decay_block_weeks = 53;
    int horizons = 3;

    void validate() const;
};

// Per-week annualized demand level used to normalize targets and
// target-based features. Always >= the clip floor.
struct ScaleSeries {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t w) const { return values[w]; }
};

struct SpikeStats {
    std::vector<double> robust_z; // missing where the effective value is missing
    std::vector<std::uint8_t> spike;
    std::vector<int> time_since_spike;
};

// Tabular view of the panel: one row per (item, week), item-major.
// Numeric cells use NaN for missing until imputation.
struct FeatureMatrix {
    std::vector<std::string> numeric_names;
    std::vector<std::uint8_t> numeric_is_scaled; // divided by scale_factor
    std::vector<std::string> categorical_names;  // Store, Product, unique_id, week_of_year

    std::size_t n_rows = 0;
    std::vector<std::size_t> item; // panel row per matrix row
    std::vector<int> week;
    std::vector<double> numeric;     // n_rows x numeric_names.size()
    std::vector<std::int32_t> categorical; // n_rows x categorical_names.size()
    std::vector<double> scale_factor;
    double scale_floor = 1.0; // rows pinned at the floor have no usable scale history
    std::vector<double> observation_weight;
    std::vector<std::vector<double>> targets; // [horizon-1][row], scaled, NaN missing

    std::vector<std::string> store_levels;
    std::vector<std::string> product_levels;
    std::vector<std::string> unique_levels;

    std::size_t n_numeric() const { return numeric_names.size(); }
    double num(std::size_t row, std::size_t col) const {
        return numeric[row * n_numeric() + col];
    }
    double& num(std::size_t row, std::size_t col) {
        return numeric[row * n_numeric() + col];
    }
    std::int32_t cat(std::size_t row, std::size_t col) const {
        return categorical[row * categorical_names.size() + col];
    }
    std::size_t numeric_index(const std::string& name) const;
    // Row index for (item, week); rows are dense so this is arithmetic.
    std::size_t row_of(std::size_t item_row, int week, std::size_t n_weeks) const {
        return item_row * n_weeks + static_cast<std::size_t>(week);
    }
};

// ---------------------------------------------------------------------------
// Per-series statistics
// ---------------------------------------------------------------------------

// Trailing-window annualized mean of the effective series, clipped to the
// floor. Weeks with fewer than warmstart_min_obs in-window observations fall
// back to the expanding mean of all effective history; weeks with no
// effective history at all sit at the floor.
ScaleSeries compute_scale_factor(const EffectiveSeries& series, const FeatureSpec& spec);

// Stepwise time-decayed weights in trailing blocks of decay_block_weeks,
// newest block weighted 1. The oldest partial block shares its block weight.
std::vector<double> observation_weights(std::size_t series_length, const FeatureSpec& spec);

// Rolling Pearson correlation between the series and its seasonal lag over
// the trailing window; 0 where fewer than seasonality_min_pairs valid pairs
// exist or either leg is constant. Clamped to [-1, 1].
std::vector<double> seasonality_strength(const EffectiveSeries& series, const FeatureSpec& spec);

// Robust z-score against the rolling median/MAD, spike indicator, and weeks
// since the last spike (capped, and initialized at the cap).
SpikeStats spike_stats(const EffectiveSeries& series, const FeatureSpec& spec);

// ---------------------------------------------------------------------------
// Matrix construction and imputation
// ---------------------------------------------------------------------------

FeatureMatrix build_features(const SalesPanel& panel, const FeatureSpec& spec);

// Two-level median fill fitted on rows at or before a cutoff week:
// per-series medians first, the pooled global median as fallback. Fitted
// medians are reusable for later (validation/test/live) rows.
class Imputer {
public:
    static Imputer fit(const FeatureMatrix& matrix, int train_week_cutoff);
    void apply(FeatureMatrix& matrix) const;

    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<std::string>& fully_missing_features() const { return fully_missing_; }
    int cutoff() const { return cutoff_; }

    // Per-feature medians keyed by unique_id; global fallback per feature.
    const std::vector<std::map<std::string, double>>& series_medians() const {
        return series_medians_;
    }
    const std::vector<double>& global_medians() const { return global_medians_; }

    friend class ModelBundleSerializer;
    static Imputer from_parts(std::vector<std::string> feature_names,
                              std::vector<std::map<std::string, double>> series_medians,
                              std::vector<double> global_medians, int cutoff);

private:
    std::vector<std::string> feature_names_;
    std::vector<std::map<std::string, double>> series_medians_;
    std::vector<double> global_medians_;
    std::vector<std::string> fully_missing_;
    int cutoff_ = 0;
};

// Fit-and-apply convenience; the fitted medians are returned for reuse.
Imputer impute(FeatureMatrix& matrix, int train_week_cutoff);

// Long CSV export with the documented stable column order; missing cells
// are written empty.
void export_features_csv(const FeatureMatrix& matrix, const SalesPanel& panel,
                         const std::string& path);

} // namespace stockcast
