#include "stockcast/features.hpp"

#include "stockcast/csv.hpp"
#include "stockcast/dates.hpp"
#include "stockcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace stockcast {

namespace {

constexpr double kMadConsistency = 1.4826;
constexpr double kMadEps = 1e-9;

double median_of(std::vector<double>& v) {
    // v is consumed (partially sorted). Average-of-middles for even counts.
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

double quantile_of(std::vector<double> v, double p) {
    // Linear interpolation between order statistics (type-7).
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

// Valid (in-stock) values of eff over the inclusive window [first, last].
std::vector<double> window_values(const std::vector<double>& eff, int first, int last) {
    std::vector<double> out;
    for (int w = std::max(first, 0); w <= last; ++w)
        if (!is_missing(eff[static_cast<std::size_t>(w)]))
            out.push_back(eff[static_cast<std::size_t>(w)]);
    return out;
}

} // namespace

void FeatureSpec::validate() const {
    auto positive = [](int v, const char* what) {
        if (v < 1) throw ConfigError(std::string(what) + " must be >= 1");
    };
    for (int l : short_lags)
        if (l < 0) throw ConfigError("short_lags must be >= 0");
    for (int l : seasonal_lags) positive(l, "seasonal_lags");
    for (int w : roll_windows) positive(w, "roll_windows");
    for (int s : ewm_spans) positive(s, "ewm_spans");
    for (int k : momentum_ks) positive(k, "momentum_ks");
    positive(std_window, "std_window");
    positive(iqr_window, "iqr_window");
    positive(slope_window, "slope_window");
    positive(fourier_harmonics, "fourier_harmonics");
    positive(spike_window, "spike_window");
    positive(nonzero_rate_window, "nonzero_rate_window");
    positive(seasonality_window, "seasonality_window");
    positive(warmstart_min_obs, "warmstart_min_obs");
    positive(scale_window, "scale_window");
    positive(decay_block_weeks, "decay_block_weeks");
    positive(horizons, "horizons");
    if (season_period < 2) throw ConfigError("season_period must be >= 2");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
        throw ConfigError("decay_factor must be in (0, 1]");
}

std::size_t FeatureMatrix::numeric_index(const std::string& name) const {
    for (std::size_t j = 0; j < numeric_names.size(); ++j)
        if (numeric_names[j] == name) return j;
    throw ConfigError("unknown feature: " + name);
}

// ---------------------------------------------------------------------------
// Per-series statistics
// ---------------------------------------------------------------------------

ScaleSeries compute_scale_factor(const EffectiveSeries& series, const FeatureSpec& spec) {
    const auto& eff = series.values;
    const std::size_t n = eff.size();
    if (n == 0) throw DataError("compute_scale_factor: empty series");

    // Prefix sums over valid values: csum[w] = count, vsum[w] = sum in [0, w).
    std::vector<double> vsum(n + 1, 0.0);
    std::vector<int> csum(n + 1, 0);
    for (std::size_t w = 0; w < n; ++w) {
        const bool ok = !is_missing(eff[w]);
        csum[w + 1] = csum[w] + (ok ? 1 : 0);
        vsum[w + 1] = vsum[w] + (ok ? eff[w] : 0.0);
    }

    ScaleSeries out;
    out.values.resize(n, spec.scale_floor);
    const int W = spec.scale_window;
    for (std::size_t w = 0; w < n; ++w) {
        const int lo = std::max(0, static_cast<int>(w) - W + 1);
        const int win_cnt = csum[w + 1] - csum[lo];
        double mean;
        if (win_cnt >= spec.warmstart_min_obs) {
            mean = (vsum[w + 1] - vsum[lo]) / win_cnt;
        } else if (csum[w + 1] > 0) {
            mean = vsum[w + 1] / csum[w + 1]; // expanding warm start
        } else {
            continue; // no history yet: stay at the floor
        }
        out.values[w] = std::max(static_cast<double>(W) * mean, spec.scale_floor);
    }
    return out;
}

std::vector<double> observation_weights(std::size_t series_length, const FeatureSpec& spec) {
    if (series_length == 0) throw DataError("observation_weights: empty series");
    std::vector<double> w(series_length);
    for (std::size_t t = 0; t < series_length; ++t) {
        const std::size_t age = (series_length - 1 - t) / static_cast<std::size_t>(spec.decay_block_weeks);
        w[t] = std::pow(spec.decay_factor, static_cast<double>(age));
    }
    return w;
}

std::vector<double> seasonality_strength(const EffectiveSeries& series, const FeatureSpec& spec) {
    const auto& eff = series.values;
    const int n = static_cast<int>(eff.size());
    const int P = spec.season_period;
    std::vector<double> out(eff.size(), 0.0);
    for (int t = 0; t < n; ++t) {
        const int first = std::max(P, t - spec.seasonality_window + 1);
        std::vector<double> x, y;
        for (int w = first; w <= t; ++w) {
            const double cur = eff[static_cast<std::size_t>(w)];
            const double lag = eff[static_cast<std::size_t>(w - P)];
            if (!is_missing(cur) && !is_missing(lag)) {
                x.push_back(cur);
                y.push_back(lag);
            }
        }
        const std::size_t m = x.size();
        if (m < static_cast<std::size_t>(spec.seasonality_min_pairs)) continue;
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(m);
        my /= static_cast<double>(m);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        if (sxx <= 0.0 || syy <= 0.0) continue; // constant leg
        out[static_cast<std::size_t>(t)] = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    }
    return out;
}

SpikeStats spike_stats(const EffectiveSeries& series, const FeatureSpec& spec) {
    const auto& eff = series.values;
    const int n = static_cast<int>(eff.size());
    SpikeStats st;
    st.robust_z.resize(eff.size(), missing_value());
    st.spike.assign(eff.size(), 0);
    st.time_since_spike.resize(eff.size(), spec.time_since_spike_cap);

    int prev_tss = spec.time_since_spike_cap;
    for (int t = 0; t < n; ++t) {
        const double y = eff[static_cast<std::size_t>(t)];
        bool spike = false;
        if (!is_missing(y)) {
            auto vals = window_values(eff, t - spec.spike_window + 1, t);
            auto med_vals = vals;
            const double med = median_of(med_vals);
            std::vector<double> dev(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) dev[i] = std::abs(vals[i] - med);
            const double mad = median_of(dev);
            const double z = (y - med) / (kMadConsistency * mad + kMadEps);
            st.robust_z[static_cast<std::size_t>(t)] = z;
            spike = z > spec.spike_z_threshold || (med == 0.0 && y > 0.0);
        }
        st.spike[static_cast<std::size_t>(t)] = spike ? 1 : 0;
        const int tss = spike ? 0 : std::min(prev_tss + 1, spec.time_since_spike_cap);
        st.time_since_spike[static_cast<std::size_t>(t)] = tss;
        prev_tss = tss;
    }
    return st;
}

// ---------------------------------------------------------------------------
// Matrix construction
// ---------------------------------------------------------------------------

FeatureMatrix build_features(const SalesPanel& panel, const FeatureSpec& spec) {
    spec.validate();
    const std::size_t n_items = panel.n_items();
    const std::size_t n_weeks = panel.n_weeks();
    if (n_items == 0 || n_weeks == 0) throw DataError("build_features: empty panel");

    FeatureMatrix m;
    m.scale_floor = spec.scale_floor;
    m.categorical_names = {"Store", "Product", "unique_id", "week_of_year"};

    // Stable numeric column order.
    auto add_num = [&m](const std::string& name, bool scaled) {
        m.numeric_names.push_back(name);
        m.numeric_is_scaled.push_back(scaled ? 1 : 0);
    };
    for (int l : spec.short_lags) add_num("lag_" + std::to_string(l), true);
    for (int l : spec.seasonal_lags) add_num("lag_" + std::to_string(l), true);
    for (int w : spec.roll_windows) add_num("roll_mean_" + std::to_string(w), true);
    for (int w : spec.roll_windows) add_num("roll_median_" + std::to_string(w), true);
    for (int s : spec.ewm_spans) add_num("ewm_" + std::to_string(s), true);
    add_num("std_" + std::to_string(spec.std_window), true);
    add_num("iqr_" + std::to_string(spec.iqr_window), true);
    for (int k : spec.momentum_ks) add_num("momentum_" + std::to_string(k), true);
    add_num("slope_" + std::to_string(spec.slope_window), true);
    for (int k = 1; k <= spec.fourier_harmonics; ++k) {
        add_num("fourier_sin_" + std::to_string(k), false);
        add_num("fourier_cos_" + std::to_string(k), false);
    }
    add_num("last_year_window", true);
    add_num("seasonality_strength", false);
    add_num("robust_z", false);
    add_num("spike_flag", false);
    add_num("time_since_spike", false);
    add_num("nonzero_rate_" + std::to_string(spec.nonzero_rate_window), false);
    const std::size_t n_num = m.numeric_names.size();

    // Categorical level dictionaries, first-appearance order.
    std::map<std::string, std::int32_t> store_id, product_id;
    std::vector<std::int32_t> item_store(n_items), item_product(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        const auto& key = panel.items()[i];
        auto [si, s_new] = store_id.try_emplace(key.store, static_cast<std::int32_t>(m.store_levels.size()));
        if (s_new) m.store_levels.push_back(key.store);
        auto [pi, p_new] = product_id.try_emplace(key.product, static_cast<std::int32_t>(m.product_levels.size()));
        if (p_new) m.product_levels.push_back(key.product);
        item_store[i] = si->second;
        item_product[i] = pi->second;
        m.unique_levels.push_back(key.unique_id());
    }

    // Calendar columns shared by all items.
    std::vector<int> woy(n_weeks);
    std::vector<std::vector<double>> fourier(n_weeks,
                                             std::vector<double>(2 * static_cast<std::size_t>(spec.fourier_harmonics)));
    for (std::size_t w = 0; w < n_weeks; ++w) {
        woy[w] = panel.axis().week_of_year(w);
        const int wf = std::min(woy[w], spec.season_period); // keep the encoding periodic
        for (int k = 1; k <= spec.fourier_harmonics; ++k) {
            const double ang = 2.0 * std::numbers::pi * k * wf / spec.season_period;
            fourier[w][static_cast<std::size_t>(2 * (k - 1))] = std::sin(ang);
            fourier[w][static_cast<std::size_t>(2 * k - 1)] = std::cos(ang);
        }
    }

    m.n_rows = n_items * n_weeks;
    m.item.resize(m.n_rows);
    m.week.resize(m.n_rows);
    m.numeric.assign(m.n_rows * n_num, missing_value());
    m.categorical.resize(m.n_rows * m.categorical_names.size());
    m.scale_factor.resize(m.n_rows);
    m.observation_weight.resize(m.n_rows);
    m.targets.assign(static_cast<std::size_t>(spec.horizons), std::vector<double>(m.n_rows, missing_value()));

    const auto weights = observation_weights(n_weeks, spec);

    for (std::size_t i = 0; i < n_items; ++i) {
        const EffectiveSeries eff_series = panel.effective(i);
        const auto& eff = eff_series.values;
        const ScaleSeries scale = compute_scale_factor(eff_series, spec);
        const auto seas = seasonality_strength(eff_series, spec);
        const SpikeStats spikes = spike_stats(eff_series, spec);

        // Exponentially weighted means: recursive over valid observations,
        // state carried unchanged across masked weeks.
        std::vector<std::vector<double>> ewm(spec.ewm_spans.size(),
                                             std::vector<double>(n_weeks, missing_value()));
        for (std::size_t s = 0; s < spec.ewm_spans.size(); ++s) {
            const double alpha = 2.0 / (spec.ewm_spans[s] + 1.0);
            double state = missing_value();
            for (std::size_t w = 0; w < n_weeks; ++w) {
                if (!is_missing(eff[w]))
                    state = is_missing(state) ? eff[w] : (1.0 - alpha) * state + alpha * eff[w];
                ewm[s][w] = state;
            }
        }

        for (std::size_t w = 0; w < n_weeks; ++w) {
            const std::size_t row = i * n_weeks + w;
            m.item[row] = i;
            m.week[row] = static_cast<int>(w);
            const double sc = scale[w];
            m.scale_factor[row] = sc;
            m.observation_weight[row] = weights[w];

            std::int32_t* cat = &m.categorical[row * m.categorical_names.size()];
            cat[0] = item_store[i];
            cat[1] = item_product[i];
            cat[2] = static_cast<std::int32_t>(i);
            cat[3] = woy[w];

            double* num = &m.numeric[row * n_num];
            std::size_t col = 0;
            auto put = [&](double v) { num[col++] = v; };
            auto put_scaled = [&](double v) { num[col++] = is_missing(v) ? v : v / sc; };

            const int t = static_cast<int>(w);
            for (int l : spec.short_lags)
                put_scaled(t - l >= 0 ? eff[static_cast<std::size_t>(t - l)] : missing_value());
            for (int l : spec.seasonal_lags)
                put_scaled(t - l >= 0 ? eff[static_cast<std::size_t>(t - l)] : missing_value());

            for (int win : spec.roll_windows) {
                auto vals = window_values(eff, t - win + 1, t);
                if (vals.empty()) { put(missing_value()); continue; }
                double sum = 0.0;
                for (double v : vals) sum += v;
                put_scaled(sum / static_cast<double>(vals.size()));
            }
            for (int win : spec.roll_windows) {
                auto vals = window_values(eff, t - win + 1, t);
                if (vals.empty()) { put(missing_value()); continue; }
                put_scaled(median_of(vals));
            }

            for (std::size_t s = 0; s < spec.ewm_spans.size(); ++s) put_scaled(ewm[s][w]);

            {
                auto vals = window_values(eff, t - spec.std_window + 1, t);
                if (vals.size() < 2) {
                    put(missing_value());
                } else {
                    double mean = 0.0;
                    for (double v : vals) mean += v;
                    mean /= static_cast<double>(vals.size());
                    double ss = 0.0;
                    for (double v : vals) ss += (v - mean) * (v - mean);
                    put_scaled(std::sqrt(ss / static_cast<double>(vals.size() - 1)));
                }
            }
            {
                auto vals = window_values(eff, t - spec.iqr_window + 1, t);
                if (vals.size() < 2)
                    put(missing_value());
                else
                    put_scaled(quantile_of(vals, 0.75) - quantile_of(vals, 0.25));
            }

            for (int k : spec.momentum_ks) {
                const double cur = eff[w];
                const double past = t - k >= 0 ? eff[static_cast<std::size_t>(t - k)] : missing_value();
                put_scaled(is_missing(cur) || is_missing(past) ? missing_value() : cur - past);
            }

            {
                // Mean of valid one-week first differences over the window.
                double sum = 0.0;
                int cnt = 0;
                for (int j = 0; j < spec.slope_window; ++j) {
                    const int hi = t - j, lo = t - j - 1;
                    if (lo < 0) break;
                    const double a = eff[static_cast<std::size_t>(hi)];
                    const double b = eff[static_cast<std::size_t>(lo)];
                    if (!is_missing(a) && !is_missing(b)) {
                        sum += a - b;
                        ++cnt;
                    }
                }
                put_scaled(cnt > 0 ? sum / cnt : missing_value());
            }

            for (double f : fourier[w]) put(f);

            {
                const int center = t - spec.last_year_offset;
                auto vals = window_values(eff, center - spec.last_year_halfwidth,
                                          std::min(center + spec.last_year_halfwidth, t));
                if (vals.empty() || center + spec.last_year_halfwidth > t) {
                    put(missing_value());
                } else {
                    double sum = 0.0;
                    for (double v : vals) sum += v;
                    put_scaled(sum / static_cast<double>(vals.size()));
                }
            }

            put(seas[w]);
            put(spikes.robust_z[w]);
            put(is_missing(eff[w]) ? missing_value() : static_cast<double>(spikes.spike[w]));
            put(static_cast<double>(spikes.time_since_spike[w]));

            {
                auto vals = window_values(eff, t - spec.nonzero_rate_window + 1, t);
                if (vals.empty()) {
                    put(missing_value());
                } else {
                    int nz = 0;
                    for (double v : vals)
                        if (v != 0.0) ++nz;
                    put(static_cast<double>(nz) / static_cast<double>(vals.size()));
                }
            }

            for (int h = 1; h <= spec.horizons; ++h) {
                const std::size_t fw = w + static_cast<std::size_t>(h);
                if (fw < n_weeks && !is_missing(eff[fw]))
                    m.targets[static_cast<std::size_t>(h - 1)][row] = eff[fw] / sc;
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Imputation
// ---------------------------------------------------------------------------

Imputer Imputer::fit(const FeatureMatrix& matrix, int train_week_cutoff) {
    Imputer imp;
    imp.cutoff_ = train_week_cutoff;
    imp.feature_names_ = matrix.numeric_names;
    const std::size_t n_num = matrix.n_numeric();
    imp.series_medians_.resize(n_num);
    imp.global_medians_.resize(n_num, 0.0);

    for (std::size_t j = 0; j < n_num; ++j) {
        std::map<std::string, std::vector<double>> per_series;
        std::vector<double> pooled;
        for (std::size_t r = 0; r < matrix.n_rows; ++r) {
            if (matrix.week[r] > train_week_cutoff) continue;
            const double v = matrix.num(r, j);
            if (is_missing(v)) continue;
            per_series[matrix.unique_levels[matrix.item[r]]].push_back(v);
            pooled.push_back(v);
        }
        for (auto& [uid, vals] : per_series)
            imp.series_medians_[j][uid] = median_of(vals);
        if (pooled.empty())
            imp.fully_missing_.push_back(matrix.numeric_names[j]);
        else
            imp.global_medians_[j] = median_of(pooled);
    }
    return imp;
}

void Imputer::apply(FeatureMatrix& matrix) const {
    if (matrix.numeric_names != feature_names_)
        throw DataError("imputer fitted on a different feature set");
    const std::size_t n_num = matrix.n_numeric();
    for (std::size_t r = 0; r < matrix.n_rows; ++r) {
        const std::string& uid = matrix.unique_levels[matrix.item[r]];
        for (std::size_t j = 0; j < n_num; ++j) {
            double& v = matrix.num(r, j);
            if (!is_missing(v)) continue;
            const auto it = series_medians_[j].find(uid);
            v = it != series_medians_[j].end() ? it->second : global_medians_[j];
        }
    }
}

Imputer Imputer::from_parts(std::vector<std::string> feature_names,
                            std::vector<std::map<std::string, double>> series_medians,
                            std::vector<double> global_medians, int cutoff) {
    Imputer imp;
    imp.feature_names_ = std::move(feature_names);
    imp.series_medians_ = std::move(series_medians);
    imp.global_medians_ = std::move(global_medians);
    imp.cutoff_ = cutoff;
    return imp;
}

Imputer impute(FeatureMatrix& matrix, int train_week_cutoff) {
    Imputer imp = Imputer::fit(matrix, train_week_cutoff);
    imp.apply(matrix);
    return imp;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

void export_features_csv(const FeatureMatrix& matrix, const SalesPanel& panel,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);

    out << "Store,Product,unique_id,week_index,week_date,week_of_year";
    for (const auto& name : matrix.numeric_names) out << ',' << name;
    out << ",scale_factor,observation_weight";
    for (std::size_t h = 1; h <= matrix.targets.size(); ++h) out << ",target_h" << h;
    out << '\n';

    auto cell = [&out](double v) {
        out << ',';
        if (!is_missing(v)) out << format_number(v);
    };
    for (std::size_t r = 0; r < matrix.n_rows; ++r) {
        const auto& key = panel.items()[matrix.item[r]];
        const std::size_t w = static_cast<std::size_t>(matrix.week[r]);
        out << key.store << ',' << key.product << ',' << key.unique_id() << ','
            << matrix.week[r] << ',' << format_iso_date(panel.axis().date(w)) << ','
            << matrix.cat(r, 3);
        for (std::size_t j = 0; j < matrix.n_numeric(); ++j) cell(matrix.num(r, j));
        out << ',' << format_number(matrix.scale_factor[r]) << ','
            << format_number(matrix.observation_weight[r]);
        for (const auto& tgt : matrix.targets) cell(tgt[r]);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace stockcast
