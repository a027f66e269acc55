#include "stockcast/forecast.hpp"

#include "stockcast/csv.hpp"
#include "stockcast/dates.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/parallel.hpp"
#include "stockcast/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace stockcast {

namespace {

std::size_t matrix_weeks(const FeatureMatrix& m) {
    if (m.unique_levels.empty() || m.n_rows % m.unique_levels.size() != 0)
        throw DataError("feature matrix is not dense item-major");
    return m.n_rows / m.unique_levels.size();
}

// Copy selected matrix rows into a gbdt Dataset; horizon 0 carries no target.
Dataset dataset_from_rows(const FeatureMatrix& m, const std::vector<std::size_t>& rows,
                          int horizon) {
    Dataset d;
    d.numeric_names = m.numeric_names;
    d.categorical_names = m.categorical_names;
    d.n_rows = rows.size();
    d.numeric.reserve(rows.size() * m.n_numeric());
    d.categorical.reserve(rows.size() * m.categorical_names.size());
    if (horizon > 0) d.target.reserve(rows.size());
    d.weight.reserve(rows.size());
    for (std::size_t r : rows) {
        for (std::size_t j = 0; j < m.n_numeric(); ++j) d.numeric.push_back(m.num(r, j));
        for (std::size_t j = 0; j < m.categorical_names.size(); ++j)
            d.categorical.push_back(m.cat(r, j));
        if (horizon > 0)
            d.target.push_back(m.targets[static_cast<std::size_t>(horizon - 1)][r]);
        d.weight.push_back(m.observation_weight[r]);
    }
    return d;
}

// Training rows only: floor-scaled rows are excluded for the same reason as
// in assemble_dataset.
std::vector<std::size_t> trainable_rows(const FeatureMatrix& m, int horizon,
                                        int max_week) {
    std::vector<std::size_t> rows;
    const auto& tgt = m.targets[static_cast<std::size_t>(horizon - 1)];
    for (std::size_t r = 0; r < m.n_rows; ++r)
        if (!is_missing(tgt[r]) && m.week[r] <= max_week &&
            m.scale_factor[r] > m.scale_floor)
            rows.push_back(r);
    return rows;
}

double mean_abs_error(const std::vector<double>& pred, const Dataset& d,
                      const std::vector<double>& scale) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::abs(pred[i] * scale[i] - d.target[i] * scale[i]);
    return pred.empty() ? 0.0 : acc / static_cast<double>(pred.size());
}

} // namespace

void SplitSpec::validate() const {
    if (test_holdout_weeks < 1) throw ConfigError("test_holdout_weeks must be >= 1");
    if (!(valid_fraction_of_train > 0.0 && valid_fraction_of_train < 1.0))
        throw ConfigError("valid_fraction_of_train must be in (0, 1)");
}

void HpoConfig::validate() const {
    if (trials < 1) throw ConfigError("hpo trials must be >= 1");
    auto range = [](double lo, double hi, const char* what) {
        if (!(lo > 0.0) || !(hi >= lo))
            throw ConfigError(std::string("bad hpo range for ") + what);
    };
    if (max_depth_lo < 1 || max_depth_hi < max_depth_lo)
        throw ConfigError("bad hpo range for max_depth");
    range(learning_rate.lo, learning_rate.hi, "learning_rate");
    range(l2_leaf_reg.lo, l2_leaf_reg.hi, "l2_leaf_reg");
    range(feature_subsample.lo, feature_subsample.hi, "feature_subsample");
    range(row_subsample.lo, row_subsample.hi, "row_subsample");
    if (min_samples_leaf_lo < 1 || min_samples_leaf_hi < min_samples_leaf_lo)
        throw ConfigError("bad hpo range for min_samples_leaf");
}

SplitBounds split_bounds(std::size_t n_weeks, const SplitSpec& split) {
    split.validate();
    const int total = static_cast<int>(n_weeks);
    const int pre_test = total - split.test_holdout_weeks;
    if (pre_test < 2) throw DataError("panel too short for the requested holdout");
    const int valid_weeks = static_cast<int>(
        std::ceil(split.valid_fraction_of_train * static_cast<double>(pre_test)));
    SplitBounds b;
    b.test_end = total - 1;
    b.valid_end = pre_test - 1;
    b.train_end = pre_test - valid_weeks - 1;
    if (b.train_end < 0) throw DataError("empty train partition");
    return b;
}

SplitDatasets assemble_dataset(const FeatureMatrix& matrix, int horizon,
                               const SplitSpec& split) {
    if (horizon < 1 || horizon > static_cast<int>(matrix.targets.size()))
        throw ConfigError("horizon out of range");
    SplitDatasets out;
    out.bounds = split_bounds(matrix_weeks(matrix), split);

    std::vector<std::size_t> train_rows, valid_rows, test_rows;
    const auto& tgt = matrix.targets[static_cast<std::size_t>(horizon - 1)];
    for (std::size_t r = 0; r < matrix.n_rows; ++r) {
        if (is_missing(tgt[r])) continue;
        const int w = matrix.week[r];
        if (w <= out.bounds.train_end) {
            // Floor-scaled rows (no usable sales history yet) put raw-unit
            // targets on a normalized objective and wreck the fit; keep them
            // out of training but score them like any other row.
            if (matrix.scale_factor[r] > matrix.scale_floor) train_rows.push_back(r);
        } else if (w <= out.bounds.valid_end) {
            valid_rows.push_back(r);
        } else {
            test_rows.push_back(r);
        }
    }
    if (train_rows.empty()) throw DataError("empty train partition");

    out.train = dataset_from_rows(matrix, train_rows, horizon);
    out.valid = dataset_from_rows(matrix, valid_rows, horizon);
    out.test = dataset_from_rows(matrix, test_rows, horizon);
    for (std::size_t r : valid_rows) out.valid_scale.push_back(matrix.scale_factor[r]);
    for (std::size_t r : test_rows) out.test_scale.push_back(matrix.scale_factor[r]);
    out.valid_matrix_rows = std::move(valid_rows);
    out.test_matrix_rows = std::move(test_rows);
    return out;
}

HpoResult hpo_search(const SplitDatasets& data, const HpoConfig& hpo,
                     const TrainConfig& base, int horizon, int n_threads) {
    hpo.validate();
    if (data.valid.n_rows == 0) throw DataError("hpo_search: empty validation partition");

    Rng rng = Rng::substream(hpo.seed, "hpo", static_cast<std::uint64_t>(horizon));
    std::vector<TrainConfig> configs(static_cast<std::size_t>(hpo.trials), base);
    for (int t = 0; t < hpo.trials; ++t) {
        TrainConfig& c = configs[static_cast<std::size_t>(t)];
        c.max_depth = static_cast<int>(rng.uniform_int(hpo.max_depth_lo, hpo.max_depth_hi));
        c.learning_rate = rng.log_uniform(hpo.learning_rate.lo, hpo.learning_rate.hi);
        c.l2_leaf_reg = rng.log_uniform(hpo.l2_leaf_reg.lo, hpo.l2_leaf_reg.hi);
        c.feature_subsample = rng.uniform(hpo.feature_subsample.lo, hpo.feature_subsample.hi);
        c.row_subsample = rng.uniform(hpo.row_subsample.lo, hpo.row_subsample.hi);
        c.min_samples_leaf = std::clamp(
            static_cast<int>(std::llround(rng.log_uniform(
                static_cast<double>(hpo.min_samples_leaf_lo),
                static_cast<double>(hpo.min_samples_leaf_hi)))),
            hpo.min_samples_leaf_lo, hpo.min_samples_leaf_hi);
        c.early_stopping_rounds = std::min(c.early_stopping_rounds, c.max_iterations);
        c.seed = Rng::derive(hpo.seed, "gbdt",
                             static_cast<std::uint64_t>(horizon) * 1000003u +
                                 static_cast<std::uint64_t>(t));
        c.validate();
    }

    HpoResult result;
    result.trials.resize(static_cast<std::size_t>(hpo.trials));
    parallel_for(static_cast<std::size_t>(hpo.trials), n_threads, [&](std::size_t t) {
        const Ensemble model = fit(data.train, data.valid, configs[t], 1);
        const std::vector<double> pred = predict(model, data.valid);
        result.trials[t] = {configs[t], mean_abs_error(pred, data.valid, data.valid_scale),
                            std::max(1, model.best_iteration)};
    });

    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < hpo.trials; ++t) {
        const TrialResult& tr = result.trials[static_cast<std::size_t>(t)];
        if (tr.valid_mae < best) { // strict: ties keep the earlier trial
            best = tr.valid_mae;
            result.best_trial = t;
        }
    }
    const TrialResult& win = result.trials[static_cast<std::size_t>(result.best_trial)];
    result.best = win.config;
    result.best_iteration = win.best_iteration;
    result.best_mae = win.valid_mae;
    return result;
}

FinalFit fit_final(const FeatureMatrix& matrix, const SplitSpec& split,
                   const std::array<TrainConfig, kHorizons>& configs,
                   const std::array<int, kHorizons>& iterations, FitMode mode,
                   int n_threads) {
    const std::size_t n_weeks = matrix_weeks(matrix);
    const SplitBounds bounds = split_bounds(n_weeks, split);
    const int fit_cutoff =
        mode == FitMode::backtest ? bounds.valid_end : static_cast<int>(n_weeks) - 1;

    FinalFit out;
    double abs_sum = 0.0;
    std::size_t row_sum = 0;
    for (int h = 1; h <= kHorizons; ++h) {
        TrainConfig cfg = configs[static_cast<std::size_t>(h - 1)];
        cfg.max_iterations = std::max(1, iterations[static_cast<std::size_t>(h - 1)]);
        cfg.early_stopping_rounds = std::min(cfg.early_stopping_rounds, cfg.max_iterations);

        const auto rows = trainable_rows(matrix, h, fit_cutoff);
        const Dataset train = dataset_from_rows(matrix, rows, h);
        Ensemble model = fit(train, Dataset{}, cfg, n_threads);

        if (mode == FitMode::backtest) {
            std::vector<std::size_t> test_rows;
            const auto& tgt = matrix.targets[static_cast<std::size_t>(h - 1)];
            for (std::size_t r = 0; r < matrix.n_rows; ++r)
                if (!is_missing(tgt[r]) && matrix.week[r] > bounds.valid_end)
                    test_rows.push_back(r);
            const Dataset test = dataset_from_rows(matrix, test_rows, h);
            const std::vector<double> pred = predict(model, test);
            double abs_err = 0.0, err = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double s = matrix.scale_factor[test_rows[i]];
                const double d = pred[i] * s - test.target[i] * s;
                abs_err += std::abs(d);
                err += d;
            }
            const auto n = static_cast<double>(std::max<std::size_t>(1, pred.size()));
            out.report.mae[static_cast<std::size_t>(h - 1)] = abs_err / n;
            out.report.bias[static_cast<std::size_t>(h - 1)] = err / n;
            out.report.rows[static_cast<std::size_t>(h - 1)] = pred.size();
            abs_sum += abs_err;
            row_sum += pred.size();
        }
        out.models[static_cast<std::size_t>(h - 1)] = std::move(model);
    }
    if (mode == FitMode::backtest) {
        out.report.mae_overall =
            abs_sum / static_cast<double>(std::max<std::size_t>(1, row_sum));
        out.has_report = true;
    }
    return out;
}

ForecastSet predict_horizons(const std::array<Ensemble, kHorizons>& models,
                             const FeatureMatrix& matrix, int decision_week) {
    const std::size_t n_weeks = matrix_weeks(matrix);
    if (decision_week < 0 || decision_week >= static_cast<int>(n_weeks))
        throw DataError("predict_horizons: no feature rows at decision week");
    const std::size_t n_items = matrix.unique_levels.size();

    std::vector<std::size_t> rows(n_items);
    for (std::size_t i = 0; i < n_items; ++i)
        rows[i] = i * n_weeks + static_cast<std::size_t>(decision_week);
    const Dataset d = dataset_from_rows(matrix, rows, 0);

    ForecastSet fs;
    fs.decision_week = decision_week;
    fs.values.assign(n_items, {});
    for (int h = 1; h <= kHorizons; ++h) {
        const auto pred = predict(models[static_cast<std::size_t>(h - 1)], d);
        for (std::size_t i = 0; i < n_items; ++i)
            fs.values[i][static_cast<std::size_t>(h - 1)] =
                pred[i] * matrix.scale_factor[rows[i]];
    }
    return fs;
}

ForecastSet postprocess(const ForecastSet& forecasts) {
    ForecastSet out = forecasts;
    for (auto& item : out.values)
        for (double& v : item) v = std::max(std::floor(v + 0.5), 0.0);
    return out;
}

ForecastSet baseline_seasonal_ma(const SalesPanel& panel, int decision_week) {
    const int t = decision_week;
    if (t < 0 || t >= static_cast<int>(panel.n_weeks()))
        throw DataError("baseline: decision week outside the panel");
    if (t + 1 < 13) throw DataError("baseline: needs at least 13 weeks of history");

    std::vector<int> woy(static_cast<std::size_t>(t) + 1);
    for (int w = 0; w <= t; ++w)
        woy[static_cast<std::size_t>(w)] = panel.axis().week_of_year(static_cast<std::size_t>(w));

    ForecastSet fs;
    fs.decision_week = t;
    fs.values.assign(panel.n_items(), {});
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        const EffectiveSeries eff = panel.effective(i);

        double base = 0.0;
        int base_n = 0;
        for (int w = std::max(0, t - 12); w <= t; ++w)
            if (!is_missing(eff.values[static_cast<std::size_t>(w)])) {
                base += eff.values[static_cast<std::size_t>(w)];
                ++base_n;
            }
        base = base_n > 0 ? base / base_n : 0.0;

        double overall = 0.0;
        int overall_n = 0;
        std::array<double, 54> woy_sum{};
        std::array<int, 54> woy_n{};
        for (int w = 0; w <= t; ++w) {
            const double v = eff.values[static_cast<std::size_t>(w)];
            if (is_missing(v)) continue;
            overall += v;
            ++overall_n;
            woy_sum[static_cast<std::size_t>(woy[static_cast<std::size_t>(w)])] += v;
            ++woy_n[static_cast<std::size_t>(woy[static_cast<std::size_t>(w)])];
        }
        const double overall_mean = overall_n > 0 ? overall / overall_n : 0.0;

        for (int h = 1; h <= kHorizons; ++h) {
            const int target_woy =
                iso_week(panel.axis().date(static_cast<std::size_t>(t)) + 7 * h);
            double index = 1.0;
            if (overall_mean > 0.0 && woy_n[static_cast<std::size_t>(target_woy)] > 0)
                index = woy_sum[static_cast<std::size_t>(target_woy)] /
                        woy_n[static_cast<std::size_t>(target_woy)] / overall_mean;
            fs.values[i][static_cast<std::size_t>(h - 1)] = base * index;
        }
    }
    return fs;
}

void save_forecasts_csv(const ForecastSet& forecasts, const SalesPanel& panel,
                        const std::string& path) {
    if (forecasts.n_items() != panel.n_items())
        throw DataError("forecast/panel item count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << "Store,Product,decision_week,h1,h2,h3\n";
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        const auto& key = panel.items()[i];
        out << key.store << ',' << key.product << ',' << forecasts.decision_week;
        for (double v : forecasts.values[i]) out << ',' << format_number(v);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const FeatureSpec& spec) {
    j = {{"short_lags", spec.short_lags},
         {"seasonal_lags", spec.seasonal_lags},
         {"roll_windows", spec.roll_windows},
         {"ewm_spans", spec.ewm_spans},
         {"std_window", spec.std_window},
         {"iqr_window", spec.iqr_window},
         {"momentum_ks", spec.momentum_ks},
         {"slope_window", spec.slope_window},
         {"fourier_harmonics", spec.fourier_harmonics},
         {"season_period", spec.season_period},
         {"spike_window", spec.spike_window},
         {"spike_z_threshold", spec.spike_z_threshold},
         {"time_since_spike_cap", spec.time_since_spike_cap},
         {"nonzero_rate_window", spec.nonzero_rate_window},
         {"seasonality_window", spec.seasonality_window},
         {"seasonality_min_pairs", spec.seasonality_min_pairs},
         {"last_year_offset", spec.last_year_offset},
         {"last_year_halfwidth", spec.last_year_halfwidth},
         {"warmstart_min_obs", spec.warmstart_min_obs},
         {"scale_window", spec.scale_window},
         {"scale_floor", spec.scale_floor},
         {"decay_factor", spec.decay_factor},
         {"decay_block_weeks", spec.decay_block_weeks},
         {"horizons", spec.horizons}};
}

void from_json(const nlohmann::json& j, FeatureSpec& spec) {
    FeatureSpec defaults;
    spec.short_lags = j.value("short_lags", defaults.short_lags);
    spec.seasonal_lags = j.value("seasonal_lags", defaults.seasonal_lags);
    spec.roll_windows = j.value("roll_windows", defaults.roll_windows);
    spec.ewm_spans = j.value("ewm_spans", defaults.ewm_spans);
    spec.std_window = j.value("std_window", defaults.std_window);
    spec.iqr_window = j.value("iqr_window", defaults.iqr_window);
    spec.momentum_ks = j.value("momentum_ks", defaults.momentum_ks);
    spec.slope_window = j.value("slope_window", defaults.slope_window);
    spec.fourier_harmonics = j.value("fourier_harmonics", defaults.fourier_harmonics);
    spec.season_period = j.value("season_period", defaults.season_period);
    spec.spike_window = j.value("spike_window", defaults.spike_window);
    spec.spike_z_threshold = j.value("spike_z_threshold", defaults.spike_z_threshold);
    spec.time_since_spike_cap = j.value("time_since_spike_cap", defaults.time_since_spike_cap);
    spec.nonzero_rate_window = j.value("nonzero_rate_window", defaults.nonzero_rate_window);
    spec.seasonality_window = j.value("seasonality_window", defaults.seasonality_window);
    spec.seasonality_min_pairs =
        j.value("seasonality_min_pairs", defaults.seasonality_min_pairs);
    spec.last_year_offset = j.value("last_year_offset", defaults.last_year_offset);
    spec.last_year_halfwidth = j.value("last_year_halfwidth", defaults.last_year_halfwidth);
    spec.warmstart_min_obs = j.value("warmstart_min_obs", defaults.warmstart_min_obs);
    spec.scale_window = j.value("scale_window", defaults.scale_window);
    spec.scale_floor = j.value("scale_floor", defaults.scale_floor);
    spec.decay_factor = j.value("decay_factor", defaults.decay_factor);
    spec.decay_block_weeks = j.value("decay_block_weeks", defaults.decay_block_weeks);
    spec.horizons = j.value("horizons", defaults.horizons);
}

nlohmann::json imputer_to_json(const Imputer& imputer) {
    nlohmann::json j;
    j["cutoff"] = imputer.cutoff();
    j["feature_names"] = imputer.feature_names();
    j["global_medians"] = imputer.global_medians();
    nlohmann::json per_series = nlohmann::json::array();
    for (const auto& table : imputer.series_medians()) {
        nlohmann::json entry = nlohmann::json::object();
        for (const auto& [uid, v] : table) entry[uid] = v;
        per_series.push_back(std::move(entry));
    }
    j["series_medians"] = std::move(per_series);
    return j;
}

Imputer imputer_from_json(const nlohmann::json& j) {
    std::vector<std::string> names = j.at("feature_names");
    std::vector<double> globals = j.at("global_medians");
    std::vector<std::map<std::string, double>> series;
    for (const auto& entry : j.at("series_medians")) {
        std::map<std::string, double> table;
        for (auto it = entry.begin(); it != entry.end(); ++it)
            table[it.key()] = it.value().get<double>();
        series.push_back(std::move(table));
    }
    if (globals.size() != names.size() || series.size() != names.size())
        throw DataError("corrupt imputer serialization");
    return Imputer::from_parts(std::move(names), std::move(series), std::move(globals),
                               j.at("cutoff").get<int>());
}

nlohmann::json bundle_to_json(const ModelBundle& bundle) {
    nlohmann::json j;
    j["format"] = "stockcast-bundle";
    j["version"] = 1;
    j["feature_spec"] = bundle.feature_spec;
    j["imputer"] = imputer_to_json(bundle.imputer);
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : bundle.models) models.push_back(ensemble_to_json(m));
    j["models"] = std::move(models);
    return j;
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "stockcast-bundle")
        throw DataError("not a stockcast model bundle");
    ModelBundle b;
    j.at("feature_spec").get_to(b.feature_spec);
    b.imputer = imputer_from_json(j.at("imputer"));
    const auto& models = j.at("models");
    if (models.size() != static_cast<std::size_t>(kHorizons))
        throw DataError("bundle must hold 3 horizon models");
    for (std::size_t h = 0; h < static_cast<std::size_t>(kHorizons); ++h)
        b.models[h] = ensemble_from_json(models[h]);
    return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << bundle_to_json(bundle).dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad model bundle: ") + e.what());
    }
    return bundle_from_json(j);
}

} // namespace stockcast
