#include "stockcast/pipeline.hpp"

#include "stockcast/csv.hpp"
#include "stockcast/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

namespace stockcast {

namespace {

std::vector<std::vector<long long>> sales_trace(const SalesPanel& panel, int first_week,
                                                int last_week) {
    std::vector<std::vector<long long>> trace;
    for (int w = first_week; w <= last_week; ++w) {
        std::vector<long long> row(panel.n_items());
        for (std::size_t i = 0; i < panel.n_items(); ++i)
            row[i] = std::llround(panel.sales(i, static_cast<std::size_t>(w)));
        trace.push_back(std::move(row));
    }
    return trace;
}

nlohmann::json costs_to_json(const CostParams& c) {
    return {{"shortage_cost", c.shortage_cost},
            {"holding_cost", c.holding_cost},
            {"lead_time_weeks", c.lead_time_weeks}};
}

CostParams costs_from_json(const nlohmann::json& j, CostParams base) {
    base.shortage_cost = j.value("shortage_cost", base.shortage_cost);
    base.holding_cost = j.value("holding_cost", base.holding_cost);
    base.lead_time_weeks = j.value("lead_time_weeks", base.lead_time_weeks);
    return base;
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base) {
    base.max_iterations = j.value("max_iterations", base.max_iterations);
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.max_depth = j.value("max_depth", base.max_depth);
    base.l2_leaf_reg = j.value("l2_leaf_reg", base.l2_leaf_reg);
    base.feature_subsample = j.value("feature_subsample", base.feature_subsample);
    base.row_subsample = j.value("row_subsample", base.row_subsample);
    base.min_samples_leaf = j.value("min_samples_leaf", base.min_samples_leaf);
    base.histogram_bins = j.value("histogram_bins", base.histogram_bins);
    base.early_stopping_rounds = j.value("early_stopping_rounds", base.early_stopping_rounds);
    base.cat_prior_strength = j.value("cat_prior_strength", base.cat_prior_strength);
    return base;
}

void range_from_json(const nlohmann::json& j, const char* key, HpoRange& range) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 2)
        throw ConfigError(std::string("hpo range '") + key + "' must be [lo, hi]");
    range.lo = arr[0].get<double>();
    range.hi = arr[1].get<double>();
}

HpoConfig hpo_from_json(const nlohmann::json& j, HpoConfig base) {
    base.trials = j.value("trials", base.trials);
    if (j.contains("max_depth")) {
        const auto& arr = j.at("max_depth");
        if (!arr.is_array() || arr.size() != 2)
            throw ConfigError("hpo range 'max_depth' must be [lo, hi]");
        base.max_depth_lo = arr[0].get<int>();
        base.max_depth_hi = arr[1].get<int>();
    }
    range_from_json(j, "learning_rate", base.learning_rate);
    range_from_json(j, "l2_leaf_reg", base.l2_leaf_reg);
    range_from_json(j, "feature_subsample", base.feature_subsample);
    range_from_json(j, "row_subsample", base.row_subsample);
    if (j.contains("min_samples_leaf")) {
        const auto& arr = j.at("min_samples_leaf");
        if (!arr.is_array() || arr.size() != 2)
            throw ConfigError("hpo range 'min_samples_leaf' must be [lo, hi]");
        base.min_samples_leaf_lo = arr[0].get<int>();
        base.min_samples_leaf_hi = arr[1].get<int>();
    }
    return base;
}

nlohmann::json hpo_to_json(const HpoConfig& h) {
    return {{"trials", h.trials},
            {"max_depth", {h.max_depth_lo, h.max_depth_hi}},
            {"learning_rate", {h.learning_rate.lo, h.learning_rate.hi}},
            {"l2_leaf_reg", {h.l2_leaf_reg.lo, h.l2_leaf_reg.hi}},
            {"feature_subsample", {h.feature_subsample.lo, h.feature_subsample.hi}},
            {"row_subsample", {h.row_subsample.lo, h.row_subsample.hi}},
            {"min_samples_leaf", {h.min_samples_leaf_lo, h.min_samples_leaf_hi}}};
}

SyntheticSpec synth_from_json(const nlohmann::json& j, SyntheticSpec base) {
    base.n_items = j.value("n_items", base.n_items);
    base.n_weeks = j.value("n_weeks", base.n_weeks);
    base.start_date = j.value("start_date", base.start_date);
    base.scale_lo = j.value("scale_lo", base.scale_lo);
    base.scale_hi = j.value("scale_hi", base.scale_hi);
    base.zero_prob_lo = j.value("zero_prob_lo", base.zero_prob_lo);
    base.zero_prob_hi = j.value("zero_prob_hi", base.zero_prob_hi);
    base.seasonal_amp_lo = j.value("seasonal_amp_lo", base.seasonal_amp_lo);
    base.seasonal_amp_hi = j.value("seasonal_amp_hi", base.seasonal_amp_hi);
    base.trend_lo = j.value("trend_lo", base.trend_lo);
    base.trend_hi = j.value("trend_hi", base.trend_hi);
    base.stockout_rate = j.value("stockout_rate", base.stockout_rate);
    base.delayed_start_prob = j.value("delayed_start_prob", base.delayed_start_prob);
    return base;
}

nlohmann::json synth_to_json(const SyntheticSpec& s) {
    return {{"n_items", s.n_items},
            {"n_weeks", s.n_weeks},
            {"start_date", s.start_date},
            {"scale_lo", s.scale_lo},
            {"scale_hi", s.scale_hi},
            {"zero_prob_lo", s.zero_prob_lo},
            {"zero_prob_hi", s.zero_prob_hi},
            {"seasonal_amp_lo", s.seasonal_amp_lo},
            {"seasonal_amp_hi", s.seasonal_amp_hi},
            {"trend_lo", s.trend_lo},
            {"trend_hi", s.trend_hi},
            {"stockout_rate", s.stockout_rate},
            {"delayed_start_prob", s.delayed_start_prob}};
}

} // namespace

RunConfig::RunConfig() : phi_grid(default_phi_grid()) {}

int RunConfig::effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.sales_path = j.value("sales", cfg.sales_path);
    cfg.flags_path = j.value("flags", cfg.flags_path);
    cfg.inventory_path = j.value("inventory", cfg.inventory_path);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.phi = j.value("phi", cfg.phi);
    if (j.contains("costs")) cfg.costs = costs_from_json(j.at("costs"), cfg.costs);
    if (j.contains("split")) {
        cfg.split.test_holdout_weeks =
            j.at("split").value("test_holdout_weeks", cfg.split.test_holdout_weeks);
        cfg.split.valid_fraction_of_train =
            j.at("split").value("valid_fraction_of_train", cfg.split.valid_fraction_of_train);
    }
    if (j.contains("features")) j.at("features").get_to(cfg.features);
    if (j.contains("hpo")) cfg.hpo = hpo_from_json(j.at("hpo"), cfg.hpo);
    if (j.contains("train")) cfg.train_base = train_from_json(j.at("train"), cfg.train_base);
    if (j.contains("phi_grid")) {
        const auto& g = j.at("phi_grid");
        if (g.is_array()) {
            cfg.phi_grid = g.get<std::vector<double>>();
        } else {
            const double lo = g.value("lo", 0.0);
            const double hi = g.value("hi", 3.0);
            const double step = g.value("step", 0.05);
            if (!(step > 0.0) || hi < lo) throw ConfigError("bad phi_grid specification");
            cfg.phi_grid.clear();
            for (double v = lo; v <= hi + 1e-12; v += step) cfg.phi_grid.push_back(v);
        }
    }
    cfg.benchmark_coverage_weeks =
        j.value("benchmark_coverage_weeks", cfg.benchmark_coverage_weeks);
    cfg.simulate_rounds = j.value("simulate_rounds", cfg.simulate_rounds);
    if (j.contains("synth")) cfg.synth = synth_from_json(j.at("synth"), cfg.synth);

    // One root seed governs every stochastic component.
    cfg.hpo.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
    cfg.train_base.seed = cfg.seed;
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["sales"] = sales_path;
    j["flags"] = flags_path;
    j["inventory"] = inventory_path;
    j["out"] = out_dir;
    j["seed"] = seed;
    j["threads"] = threads;
    j["phi"] = phi;
    j["costs"] = costs_to_json(costs);
    j["split"] = {{"test_holdout_weeks", split.test_holdout_weeks},
                  {"valid_fraction_of_train", split.valid_fraction_of_train}};
    j["features"] = features;
    j["hpo"] = hpo_to_json(hpo);
    nlohmann::json train;
    stockcast::to_json(train, train_base);
    j["train"] = std::move(train);
    j["phi_grid"] = phi_grid;
    j["benchmark_coverage_weeks"] = benchmark_coverage_weeks;
    j["simulate_rounds"] = simulate_rounds;
    j["synth"] = synth_to_json(synth);
    return j;
}

// ---------------------------------------------------------------------------
// Hashing / manifests
// ---------------------------------------------------------------------------

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a_string(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::uint64_t panel_content_hash(const SalesPanel& panel) {
    std::string blob;
    for (const auto& key : panel.items())
        blob += key.store + "\x1f" + key.product + "\x1e";
    for (std::size_t w = 0; w < panel.n_weeks(); ++w)
        blob += format_iso_date(panel.axis().date(w)) + "\x1e";
    for (std::size_t i = 0; i < panel.n_items(); ++i)
        for (std::size_t w = 0; w < panel.n_weeks(); ++w) {
            blob += format_number(panel.sales(i, w));
            blob += panel.in_stock(i, w) ? "|1" : "|0";
            blob += '\x1e';
        }
    return fnv1a_string(blob);
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::map<std::string, std::string>& input_files,
                    const SalesPanel* panel) {
    nlohmann::json j;
    j["config"] = cfg.to_json();
    j["config_hash"] = hash_hex(fnv1a_string(cfg.to_json().dump()));
    j["seed"] = cfg.seed;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [label, file] : input_files)
        inputs[label] = {{"path", file}, {"fnv1a64", hash_hex(fnv1a_file(file))}};
    j["inputs"] = std::move(inputs);
    if (panel != nullptr) j["panel_hash"] = hash_hex(panel_content_hash(*panel));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Orchestrated runs
// ---------------------------------------------------------------------------

namespace {

struct TrainedStages {
    FeatureMatrix matrix;
    Imputer imputer;
    std::array<TrainConfig, kHorizons> best_configs;
    std::array<int, kHorizons> best_iterations;
    std::array<double, kHorizons> best_maes;
    std::array<SplitDatasets, kHorizons> data;
    SplitBounds bounds;
};

// Shared front half: features, imputation, and per-horizon HPO. Backtests
// impute with medians up to the train boundary; live runs use all history.
TrainedStages run_hpo_stages(const SalesPanel& panel, const RunConfig& cfg, bool live) {
    TrainedStages st;
    FeatureSpec fs = cfg.features;
    fs.horizons = kHorizons;
    st.bounds = split_bounds(panel.n_weeks(), cfg.split);
    const int cutoff = live ? static_cast<int>(panel.n_weeks()) - 1 : st.bounds.train_end;
    st.matrix = build_features(panel, fs);
    st.imputer = impute(st.matrix, cutoff);

    HpoConfig hpo = cfg.hpo;
    hpo.seed = cfg.seed;
    TrainConfig base = cfg.train_base;
    const int threads = cfg.effective_threads();
    for (int h = 1; h <= kHorizons; ++h) {
        st.data[static_cast<std::size_t>(h - 1)] =
            assemble_dataset(st.matrix, h, cfg.split);
        const HpoResult res = hpo_search(st.data[static_cast<std::size_t>(h - 1)], hpo,
                                         base, h, threads);
        st.best_configs[static_cast<std::size_t>(h - 1)] = res.best;
        st.best_iterations[static_cast<std::size_t>(h - 1)] = res.best_iteration;
        st.best_maes[static_cast<std::size_t>(h - 1)] = res.best_mae;
    }
    return st;
}

CostLedger replay_window(const SalesPanel& panel, const CostParams& costs,
                         int window_start, int window_end,
                         const InventorySnapshot& init, const OrderingPolicy& policy) {
    const int rounds = window_end - window_start + 1 - costs.lead_time_weeks;
    if (rounds < 1) throw DataError("replay window shorter than lead_time + 1 weeks");
    const auto trace = sales_trace(panel, window_start, window_end);
    return run_episode(trace, init, policy, costs, rounds);
}

} // namespace

BacktestArtifacts run_backtest(const SalesPanel& panel, const RunConfig& cfg,
                               bool write_files) {
    cfg.costs.validate();
    const int threads = cfg.effective_threads();
    TrainedStages st = run_hpo_stages(panel, cfg, /*live=*/false);

    BacktestArtifacts art;
    art.bounds = st.bounds;
    art.best_configs = st.best_configs;
    art.best_iterations = st.best_iterations;
    art.best_maes = st.best_maes;

    // phi is calibrated on the validation window with train-only models, the
    // same fits the HPO winner produced.
    std::array<Ensemble, kHorizons> phi_models;
    for (std::size_t h = 0; h < static_cast<std::size_t>(kHorizons); ++h)
        phi_models[h] = fit(st.data[h].train, st.data[h].valid, st.best_configs[h], threads);
    const InventorySnapshot init =
        InventorySnapshot::zero(panel.n_items(), cfg.costs.lead_time_weeks);
    art.calibration =
        calibrate_phi(panel, phi_models, st.matrix, init, cfg.costs,
                      st.bounds.train_end + 1, st.bounds.valid_end, cfg.phi_grid);

    FinalFit final_fit = fit_final(st.matrix, cfg.split, st.best_configs,
                                   st.best_iterations, FitMode::backtest, threads);
    art.forecast_report = final_fit.report;

    // Holdout replay, both policies from the same zero starting position.
    const int window_start = st.bounds.valid_end + 1;
    const int window_end = st.bounds.test_end;
    const int rounds = window_end - window_start + 1 - cfg.costs.lead_time_weeks;
    std::vector<ForecastSet> epoch_fc;
    for (int t = 0; t < rounds; ++t)
        epoch_fc.push_back(postprocess(
            predict_horizons(final_fit.models, st.matrix, window_start + t - 1)));
    const PolicyParams params = PolicyParams::make(cfg.costs, art.calibration.phi);
    const CostLedger policy_ledger =
        replay_window(panel, cfg.costs, window_start, window_end, init,
                      [&](const SimState& state, int week) {
                          return policy_orders(
                              state, epoch_fc[static_cast<std::size_t>(week)], params);
                      });
    const CostLedger bench_ledger =
        replay_window(panel, cfg.costs, window_start, window_end, init,
                      [&](const SimState& state, int week) {
                          const ForecastSet bl =
                              baseline_seasonal_ma(panel, window_start + week - 1);
                          return benchmark_coverage_policy(bl, state,
                                                           cfg.benchmark_coverage_weeks);
                      });
    art.policy_cost = total_cost(policy_ledger);
    art.benchmark_cost = total_cost(bench_ledger);
    art.delta_pct = art.benchmark_cost > 0.0
                        ? 100.0 * (art.benchmark_cost - art.policy_cost) / art.benchmark_cost
                        : 0.0;

    if (write_files) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        const fs::path out(cfg.out_dir);
        std::ofstream summary(out / "summary.json", std::ios::binary);
        if (!summary) throw DataError("cannot write summary.json");
        summary << backtest_summary_json(art, cfg, panel).dump(2) << '\n';
        save_phi_curve_csv(art.calibration, (out / "phi_curve.csv").string());
        write_episode_report(policy_ledger, panel.items(),
                             (out / "episode_policy.csv").string());
        write_episode_report(bench_ledger, panel.items(),
                             (out / "episode_benchmark.csv").string());
    }
    return art;
}

TrainArtifacts run_train_live(const SalesPanel& panel, const RunConfig& cfg) {
    cfg.costs.validate();
    const int threads = cfg.effective_threads();
    TrainedStages st = run_hpo_stages(panel, cfg, /*live=*/true);

    FinalFit final_fit = fit_final(st.matrix, cfg.split, st.best_configs,
                                   st.best_iterations, FitMode::live, threads);
    TrainArtifacts art;
    FeatureSpec fs = cfg.features;
    fs.horizons = kHorizons;
    art.bundle.feature_spec = fs;
    art.bundle.imputer = st.imputer;
    art.bundle.models = std::move(final_fit.models);
    art.best_configs = st.best_configs;
    art.best_iterations = st.best_iterations;
    art.best_maes = st.best_maes;
    return art;
}

nlohmann::json backtest_summary_json(const BacktestArtifacts& art, const RunConfig& cfg,
                                     const SalesPanel& panel) {
    const PanelDiagnostics diag = panel_diagnostics(panel);
    nlohmann::json j;
    j["split"] = {{"train_end", art.bounds.train_end},
                  {"valid_end", art.bounds.valid_end},
                  {"test_end", art.bounds.test_end}};
    nlohmann::json horizons = nlohmann::json::array();
    for (std::size_t h = 0; h < static_cast<std::size_t>(kHorizons); ++h) {
        nlohmann::json cfg_json;
        to_json(cfg_json, art.best_configs[h]);
        horizons.push_back({{"horizon", h + 1},
                            {"config", std::move(cfg_json)},
                            {"best_iteration", art.best_iterations[h]},
                            {"valid_mae", art.best_maes[h]},
                            {"holdout_mae", art.forecast_report.mae[h]},
                            {"holdout_bias", art.forecast_report.bias[h]},
                            {"holdout_rows", art.forecast_report.rows[h]}});
    }
    j["horizons"] = std::move(horizons);
    j["holdout_mae_overall"] = art.forecast_report.mae_overall;
    j["phi"] = art.calibration.phi;
    j["policy_cost"] = art.policy_cost;
    j["benchmark_cost"] = art.benchmark_cost;
    j["cost_reduction_pct"] = art.delta_pct;
    j["costs"] = costs_to_json(cfg.costs);
    j["benchmark"] = {{"forecast", "seasonal 13-week moving average (reconstruction)"},
                      {"coverage_weeks", cfg.benchmark_coverage_weeks},
                      {"in_transit_counted", true}};
    j["panel"] = {{"n_items", diag.n_items},
                  {"n_weeks", diag.n_weeks},
                  {"zero_rate", diag.zero_rate},
                  {"stockout_rate", diag.stockout_rate}};
    return j;
}

void save_phi_curve_csv(const CalibrationResult& calibration, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << "phi,total_cost\n";
    for (const auto& p : calibration.curve)
        out << format_number(p.phi) << ',' << format_number(p.cost) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

} // namespace stockcast
