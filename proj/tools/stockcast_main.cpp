// stockcast command line: ingest, synth, features, train, forecast,
// calibrate, backtest, simulate, compare. One JSON config plus targeted
// flag overrides; exit codes 0 ok, 1 data error, 2 config error, 3 internal.
#include "stockcast/csv.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/features.hpp"
#include "stockcast/forecast.hpp"
#include "stockcast/panel.hpp"
#include "stockcast/pipeline.hpp"
#include "stockcast/policy.hpp"
#include "stockcast/simulator.hpp"
#include "stockcast/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace stockcast;

namespace {

// Flag values shared by every subcommand; unset optionals fall back to the
// config file, which falls back to built-in defaults.
struct Common {
    std::string config_path;
    std::optional<std::string> sales, flags, inventory, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<double> phi;
};

void add_common(CLI::App* cmd, Common& c, bool with_data = true) {
    cmd->add_option("--config", c.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "root RNG seed override");
    cmd->add_option("--threads", c.threads, "worker threads (<=0: all cores)");
    cmd->add_option("--out", c.out, "output directory");
    if (with_data) {
        cmd->add_option("--sales", c.sales, "wide sales CSV");
        cmd->add_option("--flags", c.flags, "wide in-stock flags CSV");
        cmd->add_option("--inventory", c.inventory, "inventory snapshot CSV");
    }
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig() : RunConfig::load(c.config_path);
    if (c.sales) cfg.sales_path = *c.sales;
    if (c.flags) cfg.flags_path = *c.flags;
    if (c.inventory) cfg.inventory_path = *c.inventory;
    if (c.out) cfg.out_dir = *c.out;
    if (c.threads) cfg.threads = *c.threads;
    if (c.phi) cfg.phi = *c.phi;
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.hpo.seed = *c.seed;
        cfg.synth.seed = *c.seed;
        cfg.train_base.seed = *c.seed;
    }
    return cfg;
}

SalesPanel load_panel(const RunConfig& cfg, PanelValidation* report = nullptr) {
    if (cfg.sales_path.empty() || cfg.flags_path.empty())
        throw ConfigError("--sales and --flags (or config equivalents) are required");
    return load_sales_wide(cfg.sales_path, cfg.flags_path, report);
}

fs::path ensure_out(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir);
}

std::map<std::string, std::string> data_inputs(const RunConfig& cfg) {
    std::map<std::string, std::string> inputs;
    if (!cfg.sales_path.empty()) inputs["sales"] = cfg.sales_path;
    if (!cfg.flags_path.empty()) inputs["flags"] = cfg.flags_path;
    if (!cfg.inventory_path.empty()) inputs["inventory"] = cfg.inventory_path;
    return inputs;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

void cmd_ingest(const Common& c) {
    const RunConfig cfg = resolve(c);
    PanelValidation report;
    const SalesPanel panel = load_panel(cfg, &report);
    const PanelDiagnostics diag = panel_diagnostics(panel);

    nlohmann::json j;
    j["n_items"] = diag.n_items;
    j["n_weeks"] = diag.n_weeks;
    j["zero_rate"] = diag.zero_rate;
    j["stockout_rate"] = diag.stockout_rate;
    j["min_item_mean_sales"] = diag.min_item_mean_sales;
    j["max_item_mean_sales"] = diag.max_item_mean_sales;
    j["items_selling_from_week0"] = diag.items_selling_from_week0;
    j["items_with_delayed_start"] = diag.items_with_delayed_start;
    j["first_week"] = format_iso_date(panel.axis().date(0));
    j["last_week"] = format_iso_date(panel.axis().date(panel.n_weeks() - 1));
    nlohmann::json findings = nlohmann::json::array();
    for (const auto& cell : report.stocked_out_sales)
        findings.push_back({{"item", panel.items()[cell.item].unique_id()},
                            {"week", cell.week},
                            {"issue", "sales recorded while out of stock"}});
    j["findings"] = std::move(findings);
    j["clean"] = report.clean();

    const fs::path out = ensure_out(cfg);
    write_json_file(out / "diagnostics.json", j);
    write_manifest((out / "manifest.json").string(), cfg, data_inputs(cfg), &panel);
    std::cout << "ingested " << diag.n_items << " items x " << diag.n_weeks
              << " weeks; findings: " << report.stocked_out_sales.size() << '\n';
}

void cmd_synth(const Common& c, std::optional<int> n_items, std::optional<int> n_weeks) {
    RunConfig cfg = resolve(c);
    if (n_items) cfg.synth.n_items = *n_items;
    if (n_weeks) cfg.synth.n_weeks = *n_weeks;
    const SalesPanel panel = synth_panel(cfg.synth);
    const InventorySnapshot snapshot =
        synth_snapshot(panel, cfg.synth, cfg.costs.lead_time_weeks);

    const fs::path out = ensure_out(cfg);
    save_sales_wide(panel, (out / "sales.csv").string(), (out / "flags.csv").string());
    save_inventory_snapshot(snapshot, panel, (out / "inventory.csv").string());
    write_manifest((out / "manifest.json").string(), cfg, {}, &panel);
    std::cout << "wrote synthetic panel: " << panel.n_items() << " items x "
              << panel.n_weeks() << " weeks -> " << out.string() << '\n';
}

void cmd_features(const Common& c) {
    const RunConfig cfg = resolve(c);
    const SalesPanel panel = load_panel(cfg);
    FeatureSpec spec = cfg.features;
    spec.horizons = kHorizons;
    const FeatureMatrix matrix = build_features(panel, spec);

    const fs::path out = ensure_out(cfg);
    export_features_csv(matrix, panel, (out / "features.csv").string());
    write_manifest((out / "manifest.json").string(), cfg, data_inputs(cfg), &panel);
    std::cout << "wrote " << matrix.item.size() << " feature rows ("
              << matrix.numeric_names.size() << " numeric columns) -> "
              << (out / "features.csv").string() << '\n';
}

void cmd_train(const Common& c) {
    const RunConfig cfg = resolve(c);
    const SalesPanel panel = load_panel(cfg);
    const TrainArtifacts art = run_train_live(panel, cfg);

    const fs::path out = ensure_out(cfg);
    save_bundle(art.bundle, (out / "bundle.json").string());
    nlohmann::json hpo_report = nlohmann::json::array();
    for (std::size_t h = 0; h < static_cast<std::size_t>(kHorizons); ++h) {
        nlohmann::json cfg_json;
        to_json(cfg_json, art.best_configs[h]);
        hpo_report.push_back({{"horizon", h + 1},
                              {"config", std::move(cfg_json)},
                              {"best_iteration", art.best_iterations[h]},
                              {"valid_mae", art.best_maes[h]}});
    }
    write_json_file(out / "hpo.json", hpo_report);
    write_manifest((out / "manifest.json").string(), cfg, data_inputs(cfg), &panel);
    std::cout << "trained 3 horizon models -> " << (out / "bundle.json").string() << '\n';
}

void cmd_forecast(const Common& c, const std::string& bundle_path) {
    const RunConfig cfg = resolve(c);
    const SalesPanel panel = load_panel(cfg);
    const ModelBundle bundle = load_bundle(bundle_path);

    FeatureMatrix matrix = build_features(panel, bundle.feature_spec);
    bundle.imputer.apply(matrix);
    const int decision_week = static_cast<int>(panel.n_weeks()) - 1;
    const ForecastSet forecasts =
        postprocess(predict_horizons(bundle.models, matrix, decision_week));

    const fs::path out = ensure_out(cfg);
    save_forecasts_csv(forecasts, panel, (out / "forecasts.csv").string());
    std::map<std::string, std::string> inputs = data_inputs(cfg);
    inputs["bundle"] = bundle_path;

    if (!cfg.inventory_path.empty()) {
        const InventorySnapshot snapshot = load_inventory_snapshot(
            cfg.inventory_path, panel, cfg.costs.lead_time_weeks);
        SimState state = SimState::from_snapshot(snapshot, cfg.costs.lead_time_weeks);
        const PolicyParams params = PolicyParams::make(cfg.costs, cfg.phi);
        const std::vector<long long> orders = policy_orders(state, forecasts, params);
        save_orders_csv(orders, panel, decision_week,
                        (out / "order_sheet.csv").string());
        std::cout << "wrote order sheet -> " << (out / "order_sheet.csv").string()
                  << '\n';
    }
    write_manifest((out / "manifest.json").string(), cfg, inputs, &panel);
    std::cout << "wrote forecasts for week " << decision_week << " -> "
              << (out / "forecasts.csv").string() << '\n';
}

void cmd_calibrate(const Common& c, const std::string& bundle_path, int window_weeks) {
    const RunConfig cfg = resolve(c);
    const SalesPanel panel = load_panel(cfg);
    const ModelBundle bundle = load_bundle(bundle_path);
    if (window_weeks < cfg.costs.lead_time_weeks + 1)
        throw ConfigError("--window-weeks must cover at least lead_time + 1 weeks");

    FeatureMatrix matrix = build_features(panel, bundle.feature_spec);
    bundle.imputer.apply(matrix);
    const int window_end = static_cast<int>(panel.n_weeks()) - 1;
    const int window_start = window_end - window_weeks + 1;
    if (window_start < 1) throw DataError("panel shorter than the calibration window");

    const InventorySnapshot init =
        cfg.inventory_path.empty()
            ? InventorySnapshot::zero(panel.n_items(), cfg.costs.lead_time_weeks)
            : load_inventory_snapshot(cfg.inventory_path, panel,
                                      cfg.costs.lead_time_weeks);
    const CalibrationResult result =
        calibrate_phi(panel, bundle.models, matrix, init, cfg.costs, window_start,
                      window_end, cfg.phi_grid);

    const fs::path out = ensure_out(cfg);
    write_json_file(out / "phi.json", {{"phi", result.phi},
                                       {"window_start", window_start},
                                       {"window_end", window_end}});
    save_phi_curve_csv(result, (out / "phi_curve.csv").string());
    std::map<std::string, std::string> inputs = data_inputs(cfg);
    inputs["bundle"] = bundle_path;
    write_manifest((out / "manifest.json").string(), cfg, inputs, &panel);
    std::cout << "calibrated phi = " << format_number(result.phi) << " over weeks ["
              << window_start << ", " << window_end << "]\n";
}

void cmd_backtest(const Common& c, bool use_synth) {
    const RunConfig cfg = resolve(c);
    const bool synth = use_synth || cfg.sales_path.empty();
    const SalesPanel panel = synth ? synth_panel(cfg.synth) : load_panel(cfg);

    const BacktestArtifacts art = run_backtest(panel, cfg, /*write_files=*/true);
    const fs::path out(cfg.out_dir);
    write_manifest((out / "manifest.json").string(), cfg,
                   synth ? std::map<std::string, std::string>{} : data_inputs(cfg),
                   &panel);
    std::cout << "backtest: policy cost " << format_number(art.policy_cost)
              << ", benchmark cost " << format_number(art.benchmark_cost) << " ("
              << format_number(art.delta_pct) << "% reduction), phi "
              << format_number(art.calibration.phi) << '\n';
}

void cmd_simulate(const Common& c, const std::vector<std::string>& order_files,
                  std::optional<int> rounds_flag) {
    const RunConfig cfg = resolve(c);
    const SalesPanel panel = load_panel(cfg);

    int rounds = cfg.simulate_rounds;
    if (rounds_flag) rounds = *rounds_flag;
    if (!order_files.empty()) {
        if (rounds_flag && *rounds_flag != static_cast<int>(order_files.size()))
            throw ConfigError("--rounds disagrees with the number of --orders files");
        rounds = static_cast<int>(order_files.size());
    }
    if (rounds < 1) throw ConfigError("need at least one decision round");
    const int lead = cfg.costs.lead_time_weeks;
    const int total_weeks = rounds + lead;
    if (panel.n_weeks() < static_cast<std::size_t>(total_weeks))
        throw DataError("panel shorter than rounds + lead_time weeks");

    std::vector<std::vector<long long>> orders;
    for (const auto& file : order_files)
        orders.push_back(load_orders_csv(file, panel));

    const int first_week = static_cast<int>(panel.n_weeks()) - total_weeks;
    std::vector<std::vector<long long>> trace;
    for (int w = first_week; w < static_cast<int>(panel.n_weeks()); ++w) {
        std::vector<long long> row(panel.n_items());
        for (std::size_t i = 0; i < panel.n_items(); ++i)
            row[i] = std::llround(panel.sales(i, static_cast<std::size_t>(w)));
        trace.push_back(std::move(row));
    }
    const InventorySnapshot init =
        cfg.inventory_path.empty()
            ? InventorySnapshot::zero(panel.n_items(), lead)
            : load_inventory_snapshot(cfg.inventory_path, panel, lead);
    const std::vector<long long> zeros(panel.n_items(), 0);
    const CostLedger ledger = run_episode(
        trace, init,
        [&](const SimState&, int week) {
            return week < static_cast<int>(orders.size())
                       ? orders[static_cast<std::size_t>(week)]
                       : zeros;
        },
        cfg.costs, rounds);

    const fs::path out = ensure_out(cfg);
    write_episode_report(ledger, panel.items(), (out / "episode.csv").string());
    write_json_file(out / "simulate_summary.json",
                    {{"rounds", rounds},
                     {"costed_weeks", ledger.per_week.size()},
                     {"shortage_total", ledger.shortage_total},
                     {"holding_total", ledger.holding_total},
                     {"total_cost", total_cost(ledger)}});
    std::map<std::string, std::string> inputs = data_inputs(cfg);
    for (std::size_t k = 0; k < order_files.size(); ++k)
        inputs["orders_round_" + std::to_string(k)] = order_files[k];
    write_manifest((out / "manifest.json").string(), cfg, inputs, &panel);
    std::cout << "simulated " << rounds << " rounds (" << ledger.per_week.size()
              << " costed weeks): total cost " << format_number(total_cost(ledger))
              << '\n';
}

struct EpisodeTotals {
    double shortage = 0.0;
    double holding = 0.0;
    double total = 0.0;
};

EpisodeTotals read_episode_totals(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::string line, summary;
    while (std::getline(in, line))
        if (line.rfind("summary,", 0) == 0) summary = line;
    if (summary.empty()) throw DataError("no summary line in " + path);

    EpisodeTotals t;
    bool have_s = false, have_h = false, have_t = false;
    std::size_t pos = 0;
    while (pos < summary.size()) {
        std::size_t next = summary.find(',', pos);
        if (next == std::string::npos) next = summary.size();
        const std::string field = summary.substr(pos, next - pos);
        const auto starts = [&](const char* p) { return field.rfind(p, 0) == 0; };
        if (starts("shortage_total=")) {
            t.shortage = std::stod(field.substr(15));
            have_s = true;
        } else if (starts("holding_total=")) {
            t.holding = std::stod(field.substr(14));
            have_h = true;
        } else if (starts("total=")) {
            t.total = std::stod(field.substr(6));
            have_t = true;
        }
        pos = next + 1;
    }
    if (!have_s || !have_h || !have_t)
        throw DataError("malformed summary line in " + path);
    return t;
}

void cmd_compare(const Common& c, const std::string& baseline_path,
                 const std::string& candidate_path) {
    const RunConfig cfg = resolve(c);
    const EpisodeTotals base = read_episode_totals(baseline_path);
    const EpisodeTotals cand = read_episode_totals(candidate_path);
    const double delta =
        base.total > 0.0 ? 100.0 * (base.total - cand.total) / base.total : 0.0;

    const fs::path out = ensure_out(cfg);
    write_json_file(out / "compare.json",
                    {{"baseline",
                      {{"path", baseline_path},
                       {"shortage_total", base.shortage},
                       {"holding_total", base.holding},
                       {"total_cost", base.total}}},
                     {"candidate",
                      {{"path", candidate_path},
                       {"shortage_total", cand.shortage},
                       {"holding_total", cand.holding},
                       {"total_cost", cand.total}}},
                     {"cost_reduction_pct", delta}});
    std::map<std::string, std::string> inputs{{"baseline", baseline_path},
                                              {"candidate", candidate_path}};
    write_manifest((out / "manifest.json").string(), cfg, inputs, nullptr);
    std::cout << "baseline " << format_number(base.total) << " vs candidate "
              << format_number(cand.total) << ": " << format_number(delta)
              << "% cost reduction\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stockcast: forecast-driven replenishment for lost-sales retail"};
    app.require_subcommand(1);

    Common ingest_c, synth_c, features_c, train_c, forecast_c, calibrate_c,
        backtest_c, simulate_c, compare_c;
    std::string forecast_bundle, calibrate_bundle;
    int calibrate_window = 18;
    bool backtest_synth = false;
    std::vector<std::string> order_files;
    std::optional<int> simulate_rounds;
    std::string compare_baseline, compare_candidate;

    auto* ingest = app.add_subcommand("ingest", "validate a panel and report diagnostics");
    add_common(ingest, ingest_c);
    ingest->callback([&] { cmd_ingest(ingest_c); });

    auto* synth = app.add_subcommand("synth", "generate a synthetic retail panel");
    add_common(synth, synth_c, /*with_data=*/false);
    std::optional<int> synth_items, synth_weeks;
    synth->add_option("--items", synth_items, "number of store-product series");
    synth->add_option("--weeks", synth_weeks, "panel length in weeks");
    synth->callback([&] { cmd_synth(synth_c, synth_items, synth_weeks); });

    auto* features = app.add_subcommand("features", "export the engineered feature matrix");
    add_common(features, features_c);
    features->callback([&] { cmd_features(features_c); });

    auto* train = app.add_subcommand("train", "HPO + live refit; writes a model bundle");
    add_common(train, train_c);
    train->callback([&] { cmd_train(train_c); });

    auto* forecast = app.add_subcommand("forecast", "predict 3 horizons from a bundle");
    add_common(forecast, forecast_c);
    forecast->add_option("--bundle", forecast_bundle, "trained bundle.json")
        ->required()
        ->check(CLI::ExistingFile);
    forecast->callback([&] { cmd_forecast(forecast_c, forecast_bundle); });

    auto* calibrate = app.add_subcommand("calibrate", "grid-search phi on recent weeks");
    add_common(calibrate, calibrate_c);
    calibrate->add_option("--bundle", calibrate_bundle, "trained bundle.json")
        ->required()
        ->check(CLI::ExistingFile);
    calibrate->add_option("--window-weeks", calibrate_window,
                          "trailing replay window length");
    calibrate->callback([&] { cmd_calibrate(calibrate_c, calibrate_bundle, calibrate_window); });

    auto* backtest = app.add_subcommand("backtest", "end-to-end holdout evaluation");
    add_common(backtest, backtest_c);
    backtest->add_flag("--synth", backtest_synth, "run on a generated panel");
    backtest->callback([&] { cmd_backtest(backtest_c, backtest_synth); });

    auto* simulate = app.add_subcommand("simulate", "replay order sheets on held-out demand");
    add_common(simulate, simulate_c);
    simulate->add_option("--orders", order_files, "order sheet CSV per round, in order")
        ->check(CLI::ExistingFile);
    simulate->add_option("--rounds", simulate_rounds, "decision rounds to replay");
    simulate->callback([&] { cmd_simulate(simulate_c, order_files, simulate_rounds); });

    auto* compare = app.add_subcommand("compare", "cost delta between two episode reports");
    add_common(compare, compare_c, /*with_data=*/false);
    compare->add_option("--baseline", compare_baseline, "baseline episode CSV")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("--candidate", compare_candidate, "candidate episode CSV")
        ->required()
        ->check(CLI::ExistingFile);
    compare->callback([&] { cmd_compare(compare_c, compare_baseline, compare_candidate); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
