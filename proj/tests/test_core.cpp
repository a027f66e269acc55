#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stockcast/csv.hpp"
#include "stockcast/dates.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/panel.hpp"
#include "stockcast/rng.hpp"
#include "stockcast/simulator.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace stockcast;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("stockcast_test_" + name);
    fs::create_directories(p);
    return p;
}

// items x weeks panel from row-major sales; flags default to all-true.
SalesPanel make_panel(std::size_t n_items, const std::vector<std::vector<double>>& sales,
                      std::vector<std::vector<std::uint8_t>> flags = {},
                      const std::string& first_monday = "2022-01-03") {
    const std::size_t n_weeks = sales.at(0).size();
    std::vector<ItemKey> items;
    for (std::size_t i = 0; i < n_items; ++i)
        items.push_back({"S" + std::to_string(i % 3), "P" + std::to_string(i)});
    std::vector<DaySerial> dates;
    const DaySerial d0 = *parse_iso_date(first_monday);
    for (std::size_t w = 0; w < n_weeks; ++w) dates.push_back(d0 + 7 * static_cast<long>(w));
    std::vector<double> flat;
    std::vector<std::uint8_t> stock;
    for (std::size_t i = 0; i < n_items; ++i)
        for (std::size_t w = 0; w < n_weeks; ++w) {
            flat.push_back(sales[i][w]);
            stock.push_back(flags.empty() ? 1 : flags[i][w]);
        }
    return SalesPanel(std::move(items), WeekAxis(std::move(dates)), std::move(flat),
                      std::move(stock));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

// ---------------------------------------------------------------------------
// dates
// ---------------------------------------------------------------------------

TEST_CASE("iso date parse/format round trip") {
    auto d = parse_iso_date("2024-04-08");
    REQUIRE(d.has_value());
    CHECK(format_iso_date(*d) == "2024-04-08");
    CHECK(is_monday(*d));
    CHECK(day_of_week(0) == 4); // 1970-01-01 was a Thursday
    CHECK(!parse_iso_date("2024-13-01").has_value());
    CHECK(!parse_iso_date("2024-02-30").has_value());
    CHECK(!parse_iso_date("garbage").has_value());
}

TEST_CASE("iso week numbers match known calendar facts") {
    CHECK(iso_week(*parse_iso_date("2024-01-01")) == 1);  // Monday, week 1
    CHECK(iso_week(*parse_iso_date("2019-12-30")) == 1);  // Monday of 2020-W01
    CHECK(iso_week(*parse_iso_date("2020-12-28")) == 53); // 2020 has 53 ISO weeks
    CHECK(iso_week(*parse_iso_date("2015-12-28")) == 53);
    CHECK(iso_week(*parse_iso_date("2022-01-03")) == 1);
    CHECK(iso_week(*parse_iso_date("2022-12-26")) == 52);
}

// ---------------------------------------------------------------------------
// csv
// ---------------------------------------------------------------------------

TEST_CASE("format_number survives a parse round trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, 5.0, -2.25, 0.0}) {
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(5.0) == "5");
    CHECK(format_number(-3.0) == "-3");
}

TEST_CASE("csv line splitting honors quotes and CR") {
    auto f = split_csv_line("a,\"b,c\",d\r");
    REQUIRE(f.size() == 3);
    CHECK(f[0] == "a");
    CHECK(f[1] == "b,c");
    CHECK(f[2] == "d");
    CHECK(split_csv_line("x,,y").size() == 3);
    CHECK(split_csv_line("").size() == 1);
}

TEST_CASE("read_csv returns header and rows") {
    const fs::path dir = tmp_dir("csv");
    const fs::path file = dir / "t.csv";
    std::ofstream(file) << "a,b\n1,2\n3,4\n";
    CsvTable t = read_csv(file.string());
    REQUIRE(t.header.size() == 2);
    REQUIRE(t.n_rows() == 2);
    CHECK(t.rows[1][1] == "4");
    CHECK_THROWS_AS(read_csv((dir / "absent.csv").string()), DataError);
}

// ---------------------------------------------------------------------------
// panel
// ---------------------------------------------------------------------------

TEST_CASE("panel save/load round trip preserves content") {
    SalesPanel panel = make_panel(
        2, {{0, 3, 2.5, 0, 7}, {1, 0, 0, 4, 2}},
        {{1, 1, 1, 0, 1}, {1, 1, 0, 1, 1}});
    const fs::path dir = tmp_dir("panel_rt");
    save_sales_wide(panel, (dir / "s.csv").string(), (dir / "f.csv").string());
    SalesPanel loaded = load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string());
    CHECK(loaded == panel);
}

TEST_CASE("effective view is missing exactly on stockout weeks") {
    SalesPanel panel = make_panel(1, {{2, 0, 5, 1}}, {{1, 0, 1, 1}});
    EffectiveSeries eff = panel.effective(0);
    REQUIRE(eff.size() == 4);
    CHECK(eff[0] == 2);
    CHECK(is_missing(eff[1]));
    CHECK(eff[2] == 5);
    CHECK(eff[3] == 1);
}

TEST_CASE("stocked-out sales are reported, not fatal") {
    const fs::path dir = tmp_dir("panel_val");
    std::ofstream(dir / "s.csv") << "Store,Product,2022-01-03,2022-01-10\nA,X,5,3\n";
    std::ofstream(dir / "f.csv") << "Store,Product,2022-01-03,2022-01-10\nA,X,true,false\n";
    PanelValidation report;
    SalesPanel panel =
        load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string(), &report);
    CHECK(!report.clean());
    REQUIRE(report.stocked_out_sales.size() == 1);
    CHECK(report.stocked_out_sales[0].week == 1);
    CHECK(panel.n_weeks() == 2);
}

TEST_CASE("structural defects abort the load") {
    const fs::path dir = tmp_dir("panel_bad");
    SUBCASE("non-Monday week column") {
        std::ofstream(dir / "s.csv") << "Store,Product,2022-01-04\nA,X,1\n";
        std::ofstream(dir / "f.csv") << "Store,Product,2022-01-04\nA,X,true\n";
        CHECK_THROWS_AS(load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string()),
                        DataError);
    }
    SUBCASE("non-contiguous weeks") {
        std::ofstream(dir / "s.csv") << "Store,Product,2022-01-03,2022-01-17\nA,X,1,1\n";
        std::ofstream(dir / "f.csv") << "Store,Product,2022-01-03,2022-01-17\nA,X,true,true\n";
        CHECK_THROWS_AS(load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string()),
                        DataError);
    }
    SUBCASE("duplicate item") {
        std::ofstream(dir / "s.csv") << "Store,Product,2022-01-03\nA,X,1\nA,X,2\n";
        std::ofstream(dir / "f.csv") << "Store,Product,2022-01-03\nA,X,true\nA,X,true\n";
        CHECK_THROWS_AS(load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string()),
                        DataError);
    }
    SUBCASE("negative sales") {
        std::ofstream(dir / "s.csv") << "Store,Product,2022-01-03\nA,X,-1\n";
        std::ofstream(dir / "f.csv") << "Store,Product,2022-01-03\nA,X,true\n";
        CHECK_THROWS_AS(load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string()),
                        DataError);
    }
    SUBCASE("files disagree on items") {
        std::ofstream(dir / "s.csv") << "Store,Product,2022-01-03\nA,X,1\n";
        std::ofstream(dir / "f.csv") << "Store,Product,2022-01-03\nB,Y,true\n";
        CHECK_THROWS_AS(load_sales_wide((dir / "s.csv").string(), (dir / "f.csv").string()),
                        DataError);
    }
}

TEST_CASE("panel truncation keeps an exact prefix") {
    SalesPanel panel = make_panel(2, {{1, 2, 3, 4}, {5, 6, 7, 8}}, {{1, 0, 1, 1}, {1, 1, 1, 0}});
    SalesPanel cut = panel.truncated(3);
    REQUIRE(cut.n_weeks() == 3);
    CHECK(cut.sales(1, 2) == 7);
    CHECK(!cut.in_stock(0, 1));
    CHECK(cut.axis().date(2) == panel.axis().date(2));
}

TEST_CASE("panel diagnostics count rates and delayed starts") {
    SalesPanel panel = make_panel(2, {{0, 0, 2, 2}, {0, 4, 0, 4}},
                                  {{0, 1, 1, 1}, {1, 1, 1, 1}});
    PanelDiagnostics d = panel_diagnostics(panel);
    CHECK(d.n_items == 2);
    CHECK(d.n_weeks == 4);
    CHECK(d.zero_rate == doctest::Approx(4.0 / 8.0));
    CHECK(d.stockout_rate == doctest::Approx(1.0 / 8.0));
    CHECK(d.min_item_mean_sales == doctest::Approx(1.0));
    CHECK(d.max_item_mean_sales == doctest::Approx(2.0));
    CHECK(d.first_sale_week[0] == 2);
    CHECK(d.first_sale_week[1] == 1);
    CHECK(d.items_selling_from_week0 == 0);
    CHECK(d.items_with_delayed_start == 2);
}

TEST_CASE("inventory snapshot save/load round trip") {
    SalesPanel panel = make_panel(2, {{1, 1}, {2, 2}});
    InventorySnapshot snap = InventorySnapshot::zero(2, 2);
    snap.on_hand = {5, 0};
    snap.in_transit = {{3, 1}, {0, 7}};
    const fs::path dir = tmp_dir("inv");
    save_inventory_snapshot(snap, panel, (dir / "inv.csv").string());
    InventorySnapshot loaded =
        load_inventory_snapshot((dir / "inv.csv").string(), panel, 2);
    CHECK(loaded.on_hand == snap.on_hand);
    CHECK(loaded.in_transit == snap.in_transit);
    CHECK(loaded.in_transit_at(0, 1) == 3);
    CHECK(loaded.in_transit_at(0, 2) == 1);
}

// ---------------------------------------------------------------------------
// simulator
// ---------------------------------------------------------------------------

TEST_CASE("six rounds with lead two cost exactly eight weeks") {
    std::vector<std::vector<long long>> demand(8, {1});
    InventorySnapshot init = InventorySnapshot::zero(1, 2);
    init.on_hand = {10};
    CostParams costs; // 1.0 / 0.2 / lead 2
    auto zero_policy = [](const SimState& s, int) {
        return std::vector<long long>(s.n_items(), 0);
    };
    CostLedger ledger = run_episode(demand, init, zero_policy, costs, 6);
    CHECK(ledger.per_week.size() == 8);
    // on-hand 10 drains by 1/week: ending 9,8,...,2 -> holding 0.2 * 44
    CHECK(ledger.shortage_total == doctest::Approx(0.0));
    CHECK(ledger.holding_total == doctest::Approx(8.8));
    CHECK(total_cost(ledger) == doctest::Approx(8.8));
}

TEST_CASE("zero orders and zero stock lose every sale") {
    std::vector<std::vector<long long>> demand = {{3, 1}, {2, 0}, {5, 4}, {1, 1}, {0, 2}};
    InventorySnapshot init = InventorySnapshot::zero(2, 2);
    CostParams costs;
    auto zero_policy = [](const SimState& s, int) {
        return std::vector<long long>(s.n_items(), 0);
    };
    CostLedger ledger = run_episode(demand, init, zero_policy, costs, 3);
    long long total_demand = 0;
    for (const auto& w : demand) total_demand += w[0] + w[1];
    CHECK(ledger.holding_total == doctest::Approx(0.0));
    CHECK(ledger.shortage_total == doctest::Approx(costs.shortage_cost * total_demand));
}

TEST_CASE("orders placed at an epoch arrive lead weeks later") {
    std::vector<std::vector<long long>> demand(6, {0});
    InventorySnapshot init = InventorySnapshot::zero(1, 2);
    std::vector<long long> seen_receipts;
    auto policy = [&](const SimState& s, int week) {
        seen_receipts.push_back(s.receipts(0));
        return std::vector<long long>{week == 0 ? 9LL : 0LL};
    };
    CostLedger ledger = run_episode(demand, init, policy, CostParams{}, 4);
    // order of 9 placed before week 0 arrives at the start of week 2
    CHECK(ledger.per_week[0].receipts[0] == 0);
    CHECK(ledger.per_week[1].receipts[0] == 0);
    CHECK(ledger.per_week[2].receipts[0] == 9);
    CHECK(seen_receipts == std::vector<long long>{0, 0, 9, 0});
    CHECK(ledger.per_week[2].ending[0] == 9);
}

TEST_CASE("step_week applies lost-sales dynamics and enqueues orders") {
    CostParams costs;
    SimState state(1, 2);
    // Order 5 placed at the end of week 0 arrives at the start of week 3.
    WeekOutcome w0 = step_week(state, {0}, {5}, costs);
    CHECK(w0.sales[0] == 0);
    CHECK(state.week() == 1);
    CHECK(state.pipeline(0, 2) == 5);
    step_week(state, {0}, {0}, costs);
    CHECK(state.pipeline(0, 1) == 5);
    step_week(state, {0}, {0}, costs);
    CHECK(state.week() == 3);
    CHECK(state.receipts(0) == 5);
    CHECK(state.on_hand(0) == 5);

    // Lost-sales week: demand 8 against 5 on hand.
    WeekOutcome w3 = step_week(state, {8}, {0}, costs);
    CHECK(w3.sales[0] == 5);
    CHECK(w3.lost[0] == 3);
    CHECK(w3.ending[0] == 0);
    CHECK(w3.week_cost == doctest::Approx(costs.shortage_cost * 3));
}

TEST_CASE("lost sales, complementarity, and flow conservation on random episodes") {
    CostParams costs;
    Rng rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n_items = 1 + static_cast<std::size_t>(rng.uniform_int(0, 4));
        const int rounds = 3 + static_cast<int>(rng.uniform_int(0, 5));
        const int weeks = rounds + costs.lead_time_weeks;
        std::vector<std::vector<long long>> demand(static_cast<std::size_t>(weeks),
                                                   std::vector<long long>(n_items));
        for (auto& wk : demand)
            for (auto& d : wk) d = rng.uniform_int(0, 12);
        InventorySnapshot init = InventorySnapshot::zero(n_items, costs.lead_time_weeks);
        for (auto& h : init.on_hand) h = rng.uniform_int(0, 15);
        for (auto& tr : init.in_transit)
            for (auto& q : tr) q = rng.uniform_int(0, 10);
        auto policy = [&](const SimState& s, int) {
            std::vector<long long> q(s.n_items());
            for (auto& v : q) v = rng.uniform_int(0, 10);
            return q;
        };
        CostLedger ledger = run_episode(demand, init, policy, costs, rounds);

        double shortage = 0.0, holding = 0.0;
        for (std::size_t w = 0; w < ledger.per_week.size(); ++w) {
            const auto& wk = ledger.per_week[w];
            double week_cost = 0.0;
            for (std::size_t i = 0; i < n_items; ++i) {
                // start-of-week on_hand reconstructs as sales + ending
                CHECK(wk.sales[i] == std::min(wk.demand[i], wk.sales[i] + wk.ending[i]));
                CHECK(wk.lost[i] == wk.demand[i] - wk.sales[i]);
                CHECK(wk.lost[i] * wk.ending[i] == 0); // complementarity
                CHECK(wk.sales[i] >= 0);
                CHECK(wk.ending[i] >= 0);
                if (w + 1 < ledger.per_week.size()) {
                    const auto& nxt = ledger.per_week[w + 1];
                    // on_hand(w+1) = ending(w) + receipts(w+1)
                    CHECK(nxt.sales[i] + nxt.ending[i] == wk.ending[i] + nxt.receipts[i]);
                }
                week_cost += costs.shortage_cost * static_cast<double>(wk.lost[i]) +
                             costs.holding_cost * static_cast<double>(wk.ending[i]);
                shortage += costs.shortage_cost * static_cast<double>(wk.lost[i]);
                holding += costs.holding_cost * static_cast<double>(wk.ending[i]);
            }
            CHECK(wk.week_cost == doctest::Approx(week_cost));
        }
        CHECK(ledger.shortage_total == doctest::Approx(shortage));
        CHECK(ledger.holding_total == doctest::Approx(holding));
    }
}

TEST_CASE("short demand trace rejected") {
    std::vector<std::vector<long long>> demand(4, {1});
    InventorySnapshot init = InventorySnapshot::zero(1, 2);
    auto zero_policy = [](const SimState& s, int) {
        return std::vector<long long>(s.n_items(), 0);
    };
    CHECK_THROWS(run_episode(demand, init, zero_policy, CostParams{}, 6));
}

TEST_CASE("episode report carries a parseable summary line") {
    std::vector<std::vector<long long>> demand(5, {2});
    InventorySnapshot init = InventorySnapshot::zero(1, 2);
    init.on_hand = {4};
    auto zero_policy = [](const SimState& s, int) {
        return std::vector<long long>(s.n_items(), 0);
    };
    CostLedger ledger = run_episode(demand, init, zero_policy, CostParams{}, 3);
    const fs::path dir = tmp_dir("episode");
    write_episode_report(ledger, {{"A", "X"}}, (dir / "ep.csv").string());
    const std::string text = slurp(dir / "ep.csv");
    CHECK(text.find("week,item,demand,sales,lost,ending,receipts,order,week_cost") == 0);
    CHECK(text.find("summary,shortage_total=") != std::string::npos);
    CHECK(text.find("total=" + format_number(total_cost(ledger))) != std::string::npos);
}
