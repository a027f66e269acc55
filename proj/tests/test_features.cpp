#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stockcast/features.hpp"
#include "stockcast/csv.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/panel.hpp"
#include "stockcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

using namespace stockcast;
namespace fs = std::filesystem;

namespace {

SalesPanel one_item_panel(const std::vector<double>& sales,
                          const std::vector<std::uint8_t>& flags,
                          const std::string& first_monday = "2021-01-04") {
    std::vector<DaySerial> dates;
    const DaySerial d0 = *parse_iso_date(first_monday);
    for (std::size_t w = 0; w < sales.size(); ++w)
        dates.push_back(d0 + 7 * static_cast<long>(w));
    return SalesPanel({{"S", "P"}}, WeekAxis(std::move(dates)), sales, flags);
}

EffectiveSeries series_of(std::vector<double> values) { return EffectiveSeries{std::move(values)}; }

bool same_cell(double a, double b) {
    if (is_missing(a) && is_missing(b)) return true;
    return a == b;
}

double checked(const FeatureMatrix& m, std::size_t row, const std::string& name) {
    return m.num(row, m.numeric_index(name));
}

} // namespace

// ---------------------------------------------------------------------------
// scale factor
// ---------------------------------------------------------------------------

TEST_CASE("scale factor annualizes a constant series everywhere") {
    FeatureSpec spec;
    std::vector<double> vals(60, 2.0);
    ScaleSeries s = compute_scale_factor(series_of(vals), spec);
    for (std::size_t w = 0; w < s.size(); ++w) CHECK(s[w] == doctest::Approx(106.0));
}

TEST_CASE("scale factor clips at the floor") {
    FeatureSpec spec;
    ScaleSeries s = compute_scale_factor(series_of(std::vector<double>(10, 0.01)), spec);
    for (std::size_t w = 0; w < s.size(); ++w) CHECK(s[w] == 1.0);
}

TEST_CASE("scale factor sits at the floor before any effective history") {
    FeatureSpec spec;
    std::vector<double> vals(8, missing_value());
    vals[5] = 4.0;
    vals[6] = 4.0;
    vals[7] = 4.0;
    ScaleSeries s = compute_scale_factor(series_of(vals), spec);
    CHECK(s[0] == 1.0);
    CHECK(s[4] == 1.0);
    CHECK(s[5] == doctest::Approx(53.0 * 4.0)); // expanding warm start
    CHECK(s[7] == doctest::Approx(53.0 * 4.0));
}

TEST_CASE("warm start uses the expanding mean, not the sparse window") {
    FeatureSpec spec;
    // Valid only in weeks 0..9: four tens then six zeros. At t=56 the
    // trailing 53-week window [4,56] sees just the zeros.
    std::vector<double> vals(57, missing_value());
    for (int w = 0; w < 10; ++w) vals[static_cast<std::size_t>(w)] = w < 4 ? 10.0 : 0.0;
    ScaleSeries s = compute_scale_factor(series_of(vals), spec);
    CHECK(s[56] == doctest::Approx(53.0 * 4.0)); // expanding mean = 40/10
}

TEST_CASE("full trailing window takes over once populated") {
    FeatureSpec spec;
    // 10s for the first 30 weeks, then 1s: at the end the window mean drops.
    std::vector<double> vals(120, 1.0);
    for (int w = 0; w < 30; ++w) vals[static_cast<std::size_t>(w)] = 10.0;
    ScaleSeries s = compute_scale_factor(series_of(vals), spec);
    CHECK(s[119] == doctest::Approx(53.0 * 1.0)); // window [67,119] is all 1s
    const double w52 = (23.0 * 10.0 + 30.0 * 1.0) / 53.0;
    CHECK(s[59] == doctest::Approx(53.0 * w52)); // window [7,59]: 23 tens, 30 ones
}

// ---------------------------------------------------------------------------
// observation weights
// ---------------------------------------------------------------------------

TEST_CASE("observation weights decay in yearly blocks from the end") {
    FeatureSpec spec;
    auto w = observation_weights(160, spec);
    CHECK(w[159] == 1.0);
    CHECK(w[107] == 1.0);
    CHECK(w[106] == 0.5);
    CHECK(w[54] == 0.5);
    CHECK(w[53] == 0.25);
    CHECK(w[1] == 0.25);
    CHECK(w[0] == 0.125); // partial oldest block shares its block weight

    auto short_w = observation_weights(10, spec);
    for (double v : short_w) CHECK(v == 1.0);
}

// ---------------------------------------------------------------------------
// seasonality strength
// ---------------------------------------------------------------------------

TEST_CASE("seasonality strength nails a periodic series") {
    FeatureSpec spec;
    std::vector<double> vals(160);
    for (std::size_t w = 0; w < vals.size(); ++w)
        vals[w] = 10.0 + 5.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(w) / 52.0);
    auto s = seasonality_strength(series_of(vals), spec);
    CHECK(s[58] == 0.0);                      // 7 pairs, below the minimum
    CHECK(s[59] == doctest::Approx(1.0));     // exactly periodic
    CHECK(s[159] == doctest::Approx(1.0));
}

TEST_CASE("seasonality strength treats white noise as unseasonal") {
    // Monte-Carlo oracle: for i.i.d. noise the trailing-52 correlation with
    // the 52-lag is small in distribution; |r| < 0.5 in at least 95 of 100
    // seeded trials.
    FeatureSpec spec;
    int small = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng = Rng::substream(777, "seasonality_noise", static_cast<std::uint64_t>(trial));
        std::vector<double> vals(156);
        for (auto& v : vals) v = rng.uniform(0.0, 10.0);
        auto s = seasonality_strength(series_of(vals), spec);
        if (std::abs(s[155]) < 0.5) ++small;
    }
    CHECK(small >= 95);
}

TEST_CASE("seasonality strength guards constant legs") {
    FeatureSpec spec;
    std::vector<double> vals(160, 3.0);
    auto s = seasonality_strength(series_of(vals), spec);
    for (double v : s) CHECK(v == 0.0);
}

// ---------------------------------------------------------------------------
// spikes
// ---------------------------------------------------------------------------

TEST_CASE("a twenty after twelve ones is a spike") {
    FeatureSpec spec;
    std::vector<double> vals(13, 1.0);
    vals[12] = 20.0;
    SpikeStats st = spike_stats(series_of(vals), spec);
    CHECK(st.spike[12] == 1);
    CHECK(st.robust_z[12] > spec.spike_z_threshold);
    CHECK(st.spike[11] == 0);
    CHECK(st.robust_z[11] == doctest::Approx(0.0));
    CHECK(st.time_since_spike[11] == spec.time_since_spike_cap);
    CHECK(st.time_since_spike[12] == 0);
}

TEST_CASE("any sale after a zero-median stretch is a spike") {
    FeatureSpec spec;
    std::vector<double> vals(20, 0.0);
    vals[15] = 1.0;
    SpikeStats st = spike_stats(series_of(vals), spec);
    CHECK(st.spike[15] == 1);
    CHECK(st.time_since_spike[15] == 0);
    CHECK(st.time_since_spike[16] == 1);
    CHECK(st.time_since_spike[19] == 4);
}

TEST_CASE("time since spike counts through masked weeks and caps") {
    FeatureSpec spec;
    spec.time_since_spike_cap = 6;
    std::vector<double> vals(12, 1.0);
    vals[2] = 50.0;               // spike at t=2
    vals[4] = missing_value();    // masked week still ages the counter
    SpikeStats st = spike_stats(series_of(vals), spec);
    CHECK(st.time_since_spike[0] == 6); // initialized at the cap
    CHECK(st.time_since_spike[2] == 0);
    CHECK(st.time_since_spike[3] == 1);
    CHECK(st.time_since_spike[4] == 2);
    CHECK(st.time_since_spike[5] == 3);
    CHECK(st.time_since_spike[11] == 6); // capped
    CHECK(is_missing(st.robust_z[4]));
    CHECK(st.spike[4] == 0);
}

// ---------------------------------------------------------------------------
// feature matrix
// ---------------------------------------------------------------------------

TEST_CASE("numeric column catalog is stable and correctly typed") {
    SalesPanel panel = one_item_panel({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1});
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    const std::vector<std::string> expect = {
        "lag_0", "lag_1", "lag_2", "lag_3", "lag_51", "lag_52", "lag_53",
        "roll_mean_3", "roll_mean_5", "roll_mean_13",
        "roll_median_3", "roll_median_5", "roll_median_13",
        "ewm_5", "ewm_10", "std_8", "iqr_13",
        "momentum_1", "momentum_5", "slope_4",
        "fourier_sin_1", "fourier_cos_1", "fourier_sin_2", "fourier_cos_2",
        "fourier_sin_3", "fourier_cos_3",
        "last_year_window", "seasonality_strength", "robust_z", "spike_flag",
        "time_since_spike", "nonzero_rate_12"};
    CHECK(m.numeric_names == expect);
    REQUIRE(m.numeric_is_scaled.size() == expect.size());
    auto scaled = [&](const std::string& name) {
        return m.numeric_is_scaled[m.numeric_index(name)] != 0;
    };
    CHECK(scaled("lag_0"));
    CHECK(scaled("roll_median_13"));
    CHECK(scaled("ewm_10"));
    CHECK(scaled("std_8"));
    CHECK(scaled("iqr_13"));
    CHECK(scaled("momentum_5"));
    CHECK(scaled("slope_4"));
    CHECK(scaled("last_year_window"));
    CHECK(!scaled("fourier_sin_1"));
    CHECK(!scaled("seasonality_strength"));
    CHECK(!scaled("robust_z"));
    CHECK(!scaled("spike_flag"));
    CHECK(!scaled("time_since_spike"));
    CHECK(!scaled("nonzero_rate_12"));
    CHECK(m.categorical_names ==
          std::vector<std::string>{"Store", "Product", "unique_id", "week_of_year"});
    CHECK_THROWS_AS(m.numeric_index("no_such_feature"), ConfigError);
}

TEST_CASE("lags, rolls, and momentum follow the masked series") {
    // eff: 4, NaN, 6, 2, 10
    SalesPanel panel = one_item_panel({4, 0, 6, 2, 10}, {1, 0, 1, 1, 1});
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    const double sc4 = m.scale_factor[4];
    CHECK(checked(m, 4, "lag_0") == doctest::Approx(10.0 / sc4));
    CHECK(checked(m, 4, "lag_1") == doctest::Approx(2.0 / sc4));
    CHECK(checked(m, 4, "lag_2") == doctest::Approx(6.0 / sc4));
    CHECK(is_missing(checked(m, 3, "lag_2")));  // masked week 1
    CHECK(is_missing(checked(m, 2, "lag_3")));  // before the panel starts
    CHECK(is_missing(checked(m, 0, "lag_51")));

    // roll windows skip the masked week
    CHECK(checked(m, 2, "roll_mean_3") == doctest::Approx((4.0 + 6.0) / 2.0 / m.scale_factor[2]));
    CHECK(checked(m, 4, "roll_mean_3") == doctest::Approx((6.0 + 2.0 + 10.0) / 3.0 / sc4));
    CHECK(checked(m, 4, "roll_median_3") == doctest::Approx(6.0 / sc4));
    CHECK(checked(m, 4, "roll_median_5") == doctest::Approx(5.0 / sc4)); // median of 4,6,2,10

    CHECK(checked(m, 4, "momentum_1") == doctest::Approx((10.0 - 2.0) / sc4));
    CHECK(is_missing(checked(m, 1, "momentum_1"))); // current week masked
    CHECK(is_missing(checked(m, 2, "momentum_1"))); // previous week masked
    CHECK(is_missing(checked(m, 4, "momentum_5")));

    // slope_4 at t=4: diffs (10-2), (2-6), plus the masked pair dropped
    CHECK(checked(m, 4, "slope_4") == doctest::Approx(((10.0 - 2.0) + (2.0 - 6.0)) / 2.0 / sc4));

    CHECK(checked(m, 4, "nonzero_rate_12") == doctest::Approx(1.0));
    CHECK(m.cat(3, 3) == panel.axis().week_of_year(3));
}

TEST_CASE("ewm recursion carries state across masked weeks") {
    SalesPanel panel = one_item_panel({3, 0, 9, 0, 0}, {1, 0, 1, 0, 1});
    FeatureSpec spec;
    FeatureMatrix m = build_features(panel, spec);
    const double alpha = 2.0 / 6.0; // span 5
    double state = 3.0;
    CHECK(checked(m, 0, "ewm_5") == doctest::Approx(state / m.scale_factor[0]));
    CHECK(checked(m, 1, "ewm_5") == doctest::Approx(state / m.scale_factor[1])); // carried
    state = (1.0 - alpha) * state + alpha * 9.0;
    CHECK(checked(m, 2, "ewm_5") == doctest::Approx(state / m.scale_factor[2]));
    CHECK(checked(m, 3, "ewm_5") == doctest::Approx(state / m.scale_factor[3])); // carried
    state = (1.0 - alpha) * state + alpha * 0.0;
    CHECK(checked(m, 4, "ewm_5") == doctest::Approx(state / m.scale_factor[4]));
}

TEST_CASE("dispersion features use ddof-1 std and type-7 IQR") {
    std::vector<double> vals;
    for (int w = 1; w <= 13; ++w) vals.push_back(w);
    SalesPanel panel = one_item_panel(vals, std::vector<std::uint8_t>(13, 1));
    FeatureMatrix m = build_features(panel, FeatureSpec{});

    CHECK(is_missing(checked(m, 0, "std_8"))); // one observation
    const double sc1 = m.scale_factor[1];
    CHECK(checked(m, 1, "std_8") ==
          doctest::Approx(std::abs(2.0 - 1.0) / std::sqrt(2.0) / sc1));
    // weeks 6..13 -> sample std of 8 consecutive integers
    double mean = (6 + 7 + 8 + 9 + 10 + 11 + 12 + 13) / 8.0;
    double ss = 0.0;
    for (int v = 6; v <= 13; ++v) ss += (v - mean) * (v - mean);
    CHECK(checked(m, 12, "std_8") == doctest::Approx(std::sqrt(ss / 7.0) / m.scale_factor[12]));
    // 1..13: type-7 quartiles sit on 4 and 10
    CHECK(checked(m, 12, "iqr_13") == doctest::Approx(6.0 / m.scale_factor[12]));
    CHECK(is_missing(checked(m, 0, "iqr_13")));
}

TEST_CASE("fourier encoding is periodic in the ISO week") {
    SalesPanel panel = one_item_panel(std::vector<double>(60, 1.0),
                                      std::vector<std::uint8_t>(60, 1), "2021-01-04");
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    for (std::size_t w : {std::size_t{0}, std::size_t{25}, std::size_t{59}}) {
        const int woy = panel.axis().week_of_year(w);
        const int wf = std::min(woy, 52);
        for (int k = 1; k <= 3; ++k) {
            const double ang = 2.0 * std::numbers::pi * k * wf / 52.0;
            CHECK(checked(m, w, "fourier_sin_" + std::to_string(k)) == doctest::Approx(std::sin(ang)));
            CHECK(checked(m, w, "fourier_cos_" + std::to_string(k)) == doctest::Approx(std::cos(ang)));
        }
    }
}

TEST_CASE("week 53 folds onto the seasonal period for fourier only") {
    // 2020-12-28 is ISO week 53; the categorical keeps 53, fourier folds to 52.
    SalesPanel panel = one_item_panel(std::vector<double>(3, 1.0),
                                      std::vector<std::uint8_t>(3, 1), "2020-12-28");
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    CHECK(m.cat(0, 3) == 53);
    const double ang = 2.0 * std::numbers::pi * 1.0 * 52.0 / 52.0;
    CHECK(checked(m, 0, "fourier_cos_1") == doctest::Approx(std::cos(ang)));
    CHECK(checked(m, 0, "fourier_sin_1") == doctest::Approx(std::sin(ang)));
}

TEST_CASE("last year window averages weeks t-54..t-50") {
    std::vector<double> vals(60);
    for (std::size_t w = 0; w < vals.size(); ++w) vals[w] = static_cast<double>(w + 1);
    SalesPanel panel = one_item_panel(vals, std::vector<std::uint8_t>(60, 1));
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    CHECK(is_missing(checked(m, 49, "last_year_window")));
    // t=54: weeks 0..4 -> mean 3
    CHECK(checked(m, 54, "last_year_window") == doctest::Approx(3.0 / m.scale_factor[54]));
    // t=50: clamped to week 0 only
    CHECK(checked(m, 50, "last_year_window") == doctest::Approx(1.0 / m.scale_factor[50]));
}

TEST_CASE("targets are scaled future effective demand") {
    SalesPanel panel = one_item_panel({5, 7, 0, 9, 11}, {1, 1, 0, 1, 1});
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    REQUIRE(m.targets.size() == 3);
    CHECK(m.targets[0][0] == doctest::Approx(7.0 / m.scale_factor[0]));
    CHECK(is_missing(m.targets[0][1]));                    // week 2 masked
    CHECK(m.targets[1][1] == doctest::Approx(9.0 / m.scale_factor[1]));
    CHECK(m.targets[0][3] == doctest::Approx(11.0 / m.scale_factor[3]));
    CHECK(is_missing(m.targets[0][4]));                    // beyond the panel
    CHECK(is_missing(m.targets[2][3]));
    CHECK(m.targets[2][1] == doctest::Approx(11.0 / m.scale_factor[1]));
}

TEST_CASE("spike flag cell is missing on masked weeks") {
    SalesPanel panel = one_item_panel({2, 0, 2}, {1, 0, 1});
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    CHECK(is_missing(checked(m, 1, "spike_flag")));
    CHECK(is_missing(checked(m, 1, "robust_z")));
    CHECK(!is_missing(checked(m, 1, "time_since_spike")));
}

TEST_CASE("categorical ids map back to the catalog levels") {
    std::vector<ItemKey> items{{"S0", "A"}, {"S0", "B"}, {"S1", "A"}};
    std::vector<DaySerial> dates{*parse_iso_date("2022-01-03"), *parse_iso_date("2022-01-10")};
    std::vector<double> sales{1, 2, 3, 4, 5, 6};
    std::vector<std::uint8_t> flags(6, 1);
    SalesPanel panel(items, WeekAxis(dates), sales, flags);
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    REQUIRE(m.store_levels.size() == 2);
    REQUIRE(m.product_levels.size() == 2);
    REQUIRE(m.unique_levels.size() == 3);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        const ItemKey& key = items[m.item[r]];
        CHECK(m.store_levels[static_cast<std::size_t>(m.cat(r, 0))] == key.store);
        CHECK(m.product_levels[static_cast<std::size_t>(m.cat(r, 1))] == key.product);
        CHECK(m.unique_levels[static_cast<std::size_t>(m.cat(r, 2))] == key.unique_id());
    }
}

// ---------------------------------------------------------------------------
// causality and equivariance
// ---------------------------------------------------------------------------

TEST_CASE("features are causal: truncation does not change the past") {
    Rng rng(42);
    std::vector<double> vals(80);
    std::vector<std::uint8_t> flags(80, 1);
    for (std::size_t w = 0; w < vals.size(); ++w) {
        flags[w] = rng.uniform() < 0.85 ? 1 : 0;
        vals[w] = flags[w] ? static_cast<double>(rng.poisson(6.0)) : 0.0;
    }
    SalesPanel panel = one_item_panel(vals, flags);
    FeatureSpec spec;
    FeatureMatrix full = build_features(panel, spec);
    for (int t : {20, 40, 63, 79}) {
        FeatureMatrix part = build_features(panel.truncated(static_cast<std::size_t>(t) + 1), spec);
        const std::size_t row_full = full.row_of(0, t, panel.n_weeks());
        const std::size_t row_part = part.row_of(0, t, static_cast<std::size_t>(t) + 1);
        for (std::size_t j = 0; j < full.n_numeric(); ++j) {
            INFO("feature ", full.numeric_names[j], " at week ", t);
            CHECK(same_cell(full.num(row_full, j), part.num(row_part, j)));
        }
        CHECK(full.scale_factor[row_full] == part.scale_factor[row_part]);
    }
}

TEST_CASE("scaled features are invariant to a clip-free rescaling") {
    Rng rng(77);
    std::vector<double> vals(160);
    std::vector<std::uint8_t> flags(160, 1);
    for (std::size_t w = 0; w < vals.size(); ++w) {
        flags[w] = rng.uniform() < 0.9 ? 1 : 0;
        vals[w] = flags[w] ? 40.0 + static_cast<double>(rng.poisson(30.0)) : 0.0;
    }
    SalesPanel base = one_item_panel(vals, flags);
    FeatureSpec spec;
    FeatureMatrix m0 = build_features(base, spec);
    for (double c : {2.0, 10.0}) {
        std::vector<double> scaled_vals = vals;
        for (auto& v : scaled_vals) v *= c;
        FeatureMatrix mc = build_features(one_item_panel(scaled_vals, flags), spec);
        for (std::size_t r = 0; r < m0.n_rows; ++r) {
            CHECK(mc.scale_factor[r] == doctest::Approx(c * m0.scale_factor[r]).epsilon(1e-12));
            for (std::size_t j = 0; j < m0.n_numeric(); ++j) {
                if (!m0.numeric_is_scaled[j]) continue;
                const double a = m0.num(r, j), b = mc.num(r, j);
                if (is_missing(a)) {
                    CHECK(is_missing(b));
                } else {
                    CHECK(b == doctest::Approx(a).epsilon(1e-9));
                }
            }
            for (std::size_t h = 0; h < m0.targets.size(); ++h) {
                const double a = m0.targets[h][r], b = mc.targets[h][r];
                if (is_missing(a)) {
                    CHECK(is_missing(b));
                } else {
                    CHECK(b == doctest::Approx(a).epsilon(1e-9));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// imputation
// ---------------------------------------------------------------------------

namespace {

SalesPanel two_item_panel(std::size_t n_weeks, double a_value,
                          std::size_t b_start, double b_lo, double b_hi) {
    std::vector<ItemKey> items{{"S", "A"}, {"S", "B"}};
    std::vector<DaySerial> dates;
    const DaySerial d0 = *parse_iso_date("2021-01-04");
    for (std::size_t w = 0; w < n_weeks; ++w) dates.push_back(d0 + 7 * static_cast<long>(w));
    std::vector<double> sales;
    std::vector<std::uint8_t> flags;
    for (std::size_t w = 0; w < n_weeks; ++w) { // item A: constant, always stocked
        sales.push_back(a_value);
        flags.push_back(1);
    }
    for (std::size_t w = 0; w < n_weeks; ++w) { // item B: delayed start, alternating
        const bool live = w >= b_start;
        sales.push_back(live ? (w % 2 == 0 ? b_lo : b_hi) : 0.0);
        flags.push_back(live ? 1 : 0);
    }
    return SalesPanel(std::move(items), WeekAxis(std::move(dates)), std::move(sales),
                      std::move(flags));
}

} // namespace

TEST_CASE("imputation fills per-series first, then globally") {
    SalesPanel panel = two_item_panel(48, 10.0, 20, 1.0, 5.0);
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    const std::size_t std_col = m.numeric_index("std_8");

    // Record the medians the imputer should learn (cutoff 40).
    std::vector<double> a_vals, b_vals;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        if (m.week[r] > 40) continue;
        const double v = m.num(r, std_col);
        if (is_missing(v)) continue;
        (m.item[r] == 0 ? a_vals : b_vals).push_back(v);
    }
    REQUIRE(!a_vals.empty());
    REQUIRE(!b_vals.empty());
    std::sort(a_vals.begin(), a_vals.end());
    std::sort(b_vals.begin(), b_vals.end());
    auto median = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double a_med = median(a_vals);
    const double b_med = median(b_vals);
    CHECK(a_med != b_med); // constant vs alternating series

    const std::size_t a_row0 = m.row_of(0, 0, panel.n_weeks()); // one obs: missing std
    const std::size_t b_row0 = m.row_of(1, 0, panel.n_weeks());
    REQUIRE(is_missing(m.num(a_row0, std_col)));
    REQUIRE(is_missing(m.num(b_row0, std_col)));

    Imputer imp = impute(m, 40);
    CHECK(m.num(a_row0, std_col) == a_med);
    CHECK(m.num(b_row0, std_col) == b_med); // own median, not the pool's

    // Features with no finite value anywhere up to the cutoff fill with 0.
    const auto& fully = imp.fully_missing_features();
    CHECK(std::find(fully.begin(), fully.end(), "lag_52") != fully.end());
    CHECK(m.num(a_row0, m.numeric_index("lag_52")) == 0.0);

    // Nothing still missing, and a second application is a no-op.
    FeatureMatrix again = m;
    imp.apply(again);
    for (std::size_t r = 0; r < m.n_rows; ++r)
        for (std::size_t j = 0; j < m.n_numeric(); ++j) {
            CHECK(!is_missing(m.num(r, j)));
            CHECK(again.num(r, j) == m.num(r, j));
        }
}

TEST_CASE("a series unseen before the cutoff falls back to global medians") {
    SalesPanel panel = two_item_panel(60, 10.0, 30, 2.0, 8.0);
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    const std::size_t col = m.numeric_index("roll_mean_3");

    // Cutoff before B's launch: B contributes nothing to the fit.
    std::vector<double> pooled;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        if (m.week[r] > 20) continue;
        const double v = m.num(r, col);
        if (!is_missing(v)) pooled.push_back(v);
    }
    std::sort(pooled.begin(), pooled.end());
    const double global_med = pooled.size() % 2 == 1
                                  ? pooled[pooled.size() / 2]
                                  : 0.5 * (pooled[pooled.size() / 2 - 1] + pooled[pooled.size() / 2]);

    const std::size_t b_row = m.row_of(1, 5, panel.n_weeks());
    REQUIRE(is_missing(m.num(b_row, col)));
    Imputer imp = impute(m, 20);
    CHECK(m.num(b_row, col) == global_med);

    // Real post-cutoff values are left untouched.
    const std::size_t b_live = m.row_of(1, 40, panel.n_weeks());
    FeatureMatrix fresh = build_features(panel, FeatureSpec{});
    CHECK(m.num(b_live, col) == fresh.num(b_live, col));
}

TEST_CASE("imputer round trips through its parts") {
    SalesPanel panel = two_item_panel(30, 4.0, 5, 1.0, 3.0);
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    FeatureMatrix other = m;
    Imputer imp = Imputer::fit(m, 25);
    Imputer rebuilt = Imputer::from_parts(imp.feature_names(), imp.series_medians(),
                                          imp.global_medians(), imp.cutoff());
    imp.apply(m);
    rebuilt.apply(other);
    for (std::size_t k = 0; k < m.numeric.size(); ++k)
        CHECK(same_cell(m.numeric[k], other.numeric[k]));
}

TEST_CASE("imputer refuses a mismatched feature set") {
    SalesPanel panel = one_item_panel({1, 2, 3, 4}, {1, 1, 1, 1});
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    Imputer imp = Imputer::fit(m, 3);
    FeatureSpec other;
    other.ewm_spans = {7};
    FeatureMatrix m2 = build_features(panel, other);
    CHECK_THROWS_AS(imp.apply(m2), DataError);
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

TEST_CASE("feature export writes stable columns with empty missing cells") {
    SalesPanel panel = one_item_panel({3, 0, 5}, {1, 0, 1});
    FeatureMatrix m = build_features(panel, FeatureSpec{});
    const fs::path dir = fs::temp_directory_path() / "stockcast_test_export";
    fs::create_directories(dir);
    const std::string path = (dir / "features.csv").string();
    export_features_csv(m, panel, path);

    CsvTable t = read_csv(path);
    REQUIRE(t.n_rows() == m.n_rows);
    REQUIRE(t.header.size() >= 6 + m.n_numeric() + 2 + 3);
    CHECK(t.header[0] == "Store");
    CHECK(t.header[1] == "Product");
    CHECK(t.header[2] == "unique_id");
    CHECK(t.header[3] == "week_index");
    CHECK(t.header[4] == "week_date");
    CHECK(t.header[5] == "week_of_year");
    CHECK(t.header[6] == "lag_0");
    CHECK(t.header[t.header.size() - 1] == "target_h3");
    CHECK(t.header[t.header.size() - 4] == "observation_weight");

    // Masked week 1: lag_0 empty; week 2 row carries lag_2 = 3/scale.
    const std::size_t lag0_col = 6;
    CHECK(t.rows[1][lag0_col].empty());
    CHECK(std::stod(t.rows[0][lag0_col]) == doctest::Approx(3.0 / m.scale_factor[0]));
    CHECK(t.rows[2][4] == "2021-01-18");
}
