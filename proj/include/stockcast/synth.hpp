#pragma once

#include "stockcast/dates.hpp"
#include "stockcast/panel.hpp"

#include <cstdint>

namespace stockcast {

// Per-item regimes are drawn from these ranges, mimicking a retail panel:
// heterogeneous scale, intermittency, sinusoidal seasonality, linear trend,
// random stockouts, and delayed starts.
struct SyntheticSpec {
    int n_items = 40;
    int n_weeks = 120;
    std::string start_date = "2021-04-12"; // a Monday
    double scale_lo = 0.5; // mean weekly sales, log-uniform
    double scale_hi = 80.0;
    double zero_prob_lo = 0.0; // extra zero-inflation on top of Poisson
    double zero_prob_hi = 0.8;
    double seasonal_amp_lo = 0.0;
    double seasonal_amp_hi = 0.6;
    double trend_lo = -0.3; // relative drift across the horizon
    double trend_hi = 0.5;
    double stockout_rate = 0.08;
    double delayed_start_prob = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

SalesPanel synth_panel(const SyntheticSpec& spec);

// A plausible starting position: roughly a week and a half of demand on
// hand, half a week in each pipeline slot. Deterministic in the seed.
InventorySnapshot synth_snapshot(const SalesPanel& panel, const SyntheticSpec& spec,
                                 int lead_time_weeks);

} // namespace stockcast
