#include "stockcast/synth.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace stockcast {

void SyntheticSpec::validate() const {
    if (n_items < 1) throw ConfigError("n_items must be >= 1");
    if (n_weeks < 2) throw ConfigError("n_weeks must be >= 2");
    if (!(scale_lo > 0.0 && scale_hi >= scale_lo)) throw ConfigError("bad scale range");
    auto prob_range = [](double lo, double hi, const char* what) {
        if (!(lo >= 0.0 && hi >= lo && hi <= 1.0))
            throw ConfigError(std::string("bad ") + what + " range");
    };
    prob_range(zero_prob_lo, zero_prob_hi, "zero_prob");
    if (!(seasonal_amp_lo >= 0.0 && seasonal_amp_hi >= seasonal_amp_lo))
        throw ConfigError("bad seasonal_amp range");
    if (!(trend_hi >= trend_lo)) throw ConfigError("bad trend range");
    if (!(stockout_rate >= 0.0 && stockout_rate < 1.0))
        throw ConfigError("stockout_rate must be in [0, 1)");
    if (!(delayed_start_prob >= 0.0 && delayed_start_prob <= 1.0))
        throw ConfigError("delayed_start_prob must be in [0, 1]");
    const auto d = parse_iso_date(start_date);
    if (!d) throw ConfigError("start_date is not an ISO date: " + start_date);
    if (!is_monday(*d)) throw ConfigError("start_date must be a Monday");
}

SalesPanel synth_panel(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n_items = static_cast<std::size_t>(spec.n_items);
    const std::size_t n_weeks = static_cast<std::size_t>(spec.n_weeks);

    const DaySerial start = *parse_iso_date(spec.start_date); // validated above
    std::vector<DaySerial> mondays(n_weeks);
    for (std::size_t w = 0; w < n_weeks; ++w)
        mondays[w] = start + 7 * static_cast<DaySerial>(w);

    std::vector<ItemKey> items(n_items);
    std::vector<double> sales(n_items * n_weeks, 0.0);
    std::vector<std::uint8_t> in_stock(n_items * n_weeks, 1);

    for (std::size_t i = 0; i < n_items; ++i) {
        items[i] = {"S" + std::to_string(i % 7), "P" + std::to_string(i)};
        Rng rng = Rng::substream(spec.seed, "synth_item", i);

        const double mu = rng.log_uniform(spec.scale_lo, spec.scale_hi);
        const double zero_prob = rng.uniform(spec.zero_prob_lo, spec.zero_prob_hi);
        const double amp = rng.uniform(spec.seasonal_amp_lo, spec.seasonal_amp_hi);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double trend = rng.uniform(spec.trend_lo, spec.trend_hi);
        std::size_t start_week = 0;
        if (rng.bernoulli(spec.delayed_start_prob))
            start_week = static_cast<std::size_t>(
                rng.uniform_int(1, std::max(1L, static_cast<long>(n_weeks) / 3)));

        for (std::size_t w = 0; w < n_weeks; ++w) {
            const std::size_t cell = i * n_weeks + w;
            if (w < start_week) {
                in_stock[cell] = 0; // not on the shelf yet
                continue;
            }
            const double season =
                1.0 + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(w) / 52.0 +
                                     phase);
            const double drift =
                1.0 + trend * static_cast<double>(w) / static_cast<double>(n_weeks - 1);
            const double level = std::max(mu * season * drift, 0.0);

            // Zero-inflation thins the item's mean: intermittent series are
            // low-volume, not bursty.
            long long demand = 0;
            if (!rng.bernoulli(zero_prob)) demand = std::max(rng.poisson(level), 0L);
            if (rng.bernoulli(spec.stockout_rate)) {
                in_stock[cell] = 0; // stocked out: no sales can be observed
            } else {
                sales[cell] = static_cast<double>(demand);
            }
        }
    }
    return SalesPanel(std::move(items), WeekAxis(std::move(mondays)), std::move(sales),
                      std::move(in_stock));
}

InventorySnapshot synth_snapshot(const SalesPanel& panel, const SyntheticSpec& spec,
                                 int lead_time_weeks) {
    if (lead_time_weeks < 1) throw ConfigError("lead_time_weeks must be >= 1");
    InventorySnapshot snap = InventorySnapshot::zero(panel.n_items(), lead_time_weeks);
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        Rng rng = Rng::substream(spec.seed, "synth_inventory", i);
        double mean = 0.0;
        std::size_t n = 0;
        for (std::size_t w = 0; w < panel.n_weeks(); ++w)
            if (panel.in_stock(i, w)) {
                mean += panel.sales(i, w);
                ++n;
            }
        mean = n > 0 ? mean / static_cast<double>(n) : 0.0;
        snap.on_hand[i] = std::max(rng.poisson(1.5 * mean), 0L);
        for (int k = 0; k < lead_time_weeks; ++k)
            snap.in_transit[i][static_cast<std::size_t>(k)] =
                std::max(rng.poisson(0.5 * mean), 0L);
    }
    return snap;
}

} // namespace stockcast
