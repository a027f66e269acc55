#include "stockcast/policy.hpp"

#include "stockcast/csv.hpp"
#include "stockcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace stockcast {

double critical_fractile(const CostParams& costs) {
    costs.validate();
    const double denom = costs.shortage_cost + costs.holding_cost;
    if (!(denom > 0.0)) throw ConfigError("critical_fractile: both costs are zero");
    return costs.shortage_cost / denom;
}

double inv_norm_cdf(double q) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("inv_norm_cdf: q must be in (0, 1)");

    // Acklam's rational approximation, then one Halley step against the
    // erfc-based CDF to push the error well below 1e-9.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (q < p_low) {
        const double u = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    } else if (q <= 1.0 - p_low) {
        const double u = q - 0.5;
        const double r = u * u;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - q));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - q;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

PolicyParams PolicyParams::make(const CostParams& costs, double phi) {
    if (!(phi >= 0.0)) throw ConfigError("phi must be >= 0");
    PolicyParams p;
    p.costs = costs;
    p.critical_fractile = stockcast::critical_fractile(costs);
    p.safety_factor = inv_norm_cdf(p.critical_fractile);
    p.phi = phi;
    return p;
}

ProjectionResult project_inventory(const std::vector<long long>& end_inv,
                                   const std::vector<long long>& receipts_1,
                                   const std::vector<long long>& receipts_2,
                                   const ForecastSet& forecasts) {
    const std::size_t n = end_inv.size();
    if (receipts_1.size() != n || receipts_2.size() != n || forecasts.n_items() != n)
        throw DataError("project_inventory: mismatched item counts");

    ProjectionResult out;
    out.i_t1.resize(n);
    out.e_t1.resize(n);
    out.i_t2.resize(n);
    out.e_t2.resize(n);
    out.i_t3.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long long d1 = std::llround(forecasts.values[i][0]);
        const long long d2 = std::llround(forecasts.values[i][1]);
        if (end_inv[i] < 0 || receipts_1[i] < 0 || receipts_2[i] < 0 || d1 < 0 || d2 < 0)
            throw DataError("project_inventory: negative input");
        out.i_t1[i] = end_inv[i] + receipts_1[i];
        out.e_t1[i] = std::max(out.i_t1[i] - d1, 0LL);
        out.i_t2[i] = out.e_t1[i] + receipts_2[i];
        out.e_t2[i] = std::max(out.i_t2[i] - d2, 0LL);
        out.i_t3[i] = out.e_t2[i];
    }
    return out;
}

std::vector<double> target_stock(const std::vector<double>& d3, const PolicyParams& params) {
    std::vector<double> out(d3.size());
    for (std::size_t i = 0; i < d3.size(); ++i) {
        const double d = std::max(d3[i], 0.0);
        out[i] = d + params.safety_factor * params.phi * std::sqrt(d);
    }
    return out;
}

std::vector<long long> order_quantity(const std::vector<double>& target,
                                      const std::vector<long long>& projected) {
    if (target.size() != projected.size())
        throw DataError("order_quantity: mismatched item counts");
    std::vector<long long> out(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double q = std::floor(target[i] - static_cast<double>(projected[i]) + 0.5);
        out[i] = q > 0.0 ? static_cast<long long>(q) : 0LL;
    }
    return out;
}

std::vector<long long> policy_orders(const SimState& state, const ForecastSet& forecasts,
                                     const PolicyParams& params) {
    const std::size_t n = state.n_items();
    if (forecasts.n_items() != n) throw DataError("policy_orders: forecast size mismatch");
    const int lead = state.lead_time();
    if (lead + 1 > kHorizons)
        throw ConfigError("policy_orders: lead time exceeds the forecast horizon");

    // Roll the known arrivals and forecast demand forward to the delivery
    // week, then order up to the target there.
    std::vector<long long> projected(n);
    std::vector<double> d_delivery(n);
    for (std::size_t i = 0; i < n; ++i) {
        long long inv = state.on_hand(i) - state.receipts(i); // end of last week
        for (int j = 0; j < lead; ++j) {
            const long long arrive = j == 0 ? state.receipts(i) : state.pipeline(i, j);
            const long long dhat =
                std::llround(forecasts.values[i][static_cast<std::size_t>(j)]);
            inv = std::max(inv + arrive - dhat, 0LL);
        }
        projected[i] = inv;
        d_delivery[i] = forecasts.values[i][static_cast<std::size_t>(lead)];
    }
    return order_quantity(target_stock(d_delivery, params), projected);
}

std::vector<long long> benchmark_coverage_policy(const ForecastSet& baseline,
                                                 const SimState& state,
                                                 int coverage_weeks) {
    const std::size_t n = state.n_items();
    if (baseline.n_items() != n)
        throw DataError("benchmark_coverage_policy: forecast size mismatch");
    if (coverage_weeks < 1) throw ConfigError("coverage_weeks must be >= 1");

    std::vector<long long> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double weekly = std::max(baseline.values[i][kHorizons - 1], 0.0);
        const double position =
            static_cast<double>(state.on_hand(i) + state.in_transit_total(i));
        const double q = std::floor(coverage_weeks * weekly - position + 0.5);
        out[i] = q > 0.0 ? static_cast<long long>(q) : 0LL;
    }
    return out;
}

// ---------------------------------------------------------------------------
// phi calibration
// ---------------------------------------------------------------------------

std::vector<double> default_phi_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 60; ++k) grid.push_back(0.05 * k);
    return grid;
}

CalibrationResult calibrate_phi(const SalesPanel& panel,
                                const std::array<Ensemble, kHorizons>& models,
                                const FeatureMatrix& matrix,
                                const InventorySnapshot& init, const CostParams& costs,
                                int window_start, int window_end,
                                const std::vector<double>& grid) {
    costs.validate();
    if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()))
        throw ConfigError("phi grid must be non-empty and sorted");
    if (window_start < 1 || window_end >= static_cast<int>(panel.n_weeks()) ||
        window_start > window_end)
        throw DataError("calibration window outside history");
    const int window_len = window_end - window_start + 1;
    if (window_len < costs.lead_time_weeks + 1)
        throw DataError("calibration window shorter than lead_time + 1 weeks");
    const int horizon = window_len - costs.lead_time_weeks;

    // Demand replayed as observed sales over the window.
    std::vector<std::vector<long long>> trace(static_cast<std::size_t>(window_len),
                                              std::vector<long long>(panel.n_items()));
    for (int w = 0; w < window_len; ++w)
        for (std::size_t i = 0; i < panel.n_items(); ++i)
            trace[static_cast<std::size_t>(w)][i] = std::llround(
                panel.sales(i, static_cast<std::size_t>(window_start + w)));

    // Frozen models make each epoch's forecast independent of inventory, so
    // one pass serves every grid point.
    std::vector<ForecastSet> epoch_forecasts;
    epoch_forecasts.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t)
        epoch_forecasts.push_back(
            postprocess(predict_horizons(models, matrix, window_start + t - 1)));

    CalibrationResult result;
    double best_cost = std::numeric_limits<double>::infinity();
    for (double phi : grid) {
        const PolicyParams params = PolicyParams::make(costs, phi);
        const CostLedger ledger = run_episode(
            trace, init,
            [&](const SimState& state, int week) {
                return policy_orders(state, epoch_forecasts[static_cast<std::size_t>(week)],
                                     params);
            },
            costs, horizon);
        const double cost = total_cost(ledger);
        result.curve.push_back({phi, cost});
        if (cost < best_cost) { // strict: ties keep the smallest phi
            best_cost = cost;
            result.phi = phi;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Order sheets
// ---------------------------------------------------------------------------

void save_orders_csv(const std::vector<long long>& orders, const SalesPanel& panel,
                     int decision_week, const std::string& path) {
    if (orders.size() != panel.n_items())
        throw DataError("order sheet size does not match the panel");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << "Store,Product,decision_week,order_qty\n";
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const auto& key = panel.items()[i];
        out << key.store << ',' << key.product << ',' << decision_week << ',' << orders[i]
            << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<long long> load_orders_csv(const std::string& path, const SalesPanel& panel) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 4 || table.header[0] != "Store" ||
        table.header[1] != "Product" || table.header[3] != "order_qty")
        throw DataError(path + ": expected header Store,Product,decision_week,order_qty");

    std::vector<long long> orders(panel.n_items());
    std::vector<char> seen(panel.n_items(), 0);
    for (const auto& row : table.rows) {
        if (row.size() < 4) throw DataError(path + ": short row");
        const std::size_t item = panel.find({row[0], row[1]});
        if (item == SalesPanel::npos)
            throw DataError(path + ": unknown item " + row[0] + "/" + row[1]);
        long long qty = 0;
        try {
            qty = std::stoll(row[3]);
        } catch (const std::exception&) {
            throw DataError(path + ": bad order quantity '" + row[3] + "'");
        }
        if (qty < 0) throw DataError(path + ": negative order quantity");
        orders[item] = qty;
        seen[item] = 1;
    }
    for (std::size_t i = 0; i < panel.n_items(); ++i)
        if (!seen[i])
            throw DataError(path + ": missing item " + panel.items()[i].unique_id());
    return orders;
}

} // namespace stockcast
