#pragma once

#include "stockcast/forecast.hpp"
#include "stockcast/panel.hpp"
#include "stockcast/simulator.hpp"

#include <string>
#include <vector>

namespace stockcast {

// Cost-derived service level and the global uncertainty multiplier phi.
struct PolicyParams {
    CostParams costs;
    double critical_fractile = 0.0; // q* = c_s / (c_s + c_h)
    double safety_factor = 0.0;     // z_q = inverse normal CDF of q*
    double phi = 1.0;

    static PolicyParams make(const CostParams& costs, double phi);
};

double critical_fractile(const CostParams& costs);

// Inverse standard-normal CDF, |error| <= 1e-9 on (0, 1).
double inv_norm_cdf(double q);

// Projected inventory through the protection period, per item.
struct ProjectionResult {
    std::vector<long long> i_t1; // E_t + R_{t+1}
    std::vector<long long> e_t1; // max(i_t1 - D1, 0)
    std::vector<long long> i_t2; // e_t1 + R_{t+2}
    std::vector<long long> e_t2; // max(i_t2 - D2, 0)
    std::vector<long long> i_t3; // projected start-of-delivery-week stock
};

// Forecasts must be post-processed (integral, >= 0).
ProjectionResult project_inventory(const std::vector<long long>& end_inv,
                                   const std::vector<long long>& receipts_1,
                                   const std::vector<long long>& receipts_2,
                                   const ForecastSet& forecasts);

// B = D3 + z * phi * sqrt(D3): order-up-to target for the delivery week.
std::vector<double> target_stock(const std::vector<double>& d3, const PolicyParams& params);

// Q = max(round-half-up(B - projected), 0).
std::vector<long long> order_quantity(const std::vector<double>& target,
                                      const std::vector<long long>& projected);

// One decision epoch: forecasts at the last observed week -> orders.
std::vector<long long> policy_orders(const SimState& state, const ForecastSet& forecasts,
                                     const PolicyParams& params);

// Benchmark: order up to coverage_weeks of the baseline h=3 weekly forecast,
// net of inventory position.
std::vector<long long> benchmark_coverage_policy(const ForecastSet& baseline,
                                                 const SimState& state,
                                                 int coverage_weeks = 4);

// ---------------------------------------------------------------------------
// phi calibration
// ---------------------------------------------------------------------------

struct PhiCurvePoint {
    double phi = 0.0;
    double cost = 0.0;
};

struct CalibrationResult {
    double phi = 0.0;
    std::vector<PhiCurvePoint> curve;
};

std::vector<double> default_phi_grid(); // 0.0 to 3.0 step 0.05

// Replay [window_start, window_end] for each grid phi with orders from this
// policy and frozen models; pick the argmin-cost phi (ties: smallest).
// Forecasts depend only on history, so they are computed once per epoch and
// shared across the grid.
CalibrationResult calibrate_phi(const SalesPanel& panel,
                                const std::array<Ensemble, kHorizons>& models,
                                const FeatureMatrix& matrix,
                                const InventorySnapshot& init, const CostParams& costs,
                                int window_start, int window_end,
                                const std::vector<double>& grid);

void save_orders_csv(const std::vector<long long>& orders, const SalesPanel& panel,
                     int decision_week, const std::string& path);
std::vector<long long> load_orders_csv(const std::string& path, const SalesPanel& panel);

} // namespace stockcast
