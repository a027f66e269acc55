#pragma once

#include "stockcast/panel.hpp"

#include <functional>
#include <string>
#include <vector>

namespace stockcast {

// Outcome of one simulated week across all items. In episode reports the
// `orders` column carries the order placed at the decision epoch that opened
// the week (end of the previous week).
struct WeekOutcome {
    std::vector<long long> demand;
    std::vector<long long> sales;
    std::vector<long long> lost;
    std::vector<long long> ending;
    std::vector<long long> receipts; // arrived at the start of this week
    std::vector<long long> orders;
    double week_cost = 0.0;
};

struct CostLedger {
    double shortage_total = 0.0;
    double holding_total = 0.0;
    std::vector<WeekOutcome> per_week;
};

inline double total_cost(const CostLedger& ledger) {
    return ledger.shortage_total + ledger.holding_total;
}

// State of one episode. on_hand is the start-of-week stock after receipts;
// pipeline[i][j] arrives at the start of week (week + 1 + j).
class SimState {
public:
    SimState(std::size_t n_items, int lead_time_weeks);
    static SimState from_snapshot(const InventorySnapshot& snapshot, int lead_time_weeks);

    int week() const { return week_; }
    std::size_t n_items() const { return on_hand_.size(); }
    int lead_time() const { return lead_; }
    long long on_hand(std::size_t item) const { return on_hand_[item]; }
    long long receipts(std::size_t item) const { return receipts_[item]; }
    // Quantity arriving at the start of week (week + offset), offset in [1, lead].
    long long pipeline(std::size_t item, int offset) const;
    long long in_transit_total(std::size_t item) const;

    const CostLedger& ledger() const { return ledger_; }
    CostLedger& ledger() { return ledger_; }

    // Books an order at the decision epoch preceding this week's demand
    // (placed at the end of week() - 1), arriving at the start of
    // week() + lead. The last controllable slot of the pipeline.
    void place_order(const std::vector<long long>& orders);

private:
    friend WeekOutcome step_week(SimState&, const std::vector<long long>&,
                                 const std::vector<long long>&, const CostParams&);
    int week_ = 0;
    int lead_;
    std::vector<long long> on_hand_;
    std::vector<long long> receipts_;               // arrived at start of current week
    std::vector<std::vector<long long>> pipeline_;  // [item][0..lead-1]
    CostLedger ledger_;
};

// Applies one week of lost-sales dynamics: sales = min(on_hand, demand),
// lost = demand - sales, ending = on_hand - sales; charges
// shortage_cost * lost + holding_cost * ending; enqueues `orders` (placed at
// the end of the stepped week) to arrive at the start of week + lead + 1;
// advances with on_hand = ending + next week's receipts. In-transit stock is
// never charged holding cost.
WeekOutcome step_week(SimState& state, const std::vector<long long>& demand,
                      const std::vector<long long>& orders, const CostParams& costs);

using OrderingPolicy =
    std::function<std::vector<long long>(const SimState& state, int week)>;

// Runs `horizon` decision rounds followed by lead_time zero-order drain weeks
// so every delivery is costed. Each round consults the policy on the
// pre-demand state of the week, books the order via place_order (arrival
// lead weeks later), then realizes the week's demand. demand_trace must
// cover horizon + lead_time weeks.
CostLedger run_episode(const std::vector<std::vector<long long>>& demand_trace,
                       const InventorySnapshot& init, const OrderingPolicy& policy,
                       const CostParams& costs, int horizon);

// Episode report: week,item,demand,sales,lost,ending,receipts,order,week_cost
// rows plus a trailing summary line with the cost totals.
void write_episode_report(const CostLedger& ledger, const std::vector<ItemKey>& items,
                          const std::string& path);

} // namespace stockcast
