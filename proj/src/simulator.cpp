#include "stockcast/simulator.hpp"

#include "stockcast/csv.hpp"
#include "stockcast/errors.hpp"

#include <fstream>
#include <stdexcept>

namespace stockcast {

SimState::SimState(std::size_t n_items, int lead_time_weeks) : lead_(lead_time_weeks) {
    if (lead_ < 1) throw ConfigError("lead_time_weeks must be >= 1");
    on_hand_.assign(n_items, 0);
    receipts_.assign(n_items, 0);
    pipeline_.assign(n_items, std::vector<long long>(static_cast<std::size_t>(lead_), 0));
}

SimState SimState::from_snapshot(const InventorySnapshot& snapshot, int lead_time_weeks) {
    SimState s(snapshot.on_hand.size(), lead_time_weeks);
    for (std::size_t i = 0; i < s.n_items(); ++i) {
        // The snapshot is an end-of-week view: on_hand plus the offset-1
        // arrival form the first simulated week's starting stock.
        long long r1 = snapshot.in_transit_at(i, 1);
        s.on_hand_[i] = snapshot.on_hand[i] + r1;
        s.receipts_[i] = r1;
        for (int k = 2; k <= lead_time_weeks; ++k)
            s.pipeline_[i][static_cast<std::size_t>(k - 2)] = snapshot.in_transit_at(i, k);
    }
    return s;
}

long long SimState::pipeline(std::size_t item, int offset) const {
    if (offset < 1 || offset > lead_) return 0;
    return pipeline_[item][static_cast<std::size_t>(offset - 1)];
}

long long SimState::in_transit_total(std::size_t item) const {
    long long total = 0;
    for (long long q : pipeline_[item]) total += q;
    return total;
}

void SimState::place_order(const std::vector<long long>& orders) {
    if (orders.size() != n_items()) throw std::invalid_argument("order vector size mismatch");
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (orders[i] < 0) throw std::invalid_argument("negative order quantity");
        pipeline_[i][static_cast<std::size_t>(lead_ - 1)] += orders[i];
    }
}

WeekOutcome step_week(SimState& state, const std::vector<long long>& demand,
                      const std::vector<long long>& orders, const CostParams& costs) {
    std::size_t n = state.n_items();
    if (demand.size() != n || orders.size() != n)
        throw std::invalid_argument("demand/order vector size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (demand[i] < 0) throw std::invalid_argument("negative demand");
        if (orders[i] < 0) throw std::invalid_argument("negative order quantity");
    }

    WeekOutcome out;
    out.demand = demand;
    out.orders = orders;
    out.receipts = state.receipts_;
    out.sales.resize(n);
    out.lost.resize(n);
    out.ending.resize(n);

    double shortage = 0.0, holding = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        long long on_hand = state.on_hand_[i];
        long long sales = std::min(on_hand, demand[i]);
        long long lost = demand[i] - sales;
        long long ending = on_hand - sales;
        out.sales[i] = sales;
        out.lost[i] = lost;
        out.ending[i] = ending;
        shortage += costs.shortage_cost * static_cast<double>(lost);
        holding += costs.holding_cost * static_cast<double>(ending);
    }
    out.week_cost = shortage + holding;
    state.ledger_.shortage_total += shortage;
    state.ledger_.holding_total += holding;

    // Advance: consume the next receipt slot, shift the pipeline, and book
    // the end-of-week order into the freed slot (arrival week + lead + 1).
    for (std::size_t i = 0; i < n; ++i) {
        long long receipt = state.pipeline_[i][0];
        for (int j = 0; j + 1 < state.lead_; ++j)
            state.pipeline_[i][static_cast<std::size_t>(j)] =
                state.pipeline_[i][static_cast<std::size_t>(j + 1)];
        state.pipeline_[i][static_cast<std::size_t>(state.lead_ - 1)] = orders[i];
        state.on_hand_[i] = out.ending[i] + receipt;
        state.receipts_[i] = receipt;
    }
    state.week_ += 1;
    state.ledger_.per_week.push_back(out);
    return out;
}

CostLedger run_episode(const std::vector<std::vector<long long>>& demand_trace,
                       const InventorySnapshot& init, const OrderingPolicy& policy,
                       const CostParams& costs, int horizon) {
    costs.validate();
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    int total_weeks = horizon + costs.lead_time_weeks;
    if (demand_trace.size() < static_cast<std::size_t>(total_weeks))
        throw std::invalid_argument("demand trace shorter than horizon + lead_time weeks");

    SimState state = SimState::from_snapshot(init, costs.lead_time_weeks);
    std::vector<long long> no_orders(state.n_items(), 0);
    for (int t = 0; t < total_weeks; ++t) {
        std::vector<long long> placed = no_orders;
        if (t < horizon) {
            placed = policy(state, t);
            if (placed.size() != state.n_items())
                throw std::invalid_argument("policy returned wrong number of orders");
            for (long long q : placed) {
                if (q < 0) throw std::invalid_argument("policy returned negative order");
            }
            state.place_order(placed);
        }
        step_week(state, demand_trace[static_cast<std::size_t>(t)], no_orders, costs);
        state.ledger().per_week.back().orders = placed;
    }
    return state.ledger();
}

void write_episode_report(const CostLedger& ledger, const std::vector<ItemKey>& items,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "week,item,demand,sales,lost,ending,receipts,order,week_cost\n";
    for (std::size_t w = 0; w < ledger.per_week.size(); ++w) {
        const auto& wk = ledger.per_week[w];
        for (std::size_t i = 0; i < items.size(); ++i) {
            out << w << ',' << items[i].unique_id() << ',' << wk.demand[i] << ','
                << wk.sales[i] << ',' << wk.lost[i] << ',' << wk.ending[i] << ','
                << wk.receipts[i] << ',' << wk.orders[i] << ','
                << format_number(wk.week_cost) << '\n';
        }
    }
    out << "summary,shortage_total=" << format_number(ledger.shortage_total)
        << ",holding_total=" << format_number(ledger.holding_total)
        << ",total=" << format_number(total_cost(ledger)) << ",,,,,\n";
}

} // namespace stockcast
