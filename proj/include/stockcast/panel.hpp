#pragma once

#include "stockcast/dates.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace stockcast {

inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

// One store-product series.
struct ItemKey {
    std::string store;
    std::string product;

    bool operator==(const ItemKey&) const = default;
    auto operator<=>(const ItemKey&) const = default;
    std::string unique_id() const { return store + "_" + product; }
};

// Ordered weekly axis. Every date is the Monday starting that week.
class WeekAxis {
public:
    WeekAxis() = default;
    explicit WeekAxis(std::vector<DaySerial> start_dates);

    std::size_t size() const { return start_dates_.size(); }
    DaySerial date(std::size_t week) const { return start_dates_[week]; }
    int week_of_year(std::size_t week) const { return iso_week(start_dates_[week]); }
    const std::vector<DaySerial>& start_dates() const { return start_dates_; }

private:
    std::vector<DaySerial> start_dates_;
};

// Effective demand view of one series: observed sales where the item was on
// the shelf, missing (NaN) where it was not.
struct EffectiveSeries {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t w) const { return values[w]; }
};

struct CellRef {
    std::size_t item = 0;
    std::size_t week = 0;
};

// Sales/flag consistency findings collected at load. Structural defects
// abort the load; these do not.
struct PanelValidation {
    std::vector<CellRef> stocked_out_sales; // in_stock=false but sales > 0

    bool clean() const { return stocked_out_sales.empty(); }
};

// Weekly sales history with on-shelf availability for all series.
// Immutable after load; safe to share across threads.
class SalesPanel {
public:
    SalesPanel() = default;
    SalesPanel(std::vector<ItemKey> items, WeekAxis axis,
               std::vector<double> sales, std::vector<std::uint8_t> in_stock);

    std::size_t n_items() const { return items_.size(); }
    std::size_t n_weeks() const { return axis_.size(); }
    const std::vector<ItemKey>& items() const { return items_; }
    const WeekAxis& axis() const { return axis_; }

    double sales(std::size_t item, std::size_t week) const {
        return sales_[item * n_weeks() + week];
    }
    bool in_stock(std::size_t item, std::size_t week) const {
        return in_stock_[item * n_weeks() + week] != 0;
    }

    // Row index for a key, or npos.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find(const ItemKey& key) const;

    EffectiveSeries effective(std::size_t item) const;

    // Truncated copy covering weeks [0, n_weeks_keep).
    SalesPanel truncated(std::size_t n_weeks_keep) const;

    bool operator==(const SalesPanel& other) const;

private:
    std::vector<ItemKey> items_;
    WeekAxis axis_;
    std::vector<double> sales_;         // item-major
    std::vector<std::uint8_t> in_stock_; // item-major
    std::map<ItemKey, std::size_t> index_;
};

// Cost structure of the replenishment problem.
struct CostParams {
    double shortage_cost = 1.0; // per unit of lost sales
    double holding_cost = 0.2;  // per unit of end-of-week on-hand stock
    int lead_time_weeks = 2;

    void validate() const;
};

// On-hand and in-transit stock per item at a decision boundary.
// in_transit[i][k] arrives k+1 week-starts after the boundary.
struct InventorySnapshot {
    std::vector<long long> on_hand;
    std::vector<std::vector<long long>> in_transit;

    static InventorySnapshot zero(std::size_t n_items, int lead_time_weeks);
    long long in_transit_at(std::size_t item, int offset) const; // offset >= 1
};

// ---------------------------------------------------------------------------
// Loading / saving
// ---------------------------------------------------------------------------

// Wide CSV pair: Store,Product,<ISO Monday>... with sales cells in one file
// and true/false (or 1/0) availability cells in the other. Both files must
// describe the same items and weeks. Consistency violations (sales recorded
// in a stocked-out week) are reported, not fatal.
SalesPanel load_sales_wide(const std::string& sales_path, const std::string& flags_path,
                           PanelValidation* report = nullptr);

void save_sales_wide(const SalesPanel& panel, const std::string& sales_path,
                     const std::string& flags_path);

// Snapshot CSV: Store,Product,on_hand,arrive_w1,arrive_w2. Items must match
// the panel; missing offsets load as zero.
InventorySnapshot load_inventory_snapshot(const std::string& path, const SalesPanel& panel,
                                          int lead_time_weeks);

void save_inventory_snapshot(const InventorySnapshot& snapshot, const SalesPanel& panel,
                             const std::string& path);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct PanelDiagnostics {
    std::size_t n_items = 0;
    std::size_t n_weeks = 0;
    double zero_rate = 0.0;         // share of item-weeks with zero sales
    double stockout_rate = 0.0;     // share of item-weeks not in stock
    double min_item_mean_sales = 0.0;
    double max_item_mean_sales = 0.0;
    // Index of the first week with a sale per item; -1 when the item never sells.
    std::vector<long> first_sale_week;
    std::size_t items_selling_from_week0 = 0;
    std::size_t items_with_delayed_start = 0;
};

PanelDiagnostics panel_diagnostics(const SalesPanel& panel);

} // namespace stockcast
