#include "stockcast/panel.hpp"

#include "stockcast/csv.hpp"
#include "stockcast/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace stockcast {

// ---------------------------------------------------------------------------
// WeekAxis
// ---------------------------------------------------------------------------

WeekAxis::WeekAxis(std::vector<DaySerial> start_dates) : start_dates_(std::move(start_dates)) {
    for (std::size_t i = 0; i < start_dates_.size(); ++i) {
        if (!is_monday(start_dates_[i]))
            throw DataError("week column " + format_iso_date(start_dates_[i]) + " is not a Monday");
        if (i > 0 && start_dates_[i] - start_dates_[i - 1] != 7)
            throw DataError("week columns not contiguous at " + format_iso_date(start_dates_[i]));
    }
}

// ---------------------------------------------------------------------------
// SalesPanel
// ---------------------------------------------------------------------------

SalesPanel::SalesPanel(std::vector<ItemKey> items, WeekAxis axis,
                       std::vector<double> sales, std::vector<std::uint8_t> in_stock)
    : items_(std::move(items)), axis_(std::move(axis)),
      sales_(std::move(sales)), in_stock_(std::move(in_stock)) {
    if (sales_.size() != items_.size() * axis_.size() || in_stock_.size() != sales_.size())
        throw DataError("panel shape mismatch");
    for (std::size_t i = 0; i < items_.size(); ++i) {
        auto [it, inserted] = index_.emplace(items_[i], i);
        if (!inserted)
            throw DataError("duplicate item " + items_[i].unique_id());
    }
    for (double v : sales_) {
        if (!(v >= 0.0)) throw DataError("negative or non-finite sales value");
    }
}

std::size_t SalesPanel::find(const ItemKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? npos : it->second;
}

EffectiveSeries SalesPanel::effective(std::size_t item) const {
    EffectiveSeries s;
    s.values.resize(n_weeks());
    for (std::size_t w = 0; w < n_weeks(); ++w)
        s.values[w] = in_stock(item, w) ? sales(item, w) : missing_value();
    return s;
}

SalesPanel SalesPanel::truncated(std::size_t n_weeks_keep) const {
    n_weeks_keep = std::min(n_weeks_keep, n_weeks());
    std::vector<DaySerial> dates(axis_.start_dates().begin(),
                                 axis_.start_dates().begin() + static_cast<long>(n_weeks_keep));
    std::vector<double> sales(items_.size() * n_weeks_keep);
    std::vector<std::uint8_t> flags(items_.size() * n_weeks_keep);
    for (std::size_t i = 0; i < items_.size(); ++i) {
        for (std::size_t w = 0; w < n_weeks_keep; ++w) {
            sales[i * n_weeks_keep + w] = this->sales(i, w);
            flags[i * n_weeks_keep + w] = in_stock(i, w) ? 1 : 0;
        }
    }
    return SalesPanel(items_, WeekAxis(std::move(dates)), std::move(sales), std::move(flags));
}

bool SalesPanel::operator==(const SalesPanel& other) const {
    return items_ == other.items_ && axis_.start_dates() == other.axis_.start_dates() &&
           sales_ == other.sales_ && in_stock_ == other.in_stock_;
}

// ---------------------------------------------------------------------------
// CostParams / InventorySnapshot
// ---------------------------------------------------------------------------

void CostParams::validate() const {
    if (!(shortage_cost > 0.0)) throw ConfigError("shortage_cost must be > 0");
    if (!(holding_cost >= 0.0)) throw ConfigError("holding_cost must be >= 0");
    if (lead_time_weeks < 1) throw ConfigError("lead_time_weeks must be >= 1");
}

InventorySnapshot InventorySnapshot::zero(std::size_t n_items, int lead_time_weeks) {
    InventorySnapshot s;
    s.on_hand.assign(n_items, 0);
    s.in_transit.assign(n_items, std::vector<long long>(static_cast<std::size_t>(lead_time_weeks), 0));
    return s;
}

long long InventorySnapshot::in_transit_at(std::size_t item, int offset) const {
    const auto& q = in_transit[item];
    if (offset < 1 || static_cast<std::size_t>(offset) > q.size()) return 0;
    return q[static_cast<std::size_t>(offset - 1)];
}

// ---------------------------------------------------------------------------
// Wide-format IO
// ---------------------------------------------------------------------------

namespace {

struct WideFile {
    std::vector<ItemKey> items;
    std::vector<DaySerial> dates;
    std::vector<std::vector<std::string>> cells; // [item][week]
};

WideFile read_wide(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.size() < 3 || table.header[0] != "Store" || table.header[1] != "Product")
        throw DataError(path + ": header must start with Store,Product followed by week dates");
    WideFile wf;
    for (std::size_t c = 2; c < table.header.size(); ++c) {
        auto d = parse_iso_date(table.header[c]);
        if (!d) throw DataError(path + ": malformed date header '" + table.header[c] + "'");
        wf.dates.push_back(*d);
    }
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw DataError(path + ": row width mismatch for item " +
                            (row.empty() ? "?" : row[0]));
        wf.items.push_back({row[0], row[1]});
        wf.cells.emplace_back(row.begin() + 2, row.end());
    }
    return wf;
}

double parse_sales_cell(const std::string& cell, const std::string& context) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0' || !std::isfinite(v))
        throw DataError("malformed sales value '" + cell + "' at " + context);
    if (v < 0.0) throw DataError("negative sales value at " + context);
    return v;
}

bool parse_flag_cell(std::string cell, const std::string& context) {
    std::transform(cell.begin(), cell.end(), cell.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (cell == "true" || cell == "1") return true;
    if (cell == "false" || cell == "0") return false;
    throw DataError("malformed in-stock value '" + cell + "' at " + context);
}

} // namespace

SalesPanel load_sales_wide(const std::string& sales_path, const std::string& flags_path,
                           PanelValidation* report) {
    WideFile sales_file = read_wide(sales_path);
    WideFile flags_file = read_wide(flags_path);

    if (sales_file.dates != flags_file.dates)
        throw DataError("week columns differ between sales and in-stock files");
    if (sales_file.items != flags_file.items)
        throw DataError("item rows differ between sales and in-stock files");
    if (sales_file.items.empty()) throw DataError(sales_path + ": no items");

    std::size_t n_items = sales_file.items.size();
    std::size_t n_weeks = sales_file.dates.size();
    std::vector<double> sales(n_items * n_weeks);
    std::vector<std::uint8_t> flags(n_items * n_weeks);
    PanelValidation local;
    for (std::size_t i = 0; i < n_items; ++i) {
        for (std::size_t w = 0; w < n_weeks; ++w) {
            std::string ctx = sales_file.items[i].unique_id() + "/" +
                              format_iso_date(sales_file.dates[w]);
            double v = parse_sales_cell(sales_file.cells[i][w], ctx);
            bool stocked = parse_flag_cell(flags_file.cells[i][w], ctx);
            sales[i * n_weeks + w] = v;
            flags[i * n_weeks + w] = stocked ? 1 : 0;
            if (!stocked && v > 0.0) local.stocked_out_sales.push_back({i, w});
        }
    }
    if (report) *report = std::move(local);
    return SalesPanel(std::move(sales_file.items), WeekAxis(std::move(sales_file.dates)),
                      std::move(sales), std::move(flags));
}

void save_sales_wide(const SalesPanel& panel, const std::string& sales_path,
                     const std::string& flags_path) {
    std::ofstream sf(sales_path), ff(flags_path);
    if (!sf || !ff) throw DataError("cannot write panel files");
    auto write_header = [&](std::ofstream& out) {
        out << "Store,Product";
        for (std::size_t w = 0; w < panel.n_weeks(); ++w)
            out << ',' << format_iso_date(panel.axis().date(w));
        out << '\n';
    };
    write_header(sf);
    write_header(ff);
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        const auto& key = panel.items()[i];
        sf << key.store << ',' << key.product;
        ff << key.store << ',' << key.product;
        for (std::size_t w = 0; w < panel.n_weeks(); ++w) {
            sf << ',' << format_number(panel.sales(i, w));
            ff << ',' << (panel.in_stock(i, w) ? "true" : "false");
        }
        sf << '\n';
        ff << '\n';
    }
}

InventorySnapshot load_inventory_snapshot(const std::string& path, const SalesPanel& panel,
                                          int lead_time_weeks) {
    CsvTable table = read_csv(path);
    auto col = [&](const std::string& name) {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end())
            throw DataError(path + ": missing column " + name);
        return static_cast<std::size_t>(it - table.header.begin());
    };
    std::size_t c_store = col("Store"), c_product = col("Product"), c_on = col("on_hand");
    std::vector<std::size_t> arrive_cols;
    for (int k = 1; k <= lead_time_weeks; ++k) {
        std::string name = "arrive_w" + std::to_string(k);
        auto it = std::find(table.header.begin(), table.header.end(), name);
        arrive_cols.push_back(it == table.header.end()
                                  ? static_cast<std::size_t>(-1)
                                  : static_cast<std::size_t>(it - table.header.begin()));
    }

    InventorySnapshot snap = InventorySnapshot::zero(panel.n_items(), lead_time_weeks);
    std::vector<bool> seen(panel.n_items(), false);
    auto parse_qty = [&](const std::string& cell, const std::string& ctx) {
        char* end = nullptr;
        long long v = std::strtoll(cell.c_str(), &end, 10);
        if (end == cell.c_str() || *end != '\0')
            throw DataError(path + ": malformed quantity '" + cell + "' for " + ctx);
        if (v < 0) throw DataError(path + ": negative quantity for " + ctx);
        return v;
    };
    for (const auto& row : table.rows) {
        ItemKey key{row[c_store], row[c_product]};
        std::size_t idx = panel.find(key);
        if (idx == SalesPanel::npos)
            throw DataError(path + ": unknown item " + key.unique_id());
        snap.on_hand[idx] = parse_qty(row[c_on], key.unique_id());
        for (int k = 1; k <= lead_time_weeks; ++k) {
            std::size_t c = arrive_cols[static_cast<std::size_t>(k - 1)];
            if (c != static_cast<std::size_t>(-1) && c < row.size() && !row[c].empty())
                snap.in_transit[idx][static_cast<std::size_t>(k - 1)] =
                    parse_qty(row[c], key.unique_id());
        }
        seen[idx] = true;
    }
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        if (!seen[i])
            throw DataError(path + ": no snapshot row for item " + panel.items()[i].unique_id());
    }
    return snap;
}

void save_inventory_snapshot(const InventorySnapshot& snapshot, const SalesPanel& panel,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    std::size_t lead = snapshot.in_transit.empty() ? 0 : snapshot.in_transit[0].size();
    out << "Store,Product,on_hand";
    for (std::size_t k = 1; k <= lead; ++k) out << ",arrive_w" << k;
    out << '\n';
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        out << panel.items()[i].store << ',' << panel.items()[i].product << ','
            << snapshot.on_hand[i];
        for (std::size_t k = 0; k < lead; ++k) out << ',' << snapshot.in_transit[i][k];
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

PanelDiagnostics panel_diagnostics(const SalesPanel& panel) {
    if (panel.n_items() == 0 || panel.n_weeks() == 0)
        throw DataError("diagnostics on empty panel");
    PanelDiagnostics d;
    d.n_items = panel.n_items();
    d.n_weeks = panel.n_weeks();
    d.first_sale_week.assign(panel.n_items(), -1);

    std::size_t zeros = 0, stockouts = 0;
    double min_mean = std::numeric_limits<double>::infinity();
    double max_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < panel.n_items(); ++i) {
        double total = 0.0;
        for (std::size_t w = 0; w < panel.n_weeks(); ++w) {
            double v = panel.sales(i, w);
            total += v;
            if (v == 0.0) ++zeros;
            if (!panel.in_stock(i, w)) ++stockouts;
            if (v > 0.0 && d.first_sale_week[i] < 0)
                d.first_sale_week[i] = static_cast<long>(w);
        }
        double mean = total / static_cast<double>(panel.n_weeks());
        min_mean = std::min(min_mean, mean);
        max_mean = std::max(max_mean, mean);
    }
    double cells = static_cast<double>(panel.n_items() * panel.n_weeks());
    d.zero_rate = static_cast<double>(zeros) / cells;
    d.stockout_rate = static_cast<double>(stockouts) / cells;
    d.min_item_mean_sales = min_mean;
    d.max_item_mean_sales = max_mean;
    for (long w : d.first_sale_week) {
        if (w == 0) ++d.items_selling_from_week0;
        if (w > 0) ++d.items_with_delayed_start;
    }
    return d;
}

} // namespace stockcast
