#include "stockcast/gbdt.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/parallel.hpp"
#include "stockcast/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace stockcast {

namespace {

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

// Quantile bin edges for one feature. Edges are actual data values; value v
// falls in bin 1 + |{e : e < v}|, NaN in bin 0. With few distinct values
// every one gets its own bin, so thresholds are exact.
std::vector<double> make_edges(const std::vector<double>& values,
                               const std::vector<double>& weights, int max_bins) {
    std::vector<std::pair<double, double>> vw; // (value, weight), NaN dropped
    vw.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isnan(values[i])) vw.emplace_back(values[i], weights[i]);
    if (vw.empty()) return {};
    std::sort(vw.begin(), vw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<double> distinct;
    std::vector<double> cumw;
    double running = 0.0;
    for (const auto& [v, w] : vw) {
        if (distinct.empty() || v != distinct.back()) {
            distinct.push_back(v);
            cumw.push_back(running);
        }
        running += w;
        cumw.back() = running;
    }

    std::vector<double> edges;
    const std::size_t d = distinct.size();
    if (d <= static_cast<std::size_t>(max_bins)) {
        edges.assign(distinct.begin(), distinct.end() - 1);
        return edges;
    }
    const double total = running;
    std::size_t pos = 0;
    for (int k = 1; k < max_bins; ++k) {
        const double target = total * k / max_bins;
        while (pos + 1 < d && cumw[pos] < target) ++pos;
        if (pos + 1 >= d) break; // the last distinct value is never an edge
        if (edges.empty() || distinct[pos] != edges.back()) edges.push_back(distinct[pos]);
    }
    return edges;
}

std::uint8_t bin_of(double v, const std::vector<double>& edges) {
    if (std::isnan(v)) return 0;
    const auto it = std::lower_bound(edges.begin(), edges.end(), v);
    return static_cast<std::uint8_t>(1 + (it - edges.begin()));
}

// ---------------------------------------------------------------------------
// Fit-time scaffolding
// ---------------------------------------------------------------------------

struct NodeStat {
    double g = 0.0; // sum w * residual
    double h = 0.0; // sum w
    std::uint32_t c = 0; // positive-weight rows, for min_samples_leaf
};

struct FeatBest {
    double gain = 0.0;
    int bin = -1; // left = bins <= bin (bin 0 always left)
    NodeStat left;
};

// Raw value of global feature f, categoricals passed through their encoder.
double feature_value(const Dataset& data, const std::vector<CategoricalEncoder>& encoders,
                     std::size_t row, std::size_t f) {
    if (f < data.n_numeric()) return data.num(row, f);
    const std::size_t c = f - data.n_numeric();
    return encoders[c].encode(data.cat(row, c));
}

void check_features(const Dataset& d, const char* label) {
    if (d.numeric.size() != d.n_rows * d.n_numeric() ||
        d.categorical.size() != d.n_rows * d.n_categorical())
        throw DataError(std::string(label) + ": ragged feature storage");
    for (double v : d.numeric)
        if (std::isinf(v)) throw DataError(std::string(label) + ": infinite feature value");
}

void check_dataset(const Dataset& d, const char* label) {
    check_features(d, label);
    if (d.target.size() != d.n_rows)
        throw DataError(std::string(label) + ": target size mismatch");
    if (!d.weight.empty() && d.weight.size() != d.n_rows)
        throw DataError(std::string(label) + ": weight size mismatch");
    for (double y : d.target)
        if (!std::isfinite(y)) throw DataError(std::string(label) + ": non-finite target");
    for (double w : d.weight)
        if (!(w >= 0.0) || std::isinf(w))
            throw DataError(std::string(label) + ": invalid weight");
}

double weighted_rmse(const std::vector<double>& pred, const std::vector<double>& y,
                     const std::vector<double>& w) {
    double se = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = y[i] - pred[i];
        se += w[i] * d * d;
        sw += w[i];
    }
    return sw > 0.0 ? std::sqrt(se / sw) : 0.0;
}

int leaf_of(const Tree& tree, const std::uint8_t* bins, std::size_t n_rows,
            const std::vector<int>& split_bin, std::size_t row) {
    int n = 0;
    while (!tree.nodes[static_cast<std::size_t>(n)].is_leaf()) {
        const auto& node = tree.nodes[static_cast<std::size_t>(n)];
        const std::uint8_t b = bins[static_cast<std::size_t>(node.feature) * n_rows + row];
        n = b <= split_bin[static_cast<std::size_t>(n)] ? node.left : node.right;
    }
    return n;
}

} // namespace

void TrainConfig::validate() const {
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw ConfigError("learning_rate must be in (0, 1]");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (!(l2_leaf_reg >= 0.0)) throw ConfigError("l2_leaf_reg must be >= 0");
    if (!(feature_subsample > 0.0 && feature_subsample <= 1.0))
        throw ConfigError("feature_subsample must be in (0, 1]");
    if (!(row_subsample > 0.0 && row_subsample <= 1.0))
        throw ConfigError("row_subsample must be in (0, 1]");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (histogram_bins < 2 || histogram_bins > 255)
        throw ConfigError("histogram_bins must be in [2, 255]");
    if (early_stopping_rounds < 1 || early_stopping_rounds > max_iterations)
        throw ConfigError("early_stopping_rounds must be in [1, max_iterations]");
    if (!(cat_prior_strength >= 0.0)) throw ConfigError("cat_prior_strength must be >= 0");
}

CategoricalEncoder encode_categoricals(const std::vector<std::int32_t>& column,
                                       const std::vector<double>& target,
                                       const std::vector<double>& weights,
                                       double prior_strength) {
    if (column.empty() || column.size() != target.size())
        throw DataError("encode_categoricals: empty or mismatched column");
    double sw = 0.0, swy = 0.0;
    std::map<std::int32_t, std::pair<double, double>> acc; // value -> (sum w, sum w*y)
    for (std::size_t i = 0; i < column.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        swy += w * target[i];
        auto& [aw, awy] = acc[column[i]];
        aw += w;
        awy += w * target[i];
    }
    if (!(sw > 0.0)) throw DataError("encode_categoricals: zero total weight");
    CategoricalEncoder enc;
    enc.fallback = swy / sw;
    for (const auto& [v, a] : acc) {
        const double denom = a.first + prior_strength;
        enc.table[v] = denom > 0.0 ? (a.second + prior_strength * enc.fallback) / denom
                                   : enc.fallback;
    }
    return enc;
}

Ensemble fit(const Dataset& train, const Dataset& valid, const TrainConfig& config,
             int n_threads) {
    config.validate();
    if (train.n_rows == 0) throw DataError("fit: empty training set");
    check_dataset(train, "train");
    if (valid.n_rows > 0) {
        check_dataset(valid, "valid");
        if (valid.numeric_names != train.numeric_names ||
            valid.categorical_names != train.categorical_names)
            throw DataError("fit: train/valid feature mismatch");
    }

    const std::size_t n = train.n_rows;
    const std::size_t n_feat = train.n_features();

    // Normalize weights to mean 1 over positive-weight rows. This keeps the
    // l2/prior terms on a fixed scale, so rescaling all weights (or dropping
    // zero-weight rows) cannot move the fit.
    std::vector<double> w(n, 1.0);
    if (!train.weight.empty()) w = train.weight;
    double wsum = 0.0;
    std::size_t n_pos = 0;
    for (double x : w) {
        wsum += x;
        if (x > 0.0) ++n_pos;
    }
    if (n_pos == 0) throw DataError("fit: zero total weight");
    const double norm = wsum / static_cast<double>(n_pos);
    for (double& x : w) x /= norm;

    Ensemble model;
    model.config = config;
    model.numeric_names = train.numeric_names;
    model.categorical_names = train.categorical_names;

    double swy = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        swy += w[i] * train.target[i];
        sw += w[i];
    }
    model.base_score = swy / sw;

    model.encoders.resize(train.n_categorical());
    for (std::size_t c = 0; c < train.n_categorical(); ++c) {
        std::vector<std::int32_t> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = train.cat(i, c);
        model.encoders[c] = encode_categoricals(col, train.target, w, config.cat_prior_strength);
    }

    // Bin both sets against train-fitted edges; column-major uint8.
    model.bin_edges.resize(n_feat);
    std::vector<std::uint8_t> train_bins(n_feat * n);
    std::vector<std::uint8_t> valid_bins(n_feat * valid.n_rows);
    parallel_for(n_feat, n_threads, [&](std::size_t f) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = feature_value(train, model.encoders, i, f);
        model.bin_edges[f] = make_edges(col, w, config.histogram_bins);
        for (std::size_t i = 0; i < n; ++i)
            train_bins[f * n + i] = bin_of(col[i], model.bin_edges[f]);
        for (std::size_t i = 0; i < valid.n_rows; ++i)
            valid_bins[f * valid.n_rows + i] =
                bin_of(feature_value(valid, model.encoders, i, f), model.bin_edges[f]);
    });

    std::vector<double> pred(n, model.base_score);
    std::vector<double> resid(n);
    std::vector<double> valid_pred(valid.n_rows, model.base_score);
    std::vector<double> valid_w(valid.n_rows, 1.0);
    if (!valid.weight.empty()) valid_w = valid.weight;

    const double lambda = config.l2_leaf_reg;
    const int n_bins_max = config.histogram_bins + 1; // + the NaN bin
    double best_rmse = std::numeric_limits<double>::infinity();
    int best_iter = 0;

    std::vector<int> row_slot(n);
    std::vector<std::size_t> used_features;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) resid[i] = train.target[i] - pred[i];

        Rng iter_rng = Rng::substream(config.seed, "gbdt_iter", static_cast<std::uint64_t>(iter));

        // Per-tree subsampling; no draws at all when inactive so the
        // stream layout is stable across configs.
        std::fill(row_slot.begin(), row_slot.end(), 0);
        if (config.row_subsample < 1.0)
            for (std::size_t i = 0; i < n; ++i)
                if (!iter_rng.bernoulli(config.row_subsample)) row_slot[i] = -1;

        used_features.resize(n_feat);
        for (std::size_t f = 0; f < n_feat; ++f) used_features[f] = f;
        if (config.feature_subsample < 1.0) {
            const std::size_t k = std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::ceil(config.feature_subsample * static_cast<double>(n_feat))));
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t j = static_cast<std::size_t>(iter_rng.uniform_int(
                    static_cast<long>(i), static_cast<long>(n_feat - 1)));
                std::swap(used_features[i], used_features[j]);
            }
            used_features.resize(k);
            std::sort(used_features.begin(), used_features.end());
        }

        Tree tree;
        std::vector<int> split_bin; // per node, parallel to tree.nodes
        tree.nodes.emplace_back();
        split_bin.push_back(-1);

        NodeStat root;
        for (std::size_t i = 0; i < n; ++i) {
            if (row_slot[i] < 0) continue;
            root.g += w[i] * resid[i];
            root.h += w[i];
            if (w[i] > 0.0) ++root.c;
        }

        std::vector<int> frontier_nodes{0};
        std::vector<NodeStat> frontier_stats{root};

        for (int depth = 0; depth < config.max_depth && !frontier_nodes.empty(); ++depth) {
            const std::size_t n_slots = frontier_nodes.size();
            const std::size_t fu = used_features.size();
            std::vector<FeatBest> bests(n_slots * fu);

            parallel_for(fu, n_threads, [&](std::size_t fi) {
                const std::size_t f = used_features[fi];
                const std::uint8_t* bins = &train_bins[f * n];
                const int n_bins =
                    static_cast<int>(model.bin_edges[f].size()) + 1 + 1; // values + NaN
                std::vector<NodeStat> hist(n_slots * static_cast<std::size_t>(n_bins_max));
                for (std::size_t i = 0; i < n; ++i) {
                    const int s = row_slot[i];
                    if (s < 0) continue;
                    NodeStat& cell =
                        hist[static_cast<std::size_t>(s) * n_bins_max + bins[i]];
                    cell.g += w[i] * resid[i];
                    cell.h += w[i];
                    if (w[i] > 0.0) ++cell.c;
                }
                for (std::size_t s = 0; s < n_slots; ++s) {
                    const NodeStat& tot = frontier_stats[s];
                    const double parent_score = tot.g * tot.g / (tot.h + lambda);
                    FeatBest fb;
                    NodeStat acc = hist[s * static_cast<std::size_t>(n_bins_max)]; // NaN bin
                    for (int b = 1; b < n_bins - 1; ++b) {
                        const NodeStat& cell =
                            hist[s * static_cast<std::size_t>(n_bins_max) + b];
                        acc.g += cell.g;
                        acc.h += cell.h;
                        acc.c += cell.c;
                        const std::uint32_t cr = tot.c - acc.c;
                        if (acc.c < static_cast<std::uint32_t>(config.min_samples_leaf) ||
                            cr < static_cast<std::uint32_t>(config.min_samples_leaf))
                            continue;
                        const double gr = tot.g - acc.g;
                        const double hr = tot.h - acc.h;
                        const double gain = acc.g * acc.g / (acc.h + lambda) +
                                            gr * gr / (hr + lambda) - parent_score;
                        if (gain > fb.gain) {
                            fb.gain = gain;
                            fb.bin = b;
                            fb.left = acc;
                        }
                    }
                    bests[s * fu + fi] = fb;
                }
            });

            // Serial reduction in (slot, feature-index) order keeps ties and
            // node numbering deterministic for any thread count.
            std::vector<int> next_nodes;
            std::vector<NodeStat> next_stats;
            std::vector<std::pair<int, int>> slot_children(n_slots, {-1, -1});
            for (std::size_t s = 0; s < n_slots; ++s) {
                const FeatBest* best = nullptr;
                std::size_t best_f = 0;
                for (std::size_t fi = 0; fi < fu; ++fi) {
                    const FeatBest& fb = bests[s * fu + fi];
                    if (fb.bin >= 0 && (best == nullptr || fb.gain > best->gain)) {
                        best = &fb;
                        best_f = used_features[fi];
                    }
                }
                const int node_id = frontier_nodes[s];
                TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
                const NodeStat& tot = frontier_stats[s];
                if (best == nullptr || !(best->gain > 0.0)) {
                    node.value = tot.g / (tot.h + lambda);
                    continue;
                }
                node.feature = static_cast<int>(best_f);
                node.threshold = model.bin_edges[best_f][static_cast<std::size_t>(best->bin - 1)];
                node.gain = best->gain;
                node.left = static_cast<int>(tree.nodes.size());
                node.right = node.left + 1;
                split_bin[static_cast<std::size_t>(node_id)] = best->bin;
                slot_children[s] = {node.left, node.right};
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                split_bin.push_back(-1);
                split_bin.push_back(-1);
                NodeStat right{tot.g - best->left.g, tot.h - best->left.h,
                               tot.c - best->left.c};
                next_nodes.push_back(node.left);
                next_stats.push_back(best->left);
                next_nodes.push_back(node.right);
                next_stats.push_back(right);
            }

            // Route sampled rows to the next level's slots.
            std::vector<int> slot_of_node(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < next_nodes.size(); ++s)
                slot_of_node[static_cast<std::size_t>(next_nodes[s])] = static_cast<int>(s);
            for (std::size_t i = 0; i < n; ++i) {
                const int s = row_slot[i];
                if (s < 0) continue;
                const auto [lc, rc] = slot_children[static_cast<std::size_t>(s)];
                if (lc < 0) {
                    row_slot[i] = -1; // settled in a leaf
                    continue;
                }
                const int node_id = frontier_nodes[static_cast<std::size_t>(s)];
                const int f = tree.nodes[static_cast<std::size_t>(node_id)].feature;
                const std::uint8_t b = train_bins[static_cast<std::size_t>(f) * n + i];
                row_slot[i] = slot_of_node[static_cast<std::size_t>(
                    b <= split_bin[static_cast<std::size_t>(node_id)] ? lc : rc)];
            }
            frontier_nodes = std::move(next_nodes);
            frontier_stats = std::move(next_stats);
        }

        // Depth limit reached: close out remaining frontier nodes.
        for (std::size_t s = 0; s < frontier_nodes.size(); ++s) {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(frontier_nodes[s])];
            node.value = frontier_stats[s].g / (frontier_stats[s].h + lambda);
        }

        if (tree.nodes.size() == 1 && config.row_subsample >= 1.0 &&
            config.feature_subsample >= 1.0)
            break; // nothing left to learn, and no resampling to change that

        for (std::size_t i = 0; i < n; ++i) {
            const int leaf = leaf_of(tree, train_bins.data(), n, split_bin, i);
            pred[i] += config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf)].value;
        }
        for (std::size_t i = 0; i < valid.n_rows; ++i) {
            const int leaf = leaf_of(tree, valid_bins.data(), valid.n_rows, split_bin, i);
            valid_pred[i] +=
                config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf)].value;
        }
        model.trees.push_back(std::move(tree));
        model.train_rmse_log.push_back(weighted_rmse(pred, train.target, w));

        if (valid.n_rows > 0) {
            const double vr = weighted_rmse(valid_pred, valid.target, valid_w);
            model.valid_rmse_log.push_back(vr);
            const int n_trees = static_cast<int>(model.trees.size());
            if (vr < best_rmse) {
                best_rmse = vr;
                best_iter = n_trees;
            } else if (n_trees - best_iter >= config.early_stopping_rounds) {
                break;
            }
        }
    }

    model.best_iteration =
        valid.n_rows > 0 ? best_iter : static_cast<int>(model.trees.size());
    return model;
}

std::vector<double> predict(const Ensemble& model, const Dataset& rows) {
    if (rows.numeric_names != model.numeric_names ||
        rows.categorical_names != model.categorical_names)
        throw DataError("predict: feature schema mismatch with model");
    check_features(rows, "predict");
    std::vector<double> out(rows.n_rows, model.base_score);
    for (std::size_t i = 0; i < rows.n_rows; ++i) {
        double acc = 0.0;
        for (int t = 0; t < model.best_iteration; ++t) {
            const Tree& tree = model.trees[static_cast<std::size_t>(t)];
            int nd = 0;
            while (!tree.nodes[static_cast<std::size_t>(nd)].is_leaf()) {
                const TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
                const double v = feature_value(rows, model.encoders, i,
                                               static_cast<std::size_t>(node.feature));
                nd = (std::isnan(v) || v <= node.threshold) ? node.left : node.right;
            }
            acc += tree.nodes[static_cast<std::size_t>(nd)].value;
        }
        out[i] += model.config.learning_rate * acc;
    }
    return out;
}

std::vector<double> feature_importance(const Ensemble& model) {
    std::vector<double> imp(model.n_features(), 0.0);
    double total = 0.0;
    for (int t = 0; t < model.best_iteration; ++t)
        for (const TreeNode& node : model.trees[static_cast<std::size_t>(t)].nodes)
            if (!node.is_leaf()) {
                imp[static_cast<std::size_t>(node.feature)] += node.gain;
                total += node.gain;
            }
    if (total > 0.0)
        for (double& v : imp) v = 100.0 * v / total;
    return imp;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"max_iterations", c.max_iterations},
         {"learning_rate", c.learning_rate},
         {"max_depth", c.max_depth},
         {"l2_leaf_reg", c.l2_leaf_reg},
         {"feature_subsample", c.feature_subsample},
         {"row_subsample", c.row_subsample},
         {"min_samples_leaf", c.min_samples_leaf},
         {"histogram_bins", c.histogram_bins},
         {"early_stopping_rounds", c.early_stopping_rounds},
         {"cat_prior_strength", c.cat_prior_strength},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    j.at("max_iterations").get_to(c.max_iterations);
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("max_depth").get_to(c.max_depth);
    j.at("l2_leaf_reg").get_to(c.l2_leaf_reg);
    j.at("feature_subsample").get_to(c.feature_subsample);
    j.at("row_subsample").get_to(c.row_subsample);
    j.at("min_samples_leaf").get_to(c.min_samples_leaf);
    j.at("histogram_bins").get_to(c.histogram_bins);
    j.at("early_stopping_rounds").get_to(c.early_stopping_rounds);
    j.at("cat_prior_strength").get_to(c.cat_prior_strength);
    j.at("seed").get_to(c.seed);
}

nlohmann::json ensemble_to_json(const Ensemble& model) {
    nlohmann::json j;
    j["format"] = "stockcast-gbdt";
    j["version"] = 1;
    j["config"] = model.config;
    j["numeric_names"] = model.numeric_names;
    j["categorical_names"] = model.categorical_names;
    j["base_score"] = model.base_score;
    j["best_iteration"] = model.best_iteration;
    j["bin_edges"] = model.bin_edges;

    nlohmann::json encs = nlohmann::json::array();
    for (const auto& enc : model.encoders) {
        nlohmann::json e;
        e["fallback"] = enc.fallback;
        std::vector<std::int32_t> keys;
        std::vector<double> vals;
        for (const auto& [k, v] : enc.table) {
            keys.push_back(k);
            vals.push_back(v);
        }
        e["keys"] = keys;
        e["values"] = vals;
        encs.push_back(std::move(e));
    }
    j["encoders"] = std::move(encs);

    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& tree : model.trees) {
        nlohmann::json t;
        std::vector<int> feature, left, right;
        std::vector<double> threshold, value, gain;
        for (const TreeNode& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
            gain.push_back(n.gain);
        }
        t["feature"] = feature;
        t["threshold"] = threshold;
        t["left"] = left;
        t["right"] = right;
        t["value"] = value;
        t["gain"] = gain;
        trees.push_back(std::move(t));
    }
    j["trees"] = std::move(trees);
    return j;
}

Ensemble ensemble_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "stockcast-gbdt")
        throw DataError("not a stockcast-gbdt model file");
    Ensemble model;
    j.at("config").get_to(model.config);
    j.at("numeric_names").get_to(model.numeric_names);
    j.at("categorical_names").get_to(model.categorical_names);
    j.at("base_score").get_to(model.base_score);
    j.at("best_iteration").get_to(model.best_iteration);
    j.at("bin_edges").get_to(model.bin_edges);

    for (const auto& e : j.at("encoders")) {
        CategoricalEncoder enc;
        e.at("fallback").get_to(enc.fallback);
        std::vector<std::int32_t> keys = e.at("keys");
        std::vector<double> vals = e.at("values");
        if (keys.size() != vals.size()) throw DataError("corrupt encoder table");
        for (std::size_t i = 0; i < keys.size(); ++i) enc.table[keys[i]] = vals[i];
        model.encoders.push_back(std::move(enc));
    }

    for (const auto& t : j.at("trees")) {
        std::vector<int> feature = t.at("feature");
        std::vector<double> threshold = t.at("threshold");
        std::vector<int> left = t.at("left");
        std::vector<int> right = t.at("right");
        std::vector<double> value = t.at("value");
        std::vector<double> gain = t.at("gain");
        Tree tree;
        for (std::size_t i = 0; i < feature.size(); ++i) {
            TreeNode n;
            n.feature = feature[i];
            n.threshold = threshold[i];
            n.left = left[i];
            n.right = right[i];
            n.value = value[i];
            n.gain = gain[i];
            const auto n_feat = static_cast<int>(model.n_features());
            if (n.feature >= n_feat || (n.left >= 0 && n.feature < 0))
                throw DataError("corrupt tree node");
            tree.nodes.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    if (model.best_iteration < 0 ||
        model.best_iteration > static_cast<int>(model.trees.size()))
        throw DataError("best_iteration out of range");
    return model;
}

} // namespace stockcast
