#include "tsentinel/classifiers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace tsentinel {

namespace {

void check_dim(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw Error("dimension mismatch: model expects " + std::to_string(expected) + " features, got " +
                    std::to_string(got));
    }
}

Label majority(std::size_t n_benign, std::size_t n_attack) {
    return n_attack > n_benign ? Label::Attack : Label::Benign;
}

nlohmann::json parse_json(std::string_view text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string(what) + ": invalid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------- CART growth

class TreeGrower {
public:
    TreeGrower(const FeatureMatrix& m, const CartParams& params) : m_(m), params_(params) {}

    std::vector<CartNode> grow() {
        std::vector<std::size_t> rows(m_.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        build(rows, 0);
        return std::move(nodes_);
    }

private:
    struct Candidate {
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    std::size_t build(const std::vector<std::size_t>& rows, std::size_t depth) {
        std::size_t n_attack = 0;
        for (auto r : rows) n_attack += m_.labels()[r] == Label::Attack ? 1 : 0;
        const std::size_t n_benign = rows.size() - n_attack;

        const std::size_t self = nodes_.size();
        nodes_.emplace_back(CartLeaf{majority(n_benign, n_attack), n_benign, n_attack});

        const bool pure = n_attack == 0 || n_benign == 0;
        const bool at_depth_cap = params_.max_depth && depth >= *params_.max_depth;
        if (pure || at_depth_cap || rows.size() < params_.min_samples_split) return self;

        const auto best = best_split(rows, n_benign, n_attack);
        if (!best || best->gain <= params_.min_gain) return self;

        std::vector<std::size_t> left_rows, right_rows;
        for (auto r : rows) {
            (m_.at(r, best->feature) <= best->threshold ? left_rows : right_rows).push_back(r);
        }
        const std::size_t left = build(left_rows, depth + 1);
        const std::size_t right = build(right_rows, depth + 1);
        nodes_[self] = CartSplit{best->feature, best->threshold, left, right};
        return self;
    }

    std::optional<Candidate> best_split(const std::vector<std::size_t>& rows, std::size_t n_benign,
                                        std::size_t n_attack) const {
        const std::size_t n = rows.size();
        const double parent = gini(n_benign, n_attack);
        std::optional<Candidate> best;
        std::vector<std::pair<double, Label>> column(n);

        for (std::size_t f = 0; f < m_.cols(); ++f) {
            for (std::size_t i = 0; i < n; ++i) column[i] = {m_.at(rows[i], f), m_.labels()[rows[i]]};
            std::ranges::sort(column, {}, &std::pair<double, Label>::first);

            std::size_t left_attack = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_attack += column[i].second == Label::Attack ? 1 : 0;
                const double lo = column[i].first;
                const double hi = column[i + 1].first;
                if (!(lo < hi)) continue;

                const std::size_t n_left = i + 1;
                const std::size_t n_right = n - n_left;
                const std::size_t right_attack = n_attack - left_attack;
                const double weighted =
                    (static_cast<double>(n_left) * gini(n_left - left_attack, left_attack) +
                     static_cast<double>(n_right) * gini(n_right - right_attack, right_attack)) /
                    static_cast<double>(n);
                const double gain = parent - weighted;
                if (!best || gain > best->gain) {
                    double threshold = std::midpoint(lo, hi);
                    if (!(threshold < hi)) threshold = lo;
                    best = Candidate{f, threshold, gain};
                }
            }
        }
        return best;
    }

    const FeatureMatrix& m_;
    const CartParams& params_;
    std::vector<CartNode> nodes_;
};

// ------------------------------------------------------------ serialization

nlohmann::json node_json(const std::vector<CartNode>& nodes, std::size_t i) {
    nlohmann::json j;
    if (const auto* split = std::get_if<CartSplit>(&nodes[i])) {
        j["feature_index"] = split->feature_index;
        j["threshold"] = split->threshold;
        j["left"] = node_json(nodes, split->left);
        j["right"] = node_json(nodes, split->right);
    } else {
        const auto& leaf = std::get<CartLeaf>(nodes[i]);
        j["label"] = std::string(label_token(leaf.label));
        j["counts"] = {{"no_attack", leaf.n_benign}, {"attack", leaf.n_attack}};
    }
    return j;
}

std::size_t node_from(const nlohmann::json& j, std::vector<CartNode>& nodes) {
    const std::size_t self = nodes.size();
    if (j.contains("feature_index")) {
        nodes.emplace_back(CartSplit{});
        CartSplit split;
        split.feature_index = j.at("feature_index").get<std::size_t>();
        split.threshold = j.at("threshold").get<double>();
        split.left = node_from(j.at("left"), nodes);
        split.right = node_from(j.at("right"), nodes);
        nodes[self] = split;
    } else {
        CartLeaf leaf;
        leaf.label = parse_label(j.at("label").get<std::string>());
        leaf.n_benign = j.at("counts").at("no_attack").get<std::size_t>();
        leaf.n_attack = j.at("counts").at("attack").get<std::size_t>();
        nodes.emplace_back(leaf);
    }
    return self;
}

nlohmann::json cart_json(const CartModel& model) {
    nlohmann::json j;
    j["dim"] = model.dim();
    j["params"] = {
        {"max_depth", model.params().max_depth ? nlohmann::json(*model.params().max_depth) : nlohmann::json(nullptr)},
        {"min_samples_split", model.params().min_samples_split},
        {"min_gain", model.params().min_gain},
    };
    j["root"] = node_json(model.nodes(), 0);
    return j;
}

CartModel cart_from(const nlohmann::json& j) {
    try {
        CartParams params;
        const auto& p = j.at("params");
        params.max_depth = p.at("max_depth").is_null() ? std::nullopt
                                                       : std::optional<std::size_t>(p.at("max_depth").get<std::size_t>());
        params.min_samples_split = p.at("min_samples_split").get<std::size_t>();
        params.min_gain = p.at("min_gain").get<double>();
        std::vector<CartNode> nodes;
        node_from(j.at("root"), nodes);
        return CartModel(std::move(nodes), j.at("dim").get<std::size_t>(), params);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("cart model: ") + e.what());
    }
}

std::string knn_training_csv(const FeatureMatrix& m) {
    std::string out = join_metric_names(m.features()) + ",label\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (double v : m.row(r)) {
            out += format_double(v);
            out += ',';
        }
        out += label_token(m.labels()[r]);
        out += '\n';
    }
    return out;
}

FeatureMatrix knn_training_from_csv(const std::string& text, std::span<const Metric> features) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != join_metric_names(features) + ",label") {
        throw Error("knn training CSV header does not match the model features");
    }
    std::vector<double> data;
    std::vector<Label> labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::size_t start = 0;
        for (std::size_t c = 0; c < features.size(); ++c) {
            const auto comma = line.find(',', start);
            if (comma == std::string::npos) throw Error("knn training CSV: short row " + std::to_string(rows));
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + comma, v);
            if (ec != std::errc{} || ptr != line.data() + comma) {
                throw Error("knn training CSV: malformed number at row " + std::to_string(rows));
            }
            data.push_back(v);
            start = comma + 1;
        }
        labels.push_back(parse_label(std::string_view(line).substr(start)));
    }
    return FeatureMatrix({features.begin(), features.end()}, rows, std::move(data), std::move(labels));
}

} // namespace

// -------------------------------------------------------------------- kNN

KnnModel::KnnModel(FeatureMatrix training, std::size_t k) : training_(std::move(training)), k_(k) {
    if (!training_.labeled()) throw Error("kNN needs a labeled training matrix");
    if (k_ == 0 || k_ % 2 == 0) throw Error("k must be odd");
    if (k_ > training_.rows()) throw Error("k must not exceed the number of training rows");
    for (double v : training_.data()) {
        if (!std::isfinite(v)) throw Error("kNN training matrix must be finite");
    }
}

Label KnnModel::predict(std::span<const double> x) const {
    check_dim(dim(), x.size());
    const std::size_t n = size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = training_.row(i);
        double sum = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double diff = row[c] - x[c];
            sum += diff * diff;
        }
        dist[i] = {std::sqrt(sum), i};
    }
    // Pairs compare by (distance, index): lower index wins equal distances.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::size_t attack = 0;
    for (std::size_t i = 0; i < k_; ++i) attack += training_.labels()[dist[i].second] == Label::Attack ? 1 : 0;
    return majority(k_ - attack, attack);
}

KnnModel knn_fit(const FeatureMatrix& m, std::size_t k) { return KnnModel(m, k); }

Label knn_predict(const KnnModel& model, std::span<const double> x) { return model.predict(x); }

// ------------------------------------------------------------------- CART

double gini(std::size_t n_benign, std::size_t n_attack) {
    const std::size_t n = n_benign + n_attack;
    if (n == 0) return 0.0;
    const double pb = static_cast<double>(n_benign) / static_cast<double>(n);
    const double pa = static_cast<double>(n_attack) / static_cast<double>(n);
    return 1.0 - pb * pb - pa * pa;
}

CartModel::CartModel(std::vector<CartNode> nodes, std::size_t dim, CartParams params)
    : nodes_(std::move(nodes)), dim_(dim), params_(params) {
    if (nodes_.empty()) throw Error("CART model has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (const auto* s = std::get_if<CartSplit>(&nodes_[i])) {
            if (s->feature_index >= dim_) throw Error("CART split references a feature beyond the model dimension");
            if (s->left <= i || s->right <= i || s->left >= nodes_.size() || s->right >= nodes_.size()) {
                throw Error("CART node links are malformed");
            }
        }
    }
}

std::size_t CartModel::depth() const {
    std::vector<std::size_t> depth_of(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth_of[i]);
        if (const auto* s = std::get_if<CartSplit>(&nodes_[i])) {
            depth_of[s->left] = depth_of[i] + 1;
            depth_of[s->right] = depth_of[i] + 1;
        }
    }
    return deepest;
}

std::size_t CartModel::leaf_count() const {
    return static_cast<std::size_t>(
        std::ranges::count_if(nodes_, [](const CartNode& n) { return std::holds_alternative<CartLeaf>(n); }));
}

Label CartModel::predict(std::span<const double> x) const {
    check_dim(dim_, x.size());
    std::size_t i = 0;
    while (const auto* s = std::get_if<CartSplit>(&nodes_[i])) {
        i = x[s->feature_index] <= s->threshold ? s->left : s->right;
    }
    return std::get<CartLeaf>(nodes_[i]).label;
}

CartModel cart_fit(const FeatureMatrix& m, const CartParams& params) {
    if (!m.labeled()) throw Error("CART needs a labeled training matrix");
    if (m.rows() == 0) throw Error("CART needs at least one row");
    return CartModel(TreeGrower(m, params).grow(), m.cols(), params);
}

Label cart_predict(const CartModel& model, std::span<const double> x) { return model.predict(x); }

// ------------------------------------------------------------ TrainedModel

Label predict(const TrainedModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

std::size_t model_dim(const TrainedModel& model) {
    return std::visit([](const auto& m) { return m.dim(); }, model);
}

std::string_view model_kind(const TrainedModel& model) {
    return std::holds_alternative<KnnModel>(model) ? "knn" : "cart";
}

Label ModelBundle::classify(const MetricSample& sample) const {
    std::vector<double> row;
    row.reserve(features.size());
    for (auto f : features) row.push_back(sample[f]);
    return predict(model, standardizer.apply(row));
}

std::string cart_to_json(const CartModel& model) { return cart_json(model).dump(2); }

CartModel cart_from_json(std::string_view text) { return cart_from(parse_json(text, "cart model")); }

std::string bundle_to_json(const ModelBundle& bundle) {
    nlohmann::json j;
    j["format"] = "tsentinel-model";
    j["kind"] = std::string(model_kind(bundle.model));
    j["feature_names"] = nlohmann::json::array();
    for (auto f : bundle.features) j["feature_names"].push_back(std::string(metric_name(f)));
    j["standardizer"] = nlohmann::json::parse(standardizer_to_json(bundle.standardizer));
    if (const auto* knn = std::get_if<KnnModel>(&bundle.model)) {
        j["knn"] = {{"k", knn->k()}, {"training_csv", knn_training_csv(knn->training())}};
    } else {
        j["cart"] = cart_json(std::get<CartModel>(bundle.model));
    }
    return j.dump(2) + "\n";
}

ModelBundle bundle_from_json(std::string_view text) {
    const auto j = parse_json(text, "model");
    try {
        if (j.value("format", "") != "tsentinel-model") throw Error("model: not a tsentinel model document");
        std::vector<Metric> features;
        for (const auto& n : j.at("feature_names")) features.push_back(parse_metric(n.get<std::string>()));
        validate_feature_list(features);
        auto standardizer = standardizer_from_json(j.at("standardizer").dump());
        if (standardizer.features != features) throw Error("model: standardizer features differ from model features");

        const auto kind = j.at("kind").get<std::string>();
        if (kind == "knn") {
            const auto& k = j.at("knn");
            auto training = knn_training_from_csv(k.at("training_csv").get<std::string>(), features);
            return {features, std::move(standardizer), KnnModel(std::move(training), k.at("k").get<std::size_t>())};
        }
        if (kind == "cart") {
            auto cart = cart_from(j.at("cart"));
            check_dim(features.size(), cart.dim());
            return {features, std::move(standardizer), std::move(cart)};
        }
        throw Error("model: unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model: ") + e.what());
    }
}

ModelBundle read_bundle_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return bundle_from_json(ss.str());
}

void write_bundle_file(const std::string& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << bundle_to_json(bundle);
    if (!out) throw Error("write failed for '" + path + "'");
}

} // namespace tsentinel
