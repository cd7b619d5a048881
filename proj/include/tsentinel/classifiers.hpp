#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tsentinel/features.hpp"
#include "tsentinel/telemetry.hpp"

namespace tsentinel {

inline constexpr std::size_t kDefaultK = 5;

/// Lazy learner over (standardized) training rows, Euclidean distance.
class KnnModel {
public:
    KnnModel(FeatureMatrix training, std::size_t k);

    std::size_t k() const { return k_; }
    std::size_t size() const { return training_.rows(); }
    std::size_t dim() const { return training_.cols(); }
    const FeatureMatrix& training() const { return training_; }

    /// Majority label of the k nearest rows; equal distances resolve to the
    /// lower training-row index.
    Label predict(std::span<const double> x) const;

    friend bool operator==(const KnnModel&, const KnnModel&) = default;

private:
    FeatureMatrix training_;
    std::size_t k_;
};

/// Throws unless m is labeled and k is odd with 1 <= k <= rows.
KnnModel knn_fit(const FeatureMatrix& m, std::size_t k = kDefaultK);
Label knn_predict(const KnnModel& model, std::span<const double> x);

struct CartParams {
    std::optional<std::size_t> max_depth = 12; ///< nullopt: grow until pure
    std::size_t min_samples_split = 2;
    double min_gain = 0.0;

    friend bool operator==(const CartParams&, const CartParams&) = default;
};

struct CartSplit {
    std::size_t feature_index = 0;
    double threshold = 0.0;
    std::size_t left = 0;  ///< node index, taken when x[feature_index] <= threshold
    std::size_t right = 0;
    friend bool operator==(const CartSplit&, const CartSplit&) = default;
};

struct CartLeaf {
    Label label = Label::Benign;
    std::size_t n_benign = 0;
    std::size_t n_attack = 0;
    friend bool operator==(const CartLeaf&, const CartLeaf&) = default;
};

using CartNode = std::variant<CartSplit, CartLeaf>;

/// Binary Gini tree. Nodes live in a flat vector; index 0 is the root.
class CartModel {
public:
    CartModel(std::vector<CartNode> nodes, std::size_t dim, CartParams params);

    const std::vector<CartNode>& nodes() const { return nodes_; }
    const CartNode& root() const { return nodes_.front(); }
    std::size_t dim() const { return dim_; }
    const CartParams& params() const { return params_; }
    /// Edges on the longest root-to-leaf path.
    std::size_t depth() const;
    std::size_t leaf_count() const;

    Label predict(std::span<const double> x) const;

    friend bool operator==(const CartModel&, const CartModel&) = default;

private:
    std::vector<CartNode> nodes_;
    std::size_t dim_;
    CartParams params_;
};

double gini(std::size_t n_benign, std::size_t n_attack);

CartModel cart_fit(const FeatureMatrix& m, const CartParams& params = {});
Label cart_predict(const CartModel& model, std::span<const double> x);

using TrainedModel = std::variant<KnnModel, CartModel>;

Label predict(const TrainedModel& model, std::span<const double> x);
std::size_t model_dim(const TrainedModel& model);
std::string_view model_kind(const TrainedModel& model);

/// Everything a detector needs to label raw samples: which metrics to read,
/// how to standardize them, and the fitted classifier.
struct ModelBundle {
    std::vector<Metric> features;
    Standardizer standardizer;
    TrainedModel model;

    /// Projects, standardizes and classifies one telemetry sample.
    Label classify(const MetricSample& sample) const;
};

std::string cart_to_json(const CartModel& model);
CartModel cart_from_json(std::string_view text);

std::string bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(std::string_view text);
ModelBundle read_bundle_file(const std::string& path);
void write_bundle_file(const std::string& path, const ModelBundle& bundle);

} // namespace tsentinel
