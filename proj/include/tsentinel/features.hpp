#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsentinel/telemetry.hpp"

namespace tsentinel {

/// Per-column z-score transform. Columns whose training stddev is zero
/// standardize to 0.
struct Standardizer {
    std::vector<Metric> features;
    std::vector<double> mean;
    std::vector<double> stddev;

    void apply(std::span<const double> in, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> row) const;

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

Standardizer fit_standardizer(const FeatureMatrix& m);
FeatureMatrix standardize(const Standardizer& s, const FeatureMatrix& m);

/// Principal components of the population covariance. `components` is d x d
/// row-major with one unit-length component per row, sorted by eigenvalue
/// descending; in each row the entry of largest magnitude is positive
/// (first such index on ties).
struct PcaModel {
    std::vector<Metric> features;
    std::vector<double> mean;
    std::vector<double> components;
    std::vector<double> eigenvalues;

    std::size_t dim() const { return features.size(); }
    double loading(std::size_t component, std::size_t feature) const {
        return components[component * dim() + feature];
    }
    /// Scores of a row on every component.
    std::vector<double> project(std::span<const double> row) const;
    /// Inverse of project() when all d components are kept.
    std::vector<double> reconstruct(std::span<const double> scores) const;

    friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Cyclic Jacobi sweeps before fit_pca gives up.
inline constexpr int kJacobiMaxSweeps = 100;

/// Eigen-decomposition of a symmetric d x d row-major matrix by cyclic
/// Jacobi rotations. Returns (eigenvalues, eigenvectors as rows), unsorted.
std::pair<std::vector<double>, std::vector<double>> jacobi_eigen(std::vector<double> sym, std::size_t d,
                                                                 int max_sweeps = kJacobiMaxSweeps);

/// Population (1/n) covariance, d x d row-major.
std::vector<double> covariance(const FeatureMatrix& m);

PcaModel fit_pca(const FeatureMatrix& m);
std::vector<double> explained_variance_ratio(const PcaModel& p);

struct FeatureScore {
    Metric feature;
    double score;
    friend bool operator==(const FeatureScore&, const FeatureScore&) = default;
};

struct FeatureRanking {
    std::size_t components_used = 0;
    std::vector<FeatureScore> entries;

    std::vector<Metric> top(std::size_t n) const;
};

inline constexpr double kDefaultVarianceThreshold = 0.95;

/// score(j) = sum over the first K components of ratio_k * |loading_kj|,
/// where K is the shortest prefix whose ratios reach `variance_threshold`.
FeatureRanking rank_features(const PcaModel& p, double variance_threshold = kDefaultVarianceThreshold);

/// Features whose score reaches `fraction` of the top score, in ranking order.
std::vector<Metric> select_by_ranking(const FeatureRanking& r, double fraction = 0.5);

FeatureMatrix select_features(const FeatureMatrix& m, std::span<const Metric> names);

std::string standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(std::string_view text);
std::string pca_to_json(const PcaModel& p);
PcaModel pca_from_json(std::string_view text);

} // namespace tsentinel
