#include "tsentinel/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace tsentinel {

namespace {

void require_same_features(std::span<const Metric> expected, std::span<const Metric> got) {
    if (!std::ranges::equal(expected, got)) {
        throw Error("feature name mismatch: expected [" + join_metric_names(expected) + "], got [" +
                    join_metric_names(got) + "]");
    }
}

std::vector<double> column_means(const FeatureMatrix& m) {
    std::vector<double> mean(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m.at(r, c);
    }
    for (auto& v : mean) v /= static_cast<double>(m.rows());
    return mean;
}

nlohmann::json names_json(std::span<const Metric> features) {
    auto j = nlohmann::json::array();
    for (auto f : features) j.push_back(std::string(metric_name(f)));
    return j;
}

std::vector<Metric> names_from(const nlohmann::json& j) {
    if (!j.contains("feature_names") || !j.at("feature_names").is_array()) {
        throw Error("missing 'feature_names' array");
    }
    std::vector<Metric> out;
    for (const auto& n : j.at("feature_names")) out.push_back(parse_metric(n.get<std::string>()));
    validate_feature_list(out);
    return out;
}

std::vector<double> doubles_from(const nlohmann::json& j, const char* key, std::size_t expected) {
    if (!j.contains(key) || !j.at(key).is_array()) throw Error(std::string("missing '") + key + "' array");
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != expected) throw Error(std::string("'") + key + "' has the wrong length");
    return v;
}

nlohmann::json parse_json(std::string_view text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid JSON: ") + e.what());
    }
}

} // namespace

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != mean.size() || out.size() != mean.size()) {
        throw Error("row has " + std::to_string(in.size()) + " values, standardizer expects " +
                    std::to_string(mean.size()));
    }
    for (std::size_t c = 0; c < in.size(); ++c) {
        out[c] = stddev[c] > 0.0 ? (in[c] - mean[c]) / stddev[c] : 0.0;
    }
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
    std::vector<double> out(row.size());
    apply(row, out);
    return out;
}

Standardizer fit_standardizer(const FeatureMatrix& m) {
    if (m.rows() < 2) throw Error("fit_standardizer needs at least 2 rows");
    Standardizer s{m.features(), column_means(m), std::vector<double>(m.cols(), 0.0)};
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double d = m.at(r, c) - s.mean[c];
            s.stddev[c] += d * d;
        }
    }
    for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(m.rows()));
    return s;
}

FeatureMatrix standardize(const Standardizer& s, const FeatureMatrix& m) {
    require_same_features(s.features, m.features());
    std::vector<double> data(m.data().size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        s.apply(m.row(r), std::span<double>(data.data() + r * m.cols(), m.cols()));
    }
    return FeatureMatrix(m.features(), m.rows(), std::move(data), m.maybe_labels());
}

std::vector<double> covariance(const FeatureMatrix& m) {
    const std::size_t d = m.cols();
    const auto mean = column_means(m);
    std::vector<double> cov(d * d, 0.0);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) centered[c] = m.at(r, c) - mean[c];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) cov[i * d + j] += centered[i] * centered[j];
        }
    }
    const auto n = static_cast<double>(m.rows());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= n;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    return cov;
}

std::pair<std::vector<double>, std::vector<double>> jacobi_eigen(std::vector<double> a, std::size_t d,
                                                                 int max_sweeps) {
    if (a.size() != d * d) throw Error("jacobi_eigen: matrix is not d x d");
    // v holds eigenvectors as columns while rotating.
    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
    auto at = [d](std::vector<double>& m, std::size_t r, std::size_t c) -> double& { return m[r * d + c]; };

    double scale = 0.0;
    for (double x : a) scale += x * x;
    const double tol = 1e-30 * std::max(scale, 1e-300);

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += at(a, p, q) * at(a, p, q);
        }
        if (off <= tol) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = at(a, p, q);
                if (apq == 0.0) continue;
                const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
                const double c = 1.0 / std::hypot(t, 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = at(a, k, p);
                    const double akq = at(a, k, q);
                    at(a, k, p) = c * akp - s * akq;
                    at(a, k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = at(a, p, k);
                    const double aqk = at(a, q, k);
                    at(a, p, k) = c * apk - s * aqk;
                    at(a, q, k) = s * apk + c * aqk;
                }
                at(a, p, q) = 0.0;
                at(a, q, p) = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = at(v, k, p);
                    const double vkq = at(v, k, q);
                    at(v, k, p) = c * vkp - s * vkq;
                    at(v, k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged) {
        throw Error("eigen-solver did not converge within " + std::to_string(max_sweeps) + " Jacobi sweeps");
    }

    std::vector<double> values(d);
    std::vector<double> rows(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        values[i] = at(a, i, i);
        for (std::size_t k = 0; k < d; ++k) rows[i * d + k] = at(v, k, i);
    }
    return {std::move(values), std::move(rows)};
}

PcaModel fit_pca(const FeatureMatrix& m) {
    if (m.rows() < 2) throw Error("fit_pca needs at least 2 rows");
    const std::size_t d = m.cols();
    const auto cov = covariance(m);
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += cov[i * d + i];

    auto [values, vectors] = jacobi_eigen(cov, d);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

    PcaModel p{m.features(), column_means(m), std::vector<double>(d * d), std::vector<double>(d)};
    const double clamp_tol = 1e-12 * std::max(1.0, trace);
    for (std::size_t k = 0; k < d; ++k) {
        const std::size_t src = order[k];
        double lambda = values[src];
        if (lambda < 0.0) {
            if (lambda < -clamp_tol) throw Error("covariance has a negative eigenvalue");
            lambda = 0.0;
        }
        p.eigenvalues[k] = lambda;

        std::span<const double> vec(vectors.data() + src * d, d);
        double biggest = 0.0;
        for (double x : vec) biggest = std::max(biggest, std::abs(x));
        std::size_t pivot = 0;
        while (std::abs(vec[pivot]) < biggest - 1e-12) ++pivot;
        const double sign = vec[pivot] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) p.components[k * d + j] = sign * vec[j];
    }
    return p;
}

std::vector<double> PcaModel::project(std::span<const double> row) const {
    const std::size_t d = dim();
    if (row.size() != d) throw Error("project: dimension mismatch");
    std::vector<double> scores(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = 0; j < d; ++j) scores[k] += loading(k, j) * (row[j] - mean[j]);
    }
    return scores;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> scores) const {
    const std::size_t d = dim();
    if (scores.size() != d) throw Error("reconstruct: dimension mismatch");
    std::vector<double> row(mean);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = 0; j < d; ++j) row[j] += scores[k] * loading(k, j);
    }
    return row;
}

std::vector<double> explained_variance_ratio(const PcaModel& p) {
    const double total = std::accumulate(p.eigenvalues.begin(), p.eigenvalues.end(), 0.0);
    if (!(total > 0.0)) throw Error("zero total variance");
    std::vector<double> ratio(p.eigenvalues.size());
    for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = p.eigenvalues[i] / total;
    return ratio;
}

FeatureRanking rank_features(const PcaModel& p, double variance_threshold) {
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
        throw Error("variance threshold must lie in (0, 1]");
    }
    const auto ratio = explained_variance_ratio(p);
    const std::size_t d = p.dim();

    std::size_t used = d;
    if (variance_threshold < 1.0) {
        double cumulative = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            cumulative += ratio[k];
            if (cumulative >= variance_threshold - 1e-12) {
                used = k + 1;
                break;
            }
        }
    }

    FeatureRanking r;
    r.components_used = used;
    for (std::size_t j = 0; j < d; ++j) {
        double score = 0.0;
        for (std::size_t k = 0; k < used; ++k) score += ratio[k] * std::abs(p.loading(k, j));
        r.entries.push_back({p.features[j], score});
    }
    std::ranges::stable_sort(r.entries, [](const FeatureScore& a, const FeatureScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return index_of(a.feature) < index_of(b.feature);
    });
    return r;
}

std::vector<Metric> FeatureRanking::top(std::size_t n) const {
    std::vector<Metric> out;
    for (std::size_t i = 0; i < std::min(n, entries.size()); ++i) out.push_back(entries[i].feature);
    return out;
}

std::vector<Metric> select_by_ranking(const FeatureRanking& r, double fraction) {
    std::vector<Metric> out;
    if (r.entries.empty()) return out;
    const double cutoff = fraction * r.entries.front().score;
    for (const auto& e : r.entries) {
        if (e.score >= cutoff) out.push_back(e.feature);
    }
    return out;
}

FeatureMatrix select_features(const FeatureMatrix& m, std::span<const Metric> names) {
    validate_feature_list(names);
    std::vector<std::size_t> cols;
    for (auto n : names) {
        const auto it = std::ranges::find(m.features(), n);
        if (it == m.features().end()) {
            throw Error("unknown feature name '" + std::string(metric_name(n)) + "' for this matrix");
        }
        cols.push_back(static_cast<std::size_t>(it - m.features().begin()));
    }
    std::vector<double> data;
    data.reserve(m.rows() * cols.size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (auto c : cols) data.push_back(m.at(r, c));
    }
    return FeatureMatrix({names.begin(), names.end()}, m.rows(), std::move(data), m.maybe_labels());
}

std::string standardizer_to_json(const Standardizer& s) {
    nlohmann::json j;
    j["feature_names"] = names_json(s.features);
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    return j.dump(2);
}

Standardizer standardizer_from_json(std::string_view text) {
    const auto j = parse_json(text);
    Standardizer s;
    s.features = names_from(j);
    s.mean = doubles_from(j, "mean", s.features.size());
    s.stddev = doubles_from(j, "stddev", s.features.size());
    for (double sd : s.stddev) {
        if (!(sd >= 0.0)) throw Error("stddev entries must be non-negative");
    }
    return s;
}

std::string pca_to_json(const PcaModel& p) {
    nlohmann::json j;
    j["feature_names"] = names_json(p.features);
    j["covariance"] = "population";
    j["mean"] = p.mean;
    auto rows = nlohmann::json::array();
    for (std::size_t k = 0; k < p.dim(); ++k) {
        rows.push_back(std::vector<double>(p.components.begin() + static_cast<std::ptrdiff_t>(k * p.dim()),
                                           p.components.begin() + static_cast<std::ptrdiff_t>((k + 1) * p.dim())));
    }
    j["loadings"] = rows;
    j["eigenvalues"] = p.eigenvalues;
    return j.dump(2);
}

PcaModel pca_from_json(std::string_view text) {
    const auto j = parse_json(text);
    PcaModel p;
    p.features = names_from(j);
    const std::size_t d = p.features.size();
    p.mean = doubles_from(j, "mean", d);
    p.eigenvalues = doubles_from(j, "eigenvalues", d);
    if (!j.contains("loadings") || !j.at("loadings").is_array() || j.at("loadings").size() != d) {
        throw Error("'loadings' must be a d x d array");
    }
    for (const auto& row : j.at("loadings")) {
        auto r = row.get<std::vector<double>>();
        if (r.size() != d) throw Error("'loadings' must be a d x d array");
        p.components.insert(p.components.end(), r.begin(), r.end());
    }
    return p;
}

} // namespace tsentinel
