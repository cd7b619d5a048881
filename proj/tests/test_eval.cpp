#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tsentinel/eval.hpp"
#include "tsentinel/synth.hpp"

using namespace tsentinel;
using testutil::parse_labels;

namespace {

const std::vector<Metric> kSix(kDefaultFeatures.begin(), kDefaultFeatures.end());

void check_same(const MetricsReport& a, const MetricsReport& b) {
    CHECK(a.accuracy == doctest::Approx(b.accuracy).epsilon(1e-15));
    CHECK(a.macro_precision == doctest::Approx(b.macro_precision).epsilon(1e-15));
    CHECK(a.macro_recall == doctest::Approx(b.macro_recall).epsilon(1e-15));
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-15));
}

} // namespace

TEST_CASE("confusion counts") {
    SUBCASE("perfect predictor") {
        const auto truth = parse_labels("AABBABBBAB");
        CHECK(confusion(truth, truth) == ConfusionMatrix{4, 0, 0, 6});
    }
    SUBCASE("constant Benign predictor") {
        CHECK(confusion(parse_labels("BBBBBBBBBB"), parse_labels("AAABBBBBBB")) == ConfusionMatrix{0, 0, 3, 7});
    }
    SUBCASE("all flipped") {
        const auto c = confusion(parse_labels("BBAAA"), parse_labels("AABBB"));
        CHECK(c.tp == 0);
        CHECK(c.tn == 0);
        CHECK(c.total() == 5);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(confusion(parse_labels("A"), parse_labels("AB")), Error);
        CHECK_THROWS_AS(confusion({}, {}), Error);
    }
}

TEST_CASE("metrics formulas") {
    const auto m = metrics({3, 1, 1, 5});
    CHECK(m.attack.precision == 0.75);
    CHECK(m.attack.recall == 0.75);
    CHECK(m.attack.f1 == 0.75);
    CHECK(m.accuracy == 0.8);
    CHECK(m.benign.precision == doctest::Approx(5.0 / 6.0));
    CHECK(m.benign.recall == doctest::Approx(5.0 / 6.0));
    CHECK(m.macro_f1 == doctest::Approx((0.75 + 5.0 / 6.0) / 2.0));
}

TEST_CASE("vacuous-class convention") {
    const auto none = metrics({0, 0, 0, 9});
    CHECK(none.attack.precision == 1.0);
    CHECK(none.attack.recall == 1.0);
    CHECK(none.attack.f1 == 1.0);
    CHECK(none.macro_f1 == 1.0);

    // Attack present but never predicted: precision has a zero denominator
    // yet the class is not vacuous.
    const auto missed = metrics({0, 0, 2, 3});
    CHECK(missed.attack.precision == 0.0);
    CHECK(missed.attack.recall == 0.0);
    CHECK(missed.attack.f1 == 0.0);

    CHECK_THROWS_AS(metrics({0, 0, 0, 0}), Error);
}

TEST_CASE("exhaustive small matrices") {
    for (std::size_t tp = 0; tp <= 6; ++tp)
        for (std::size_t fp = 0; fp <= 6; ++fp)
            for (std::size_t fn = 0; fn <= 6; ++fn)
                for (std::size_t tn = 0; tn <= 6; ++tn) {
                    const ConfusionMatrix c{tp, fp, fn, tn};
                    if (c.total() == 0) continue;
                    const auto m = metrics(c);
                    for (double v : {m.accuracy, m.attack.precision, m.attack.recall, m.attack.f1,
                                     m.benign.precision, m.benign.recall, m.benign.f1, m.macro_precision,
                                     m.macro_recall, m.macro_f1}) {
                        REQUIRE(v >= 0.0);
                        REQUIRE(v <= 1.0);
                    }
                    for (const auto& cls : {m.attack, m.benign}) {
                        const double s = cls.precision + cls.recall;
                        if (s > 0) REQUIRE(std::abs(cls.f1 - 2 * cls.precision * cls.recall / s) < 1e-15);
                    }
                    const auto n = static_cast<double>(c.total());
                    // Micro averages pool both classes: TP+TN over all predictions / all members.
                    const double micro_p = static_cast<double>(tp + tn) / static_cast<double>((tp + fp) + (tn + fn));
                    const double micro_r = static_cast<double>(tp + tn) / static_cast<double>((tp + fn) + (tn + fp));
                    REQUIRE(micro_p == doctest::Approx(m.accuracy).epsilon(1e-15));
                    REQUIRE(micro_r == doctest::Approx(m.accuracy).epsilon(1e-15));
                    REQUIRE(m.accuracy == static_cast<double>(tp + tn) / n);
                }
}

TEST_CASE("metrics are scale-free and symmetric under class swap") {
    for (std::size_t tp = 0; tp <= 4; ++tp)
        for (std::size_t fp = 0; fp <= 4; ++fp)
            for (std::size_t fn = 0; fn <= 4; ++fn)
                for (std::size_t tn = 0; tn <= 4; ++tn) {
                    const ConfusionMatrix c{tp, fp, fn, tn};
                    if (c.total() == 0) continue;
                    const auto m = metrics(c);
                    for (std::size_t k : {2u, 7u}) {
                        const auto mk = metrics({k * tp, k * fp, k * fn, k * tn});
                        check_same(m, mk);
                        REQUIRE(mk.attack.f1 == doctest::Approx(m.attack.f1).epsilon(1e-15));
                    }
                    const auto swapped = metrics({tn, fn, fp, tp});
                    REQUIRE(swapped.attack == m.benign);
                    REQUIRE(swapped.benign == m.attack);
                    check_same(m, swapped);
                }
}

TEST_CASE("run_experiment on synthetic traces") {
    const auto model = default_load_model();
    const auto train = concatenate(synthesize(attack_scenario(), model, 1), synthesize(baseline_scenario(), model, 2));
    const auto test = synthesize(mixed_scenario(7), model, 7);

    const auto r = run_experiment(train, test, kSix);
    CHECK(r.features == kSix);
    CHECK(r.knn.name == "kNN");
    CHECK(r.cart.name == "CART");
    CHECK(r.knn.confusion.total() == 1440);
    CHECK(r.cart.confusion.total() == 1440);
    CHECK(r.knn.metrics.accuracy > 0.9);
    CHECK(r.knn_k == kDefaultK);
    CHECK(r.cart_params == CartParams{});

    SUBCASE("deterministic") {
        CHECK(run_experiment(train, test, kSix) == r);
    }
    SUBCASE("self-prediction with k = 1") {
        const auto self = run_experiment(train, train, kSix, 1, {.max_depth = std::nullopt});
        CHECK(self.knn.metrics.accuracy == 1.0);
        CHECK(self.cart.metrics.accuracy == 1.0);
    }
    SUBCASE("report JSON round trip") {
        auto rr = r;
        rr.train_sources = {{"attack", 1}, {"baseline", 2}};
        rr.test_sources = {{"m.csv", std::nullopt}};
        rr.feature_selection = "pca";
        CHECK(report_from_json(report_to_json(rr)) == rr);
    }
    SUBCASE("table layout") {
        const auto table = format_results_table(r);
        CHECK(table.find("ML Algorithms") != std::string::npos);
        CHECK(table.find("F1-Score") != std::string::npos);
        char expect[32];
        std::snprintf(expect, sizeof expect, "%.2f", 100.0 * r.knn.metrics.accuracy);
        CHECK(table.find(expect) != std::string::npos);
        CHECK(table.find("\nkNN") != std::string::npos);
        CHECK(table.find("\nCART") != std::string::npos);
    }
    SUBCASE("unlabeled test trace") {
        std::vector<MetricSample> samples = test.samples();
        for (auto& s : samples) s.label.reset();
        CHECK_THROWS_WITH_AS(run_experiment(train, TelemetryTrace(test.interval(), samples), kSix),
                             "evaluation requires labels", Error);
    }
}

TEST_CASE("protocol seeds") {
    const auto s = protocol_seeds(3);
    CHECK(s.baseline == 3);
    CHECK(s.attack == 503);
    CHECK(s.mixed_scenario == 103);
    CHECK(s.mixed_noise == 103);
}
