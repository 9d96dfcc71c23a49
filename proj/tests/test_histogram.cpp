#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "spacefill/histogram.hpp"

using namespace spacefill;

namespace {

HistogramD random_histogram(int d, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::size_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= static_cast<std::size_t>(n);
    std::vector<double> w(cells);
    double total = 0.0;
    for (double& v : w) {
        v = u(rng);
        total += v;
    }
    for (double& v : w) v *= static_cast<double>(cells) / total;
    return HistogramD(d, n, std::move(w));
}

const std::vector<double> kDemoWeights{1.2, 0.8, 0.4, 1.6};

}  // namespace

TEST_CASE("general histogram validation") {
    GeneralHistogram1d one_bin({0.0, 1.0}, {1.0});
    CHECK_FALSE(validate(one_bin).has_value());

    GeneralHistogram1d zero_weight({0.0, 0.5, 1.0}, {0.0, 2.0});
    auto v = validate(zero_weight);
    REQUIRE(v.has_value());
    CHECK(v->rule == "nonpositive weight");
    CHECK(v->index == 0);

    GeneralHistogram1d bad_total({0.0, 0.5, 1.0}, {1.0, 1.5});
    auto v2 = validate(bad_total);
    REQUIRE(v2.has_value());
    CHECK(v2->rule == "masses must sum to 1");

    // atom of mass 0.5 at 0.5 flanked by half-density bins
    GeneralHistogram1d atom({0.0, 0.5, 0.5, 1.0}, {0.5, 0.5, 0.5});
    CHECK_FALSE(validate(atom).has_value());

    GeneralHistogram1d doubled_atom({0.0, 0.5, 0.5, 0.5, 1.0}, {0.5, 0.25, 0.25, 0.5});
    auto v3 = validate(doubled_atom);
    REQUIRE(v3.has_value());
    CHECK(v3->rule == "atoms must be isolated");
}

TEST_CASE("d-dimensional histogram validation") {
    HistogramD demo(2, 2, kDemoWeights);
    CHECK_FALSE(validate(demo).has_value());

    HistogramD bad(2, 2, {1.2, 0.8, 0.0, 2.0});
    auto v = validate(bad);
    REQUIRE(v.has_value());
    CHECK(v->rule == "nonpositive weight");
    CHECK(v->index == 2);
}

TEST_CASE("marginal of the demo instance is uniform") {
    HistogramD demo(2, 2, kDemoWeights);
    HistogramD m = demo.marginal(1);
    CHECK(m.dim() == 1);
    CHECK(m.weights()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.weights()[1] == doctest::Approx(1.0).epsilon(1e-12));

    HistogramD uni = HistogramD::uniform(3, 2);
    HistogramD mu = uni.marginal(2);
    for (double w : mu.weights()) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("marginal equals brute-force suffix summation") {
    std::mt19937_64 rng(7);
    HistogramD h = random_histogram(3, 3, rng);
    HistogramD m = h.marginal(2);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double sum = 0.0;
            for (int c = 0; c < 3; ++c) {
                const int idx[3] = {a, b, c};
                sum += h.weight(idx);
            }
            const int zi[2] = {a, b};
            CHECK(m.weight(zi) == doctest::Approx(sum / 3.0).epsilon(1e-12));
        }
}

TEST_CASE("conditional rows") {
    HistogramD demo(2, 2, kDemoWeights);
    const int z0[1] = {0};
    auto c = demo.conditional(z0);
    CHECK(c[0] == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(0.8).epsilon(1e-12));

    HistogramD uni = HistogramD::uniform(2, 2);
    auto cu = uni.conditional(z0);
    CHECK(cu[0] == doctest::Approx(1.0));
    CHECK(cu[1] == doctest::Approx(1.0));

    // rows sum to n and match a brute-force ratio
    std::mt19937_64 rng(11);
    HistogramD h = random_histogram(3, 3, rng);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const int prefix[2] = {a, b};
            auto row = h.conditional(prefix);
            double parent = 0.0;
            std::vector<double> child(3);
            for (int c2 = 0; c2 < 3; ++c2) {
                const int idx[3] = {a, b, c2};
                child[static_cast<std::size_t>(c2)] = h.weight(idx);
                parent += h.weight(idx);
            }
            double sum = 0.0;
            for (int c2 = 0; c2 < 3; ++c2) {
                CHECK(row[static_cast<std::size_t>(c2)] ==
                      doctest::Approx(3.0 * child[static_cast<std::size_t>(c2)] / parent)
                          .epsilon(1e-12));
                sum += row[static_cast<std::size_t>(c2)];
            }
            CHECK(sum == doctest::Approx(3.0).epsilon(1e-12));
        }
}

TEST_CASE("cell mass") {
    HistogramD uni = HistogramD::uniform(2, 4);
    const int idx[2] = {1, 3};
    CHECK(uni.cell_mass(idx) == doctest::Approx(1.0 / 16.0));

    HistogramD demo(2, 2, kDemoWeights);
    const int zero[2] = {0, 0};
    CHECK(demo.cell_mass(zero) == doctest::Approx(0.3).epsilon(1e-12));

    double total = 0.0;
    for (std::size_t flat = 0; flat < demo.weights().size(); ++flat) {
        auto v = demo.unflatten(flat);
        total += demo.cell_mass(v);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    const int bad[2] = {0, 2};
    CHECK_THROWS_AS((void)demo.cell_mass(bad), std::out_of_range);
}

TEST_CASE("marginal of marginal is consistent") {
    std::mt19937_64 rng(3);
    HistogramD h = random_histogram(4, 2, rng);
    HistogramD twice = h.marginal(3).marginal(2);
    HistogramD once = h.marginal(2);
    for (std::size_t i = 0; i < once.weights().size(); ++i)
        CHECK(twice.weights()[i] == doctest::Approx(once.weights()[i]).epsilon(1e-12));
}

TEST_CASE("chain rule reconstructs cell masses") {
    std::mt19937_64 rng(19);
    HistogramD h = random_histogram(3, 3, rng);
    const double nd = 27.0;
    for (std::size_t flat = 0; flat < h.weights().size(); ++flat) {
        auto idx = h.unflatten(flat);
        double prod = 1.0;
        for (int t = 0; t < 3; ++t) {
            std::span<const int> prefix(idx.data(), static_cast<std::size_t>(t));
            prod *= h.conditional(prefix)[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])] / 3.0;
        }
        CHECK(prod == doctest::Approx(h.cell_mass(idx) ).epsilon(1e-9));
        CHECK(nd * h.cell_mass(idx) == doctest::Approx(h.weight(idx)).epsilon(1e-9));
    }
}

TEST_CASE("quantized histogram invariants") {
    // n = 2, A = 4: marginal [1/2, 1/2], conditionals 1/4-quantized.
    std::vector<std::vector<std::int64_t>> units{
        {4, 4},          // level 0: weights 1, 1
        {6, 2, 2, 6},    // level 1: rows (1.5, 0.5), (0.5, 1.5)
    };
    QuantizedHistogramD q(2, 2, 4, units);
    CHECK_FALSE(validate(q).has_value());
    // base weight is the product of conditional weights along the path
    CHECK(q.base().weights()[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(q.base().weights()[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(q.conditional_weights(1, 1)[1] == doctest::Approx(1.5).epsilon(1e-12));

    // a row that does not sum to n*A
    auto bad_units = units;
    bad_units[1][0] = 5;
    QuantizedHistogramD bad(2, 2, 4, bad_units);
    auto v = validate(bad);
    REQUIRE(v.has_value());
    CHECK(v->rule == "conditional row must sum to n");

    // base weights inconsistent with the conditional chain
    HistogramD wrong_base(2, 2, {1.0, 1.0, 1.0, 1.0});
    QuantizedHistogramD mismatched(wrong_base, 4, units);
    auto v2 = validate(mismatched);
    REQUIRE(v2.has_value());
    CHECK(v2->rule == "conditional chain does not reconstruct base weights");
}
