#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spacefill/transport.hpp"

using namespace spacefill;

namespace {

const std::vector<double> kDemoWeights{1.2, 0.8, 0.4, 1.6};

QuantizedHistogramD random_quantized(int d, int n, std::int64_t denom, std::mt19937_64& rng) {
    std::vector<std::vector<std::int64_t>> units(static_cast<std::size_t>(d));
    std::size_t rows = 1;
    const std::int64_t row_total = static_cast<std::int64_t>(n) * denom;
    for (int lvl = 0; lvl < d; ++lvl) {
        auto& u = units[static_cast<std::size_t>(lvl)];
        u.resize(rows * static_cast<std::size_t>(n));
        for (std::size_t r = 0; r < rows; ++r) {
            // random positive composition of row_total into n parts
            std::vector<std::int64_t> cuts{0, row_total};
            std::uniform_int_distribution<std::int64_t> pick(1, row_total - 1);
            while (static_cast<int>(cuts.size()) < n + 1) {
                const std::int64_t c = pick(rng);
                if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
            }
            std::sort(cuts.begin(), cuts.end());
            for (int k = 0; k < n; ++k)
                u[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] =
                    cuts[static_cast<std::size_t>(k) + 1] - cuts[static_cast<std::size_t>(k)];
        }
        rows *= static_cast<std::size_t>(n);
    }
    return QuantizedHistogramD(d, n, denom, std::move(units));
}

double nest_point(double x, const Interval& t) { return t.lo + x * t.length(); }

}  // namespace

TEST_CASE("transport map on the uniform n=1 target is the sawtooth pair") {
    TransportSpec spec(HistogramD::uniform(2, 1), 2);
    auto y = spec.transport_eval(0.125);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-12));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        auto v = spec.transport_eval(x);
        CHECK(v[0] == doctest::Approx(x).epsilon(1e-12));
        CHECK(v[1] == doctest::Approx(sawtooth(2, x)).epsilon(1e-12));
    }
}

TEST_CASE("1-d transport is the shaping function itself") {
    TransportSpec spec(HistogramD::uniform(1, 3), 1);
    for (double x : {0.0, 0.3, 0.9, 1.0})
        CHECK(spec.transport_eval(x)[0] == doctest::Approx(x).epsilon(1e-12));
    CHECK_THROWS_AS((void)spec.transport_eval(1.5), std::invalid_argument);
}

TEST_CASE("worked 2-d example") {
    // marginal (1,1); conditionals (1.2,0.8) and (0.4,1.6)
    TransportSpec spec(HistogramD(2, 2, kDemoWeights), 2);
    auto y = spec.transport_eval(0.3);
    CHECK(y[0] == doctest::Approx(0.3).epsilon(1e-12));
    // carrier g_2(2*0.3) = 0.4 lands in the first tile's shaping, value 0.4/1.2
    CHECK(y[1] == doctest::Approx(0.4 / 1.2).epsilon(1e-12));
}

TEST_CASE("preimage intervals") {
    SUBCASE("uniform 1-d") {
        TransportSpec spec(HistogramD::uniform(1, 2), 1);
        const int z[1] = {0};
        const int h[1] = {0};
        Interval t = spec.preimage_interval(z, h);
        CHECK(t.lo == doctest::Approx(0.0));
        CHECK(t.hi == doctest::Approx(0.25));
    }
    SUBCASE("uniform target splits evenly") {
        TransportSpec spec(HistogramD::uniform(2, 2), 2);
        const double want = 1.0 / std::pow(2.0 * 4.0, 2.0);
        for (int z1 = 0; z1 < 2; ++z1)
            for (int z2 = 0; z2 < 2; ++z2)
                for (int h1 = 0; h1 < 4; ++h1)
                    for (int h2 = 0; h2 < 4; ++h2) {
                        const int z[2] = {z1, z2};
                        const int h[2] = {h1, h2};
                        CHECK(spec.preimage_interval(z, h).length() ==
                              doctest::Approx(want).epsilon(1e-12));
                    }
    }
    SUBCASE("worked demo values at order 1") {
        TransportSpec spec(HistogramD(2, 2, kDemoWeights), 1);
        const int z[2] = {0, 0};
        {
            const int h[2] = {0, 0};
            Interval t = spec.preimage_interval(z, h);
            CHECK(t.lo == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(t.hi == doctest::Approx(0.075).epsilon(1e-12));
        }
        {
            // odd first offset mirrors the second slab
            const int h[2] = {1, 0};
            Interval t = spec.preimage_interval(z, h);
            CHECK(t.lo == doctest::Approx(0.425).epsilon(1e-12));
            CHECK(t.hi == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("lengths match cell masses and images stay inside the cell") {
        std::mt19937_64 rng(77);
        QuantizedHistogramD target = random_quantized(2, 2, 8, rng);
        const int s = 2;
        TransportSpec spec(target, s);
        for (int z1 = 0; z1 < 2; ++z1)
            for (int z2 = 0; z2 < 2; ++z2)
                for (int h1 = 0; h1 < 4; ++h1)
                    for (int h2 = 0; h2 < 4; ++h2) {
                        const std::vector<int> z{z1, z2};
                        const std::vector<int> h{h1, h2};
                        Interval t = spec.preimage_interval(z, h);
                        const double want = spec.target().cell_mass(z) / std::pow(2.0, s * 2);
                        CHECK(t.length() == doctest::Approx(want).epsilon(1e-12));
                        const auto bounds = refined_cell_bounds(2, s, {z, h});
                        for (double frac : {1e-9, 0.25, 0.5, 0.75, 1.0 - 1e-9}) {
                            auto y = spec.transport_eval(nest_point(frac, t));
                            for (int i = 0; i < 2; ++i) {
                                CHECK(y[static_cast<std::size_t>(i)] >=
                                      bounds[static_cast<std::size_t>(i)].lo - 1e-9);
                                CHECK(y[static_cast<std::size_t>(i)] <=
                                      bounds[static_cast<std::size_t>(i)].hi + 1e-9);
                            }
                        }
                    }
    }
}

TEST_CASE("carrier separation") {
    std::mt19937_64 rng(99);
    QuantizedHistogramD target = random_quantized(3, 2, 8, rng);
    TransportSpec spec(target, 2);
    const int n = 2;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = u(rng);
        // recompute carrier values level by level; at most one prefix alive
        std::vector<double> carrier{x};
        for (int r = 1; r < 3; ++r) {
            std::vector<double> next;
            for (std::size_t q = 0; q < carrier.size(); ++q) {
                const double shaped = spec.shaping(r - 1, q)(carrier[q]) * n;
                for (int k = 0; k < n; ++k) next.push_back(sawtooth(2, shaped - k));
            }
            int positive = 0;
            for (std::size_t p = 0; p < next.size(); ++p)
                if (spec.shaping(r, p)(next[p]) > 0.0) ++positive;
            CHECK(positive <= 1);
            carrier = std::move(next);
        }
    }
}

TEST_CASE("localization with orientation") {
    std::mt19937_64 rng(123);
    QuantizedHistogramD target = random_quantized(3, 2, 8, rng);
    const int s = 2;
    TransportSpec spec(target, s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> zpick(0, 1);
    std::uniform_int_distribution<int> hpick(0, (1 << s) - 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> z(3), h(3);
        for (int i = 0; i < 3; ++i) {
            z[static_cast<std::size_t>(i)] = zpick(rng);
            h[static_cast<std::size_t>(i)] = hpick(rng);
        }
        for (int k = 2; k <= 3; ++k) {
            // rebuild the nesting interval for the length k-1 prefix
            Interval t{0.0, 1.0};
            std::size_t row = 0;
            int parity = 0;
            for (int i = 0; i < k - 1; ++i) {
                auto w = spec.conditional_weights(i, row);
                double cum = 0.0;
                for (int kk = 0; kk < z[static_cast<std::size_t>(i)]; ++kk)
                    cum += w[static_cast<std::size_t>(kk)];
                const double lo = cum / 2.0;
                const double hi =
                    (cum + w[static_cast<std::size_t>(z[static_cast<std::size_t>(i)])]) / 2.0;
                const double teeth = std::ldexp(1.0, s);
                Interval slab{lo + (hi - lo) * h[static_cast<std::size_t>(i)] / teeth,
                              lo + (hi - lo) * (h[static_cast<std::size_t>(i)] + 1) / teeth};
                if (parity % 2 == 1) slab = Interval{1.0 - slab.hi, 1.0 - slab.lo};
                t = Interval{t.lo + slab.lo * t.length(), t.lo + slab.hi * t.length()};
                parity += h[static_cast<std::size_t>(i)];
                row = row * 2 + static_cast<std::size_t>(z[static_cast<std::size_t>(i)]);
            }
            const double x = u(rng);
            const auto coords = spec.transport_eval(nest_point(x, t));
            const double expected = parity % 2 == 0 ? spec.shaping(k - 1, row)(x)
                                                    : spec.shaping(k - 1, row)(1.0 - x);
            CHECK(std::abs(coords[static_cast<std::size_t>(k - 1)] - expected) < 1e-10);
        }
    }
}
