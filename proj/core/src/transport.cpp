#include "spacefill/transport.hpp"

#include <cmath>
#include <stdexcept>

namespace spacefill {

namespace {

// [a,b] rescaled into position c..d of itself: [a + c(b-a), a + d(b-a)].
Interval nest(const Interval& outer, const Interval& inner) {
    const double len = outer.length();
    return {outer.lo + inner.lo * len, outer.lo + inner.hi * len};
}

Interval mirror(const Interval& p) { return {1.0 - p.hi, 1.0 - p.lo}; }

}  // namespace

std::vector<Interval> refined_cell_bounds(int resolution, int order, const RefinedCell& cell) {
    const double side = 1.0 / (static_cast<double>(resolution) * std::ldexp(1.0, order));
    std::vector<Interval> bounds(cell.z.size());
    for (std::size_t i = 0; i < cell.z.size(); ++i) {
        const double lo = static_cast<double>(cell.z[i]) / resolution +
                          static_cast<double>(cell.h[i]) * side;
        bounds[i] = {lo, lo + side};
    }
    return bounds;
}

TransportSpec::TransportSpec(HistogramD target, int order)
    : target_(std::move(target)), order_(order) {
    if (order_ < 1) throw std::invalid_argument("TransportSpec: order must be >= 1");
    if (auto v = validate(target_))
        throw std::invalid_argument("TransportSpec: invalid target: " + v->rule);
    const int d = target_.dim();
    const int n = target_.resolution();
    // Conditional rows from block sums over the trailing coordinates.
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(d) + 1);
    sums[static_cast<std::size_t>(d)] = target_.weights();
    for (int lvl = d - 1; lvl >= 0; --lvl) {
        const auto& fine = sums[static_cast<std::size_t>(lvl) + 1];
        std::vector<double> coarse(fine.size() / static_cast<std::size_t>(n), 0.0);
        for (std::size_t r = 0; r < coarse.size(); ++r)
            for (int k = 0; k < n; ++k)
                coarse[r] += fine[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
        sums[static_cast<std::size_t>(lvl)] = std::move(coarse);
    }
    cond_.resize(static_cast<std::size_t>(d));
    for (int lvl = 0; lvl < d; ++lvl) {
        const auto& parent = sums[static_cast<std::size_t>(lvl)];
        const auto& child = sums[static_cast<std::size_t>(lvl) + 1];
        auto& out = cond_[static_cast<std::size_t>(lvl)];
        out.resize(child.size());
        for (std::size_t r = 0; r < parent.size(); ++r)
            for (int k = 0; k < n; ++k) {
                const std::size_t j = r * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
                out[j] = static_cast<double>(n) * child[j] / parent[r];
            }
    }
    build_shaping();
}

TransportSpec::TransportSpec(QuantizedHistogramD target, int order)
    : target_(target.base()), quantized_(std::move(target)), order_(order) {
    if (order_ < 1) throw std::invalid_argument("TransportSpec: order must be >= 1");
    if (auto v = validate(*quantized_))
        throw std::invalid_argument("TransportSpec: invalid target: " + v->rule);
    const int d = target_.dim();
    const int n = target_.resolution();
    const double denom = static_cast<double>(quantized_->delta_denominator());
    cond_.resize(static_cast<std::size_t>(d));
    for (int lvl = 0; lvl < d; ++lvl) {
        const auto& units = quantized_->all_conditional_units()[static_cast<std::size_t>(lvl)];
        auto& out = cond_[static_cast<std::size_t>(lvl)];
        out.resize(units.size());
        for (std::size_t j = 0; j < units.size(); ++j)
            out[j] = static_cast<double>(units[j]) / denom;
        (void)n;
    }
    build_shaping();
}

void TransportSpec::build_shaping() {
    const int d = target_.dim();
    const int n = target_.resolution();
    shaping_.resize(static_cast<std::size_t>(d));
    for (int lvl = 0; lvl < d; ++lvl) {
        const auto& rows = cond_[static_cast<std::size_t>(lvl)];
        const std::size_t count = rows.size() / static_cast<std::size_t>(n);
        auto& out = shaping_[static_cast<std::size_t>(lvl)];
        out.reserve(count);
        for (std::size_t r = 0; r < count; ++r)
            out.push_back(pwl_from_uniform_weights(
                {rows.data() + r * static_cast<std::size_t>(n), static_cast<std::size_t>(n)}));
    }
}

std::span<const double> TransportSpec::conditional_weights(int level, std::size_t row) const {
    const auto& lvl = cond_.at(static_cast<std::size_t>(level));
    const std::size_t n = static_cast<std::size_t>(resolution());
    return {lvl.data() + row * n, n};
}

std::vector<double> TransportSpec::transport_eval(double x) const {
    if (x < 0.0 || x > 1.0)
        throw std::invalid_argument("transport_eval: x must lie in [0,1]");
    const int d = dim();
    const int n = resolution();
    std::vector<double> coords(static_cast<std::size_t>(d));
    coords[0] = shaping(0, 0)(x);
    // Localized carrier values, one per index prefix of the current length.
    std::vector<double> carrier{x};
    for (int r = 1; r < d; ++r) {
        std::vector<double> next(carrier.size() * static_cast<std::size_t>(n));
        double z_sum = 0.0;
        for (std::size_t q = 0; q < carrier.size(); ++q) {
            const double shaped = shaping(r - 1, q)(carrier[q]) * n;
            for (int k = 0; k < n; ++k) {
                const double v = sawtooth(order_, shaped - k);
                const std::size_t p = q * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
                next[p] = v;
                z_sum += shaping(r, p)(v);
            }
        }
        coords[static_cast<std::size_t>(r)] = z_sum;
        carrier = std::move(next);
    }
    return coords;
}

Interval TransportSpec::preimage_interval(std::span<const int> z, std::span<const int> h) const {
    const int d = dim();
    const int n = resolution();
    if (z.size() != static_cast<std::size_t>(d) || h.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("preimage_interval: index vectors must have length d");
    const double teeth = std::ldexp(1.0, order_);
    Interval t{0.0, 1.0};
    std::size_t row = 0;
    int parity = 0;
    for (int i = 0; i < d; ++i) {
        const int zi = z[static_cast<std::size_t>(i)];
        const int hi = h[static_cast<std::size_t>(i)];
        if (zi < 0 || zi >= n) throw std::out_of_range("preimage_interval: z out of range");
        if (hi < 0 || hi >= static_cast<int>(teeth))
            throw std::out_of_range("preimage_interval: h out of range");
        const auto w = conditional_weights(i, row);
        double cum = 0.0;
        for (int k = 0; k < zi; ++k) cum += w[static_cast<std::size_t>(k)];
        // The shaping function maps this slab linearly onto tile zi; the
        // dyadic offset selects one tooth inside it.
        Interval slab{cum / n, (cum + w[static_cast<std::size_t>(zi)]) / n};
        Interval p = nest(slab, {hi / teeth, (hi + 1) / teeth});
        t = nest(t, parity % 2 == 0 ? p : mirror(p));
        parity += hi;
        row = row * static_cast<std::size_t>(n) + static_cast<std::size_t>(zi);
    }
    return t;
}

}  // namespace spacefill
