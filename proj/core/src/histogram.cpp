#include "spacefill/histogram.hpp"

#include <cmath>
#include <stdexcept>

namespace spacefill {

namespace {

std::size_t checked_pow(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= static_cast<std::size_t>(base);
        if (r > (std::size_t{1} << 40))
            throw std::invalid_argument("histogram: n^d too large");
    }
    return r;
}

}  // namespace

GeneralHistogram1d::GeneralHistogram1d(std::vector<double> breakpoints,
                                       std::vector<double> weights)
    : breakpoints_(std::move(breakpoints)), weights_(std::move(weights)) {
    if (breakpoints_.size() < 2 || breakpoints_.size() != weights_.size() + 1)
        throw std::invalid_argument("GeneralHistogram1d: need n+1 breakpoints for n weights");
}

double GeneralHistogram1d::bin_measure(std::size_t k) const {
    return is_atom(k) ? 1.0 : breakpoints_[k + 1] - breakpoints_[k];
}

ValidationReport validate(const GeneralHistogram1d& h) {
    const auto& t = h.breakpoints();
    const auto& w = h.weights();
    const std::size_t n = w.size();
    if (t.front() != 0.0) return Violation{"first breakpoint must be 0", 0, t.front()};
    if (t.back() != 1.0) return Violation{"last breakpoint must be 1", n, t.back() - 1.0};
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
        if (t[k] > t[k + 1])
            return Violation{"breakpoints must be nondecreasing", k, t[k] - t[k + 1]};
    for (std::size_t k = 0; k + 2 < t.size(); ++k)
        if (t[k] == t[k + 1] && t[k + 1] == t[k + 2])
            return Violation{"atoms must be isolated", k, t[k]};
    for (std::size_t k = 0; k < n; ++k)
        if (!(w[k] > 0.0)) return Violation{"nonpositive weight", k, w[k]};
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += h.bin_mass(k);
    if (std::abs(total - 1.0) > tol::kStructural)
        return Violation{"masses must sum to 1", 0, total - 1.0};
    return std::nullopt;
}

HistogramD::HistogramD(int dim, int resolution, std::vector<double> weights)
    : dim_(dim), resolution_(resolution), weights_(std::move(weights)) {
    if (dim_ < 1) throw std::invalid_argument("HistogramD: dim must be positive");
    if (resolution_ < 1) throw std::invalid_argument("HistogramD: resolution must be positive");
    if (weights_.size() != checked_pow(resolution_, dim_))
        throw std::invalid_argument("HistogramD: weights size must be n^d");
}

HistogramD HistogramD::uniform(int dim, int resolution) {
    return HistogramD(dim, resolution,
                      std::vector<double>(checked_pow(resolution, dim), 1.0));
}

std::size_t HistogramD::flatten(std::span<const int> index) const {
    if (index.size() != static_cast<std::size_t>(dim_))
        throw std::out_of_range("HistogramD: index length != dim");
    std::size_t flat = 0;
    for (int i = 0; i < dim_; ++i) {
        if (index[i] < 0 || index[i] >= resolution_)
            throw std::out_of_range("HistogramD: index out of range");
        flat = flat * static_cast<std::size_t>(resolution_) + static_cast<std::size_t>(index[i]);
    }
    return flat;
}

std::vector<int> HistogramD::unflatten(std::size_t flat) const {
    std::vector<int> index(static_cast<std::size_t>(dim_));
    for (int i = dim_ - 1; i >= 0; --i) {
        index[static_cast<std::size_t>(i)] =
            static_cast<int>(flat % static_cast<std::size_t>(resolution_));
        flat /= static_cast<std::size_t>(resolution_);
    }
    return index;
}

double HistogramD::cell_mass(std::span<const int> index) const {
    double inv = 1.0;
    for (int i = 0; i < dim_; ++i) inv /= resolution_;
    return weight(index) * inv;
}

HistogramD HistogramD::marginal(int prefix_len) const {
    if (prefix_len < 1 || prefix_len >= dim_)
        throw std::invalid_argument("HistogramD::marginal: prefix length out of range");
    const std::size_t rows = checked_pow(resolution_, prefix_len);
    const std::size_t block = weights_.size() / rows;
    double scale = 1.0;
    for (int i = 0; i < dim_ - prefix_len; ++i) scale /= resolution_;
    std::vector<double> out(rows, 0.0);
    for (std::size_t z = 0; z < rows; ++z) {
        double sum = 0.0;
        for (std::size_t j = 0; j < block; ++j) sum += weights_[z * block + j];
        out[z] = scale * sum;
    }
    return HistogramD(prefix_len, resolution_, std::move(out));
}

std::vector<double> HistogramD::conditional(std::span<const int> prefix) const {
    const int t = static_cast<int>(prefix.size());
    if (t >= dim_) throw std::invalid_argument("HistogramD::conditional: prefix too long");
    std::size_t row = 0;
    for (int i = 0; i < t; ++i) {
        if (prefix[i] < 0 || prefix[i] >= resolution_)
            throw std::out_of_range("HistogramD::conditional: prefix index out of range");
        row = row * static_cast<std::size_t>(resolution_) + static_cast<std::size_t>(prefix[i]);
    }
    const std::size_t block = checked_pow(resolution_, dim_ - t - 1);
    const std::size_t base = row * static_cast<std::size_t>(resolution_) * block;
    std::vector<double> child(static_cast<std::size_t>(resolution_), 0.0);
    double parent = 0.0;
    for (int k = 0; k < resolution_; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j < block; ++j)
            sum += weights_[base + static_cast<std::size_t>(k) * block + j];
        child[static_cast<std::size_t>(k)] = sum;
        parent += sum;
    }
    if (!(parent > 0.0))
        throw std::invalid_argument("HistogramD::conditional: zero marginal mass at prefix");
    for (double& c : child) c = resolution_ * c / parent;
    return child;
}

ValidationReport validate(const HistogramD& h) {
    const auto& w = h.weights();
    for (std::size_t k = 0; k < w.size(); ++k)
        if (!(w[k] > 0.0)) return Violation{"nonpositive weight", k, w[k]};
    double total = 0.0;
    for (double v : w) total += v;
    const double expected = static_cast<double>(w.size());
    if (std::abs(total - expected) > tol::kAccumulated * expected)
        return Violation{"weights must sum to n^d", 0, total - expected};
    return std::nullopt;
}

namespace {

std::vector<double> base_weights_from_units(
    int dim, int resolution, std::int64_t denom,
    const std::vector<std::vector<std::int64_t>>& units) {
    const std::size_t cells = checked_pow(resolution, dim);
    std::vector<double> w(cells, 0.0);
    std::vector<int> idx(static_cast<std::size_t>(dim));
    for (std::size_t flat = 0; flat < cells; ++flat) {
        std::size_t rest = flat;
        for (int i = dim - 1; i >= 0; --i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rest % resolution);
            rest /= static_cast<std::size_t>(resolution);
        }
        // w_z = n^d * prod_i units_i/(n*A) = prod_i units_i / A^d
        double prod = 1.0;
        std::size_t row = 0;
        for (int lvl = 0; lvl < dim; ++lvl) {
            const int k = idx[static_cast<std::size_t>(lvl)];
            prod *= static_cast<double>(
                        units[static_cast<std::size_t>(lvl)]
                             [row * static_cast<std::size_t>(resolution) +
                              static_cast<std::size_t>(k)]) /
                    static_cast<double>(denom);
            row = row * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(k);
        }
        w[flat] = prod;
    }
    return w;
}

}  // namespace

QuantizedHistogramD::QuantizedHistogramD(
    int dim, int resolution, std::int64_t delta_denominator,
    std::vector<std::vector<std::int64_t>> conditional_units)
    : base_(dim, resolution,
            base_weights_from_units(dim, resolution, delta_denominator, conditional_units)),
      delta_denominator_(delta_denominator),
      conditional_units_(std::move(conditional_units)) {
    check_shape();
}

QuantizedHistogramD::QuantizedHistogramD(
    HistogramD base, std::int64_t delta_denominator,
    std::vector<std::vector<std::int64_t>> conditional_units)
    : base_(std::move(base)),
      delta_denominator_(delta_denominator),
      conditional_units_(std::move(conditional_units)) {
    check_shape();
}

void QuantizedHistogramD::check_shape() const {
    if (delta_denominator_ < 1)
        throw std::invalid_argument("QuantizedHistogramD: delta denominator must be >= 1");
    if (conditional_units_.size() != static_cast<std::size_t>(base_.dim()))
        throw std::invalid_argument("QuantizedHistogramD: need one conditional level per dim");
    std::size_t rows = 1;
    for (int lvl = 0; lvl < base_.dim(); ++lvl) {
        if (conditional_units_[static_cast<std::size_t>(lvl)].size() !=
            rows * static_cast<std::size_t>(base_.resolution()))
            throw std::invalid_argument("QuantizedHistogramD: bad conditional level size");
        rows *= static_cast<std::size_t>(base_.resolution());
    }
}

std::span<const std::int64_t> QuantizedHistogramD::conditional_units(
    int level, std::size_t row) const {
    const auto& lvl = conditional_units_.at(static_cast<std::size_t>(level));
    const std::size_t n = static_cast<std::size_t>(resolution());
    return {lvl.data() + row * n, n};
}

std::vector<double> QuantizedHistogramD::conditional_weights(int level, std::size_t row) const {
    auto units = conditional_units(level, row);
    std::vector<double> w(units.size());
    for (std::size_t k = 0; k < units.size(); ++k)
        w[k] = static_cast<double>(units[k]) / static_cast<double>(delta_denominator_);
    return w;
}

ValidationReport validate(const QuantizedHistogramD& h) {
    const int n = h.resolution();
    const std::int64_t target = static_cast<std::int64_t>(n) * h.delta_denominator();
    const auto& levels = h.all_conditional_units();
    for (std::size_t lvl = 0; lvl < levels.size(); ++lvl) {
        const auto& units = levels[lvl];
        for (std::size_t k = 0; k < units.size(); ++k)
            if (units[k] < 1)
                return Violation{"conditional weight not a positive multiple of delta", k,
                                 static_cast<double>(units[k])};
        for (std::size_t row = 0; row * static_cast<std::size_t>(n) < units.size(); ++row) {
            std::int64_t sum = 0;
            for (int k = 0; k < n; ++k)
                sum += units[row * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
            if (sum != target)
                return Violation{"conditional row must sum to n", row,
                                 static_cast<double>(sum - target) /
                                     static_cast<double>(h.delta_denominator())};
        }
    }
    const auto& w = h.base().weights();
    const auto rebuilt = base_weights_from_units(h.dim(), n, h.delta_denominator(), levels);
    for (std::size_t k = 0; k < w.size(); ++k)
        if (std::abs(w[k] - rebuilt[k]) > tol::kAccumulated)
            return Violation{"conditional chain does not reconstruct base weights", k,
                             w[k] - rebuilt[k]};
    return validate(h.base());
}

}  // namespace spacefill
