#include "spacefill/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spacefill {

namespace {

std::size_t ipow(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

// Ceiling with a small downward guard so values that are grid points up to
// floating error do not get bumped to the next step.
std::int64_t guarded_ceil(double x) {
    return static_cast<std::int64_t>(std::ceil(x - 1e-9));
}

}  // namespace

ValidationReport validate(const InputDistribution& input) {
    if (const auto* s = std::get_if<SampleSet>(&input)) {
        if (s->dim < 1) return Violation{"sample dimension must be positive", 0,
                                         static_cast<double>(s->dim)};
        if (s->points.empty()) return Violation{"empty sample set", 0, 0.0};
        if (s->points.size() % static_cast<std::size_t>(s->dim) != 0)
            return Violation{"sample row length must equal dim", s->points.size(), 0.0};
        for (std::size_t i = 0; i < s->points.size(); ++i)
            if (s->points[i] < 0.0 || s->points[i] > 1.0)
                return Violation{"sample coordinate outside [0,1]", i, s->points[i]};
        return std::nullopt;
    }
    const auto& g = std::get<CellMassGrid>(input);
    if (g.dim < 1 || g.resolution < 1)
        return Violation{"grid dimensions must be positive", 0, 0.0};
    if (g.masses.size() != ipow(g.resolution, g.dim))
        return Violation{"grid needs n^d masses", g.masses.size(), 0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < g.masses.size(); ++i) {
        if (g.masses[i] < 0.0) return Violation{"negative mass", i, g.masses[i]};
        total += g.masses[i];
    }
    if (std::abs(total - 1.0) > tol::kAccumulated)
        return Violation{"masses must sum to 1", 0, total - 1.0};
    return std::nullopt;
}

std::size_t PrefixMassLedger::level_size(int level) const { return ipow(resolution, level); }

std::size_t PrefixMassLedger::prefix_row(std::span<const int> prefix) const {
    std::size_t row = 0;
    for (int v : prefix) {
        if (v < 0 || v >= resolution)
            throw std::out_of_range("PrefixMassLedger: prefix index out of range");
        row = row * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(v);
    }
    return row;
}

double PrefixMassLedger::quantized_conditional(int level, std::size_t row) const {
    return static_cast<double>(quantized_units[static_cast<std::size_t>(level - 1)][row]) /
           static_cast<double>(delta_denominator);
}

double PrefixMassLedger::quantized_mass(int level, std::size_t row) const {
    double denom = 1.0;
    for (int i = 0; i < level; ++i) denom *= static_cast<double>(delta_denominator);
    return static_cast<double>(quantized_mass_num[static_cast<std::size_t>(level - 1)][row]) /
           denom;
}

PrefixMassLedger compute_masses(const InputDistribution& input, int resolution) {
    if (resolution < 1) throw std::invalid_argument("compute_masses: resolution must be positive");
    if (auto v = validate(input))
        throw std::invalid_argument("compute_masses: invalid input: " + v->rule);

    PrefixMassLedger ledger;
    ledger.resolution = resolution;

    std::vector<double> finest;
    if (const auto* s = std::get_if<SampleSet>(&input)) {
        ledger.dim = s->dim;
        finest.assign(ipow(resolution, s->dim), 0.0);
        const double w = 1.0 / static_cast<double>(s->size());
        for (std::size_t p = 0; p < s->size(); ++p) {
            std::size_t flat = 0;
            for (int i = 0; i < s->dim; ++i) {
                const double x = s->points[p * static_cast<std::size_t>(s->dim) +
                                           static_cast<std::size_t>(i)];
                int cell = static_cast<int>(std::floor(x * resolution));
                cell = std::clamp(cell, 0, resolution - 1);
                flat = flat * static_cast<std::size_t>(resolution) +
                       static_cast<std::size_t>(cell);
            }
            finest[flat] += w;
        }
    } else {
        const auto& g = std::get<CellMassGrid>(input);
        if (g.resolution != resolution)
            throw std::invalid_argument("compute_masses: grid resolution mismatch");
        ledger.dim = g.dim;
        finest = g.masses;
    }

    const int d = ledger.dim;
    ledger.mass.resize(static_cast<std::size_t>(d));
    ledger.mass[static_cast<std::size_t>(d) - 1] = std::move(finest);
    for (int k = d - 1; k >= 1; --k) {
        const auto& fine = ledger.mass[static_cast<std::size_t>(k)];
        std::vector<double> coarse(fine.size() / static_cast<std::size_t>(resolution), 0.0);
        for (std::size_t r = 0; r < coarse.size(); ++r)
            for (int c = 0; c < resolution; ++c)
                coarse[r] += fine[r * static_cast<std::size_t>(resolution) +
                                  static_cast<std::size_t>(c)];
        ledger.mass[static_cast<std::size_t>(k) - 1] = std::move(coarse);
    }

    ledger.conditional.resize(static_cast<std::size_t>(d));
    ledger.conditional[0] = ledger.mass[0];
    for (int k = 2; k <= d; ++k) {
        const auto& child = ledger.mass[static_cast<std::size_t>(k - 1)];
        const auto& parent = ledger.mass[static_cast<std::size_t>(k - 2)];
        auto& cond = ledger.conditional[static_cast<std::size_t>(k - 1)];
        cond.resize(child.size());
        for (std::size_t r = 0; r < parent.size(); ++r)
            for (int c = 0; c < resolution; ++c) {
                const std::size_t j =
                    r * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(c);
                cond[j] = parent[r] > 0.0 ? child[j] / parent[r]
                                          : 1.0 / static_cast<double>(resolution);
            }
    }
    return ledger;
}

void quantize_masses(PrefixMassLedger& ledger, std::int64_t delta_denominator) {
    if (delta_denominator < 1)
        throw std::invalid_argument("quantize_masses: delta must be of the form 1/A");
    if (ledger.dim < 1) throw std::invalid_argument("quantize_masses: empty ledger");
    const int d = ledger.dim;
    const int n = ledger.resolution;
    const std::int64_t A = delta_denominator;
    ledger.delta_denominator = A;
    ledger.positivity_guaranteed =
        static_cast<double>(A) > static_cast<double>(n) * (n - 1);

    ledger.quantized_units.assign(static_cast<std::size_t>(d), {});
    ledger.quantized_mass_num.assign(static_cast<std::size_t>(d), {});
    ledger.argmax_child.assign(static_cast<std::size_t>(d), {});
    std::vector<std::int64_t> parent_num{1};
    for (int k = 1; k <= d; ++k) {
        const auto& m = ledger.mass[static_cast<std::size_t>(k - 1)];
        const auto& cond = ledger.conditional[static_cast<std::size_t>(k - 1)];
        const auto& parent_mass =
            k >= 2 ? ledger.mass[static_cast<std::size_t>(k - 2)] : std::vector<double>{1.0};
        auto& units = ledger.quantized_units[static_cast<std::size_t>(k - 1)];
        auto& nums = ledger.quantized_mass_num[static_cast<std::size_t>(k - 1)];
        auto& argmax = ledger.argmax_child[static_cast<std::size_t>(k - 1)];
        units.resize(m.size());
        nums.resize(m.size());
        argmax.resize(parent_mass.size());
        for (std::size_t r = 0; r < parent_mass.size(); ++r) {
            const std::size_t base = r * static_cast<std::size_t>(n);
            int best = 0;
            for (int c = 1; c < n; ++c)
                if (m[base + static_cast<std::size_t>(c)] >
                    m[base + static_cast<std::size_t>(best)])
                    best = c;
            argmax[r] = best;
            std::int64_t others = 0;
            for (int c = 0; c < n; ++c) {
                if (c == best) continue;
                const std::size_t j = base + static_cast<std::size_t>(c);
                std::int64_t u;
                if (parent_mass[r] == 0.0) {
                    u = guarded_ceil(static_cast<double>(A) / n);
                } else if (m[j] > 0.0) {
                    u = std::max<std::int64_t>(
                        1, guarded_ceil(static_cast<double>(A) * cond[j]));
                } else {
                    u = 1;
                }
                units[j] = u;
                others += u;
            }
            units[base + static_cast<std::size_t>(best)] = A - others;
            for (int c = 0; c < n; ++c) {
                const std::size_t j = base + static_cast<std::size_t>(c);
                nums[j] = parent_num[r] * units[j];
            }
        }
        parent_num = nums;
    }
}

QuantizedHistogramD assemble_histogram(const PrefixMassLedger& ledger) {
    if (!ledger.is_quantized())
        throw std::invalid_argument("assemble_histogram: ledger has no quantized masses");
    const int d = ledger.dim;
    const int n = ledger.resolution;
    std::vector<std::vector<std::int64_t>> cond_units(static_cast<std::size_t>(d));
    for (int k = 1; k <= d; ++k) {
        const auto& units = ledger.quantized_units[static_cast<std::size_t>(k - 1)];
        auto& w = cond_units[static_cast<std::size_t>(k - 1)];
        w.resize(units.size());
        for (std::size_t j = 0; j < units.size(); ++j) {
            if (units[j] < 1)
                throw std::invalid_argument(
                    "assemble_histogram: nonpositive quantized mass (delta too coarse)");
            // conditional weight = n * conditional mass, in units of delta
            w[j] = static_cast<std::int64_t>(n) * units[j];
        }
    }
    return QuantizedHistogramD(d, n, ledger.delta_denominator, std::move(cond_units));
}

namespace {

// Conditional-mass product over prefix levels [lo, hi] of the given prefix.
double product_range(const std::vector<std::vector<double>>& levels,
                     std::span<const int> prefix, int lo, int hi, int resolution) {
    double prod = 1.0;
    std::size_t row = 0;
    for (int k = 1; k <= hi; ++k) {
        row = row * static_cast<std::size_t>(resolution) +
              static_cast<std::size_t>(prefix[static_cast<std::size_t>(k - 1)]);
        if (k >= lo) prod *= levels[static_cast<std::size_t>(k - 1)][row];
    }
    return prod;
}

}  // namespace

double verify_mass_identity(const PrefixMassLedger& ledger, std::span<const int> prefix) {
    if (!ledger.is_quantized())
        throw std::invalid_argument("verify_mass_identity: ledger has no quantized masses");
    const int k = static_cast<int>(prefix.size());
    if (k < 1 || k > ledger.dim)
        throw std::invalid_argument("verify_mass_identity: prefix length out of range");
    const int n = ledger.resolution;
    const double A = static_cast<double>(ledger.delta_denominator);

    // Mixed chooser: original conditional off the argmax, quantized on it.
    auto eta = [&](int level, std::size_t row, std::size_t parent, int child) {
        const bool is_argmax =
            ledger.argmax_child[static_cast<std::size_t>(level - 1)][parent] == child;
        return is_argmax
                   ? static_cast<double>(
                         ledger.quantized_units[static_cast<std::size_t>(level - 1)][row]) /
                         A
                   : ledger.conditional[static_cast<std::size_t>(level - 1)][row];
    };

    double rhs = ledger.mass[static_cast<std::size_t>(k - 1)]
                            [ledger.prefix_row(prefix)];
    for (int kp = 1; kp <= k; ++kp) {
        std::size_t parent = 0;
        for (int i = 1; i < kp; ++i)
            parent = parent * static_cast<std::size_t>(n) +
                     static_cast<std::size_t>(prefix[static_cast<std::size_t>(i - 1)]);
        const std::size_t row =
            parent * static_cast<std::size_t>(n) +
            static_cast<std::size_t>(prefix[static_cast<std::size_t>(kp - 1)]);
        const bool is_argmax =
            ledger.argmax_child[static_cast<std::size_t>(kp - 1)][parent] ==
            prefix[static_cast<std::size_t>(kp - 1)];
        const double cond = ledger.conditional[static_cast<std::size_t>(kp - 1)][row];
        const double quant =
            static_cast<double>(ledger.quantized_units[static_cast<std::size_t>(kp - 1)][row]) /
            A;

        double eta_prod = 1.0;
        {
            std::size_t r = 0;
            for (int lvl = 1; lvl <= kp - 1; ++lvl) {
                const std::size_t p = r;
                r = r * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(prefix[static_cast<std::size_t>(lvl - 1)]);
                eta_prod *= eta(lvl, r, p, prefix[static_cast<std::size_t>(lvl - 1)]);
            }
        }
        if (!is_argmax) {
            // quantized-conditional product over levels kp+1..k
            double tail = 1.0;
            std::size_t r = 0;
            for (int lvl = 1; lvl <= k; ++lvl) {
                r = r * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(prefix[static_cast<std::size_t>(lvl - 1)]);
                if (lvl >= kp + 1)
                    tail *= static_cast<double>(
                                ledger.quantized_units[static_cast<std::size_t>(lvl - 1)][r]) /
                            A;
            }
            rhs += tail * (quant - cond) * eta_prod;
        } else {
            const double tail = product_range(ledger.conditional, prefix, kp + 1, k, n);
            rhs -= tail * (cond - quant) * eta_prod;
        }
    }
    const double lhs = ledger.quantized_mass(k, ledger.prefix_row(prefix));
    return std::abs(rhs - lhs);
}

std::int64_t default_delta_denominator(int dim, int resolution) {
    if (resolution < 2)
        throw std::invalid_argument("default_delta_denominator: resolution must be >= 2");
    if (dim < 1) throw std::invalid_argument("default_delta_denominator: dim must be >= 1");
    const double v = std::sqrt(static_cast<double>(dim)) * (dim + 1) * resolution *
                     (resolution - 1);
    return guarded_ceil(v);
}

double quantization_bound(int dim, int resolution, std::int64_t delta_denominator) {
    const double sd = std::sqrt(static_cast<double>(dim));
    return 2.0 * sd / resolution + 0.5 * dim * (dim + 1) * (resolution - 1) /
                                       static_cast<double>(delta_denominator);
}

}  // namespace spacefill
