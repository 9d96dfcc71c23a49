#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spacefill {

/// First violated invariant of a distribution object, with the offending
/// index and the magnitude of the violation. Absent means the object is valid.
struct Violation {
    std::string rule;
    std::size_t index = 0;
    double magnitude = 0.0;
};

using ValidationReport = std::optional<Violation>;

/// 1-d histogram with arbitrary breakpoints 0 = t_0 <= ... <= t_n = 1 and
/// positive bin weights. A repeated breakpoint (t_k == t_{k+1}) is a point
/// mass at t_k; repeated breakpoints are isolated by construction.
/// Normalization: sum_k w_k * d(t_k, t_{k+1}) = 1, where d is the bin length
/// for interval bins and 1 for atoms.
class GeneralHistogram1d {
public:
    GeneralHistogram1d(std::vector<double> breakpoints, std::vector<double> weights);

    std::size_t bin_count() const { return weights_.size(); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& weights() const { return weights_; }

    bool is_atom(std::size_t k) const { return breakpoints_[k] == breakpoints_[k + 1]; }
    /// d(t_k, t_{k+1}): bin length, or 1 for an atom.
    double bin_measure(std::size_t k) const;
    /// Probability mass of bin k.
    double bin_mass(std::size_t k) const { return weights_[k] * bin_measure(k); }

private:
    std::vector<double> breakpoints_;  // t_0..t_n
    std::vector<double> weights_;      // w_0..w_{n-1}
};

/// Histogram distribution on the d-dimensional unit cube with n^d uniform
/// tiles. Weights are stored row-major with the last coordinate fastest and
/// sum to n^d; the mass of tile k is w_k / n^d.
class HistogramD {
public:
    HistogramD(int dim, int resolution, std::vector<double> weights);

    static HistogramD uniform(int dim, int resolution);

    int dim() const { return dim_; }
    int resolution() const { return resolution_; }
    const std::vector<double>& weights() const { return weights_; }

    std::size_t flatten(std::span<const int> index) const;
    std::vector<int> unflatten(std::size_t flat) const;

    double weight(std::span<const int> index) const { return weights_[flatten(index)]; }
    /// Probability mass of the tile at `index`: w / n^d.
    double cell_mass(std::span<const int> index) const;

    /// Marginal over the first `prefix_len` coordinates, 1 <= prefix_len <= d-1.
    HistogramD marginal(int prefix_len) const;

    /// Conditional 1-d weights of coordinate t+1 given an index prefix of
    /// length t, 0 <= t <= d-1. The returned row has n entries summing to n.
    /// An empty prefix yields the marginal weights of the first coordinate.
    std::vector<double> conditional(std::span<const int> prefix) const;

private:
    int dim_;
    int resolution_;
    std::vector<double> weights_;  // size n^d, row-major, last coordinate fastest
};

/// HistogramD whose conditional rows all live on the grid of integer
/// multiples of delta = 1/A. Conditional weights are stored exactly as
/// integer unit counts: weight = units * delta, so each row of units sums
/// to n*A.
class QuantizedHistogramD {
public:
    /// `conditional_units[level]` holds n^level rows of n entries each,
    /// flattened row-major; level 0 is the first-coordinate marginal.
    /// The base weights are derived from the conditional chain.
    QuantizedHistogramD(int dim, int resolution, std::int64_t delta_denominator,
                        std::vector<std::vector<std::int64_t>> conditional_units);

    /// As above but with the base weights given explicitly (e.g. read from a
    /// file); validate() checks them against the conditional-chain product.
    QuantizedHistogramD(HistogramD base, std::int64_t delta_denominator,
                        std::vector<std::vector<std::int64_t>> conditional_units);

    int dim() const { return base_.dim(); }
    int resolution() const { return base_.resolution(); }
    std::int64_t delta_denominator() const { return delta_denominator_; }
    const HistogramD& base() const { return base_; }

    std::span<const std::int64_t> conditional_units(int level, std::size_t row) const;
    /// Conditional weights units/A for a prefix row; entries sum to n.
    std::vector<double> conditional_weights(int level, std::size_t row) const;

    const std::vector<std::vector<std::int64_t>>& all_conditional_units() const {
        return conditional_units_;
    }

private:
    void check_shape() const;

    HistogramD base_;
    std::int64_t delta_denominator_;
    std::vector<std::vector<std::int64_t>> conditional_units_;
};

ValidationReport validate(const GeneralHistogram1d& h);
ValidationReport validate(const HistogramD& h);
ValidationReport validate(const QuantizedHistogramD& h);

namespace tol {
inline constexpr double kStructural = 1e-12;   // exact-rational-derived sums
inline constexpr double kAccumulated = 1e-9;   // floating accumulation over n^d terms
}  // namespace tol

}  // namespace spacefill
