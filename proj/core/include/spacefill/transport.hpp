#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spacefill/histogram.hpp"
#include "spacefill/pwl.hpp"

namespace spacefill {

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Subcube of side 1/(n*2^s) obtained by splitting tile z with the dyadic
/// offset vector h.
struct RefinedCell {
    std::vector<int> z;  // tile index, entries in [0, n)
    std::vector<int> h;  // dyadic offset, entries in [0, 2^s)
};

/// Per-axis bounds of a refined cell.
std::vector<Interval> refined_cell_bounds(int resolution, int order, const RefinedCell& cell);

/// The transport map built for a target histogram: one shaping function per
/// index prefix, each pushing U forward onto the corresponding conditional
/// distribution, glued together by sawtooth localization of the given order.
class TransportSpec {
public:
    TransportSpec(HistogramD target, int order);
    TransportSpec(QuantizedHistogramD target, int order);

    int dim() const { return target_.dim(); }
    int resolution() const { return target_.resolution(); }
    int order() const { return order_; }
    const HistogramD& target() const { return target_; }
    /// Set when the spec was built from a quantized target.
    const std::optional<QuantizedHistogramD>& quantized_target() const { return quantized_; }

    /// Shaping function for the conditional of coordinate level+1 given the
    /// prefix with flat row index `row` (level 0: the first marginal).
    const PiecewiseLinear& shaping(int level, std::size_t row) const {
        return shaping_[static_cast<std::size_t>(level)][row];
    }
    /// Conditional weights behind shaping(level, row); n entries summing to n.
    std::span<const double> conditional_weights(int level, std::size_t row) const;

    /// Evaluate the transport map at x in [0,1]; returns the d coordinates.
    std::vector<double> transport_eval(double x) const;

    /// Interval of inputs that the map carries into the refined cell (z, h).
    /// Its length equals cell_mass(z) / 2^(s*d).
    Interval preimage_interval(std::span<const int> z, std::span<const int> h) const;

private:
    void build_shaping();

    HistogramD target_;
    std::optional<QuantizedHistogramD> quantized_;
    int order_;
    // cond_[level] is a flat array of n^level rows times n weights.
    std::vector<std::vector<double>> cond_;
    std::vector<std::vector<PiecewiseLinear>> shaping_;
};

}  // namespace spacefill
