#pragma once

#include <span>
#include <vector>

#include "spacefill/histogram.hpp"

namespace spacefill {

/// Continuous piecewise linear function f(x) = sum_i a_i * relu(x - b_i)
/// with nondecreasing knots b_i. The representation forces f(0) = 0 for
/// knots in [0, 1]. Construction merges ramps at equal knots and drops
/// exactly-zero coefficients.
class PiecewiseLinear {
public:
    struct Ramp {
        double coeff;  // slope increment a_i
        double knot;   // position b_i
    };

    explicit PiecewiseLinear(std::vector<Ramp> ramps);

    static PiecewiseLinear identity() { return PiecewiseLinear({{1.0, 0.0}}); }

    double operator()(double x) const;

    const std::vector<Ramp>& ramps() const { return ramps_; }
    /// Slope of f after ramp i, i.e. sum of the first i+1 coefficients.
    std::vector<double> cumulative_slopes() const;

private:
    std::vector<Ramp> ramps_;
};

/// Tent map g on [0,1] (0 outside), iterated `order` times.
double sawtooth(int order, double x);

/// The increasing piecewise linear f with f#U equal to the uniform-tile
/// histogram with the given weights (n positive entries summing to n):
/// a_0 = 1/w_0, a_i = 1/w_i - 1/w_{i-1}, b_i = (1/n) * sum_{k<i} w_k.
PiecewiseLinear pwl_from_uniform_weights(std::span<const double> weights);

/// The piecewise linear f with f#U equal to a general 1-d histogram.
/// Atom bins become zero-slope plateaus.
PiecewiseLinear pwl_from_general_histogram(const GeneralHistogram1d& h);

/// Distribution of f(U) for piecewise linear f: [0,1] -> [0,1] with
/// f(0) = 0 and f(1) = 1. Each linear piece contributes density
/// 1/|slope| on its image (an atom for flat pieces); adjacent output bins
/// with equal weight are merged so round trips are canonical.
GeneralHistogram1d pushforward_histogram(const PiecewiseLinear& f);

}  // namespace spacefill
