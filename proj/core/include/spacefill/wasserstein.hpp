#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "spacefill/histogram.hpp"
#include "spacefill/transport.hpp"

namespace spacefill {

/// Finitely supported measure in R^d; points row-major, masses positive and
/// summing to 1.
struct DiscreteMeasure {
    int dim = 0;
    std::vector<double> points;
    std::vector<double> masses;

    int size() const { return static_cast<int>(masses.size()); }
    std::span<const double> point(int i) const {
        return {points.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
};

ValidationReport validate(const DiscreteMeasure& m);

/// 1-d measure given by uniform boxes plus atoms; not restricted to [0,1].
struct Measure1d {
    struct Box {
        double lo, hi, mass;
    };
    std::vector<Box> boxes;
    std::vector<std::pair<double, double>> atoms;  // position, mass

    static Measure1d from(const GeneralHistogram1d& h);
    static Measure1d from(const DiscreteMeasure& m);
    static Measure1d uniform(double lo, double hi);
    double total() const;
};

/// Exact 1-Wasserstein distance as the integral of |F_mu - F_nu| over the
/// merged breakpoint grid.
double wasserstein1_1d(const Measure1d& mu, const Measure1d& nu);

struct TransportMove {
    int from, to;
    double mass;
};

struct TransportResult {
    double cost = 0.0;
    std::vector<TransportMove> plan;
    /// Residual of the optimality certificate (primal minus dual objective
    /// plus worst dual-feasibility violation); tiny for an exact solve.
    double dual_gap = 0.0;
};

/// Exact minimum-cost coupling between two normalized discrete measures
/// under Euclidean ground cost (successive shortest augmenting paths with
/// potentials). Combined support is limited to desk scale (~4000 points).
TransportResult min_cost_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

using VectorMap = std::function<std::vector<double>(double)>;

/// Image of the uniform distribution under a scalar-to-vector map, binned on
/// the centers of the refined cells (resolution n split 2^s-fold per axis).
/// Deterministic midpoint evaluation with `grid_points` inputs; the mass
/// error per cell is at most (number of preimage boundary points)/grid_points.
DiscreteMeasure pushforward_measure(const VectorMap& map, int dim, int resolution, int order,
                                    std::int64_t grid_points);
/// Same for a transport spec; grid_points = 0 selects the exact preimage
/// enumeration instead of midpoint counting.
DiscreteMeasure pushforward_measure(const TransportSpec& spec, std::int64_t grid_points);

/// The target histogram put on the same refined cell centers: each tile's
/// mass is split evenly over its 2^{sd} subcells.
DiscreteMeasure discretize_refined(const HistogramD& target, int order);

struct SubcubeExactness {
    double max_mass_deviation = 0.0;     // midpoint-grid mass vs cell_mass/2^{sd}
    double max_preimage_residual = 0.0;  // sum_h |preimage interval| vs cell_mass
};

/// Certify that the transported mass in every refined cell matches the
/// target exactly (up to the documented mesh error of the measurement).
SubcubeExactness subcube_exactness(const TransportSpec& spec, std::int64_t grid_points);

struct WBound {
    double bound = 0.0;      // sqrt(d) / (n 2^s)
    double refined_w = 0.0;  // exact OT between refined image and refined target
    double slack = 0.0;      // refinement diameter sqrt(d) / (n 2^s)
    double measured = 0.0;   // refined_w + slack, an upper estimate of W(M#U, target)
};

/// Measure the transport error against the refinement bound. grid_points = 0
/// uses exact preimage enumeration; d = 1 dispatches to the closed-form 1-d
/// distance.
WBound w_bound_report(const TransportSpec& spec, std::int64_t grid_points);

}  // namespace spacefill
