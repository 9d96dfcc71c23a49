#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spacefill/pwl.hpp"
#include "spacefill/transport.hpp"

namespace spacefill {

/// Small dense row-major matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct AffineLayer {
    Matrix A;
    std::vector<double> b;

    int in() const { return A.cols; }
    int out() const { return A.rows; }
};

/// Feed-forward network: affine layers with ReLU between consecutive layers
/// and none after the last.
class ReluNetwork {
public:
    explicit ReluNetwork(std::vector<AffineLayer> layers);

    int input_dim() const { return layers_.front().in(); }
    int output_dim() const { return layers_.back().out(); }
    int depth() const { return static_cast<int>(layers_.size()); }
    const std::vector<AffineLayer>& layers() const { return layers_; }

    std::vector<double> forward(std::span<const double> x) const;

private:
    std::vector<AffineLayer> layers_;
};

struct NetworkStats {
    std::int64_t connectivity = 0;  // nonzero entries across all A and b
    int depth = 0;
    int width = 0;  // max of N_0..N_L
};
NetworkStats stats(const ReluNetwork& net);

/// Exact 2-layer tent map network, iterated to the given order by repeating
/// the middle layer; connectivity 11s-3, depth s+1.
ReluNetwork build_sawtooth_net(int order);

enum class RampStyle {
    /// One output weight per ramp (minimal connectivity).
    combined,
    /// Interior ramps are split into a +slope/-previous-slope pair so every
    /// output weight is a pure cumulative slope; for shaping functions of
    /// delta-quantized weights this keeps every weight on the delta/n grid.
    reciprocal_pairs,
};

/// 2-layer network evaluating a piecewise linear function exactly.
ReluNetwork build_pwl_net(const PiecewiseLinear& f, RampStyle style = RampStyle::combined);

/// outer after inner with the touching affine layers merged; depth L1+L2-1.
ReluNetwork compose(const ReluNetwork& outer, const ReluNetwork& inner);

/// second applied to relu(first(x)); plain layer concatenation, depth L1+L2.
/// Equals second(first(x)) whenever first's outputs are nonnegative or second
/// ignores the sign clip (true for all builders here).
ReluNetwork chain(const ReluNetwork& first, const ReluNetwork& second);

enum class ParallelInput { shared, split };

/// Stack equal-depth networks side by side; outputs are concatenated. In
/// shared mode every member reads the same input vector, in split mode the
/// input vector is the concatenation of the member inputs.
ReluNetwork parallelize(std::span<const ReluNetwork> nets, ParallelInput mode);

/// Pad a network with identity layers to the target depth. Preserves the
/// function only where the network's outputs are nonnegative.
ReluNetwork extend_depth(const ReluNetwork& net, int target_depth);

/// 2-layer network computing sum_i relu(x_i); equals the plain sum on
/// nonnegative inputs.
ReluNetwork sum_net(int arity);

/// One localization stage of the transport network: maps the carrier block
/// for prefixes of length `stage` plus the first `stage` output coordinates
/// to the refined carrier block plus one more coordinate. Depth s+3.
ReluNetwork build_stage_net(const TransportSpec& spec, int stage);

/// The full transport network: all stages chained, closed by a selector
/// layer that applies the last shaping functions and sums them.
/// Depth (s+3)d - s - 1; agrees with TransportSpec::transport_eval.
ReluNetwork build_transport_net(const TransportSpec& spec);

struct QuantizationAudit {
    std::int64_t grid_denominator = 0;  // grid step 1/denominator
    std::int64_t type1 = 0;
    std::int64_t type2 = 0;
    std::int64_t neither = 0;
    bool pass = false;

    struct Offender {
        int layer;
        int row;
        int col;  // -1 for a bias entry
        double value;
    };
    std::vector<Offender> offenders;  // first few off-grid weights
};

/// Classify every nonzero weight against the grid of integer multiples of
/// 1/grid_denominator: on the grid (type 1), reciprocal on the grid (type 2),
/// or neither. Passes when nothing is classified neither.
QuantizationAudit audit_quantization(const ReluNetwork& net, std::int64_t grid_denominator);

/// Exact bit count of a concrete uniquely decodable encoding: a topology
/// header (32-bit depth and layer sizes, 32-bit per-layer nonzero counts),
/// then per nonzero weight a position index, one type bit, and an index into
/// the quantization grid. Requires the audit to pass.
std::int64_t encoded_bit_length(const ReluNetwork& net, std::int64_t grid_denominator);

/// Append the affine map y -> alpha*y + beta by merging it into the last
/// layer.
ReluNetwork rescale_output(const ReluNetwork& net, double alpha, std::span<const double> beta);

std::string serialize(const ReluNetwork& net);
ReluNetwork deserialize(const std::string& text);

}  // namespace spacefill
