#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "spacefill/histogram.hpp"

namespace spacefill {

/// Point cloud in [0,1]^d, row-major, equal mass per point.
struct SampleSet {
    int dim = 0;
    std::vector<double> points;

    std::size_t size() const { return dim ? points.size() / static_cast<std::size_t>(dim) : 0; }
};

/// n^d nonnegative cell masses summing to 1, row-major.
struct CellMassGrid {
    int dim = 0;
    int resolution = 0;
    std::vector<double> masses;
};

using InputDistribution = std::variant<SampleSet, CellMassGrid>;

ValidationReport validate(const InputDistribution& input);

/// Original and quantized masses over all index prefixes of a distribution
/// on [0,1]^d. Level k (1-based) holds n^k entries, row-major. Conditional
/// masses of children of a zero-mass prefix are set to 1/n. Quantized
/// conditionals are kept as exact integer multiples of delta = 1/A; the
/// quantized prefix masses are the products, stored as integer numerators
/// over A^k.
class PrefixMassLedger {
public:
    int dim = 0;
    int resolution = 0;

    std::vector<std::vector<double>> mass;         // m, levels 1..d
    std::vector<std::vector<double>> conditional;  // levels 1..d

    std::int64_t delta_denominator = 0;  // A; 0 while unquantized
    std::vector<std::vector<std::int64_t>> quantized_units;     // conditional * A
    std::vector<std::vector<std::int64_t>> quantized_mass_num;  // mass * A^level
    std::vector<std::vector<int>> argmax_child;  // per parent prefix, levels 1..d
    bool positivity_guaranteed = false;          // delta < 1/(n(n-1))

    bool is_quantized() const { return delta_denominator > 0; }

    std::size_t level_size(int level) const;
    std::size_t prefix_row(std::span<const int> prefix) const;

    double quantized_conditional(int level, std::size_t row) const;
    double quantized_mass(int level, std::size_t row) const;
};

/// Bin the input at resolution n and fill the original and conditional
/// masses. Sample coordinates equal to j/n fall into cell j (the last cell
/// is closed at 1).
PrefixMassLedger compute_masses(const InputDistribution& input, int resolution);

/// Round every non-argmax conditional up to the 1/A grid (zero masses get
/// one grid step) and give the per-prefix argmax cell the complement.
void quantize_masses(PrefixMassLedger& ledger, std::int64_t delta_denominator);

/// Package the quantized conditionals as a histogram distribution.
QuantizedHistogramD assemble_histogram(const PrefixMassLedger& ledger);

/// Residual of the closed-form identity expressing each quantized prefix
/// mass through the original masses and the per-level borrow corrections.
double verify_mass_identity(const PrefixMassLedger& ledger, std::span<const int> prefix);

/// 1/ceil(sqrt(d)*(d+1)*n*(n-1)); requires n >= 2. Always below 1/(n(n-1)),
/// so all quantized masses stay positive.
std::int64_t default_delta_denominator(int dim, int resolution);

/// 2*sqrt(d)/n + d(d+1)/2 * (n-1) * delta.
double quantization_bound(int dim, int resolution, std::int64_t delta_denominator);

}  // namespace spacefill
