#pragma once

#include <optional>
#include <string>

#include "spacefill/histogram.hpp"
#include "spacefill/pwl.hpp"
#include "spacefill/wasserstein.hpp"

namespace spacefill {

/// { "d": int, "n": int, "weights": [...] } with row-major weights; a
/// quantized histogram adds { "delta_denominator": A, "conditionals": {...} }
/// where conditionals maps comma-joined prefixes ("" for the first marginal)
/// to integer weight counts in units of delta.
std::string to_json(const HistogramD& h);
std::string to_json(const QuantizedHistogramD& h);

struct HistogramFile {
    HistogramD histogram;
    std::optional<QuantizedHistogramD> quantized;
};
HistogramFile parse_histogram_json(const std::string& text);

/// { "points": [[...], ...], "masses": [...] }
std::string to_json(const DiscreteMeasure& m);
DiscreteMeasure parse_measure_json(const std::string& text);

/// { "ramps": [[a, b], ...] }
std::string to_json(const PiecewiseLinear& f);
PiecewiseLinear parse_pwl_json(const std::string& text);

}  // namespace spacefill
