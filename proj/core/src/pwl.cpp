#include "spacefill/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace spacefill {

PiecewiseLinear::PiecewiseLinear(std::vector<Ramp> ramps) {
    std::stable_sort(ramps.begin(), ramps.end(),
                     [](const Ramp& a, const Ramp& b) { return a.knot < b.knot; });
    for (const Ramp& r : ramps) {
        if (!ramps_.empty() && ramps_.back().knot == r.knot)
            ramps_.back().coeff += r.coeff;
        else
            ramps_.push_back(r);
    }
    std::erase_if(ramps_, [](const Ramp& r) { return r.coeff == 0.0; });
}

double PiecewiseLinear::operator()(double x) const {
    double y = 0.0;
    for (const Ramp& r : ramps_) {
        const double t = x - r.knot;
        if (t > 0.0) y += r.coeff * t;
    }
    return y;
}

std::vector<double> PiecewiseLinear::cumulative_slopes() const {
    std::vector<double> s(ramps_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < ramps_.size(); ++i) {
        acc += ramps_[i].coeff;
        s[i] = acc;
    }
    return s;
}

double sawtooth(int order, double x) {
    if (order < 1) throw std::invalid_argument("sawtooth: order must be >= 1");
    for (int i = 0; i < order; ++i) {
        if (x < 0.0 || x > 1.0) return 0.0;
        x = x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
    }
    return x;
}

PiecewiseLinear pwl_from_uniform_weights(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw std::invalid_argument("pwl_from_uniform_weights: empty weights");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("pwl_from_uniform_weights: nonpositive weight");
    std::vector<PiecewiseLinear::Ramp> ramps;
    ramps.reserve(n);
    double cum = 0.0;
    double prev_inv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = 1.0 / weights[i];
        ramps.push_back({inv - prev_inv, cum / static_cast<double>(n)});
        prev_inv = inv;
        cum += weights[i];
    }
    return PiecewiseLinear(std::move(ramps));
}

PiecewiseLinear pwl_from_general_histogram(const GeneralHistogram1d& h) {
    if (auto v = validate(h))
        throw std::invalid_argument("pwl_from_general_histogram: invalid histogram: " + v->rule);
    const std::size_t n = h.bin_count();
    // Knots are the cumulative input masses; the slope on [b_i, b_{i+1}] is
    // 1/w_i for interval bins and 0 for atoms, so the coefficients are the
    // slope differences.
    std::vector<PiecewiseLinear::Ramp> ramps;
    ramps.reserve(n);
    double cum = 0.0;
    double prev_slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double slope = h.is_atom(i) ? 0.0 : 1.0 / h.weights()[i];
        ramps.push_back({slope - prev_slope, cum});
        prev_slope = slope;
        cum += h.bin_mass(i);
    }
    return PiecewiseLinear(std::move(ramps));
}

namespace {

struct Piece {
    double x_lo, x_hi;  // input interval
    double slope;
    double y_lo, y_hi;  // image interval (ordered), or the atom value when flat
};

std::vector<Piece> linearity_pieces(const PiecewiseLinear& f) {
    std::vector<double> cuts{0.0, 1.0};
    for (const auto& r : f.ramps())
        if (r.knot > 0.0 && r.knot < 1.0) cuts.push_back(r.knot);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Piece> pieces;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        Piece p;
        p.x_lo = cuts[j];
        p.x_hi = cuts[j + 1];
        const double fa = f(p.x_lo);
        const double fb = f(p.x_hi);
        p.slope = (fb - fa) / (p.x_hi - p.x_lo);
        if (std::abs(p.slope) < 1e-12) p.slope = 0.0;
        p.y_lo = std::min(fa, fb);
        p.y_hi = std::max(fa, fb);
        pieces.push_back(p);
    }
    return pieces;
}

}  // namespace

GeneralHistogram1d pushforward_histogram(const PiecewiseLinear& f) {
    constexpr double kTol = 1e-12;
    if (std::abs(f(0.0)) > kTol || std::abs(f(1.0) - 1.0) > kTol)
        throw std::invalid_argument("pushforward_histogram: need f(0)=0 and f(1)=1");
    auto pieces = linearity_pieces(f);
    for (const Piece& p : pieces)
        if (p.y_lo < -kTol || p.y_hi > 1.0 + kTol)
            throw std::invalid_argument("pushforward_histogram: image must stay inside [0,1]");

    // Elementary output breakpoints: all image endpoints and atom positions.
    std::vector<double> cuts{0.0, 1.0};
    for (const Piece& p : pieces) {
        cuts.push_back(std::clamp(p.y_lo, 0.0, 1.0));
        cuts.push_back(std::clamp(p.y_hi, 0.0, 1.0));
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> pts;
    for (double c : cuts)
        if (pts.empty() || c - pts.back() > kTol) pts.push_back(c);
    pts.back() = 1.0;
    pts.front() = 0.0;

    // Atom masses, snapped to the nearest elementary point.
    std::map<std::size_t, double> atom_mass;
    for (const Piece& p : pieces) {
        if (p.slope != 0.0) continue;
        const auto it = std::min_element(pts.begin(), pts.end(), [&](double a, double b) {
            return std::abs(a - p.y_lo) < std::abs(b - p.y_lo);
        });
        atom_mass[static_cast<std::size_t>(it - pts.begin())] += p.x_hi - p.x_lo;
    }

    // Density on each elementary interval: sum of 1/|slope| over the sloped
    // pieces whose image covers it.
    std::vector<double> density(pts.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        const double mid = 0.5 * (pts[j] + pts[j + 1]);
        for (const Piece& p : pieces)
            if (p.slope != 0.0 && mid > p.y_lo - kTol && mid < p.y_hi + kTol)
                density[j] += 1.0 / std::abs(p.slope);
        if (!(density[j] > 0.0))
            throw std::invalid_argument("pushforward_histogram: zero density inside [0,1]");
    }

    // Assemble breakpoints/weights, inserting atoms as repeated breakpoints
    // and merging adjacent interval bins of equal density.
    std::vector<double> t{0.0};
    std::vector<double> w;
    auto emit_atom = [&](std::size_t pt_index) {
        auto it = atom_mass.find(pt_index);
        if (it == atom_mass.end()) return;
        t.push_back(pts[pt_index]);
        w.push_back(it->second);
    };
    emit_atom(0);
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        const bool prev_is_interval =
            !w.empty() && t.size() >= 2 && t[t.size() - 2] < t[t.size() - 1];
        const bool mergeable = prev_is_interval &&
                               std::abs(w.back() - density[j]) <=
                                   1e-12 * std::max(1.0, std::abs(density[j]));
        if (mergeable) {
            t.back() = pts[j + 1];  // extend the previous interval bin
        } else {
            t.push_back(pts[j + 1]);
            w.push_back(density[j]);
        }
        emit_atom(j + 1);
    }
    GeneralHistogram1d out(std::move(t), std::move(w));
    if (auto v = validate(out))
        throw std::logic_error("pushforward_histogram: produced invalid histogram: " + v->rule);
    return out;
}

}  // namespace spacefill
