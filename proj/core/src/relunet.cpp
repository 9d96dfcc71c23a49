#include "spacefill/relunet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spacefill {

ReluNetwork::ReluNetwork(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("ReluNetwork: need at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        if (L.A.rows < 1 || L.A.cols < 1 ||
            L.b.size() != static_cast<std::size_t>(L.A.rows))
            throw std::invalid_argument("ReluNetwork: malformed layer");
        if (l > 0 && L.in() != layers_[l - 1].out())
            throw std::invalid_argument("ReluNetwork: layer dimensions do not chain");
    }
}

std::vector<double> ReluNetwork::forward(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(input_dim()))
        throw std::invalid_argument("ReluNetwork::forward: input dimension mismatch");
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (l > 0)
            for (double& v : cur) v = v > 0.0 ? v : 0.0;
        const auto& L = layers_[l];
        next.assign(static_cast<std::size_t>(L.out()), 0.0);
        for (int r = 0; r < L.A.rows; ++r) {
            double acc = L.b[static_cast<std::size_t>(r)];
            const double* row = L.A.data.data() + static_cast<std::size_t>(r) * L.A.cols;
            for (int c = 0; c < L.A.cols; ++c) acc += row[c] * cur[static_cast<std::size_t>(c)];
            next[static_cast<std::size_t>(r)] = acc;
        }
        cur.swap(next);
    }
    return cur;
}

NetworkStats stats(const ReluNetwork& net) {
    NetworkStats st;
    st.depth = net.depth();
    st.width = net.input_dim();
    for (const auto& L : net.layers()) {
        st.width = std::max(st.width, L.out());
        for (double v : L.A.data)
            if (v != 0.0) ++st.connectivity;
        for (double v : L.b)
            if (v != 0.0) ++st.connectivity;
    }
    return st;
}

ReluNetwork build_sawtooth_net(int order) {
    if (order < 1) throw std::invalid_argument("build_sawtooth_net: order must be >= 1");
    std::vector<AffineLayer> layers;
    AffineLayer first{Matrix(3, 1), {0.0, -2.0, -2.0}};
    first.A.at(0, 0) = 2.0;
    first.A.at(1, 0) = 4.0;
    first.A.at(2, 0) = 2.0;
    layers.push_back(std::move(first));
    for (int i = 1; i < order; ++i) {
        AffineLayer mid{Matrix(3, 3), {0.0, -2.0, -2.0}};
        const double rows[3] = {2.0, 4.0, 2.0};
        for (int r = 0; r < 3; ++r) {
            mid.A.at(r, 0) = rows[r];
            mid.A.at(r, 1) = -rows[r];
            mid.A.at(r, 2) = rows[r];
        }
        layers.push_back(std::move(mid));
    }
    AffineLayer last{Matrix(1, 3), {0.0}};
    last.A.at(0, 0) = 1.0;
    last.A.at(0, 1) = -1.0;
    last.A.at(0, 2) = 1.0;
    layers.push_back(std::move(last));
    return ReluNetwork(std::move(layers));
}

namespace {

// 2-layer net computing scale * f(x) + shift.
ReluNetwork build_scaled_pwl_net(const PiecewiseLinear& f, double scale, double shift,
                                 RampStyle style) {
    std::vector<double> knots;
    std::vector<double> coeffs;
    const auto& ramps = f.ramps();
    if (style == RampStyle::combined) {
        for (const auto& r : ramps) {
            knots.push_back(r.knot);
            coeffs.push_back(r.coeff);
        }
    } else {
        const auto slopes = f.cumulative_slopes();
        for (std::size_t i = 0; i < ramps.size(); ++i) {
            if (i == 0) {
                knots.push_back(ramps[i].knot);
                coeffs.push_back(slopes[i]);
                continue;
            }
            if (slopes[i] != 0.0) {
                knots.push_back(ramps[i].knot);
                coeffs.push_back(slopes[i]);
            }
            if (slopes[i - 1] != 0.0) {
                knots.push_back(ramps[i].knot);
                coeffs.push_back(-slopes[i - 1]);
            }
        }
    }
    const int rows = std::max<int>(1, static_cast<int>(knots.size()));
    AffineLayer w1{Matrix(rows, 1), std::vector<double>(static_cast<std::size_t>(rows), 0.0)};
    AffineLayer w2{Matrix(1, rows), {shift}};
    for (std::size_t i = 0; i < knots.size(); ++i) {
        w1.A.at(static_cast<int>(i), 0) = 1.0;
        w1.b[i] = -knots[i];
        w2.A.at(0, static_cast<int>(i)) = scale * coeffs[i];
    }
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(w1));
    layers.push_back(std::move(w2));
    return ReluNetwork(std::move(layers));
}

ReluNetwork identity_chain(int depth) {
    std::vector<AffineLayer> layers;
    for (int l = 0; l < depth; ++l) {
        AffineLayer id{Matrix(1, 1), {0.0}};
        id.A.at(0, 0) = 1.0;
        layers.push_back(std::move(id));
    }
    return ReluNetwork(std::move(layers));
}

struct Wired {
    ReluNetwork net;
    std::vector<int> inputs;  // stage input index feeding each network input
};

ReluNetwork wire_parallel(const std::vector<Wired>& comps, int input_dim) {
    const int depth = comps.front().net.depth();
    for (const auto& c : comps)
        if (c.net.depth() != depth)
            throw std::invalid_argument("wire_parallel: members must have equal depth");
    std::vector<AffineLayer> layers;
    for (int l = 0; l < depth; ++l) {
        int rows = 0, cols = 0;
        for (const auto& c : comps) {
            rows += c.net.layers()[static_cast<std::size_t>(l)].out();
            cols += c.net.layers()[static_cast<std::size_t>(l)].in();
        }
        if (l == 0) cols = input_dim;
        AffineLayer out{Matrix(rows, cols), std::vector<double>(static_cast<std::size_t>(rows))};
        int row0 = 0, col0 = 0;
        for (const auto& c : comps) {
            const auto& L = c.net.layers()[static_cast<std::size_t>(l)];
            for (int r = 0; r < L.out(); ++r) {
                out.b[static_cast<std::size_t>(row0 + r)] = L.b[static_cast<std::size_t>(r)];
                for (int j = 0; j < L.in(); ++j) {
                    const int col = l == 0 ? c.inputs[static_cast<std::size_t>(j)] : col0 + j;
                    out.A.at(row0 + r, col) += L.A.at(r, j);
                }
            }
            row0 += L.out();
            col0 += L.in();
        }
        layers.push_back(std::move(out));
    }
    return ReluNetwork(std::move(layers));
}

// 2-layer net computing sum_q f_q(y_q) for the shaping functions of one
// prefix level.
ReluNetwork sum_shaped_net(const TransportSpec& spec, int level) {
    const std::size_t count = [&] {
        std::size_t c = 1;
        for (int i = 0; i < level; ++i) c *= static_cast<std::size_t>(spec.resolution());
        return c;
    }();
    std::vector<int> in_col;
    std::vector<double> knots, coeffs;
    for (std::size_t q = 0; q < count; ++q) {
        const auto& f = spec.shaping(level, q);
        const auto slopes = f.cumulative_slopes();
        const auto& ramps = f.ramps();
        for (std::size_t i = 0; i < ramps.size(); ++i) {
            if (i == 0) {
                in_col.push_back(static_cast<int>(q));
                knots.push_back(ramps[i].knot);
                coeffs.push_back(slopes[i]);
                continue;
            }
            if (slopes[i] != 0.0) {
                in_col.push_back(static_cast<int>(q));
                knots.push_back(ramps[i].knot);
                coeffs.push_back(slopes[i]);
            }
            if (slopes[i - 1] != 0.0) {
                in_col.push_back(static_cast<int>(q));
                knots.push_back(ramps[i].knot);
                coeffs.push_back(-slopes[i - 1]);
            }
        }
    }
    const int rows = static_cast<int>(knots.size());
    AffineLayer w1{Matrix(rows, static_cast<int>(count)),
                   std::vector<double>(static_cast<std::size_t>(rows))};
    AffineLayer w2{Matrix(1, rows), {0.0}};
    for (int i = 0; i < rows; ++i) {
        w1.A.at(i, in_col[static_cast<std::size_t>(i)]) = 1.0;
        w1.b[static_cast<std::size_t>(i)] = -knots[static_cast<std::size_t>(i)];
        w2.A.at(0, i) = coeffs[static_cast<std::size_t>(i)];
    }
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(w1));
    layers.push_back(std::move(w2));
    return ReluNetwork(std::move(layers));
}

// 2-layer selector closing the stage chain: passes the accumulated output
// coordinates through and applies the last-level shaping sum.
ReluNetwork selector_net(const TransportSpec& spec) {
    const int d = spec.dim();
    const std::size_t count = [&] {
        std::size_t c = 1;
        for (int i = 0; i < d - 1; ++i) c *= static_cast<std::size_t>(spec.resolution());
        return c;
    }();
    ReluNetwork shaped = sum_shaped_net(spec, d - 1);
    const int ramp_rows = shaped.layers()[0].out();
    const int in_dim = static_cast<int>(count) + d - 1;
    const int w1_rows = ramp_rows + d - 1;
    AffineLayer w1{Matrix(w1_rows, in_dim), std::vector<double>(static_cast<std::size_t>(w1_rows))};
    for (int r = 0; r < ramp_rows; ++r) {
        const auto& src = shaped.layers()[0];
        for (int c = 0; c < src.in(); ++c) w1.A.at(r, c) = src.A.at(r, c);
        w1.b[static_cast<std::size_t>(r)] = src.b[static_cast<std::size_t>(r)];
    }
    for (int j = 0; j < d - 1; ++j)
        w1.A.at(ramp_rows + j, static_cast<int>(count) + j) = 1.0;
    AffineLayer w2{Matrix(d, w1_rows), std::vector<double>(static_cast<std::size_t>(d))};
    for (int j = 0; j < d - 1; ++j) w2.A.at(j, ramp_rows + j) = 1.0;
    for (int c = 0; c < ramp_rows; ++c) w2.A.at(d - 1, c) = shaped.layers()[1].A.at(0, c);
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(w1));
    layers.push_back(std::move(w2));
    return ReluNetwork(std::move(layers));
}

}  // namespace

ReluNetwork build_pwl_net(const PiecewiseLinear& f, RampStyle style) {
    return build_scaled_pwl_net(f, 1.0, 0.0, style);
}

ReluNetwork compose(const ReluNetwork& outer, const ReluNetwork& inner) {
    if (inner.output_dim() != outer.input_dim())
        throw std::invalid_argument("compose: inner output dim must match outer input dim");
    std::vector<AffineLayer> layers(inner.layers().begin(), inner.layers().end() - 1);
    const AffineLayer& li = inner.layers().back();
    const AffineLayer& lo = outer.layers().front();
    AffineLayer merged{Matrix(lo.out(), li.in()),
                       std::vector<double>(static_cast<std::size_t>(lo.out()))};
    for (int r = 0; r < lo.out(); ++r) {
        double bias = lo.b[static_cast<std::size_t>(r)];
        for (int k = 0; k < lo.in(); ++k) bias += lo.A.at(r, k) * li.b[static_cast<std::size_t>(k)];
        merged.b[static_cast<std::size_t>(r)] = bias;
        for (int c = 0; c < li.in(); ++c) {
            double acc = 0.0;
            for (int k = 0; k < lo.in(); ++k) acc += lo.A.at(r, k) * li.A.at(k, c);
            merged.A.at(r, c) = acc;
        }
    }
    layers.push_back(std::move(merged));
    layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
    return ReluNetwork(std::move(layers));
}

ReluNetwork chain(const ReluNetwork& first, const ReluNetwork& second) {
    if (first.output_dim() != second.input_dim())
        throw std::invalid_argument("chain: dimensions do not match");
    std::vector<AffineLayer> layers(first.layers());
    layers.insert(layers.end(), second.layers().begin(), second.layers().end());
    return ReluNetwork(std::move(layers));
}

ReluNetwork parallelize(std::span<const ReluNetwork> nets, ParallelInput mode) {
    if (nets.empty()) throw std::invalid_argument("parallelize: need at least one network");
    const int depth = nets.front().depth();
    for (const auto& n : nets)
        if (n.depth() != depth)
            throw std::invalid_argument(
                "parallelize: members must have equal depth (extend_depth first)");
    std::vector<Wired> comps;
    int input_dim = 0;
    if (mode == ParallelInput::shared) {
        input_dim = nets.front().input_dim();
        for (const auto& n : nets) {
            if (n.input_dim() != input_dim)
                throw std::invalid_argument("parallelize: shared mode needs equal input dims");
            std::vector<int> cols(static_cast<std::size_t>(input_dim));
            for (int j = 0; j < input_dim; ++j) cols[static_cast<std::size_t>(j)] = j;
            comps.push_back({n, std::move(cols)});
        }
    } else {
        for (const auto& n : nets) {
            std::vector<int> cols(static_cast<std::size_t>(n.input_dim()));
            for (int j = 0; j < n.input_dim(); ++j) cols[static_cast<std::size_t>(j)] = input_dim + j;
            input_dim += n.input_dim();
            comps.push_back({n, std::move(cols)});
        }
    }
    return wire_parallel(comps, input_dim);
}

ReluNetwork extend_depth(const ReluNetwork& net, int target_depth) {
    if (target_depth < net.depth())
        throw std::invalid_argument("extend_depth: target below current depth");
    std::vector<AffineLayer> layers(net.layers());
    const int dim = net.output_dim();
    for (int l = net.depth(); l < target_depth; ++l) {
        AffineLayer id{Matrix(dim, dim), std::vector<double>(static_cast<std::size_t>(dim))};
        for (int r = 0; r < dim; ++r) id.A.at(r, r) = 1.0;
        layers.push_back(std::move(id));
    }
    return ReluNetwork(std::move(layers));
}

ReluNetwork sum_net(int arity) {
    if (arity < 1) throw std::invalid_argument("sum_net: arity must be >= 1");
    AffineLayer w1{Matrix(arity, arity), std::vector<double>(static_cast<std::size_t>(arity))};
    for (int r = 0; r < arity; ++r) w1.A.at(r, r) = 1.0;
    AffineLayer w2{Matrix(1, arity), {0.0}};
    for (int c = 0; c < arity; ++c) w2.A.at(0, c) = 1.0;
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(w1));
    layers.push_back(std::move(w2));
    return ReluNetwork(std::move(layers));
}

ReluNetwork build_stage_net(const TransportSpec& spec, int stage) {
    const int d = spec.dim();
    const int n = spec.resolution();
    const int s = spec.order();
    if (stage < 0 || stage >= d)
        throw std::invalid_argument("build_stage_net: stage out of range");
    std::size_t count = 1;  // carrier block size n^stage
    for (int i = 0; i < stage; ++i) count *= static_cast<std::size_t>(n);
    const ReluNetwork saw = build_sawtooth_net(s);
    std::vector<Wired> comps;
    for (std::size_t q = 0; q < count; ++q)
        for (int k = 0; k < n; ++k)
            comps.push_back(
                {chain(build_scaled_pwl_net(spec.shaping(stage, q), n, -k,
                                            RampStyle::reciprocal_pairs),
                       saw),
                 {static_cast<int>(q)}});
    for (int j = 0; j < stage; ++j)
        comps.push_back({identity_chain(s + 3), {static_cast<int>(count) + j}});
    {
        std::vector<int> cols(count);
        for (std::size_t q = 0; q < count; ++q) cols[q] = static_cast<int>(q);
        comps.push_back({extend_depth(sum_shaped_net(spec, stage), s + 3), std::move(cols)});
    }
    return wire_parallel(comps, static_cast<int>(count) + stage);
}

ReluNetwork build_transport_net(const TransportSpec& spec) {
    const int d = spec.dim();
    if (d == 1) return build_pwl_net(spec.shaping(0, 0), RampStyle::reciprocal_pairs);
    std::vector<AffineLayer> layers;
    for (int r = 0; r <= d - 2; ++r) {
        const ReluNetwork stage = build_stage_net(spec, r);
        layers.insert(layers.end(), stage.layers().begin(), stage.layers().end());
    }
    const ReluNetwork sel = selector_net(spec);
    layers.insert(layers.end(), sel.layers().begin(), sel.layers().end());
    return ReluNetwork(std::move(layers));
}

namespace {

bool on_grid(double v, std::int64_t q) {
    const double scaled = v * static_cast<double>(q);
    if (std::abs(scaled - std::round(scaled)) > 1e-9 * std::max(1.0, std::abs(scaled)))
        return false;
    return std::abs(v) <= static_cast<double>(q) * (1.0 + 1e-12);
}

}  // namespace

QuantizationAudit audit_quantization(const ReluNetwork& net, std::int64_t grid_denominator) {
    if (grid_denominator < 1)
        throw std::invalid_argument("audit_quantization: grid denominator must be >= 1");
    QuantizationAudit audit;
    audit.grid_denominator = grid_denominator;
    int layer_index = 0;
    auto classify = [&](double v, int layer, int row, int col) {
        if (v == 0.0) return;
        if (on_grid(v, grid_denominator)) {
            ++audit.type1;
        } else if (on_grid(1.0 / v, grid_denominator)) {
            ++audit.type2;
        } else {
            ++audit.neither;
            if (audit.offenders.size() < 16) audit.offenders.push_back({layer, row, col, v});
        }
    };
    for (const auto& L : net.layers()) {
        for (int r = 0; r < L.A.rows; ++r)
            for (int c = 0; c < L.A.cols; ++c) classify(L.A.at(r, c), layer_index, r, c);
        for (int r = 0; r < L.out(); ++r)
            classify(L.b[static_cast<std::size_t>(r)], layer_index, r, -1);
        ++layer_index;
    }
    audit.pass = audit.neither == 0;
    return audit;
}

std::int64_t encoded_bit_length(const ReluNetwork& net, std::int64_t grid_denominator) {
    const auto audit = audit_quantization(net, grid_denominator);
    if (!audit.pass)
        throw std::invalid_argument("encoded_bit_length: network fails the quantization audit");
    const auto bits_for = [](double count) {
        return count <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(count)));
    };
    // Grid of either type: integer multiples of 1/q in [-q, q], 2q^2+1 points.
    const double q = static_cast<double>(grid_denominator);
    const int value_bits = bits_for(2.0 * q * q + 1.0);
    std::int64_t total = 32;                                  // depth
    total += 32 * (static_cast<std::int64_t>(net.depth()) + 1);  // layer sizes
    for (const auto& L : net.layers()) {
        std::int64_t nnz = 0;
        for (double v : L.A.data)
            if (v != 0.0) ++nnz;
        for (double v : L.b)
            if (v != 0.0) ++nnz;
        const int addr_bits =
            bits_for(static_cast<double>(L.out()) * (static_cast<double>(L.in()) + 1.0));
        total += 32 + nnz * (addr_bits + 1 + value_bits);
    }
    return total;
}

ReluNetwork rescale_output(const ReluNetwork& net, double alpha, std::span<const double> beta) {
    if (!(alpha > 0.0)) throw std::invalid_argument("rescale_output: alpha must be positive");
    if (beta.size() != static_cast<std::size_t>(net.output_dim()))
        throw std::invalid_argument("rescale_output: beta dimension mismatch");
    std::vector<AffineLayer> layers(net.layers());
    AffineLayer& last = layers.back();
    for (double& v : last.A.data) v *= alpha;
    for (int r = 0; r < last.out(); ++r)
        last.b[static_cast<std::size_t>(r)] =
            alpha * last.b[static_cast<std::size_t>(r)] + beta[static_cast<std::size_t>(r)];
    return ReluNetwork(std::move(layers));
}

}  // namespace spacefill
