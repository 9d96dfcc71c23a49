#include "spacefill/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace spacefill {

ValidationReport validate(const DiscreteMeasure& m) {
    if (m.dim < 1) return Violation{"dimension must be positive", 0, static_cast<double>(m.dim)};
    if (m.points.size() != m.masses.size() * static_cast<std::size_t>(m.dim))
        return Violation{"points array must be size*dim", m.points.size(), 0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < m.masses.size(); ++i) {
        if (!(m.masses[i] > 0.0)) return Violation{"nonpositive mass", i, m.masses[i]};
        total += m.masses[i];
    }
    if (std::abs(total - 1.0) > tol::kAccumulated)
        return Violation{"masses must sum to 1", 0, total - 1.0};
    return std::nullopt;
}

Measure1d Measure1d::from(const GeneralHistogram1d& h) {
    Measure1d m;
    for (std::size_t k = 0; k < h.bin_count(); ++k) {
        if (h.is_atom(k))
            m.atoms.emplace_back(h.breakpoints()[k], h.weights()[k]);
        else
            m.boxes.push_back({h.breakpoints()[k], h.breakpoints()[k + 1], h.bin_mass(k)});
    }
    return m;
}

Measure1d Measure1d::from(const DiscreteMeasure& d) {
    if (d.dim != 1) throw std::invalid_argument("Measure1d::from: measure must be 1-d");
    Measure1d m;
    for (int i = 0; i < d.size(); ++i)
        m.atoms.emplace_back(d.points[static_cast<std::size_t>(i)],
                             d.masses[static_cast<std::size_t>(i)]);
    return m;
}

Measure1d Measure1d::uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("Measure1d::uniform: need lo < hi");
    Measure1d m;
    m.boxes.push_back({lo, hi, 1.0});
    return m;
}

double Measure1d::total() const {
    double t = 0.0;
    for (const auto& b : boxes) t += b.mass;
    for (const auto& a : atoms) t += a.second;
    return t;
}

double wasserstein1_1d(const Measure1d& mu, const Measure1d& nu) {
    if (std::abs(mu.total() - nu.total()) > tol::kAccumulated)
        throw std::invalid_argument("wasserstein1_1d: measures must have equal total mass");
    // Signed CDF difference: piecewise linear in t with jumps at atoms.
    std::map<double, std::pair<double, double>> events;  // pos -> (slope delta, jump)
    auto add = [&](const Measure1d& m, double sign) {
        for (const auto& b : m.boxes) {
            const double density = b.mass / (b.hi - b.lo);
            events[b.lo].first += sign * density;
            events[b.hi].first -= sign * density;
        }
        for (const auto& a : m.atoms) events[a.first].second += sign * a.second;
    };
    add(mu, 1.0);
    add(nu, -1.0);
    double integral = 0.0;
    double value = 0.0;
    double slope = 0.0;
    double prev = 0.0;
    bool first = true;
    for (const auto& [pos, ev] : events) {
        if (!first) {
            const double len = pos - prev;
            const double next = value + slope * len;
            if (value * next >= 0.0) {
                integral += 0.5 * (std::abs(value) + std::abs(next)) * len;
            } else {
                const double split = std::abs(value) / (std::abs(value) + std::abs(next)) * len;
                integral += 0.5 * (std::abs(value) * split + std::abs(next) * (len - split));
            }
            value = next;
        }
        value += ev.second;
        slope += ev.first;
        prev = pos;
        first = false;
    }
    return integral;
}

namespace {

constexpr int kSupportLimit = 4200;      // desk-scale exact solves only
constexpr double kMassEps = 1e-13;       // residual mass below certificate tolerance

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Merge duplicate support points (exact coordinate equality).
DiscreteMeasure consolidate(const DiscreteMeasure& m) {
    std::map<std::vector<double>, double> acc;
    for (int i = 0; i < m.size(); ++i) {
        auto p = m.point(i);
        acc[std::vector<double>(p.begin(), p.end())] += m.masses[static_cast<std::size_t>(i)];
    }
    DiscreteMeasure out;
    out.dim = m.dim;
    for (const auto& [p, mass] : acc) {
        out.points.insert(out.points.end(), p.begin(), p.end());
        out.masses.push_back(mass);
    }
    return out;
}

bool lex_less(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    if (a.points != b.points) return a.points < b.points;
    return a.masses < b.masses;
}

TransportResult solve_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const int S = mu.size();
    const int T = nu.size();
    // Residual supplies after cancelling mass shared at identical points; the
    // 1-Wasserstein optimum depends only on the difference of the measures.
    std::vector<double> supply(mu.masses);
    std::vector<double> demand(nu.masses);
    {
        std::map<std::vector<double>, int> where;
        for (int j = 0; j < T; ++j) {
            auto p = nu.point(j);
            where[std::vector<double>(p.begin(), p.end())] = j;
        }
        for (int i = 0; i < S; ++i) {
            auto p = mu.point(i);
            auto it = where.find(std::vector<double>(p.begin(), p.end()));
            if (it == where.end()) continue;
            const double r = std::min(supply[static_cast<std::size_t>(i)],
                                      demand[static_cast<std::size_t>(it->second)]);
            supply[static_cast<std::size_t>(i)] -= r;
            demand[static_cast<std::size_t>(it->second)] -= r;
        }
    }
    for (double& v : supply)
        if (v < kMassEps) v = 0.0;
    for (double& v : demand)
        if (v < kMassEps) v = 0.0;

    std::vector<double> pot(static_cast<std::size_t>(S + T), 0.0);
    std::unordered_map<std::int64_t, double> flow;
    std::vector<std::vector<int>> back(static_cast<std::size_t>(T));  // sinks -> sources with flow
    auto key = [T](int i, int j) {
        return static_cast<std::int64_t>(i) * T + j;
    };
    auto cost = [&](int i, int j) { return euclid(mu.point(i), nu.point(j)); };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(S + T));
    std::vector<int> parent(static_cast<std::size_t>(S + T));
    std::vector<char> done(static_cast<std::size_t>(S + T));
    long iterations = 0;
    const long iteration_cap = 100L * (S + T) + 1000;

    while (true) {
        double remaining = 0.0;
        for (double v : supply) remaining += v;
        double pending = 0.0;
        for (double v : demand) pending += v;
        if (remaining <= kMassEps || pending <= kMassEps) break;
        if (++iterations > iteration_cap)
            throw std::runtime_error("min_cost_transport: augmentation cap exceeded");

        std::fill(dist.begin(), dist.end(), inf);
        std::fill(parent.begin(), parent.end(), -1);
        std::fill(done.begin(), done.end(), 0);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        for (int i = 0; i < S; ++i)
            if (supply[static_cast<std::size_t>(i)] > 0.0) {
                dist[static_cast<std::size_t>(i)] = 0.0;
                heap.push({0.0, i});
            }
        int target = -1;
        while (!heap.empty()) {
            const auto [dv, v] = heap.top();
            heap.pop();
            if (done[static_cast<std::size_t>(v)]) continue;
            done[static_cast<std::size_t>(v)] = 1;
            if (v >= S && demand[static_cast<std::size_t>(v - S)] > 0.0) {
                target = v - S;
                break;
            }
            if (v < S) {
                for (int j = 0; j < T; ++j) {
                    const int w = S + j;
                    if (done[static_cast<std::size_t>(w)]) continue;
                    const double rc =
                        cost(v, j) + pot[static_cast<std::size_t>(v)] -
                        pot[static_cast<std::size_t>(w)];
                    const double nd = dv + std::max(0.0, rc);
                    if (nd < dist[static_cast<std::size_t>(w)]) {
                        dist[static_cast<std::size_t>(w)] = nd;
                        parent[static_cast<std::size_t>(w)] = v;
                        heap.push({nd, w});
                    }
                }
            } else {
                const int j = v - S;
                for (int i : back[static_cast<std::size_t>(j)]) {
                    if (done[static_cast<std::size_t>(i)]) continue;
                    auto it = flow.find(key(i, j));
                    if (it == flow.end() || it->second <= 0.0) continue;
                    const double rc =
                        -cost(i, j) + pot[static_cast<std::size_t>(v)] -
                        pot[static_cast<std::size_t>(i)];
                    const double nd = dv + std::max(0.0, rc);
                    if (nd < dist[static_cast<std::size_t>(i)]) {
                        dist[static_cast<std::size_t>(i)] = nd;
                        parent[static_cast<std::size_t>(i)] = v;
                        heap.push({nd, i});
                    }
                }
            }
        }
        if (target < 0)
            throw std::runtime_error("min_cost_transport: no augmenting path found");
        const double d_target = dist[static_cast<std::size_t>(S + target)];
        for (int v = 0; v < S + T; ++v)
            if (dist[static_cast<std::size_t>(v)] < inf)
                pot[static_cast<std::size_t>(v)] +=
                    std::min(dist[static_cast<std::size_t>(v)], d_target);

        // Bottleneck along the augmenting path.
        double theta = demand[static_cast<std::size_t>(target)];
        for (int v = S + target; parent[static_cast<std::size_t>(v)] >= 0;
             v = parent[static_cast<std::size_t>(v)]) {
            const int u = parent[static_cast<std::size_t>(v)];
            if (u >= S) theta = std::min(theta, flow[key(v, u - S)]);  // backward arc v->u
            if (parent[static_cast<std::size_t>(u)] < 0)
                theta = std::min(theta, supply[static_cast<std::size_t>(u)]);
        }
        for (int v = S + target; parent[static_cast<std::size_t>(v)] >= 0;
             v = parent[static_cast<std::size_t>(v)]) {
            const int u = parent[static_cast<std::size_t>(v)];
            if (u < S) {
                const int j = v - S;
                double& f = flow[key(u, j)];
                if (f == 0.0) back[static_cast<std::size_t>(j)].push_back(u);
                f += theta;
            } else {
                double& f = flow[key(v, u - S)];
                f -= theta;
                if (f < kMassEps) f = 0.0;
            }
        }
        int start = S + target;
        while (parent[static_cast<std::size_t>(start)] >= 0)
            start = parent[static_cast<std::size_t>(start)];
        supply[static_cast<std::size_t>(start)] -= theta;
        demand[static_cast<std::size_t>(target)] -= theta;
    }

    TransportResult result;
    for (const auto& [k, f] : flow) {
        if (f <= 0.0) continue;
        const int i = static_cast<int>(k / T);
        const int j = static_cast<int>(k % T);
        result.cost += f * cost(i, j);
        result.plan.push_back({i, j, f});
    }
    // Mass cancelled in place moves at zero cost.
    {
        std::map<std::vector<double>, int> where;
        for (int j = 0; j < T; ++j) {
            auto p = nu.point(j);
            where[std::vector<double>(p.begin(), p.end())] = j;
        }
        std::vector<double> placed(static_cast<std::size_t>(S), 0.0);
        for (const auto& mv : result.plan)
            placed[static_cast<std::size_t>(mv.from)] += mv.mass;
        for (int i = 0; i < S; ++i) {
            auto p = mu.point(i);
            auto it = where.find(std::vector<double>(p.begin(), p.end()));
            if (it == where.end()) continue;
            const double kept =
                mu.masses[static_cast<std::size_t>(i)] - placed[static_cast<std::size_t>(i)];
            if (kept > kMassEps) result.plan.push_back({i, it->second, kept});
        }
    }
    // Optimality certificate: dual feasibility of the final potentials plus
    // the primal-dual objective difference on the residual problem.
    double worst_violation = 0.0;
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < T; ++j)
            worst_violation =
                std::max(worst_violation, pot[static_cast<std::size_t>(S + j)] -
                                              pot[static_cast<std::size_t>(i)] - cost(i, j));
    double dual = 0.0;
    std::vector<double> res_supply(mu.masses);
    std::vector<double> res_demand(nu.masses);
    for (const auto& mv : result.plan) {
        res_supply[static_cast<std::size_t>(mv.from)] -= mv.mass;
        res_demand[static_cast<std::size_t>(mv.to)] -= mv.mass;
    }
    double primal = 0.0;
    for (const auto& [k, f] : flow)
        if (f > 0.0) {
            dual += f * (pot[static_cast<std::size_t>(S + static_cast<int>(k % T))] -
                         pot[static_cast<std::size_t>(static_cast<int>(k / T))]);
            primal += f * cost(static_cast<int>(k / T), static_cast<int>(k % T));
        }
    result.dual_gap = std::abs(primal - dual) + std::max(0.0, worst_violation);
    return result;
}

}  // namespace

TransportResult min_cost_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != nu.dim)
        throw std::invalid_argument("min_cost_transport: dimension mismatch");
    if (auto v = validate(mu))
        throw std::invalid_argument("min_cost_transport: first measure invalid: " + v->rule);
    if (auto v = validate(nu))
        throw std::invalid_argument("min_cost_transport: second measure invalid: " + v->rule);
    if (mu.size() + nu.size() > kSupportLimit)
        throw std::invalid_argument("min_cost_transport: combined support exceeds desk scale");
    const DiscreteMeasure a = consolidate(mu);
    const DiscreteMeasure b = consolidate(nu);
    // Deterministic orientation keeps the value exactly symmetric in the
    // arguments.
    if (lex_less(b, a)) {
        TransportResult r = solve_transport(b, a);
        for (auto& mv : r.plan) std::swap(mv.from, mv.to);
        return r;
    }
    return solve_transport(a, b);
}

namespace {

std::size_t refined_cells(int dim, int resolution, int order) {
    const double per_axis = static_cast<double>(resolution) * std::ldexp(1.0, order);
    double total = 1.0;
    for (int i = 0; i < dim; ++i) total *= per_axis;
    if (total > 1e7)
        throw std::invalid_argument("refined grid too large for desk-scale measurement");
    return static_cast<std::size_t>(total + 0.5);
}

std::vector<double> refined_center(std::size_t flat, int dim, long per_axis) {
    std::vector<double> c(static_cast<std::size_t>(dim));
    for (int i = dim - 1; i >= 0; --i) {
        c[static_cast<std::size_t>(i)] =
            (static_cast<double>(flat % static_cast<std::size_t>(per_axis)) + 0.5) /
            static_cast<double>(per_axis);
        flat /= static_cast<std::size_t>(per_axis);
    }
    return c;
}

std::vector<double> map_masses_midpoint(const VectorMap& map, int dim, int resolution,
                                        int order, std::int64_t grid_points) {
    if (grid_points < 1)
        throw std::invalid_argument("pushforward_measure: need at least one grid point");
    const std::size_t cells = refined_cells(dim, resolution, order);
    const long per_axis = resolution * (1L << order);
    std::vector<std::int64_t> counts(cells, 0);
    for (std::int64_t g = 0; g < grid_points; ++g) {
        const double x = (static_cast<double>(g) + 0.5) / static_cast<double>(grid_points);
        const std::vector<double> y = map(x);
        std::size_t flat = 0;
        for (int i = 0; i < dim; ++i) {
            long idx = static_cast<long>(std::floor(y[static_cast<std::size_t>(i)] * per_axis));
            idx = std::clamp(idx, 0L, per_axis - 1);
            flat = flat * static_cast<std::size_t>(per_axis) + static_cast<std::size_t>(idx);
        }
        ++counts[flat];
    }
    std::vector<double> masses(cells, 0.0);
    for (std::size_t c = 0; c < cells; ++c)
        masses[c] = static_cast<double>(counts[c]) / static_cast<double>(grid_points);
    return masses;
}

std::vector<double> map_masses_exact(const TransportSpec& spec) {
    const int d = spec.dim();
    const int n = spec.resolution();
    const int s = spec.order();
    const std::size_t cells = refined_cells(d, n, s);
    const long teeth = 1L << s;
    std::vector<double> masses(cells, 0.0);
    std::vector<int> z(static_cast<std::size_t>(d)), h(static_cast<std::size_t>(d));
    for (std::size_t flat = 0; flat < cells; ++flat) {
        std::size_t rest = flat;
        for (int i = d - 1; i >= 0; --i) {
            const long idx = static_cast<long>(rest % static_cast<std::size_t>(n * teeth));
            z[static_cast<std::size_t>(i)] = static_cast<int>(idx / teeth);
            h[static_cast<std::size_t>(i)] = static_cast<int>(idx % teeth);
            rest /= static_cast<std::size_t>(n * teeth);
        }
        masses[flat] = spec.preimage_interval(z, h).length();
    }
    return masses;
}

DiscreteMeasure measure_from_refined(std::vector<double> masses, int dim, int resolution,
                                     int order) {
    const long per_axis = resolution * (1L << order);
    DiscreteMeasure out;
    out.dim = dim;
    for (std::size_t flat = 0; flat < masses.size(); ++flat) {
        if (masses[flat] <= 0.0) continue;
        const auto c = refined_center(flat, dim, per_axis);
        out.points.insert(out.points.end(), c.begin(), c.end());
        out.masses.push_back(masses[flat]);
    }
    return out;
}

}  // namespace

DiscreteMeasure pushforward_measure(const VectorMap& map, int dim, int resolution, int order,
                                    std::int64_t grid_points) {
    return measure_from_refined(
        map_masses_midpoint(map, dim, resolution, order, grid_points), dim, resolution, order);
}

DiscreteMeasure pushforward_measure(const TransportSpec& spec, std::int64_t grid_points) {
    if (grid_points == 0)
        return measure_from_refined(map_masses_exact(spec), spec.dim(), spec.resolution(),
                                    spec.order());
    const VectorMap map = [&spec](double x) { return spec.transport_eval(x); };
    return pushforward_measure(map, spec.dim(), spec.resolution(), spec.order(), grid_points);
}

DiscreteMeasure discretize_refined(const HistogramD& target, int order) {
    const int d = target.dim();
    const int n = target.resolution();
    const std::size_t cells = refined_cells(d, n, order);
    const long teeth = 1L << order;
    double sub = 1.0;
    for (int i = 0; i < d; ++i) sub *= static_cast<double>(teeth);
    std::vector<double> masses(cells, 0.0);
    std::vector<int> z(static_cast<std::size_t>(d));
    for (std::size_t flat = 0; flat < cells; ++flat) {
        std::size_t rest = flat;
        for (int i = d - 1; i >= 0; --i) {
            z[static_cast<std::size_t>(i)] =
                static_cast<int>((rest % static_cast<std::size_t>(n * teeth)) / teeth);
            rest /= static_cast<std::size_t>(n * teeth);
        }
        masses[flat] = target.cell_mass(z) / sub;
    }
    return measure_from_refined(std::move(masses), d, n, order);
}

SubcubeExactness subcube_exactness(const TransportSpec& spec, std::int64_t grid_points) {
    const int d = spec.dim();
    const int n = spec.resolution();
    const int s = spec.order();
    const VectorMap map = [&spec](double x) { return spec.transport_eval(x); };
    const auto empirical = map_masses_midpoint(map, d, n, s, grid_points);
    const auto exact = map_masses_exact(spec);
    const long teeth = 1L << s;
    double sub = 1.0;
    for (int i = 0; i < d; ++i) sub *= static_cast<double>(teeth);

    SubcubeExactness res;
    std::vector<int> z(static_cast<std::size_t>(d));
    // Per-tile accumulation of the exact preimage lengths.
    std::unordered_map<std::size_t, double> tile_sum;
    for (std::size_t flat = 0; flat < empirical.size(); ++flat) {
        std::size_t rest = flat;
        std::size_t tile = 0;
        for (int i = d - 1; i >= 0; --i) {
            z[static_cast<std::size_t>(i)] =
                static_cast<int>((rest % static_cast<std::size_t>(n * teeth)) / teeth);
            rest /= static_cast<std::size_t>(n * teeth);
        }
        for (int i = 0; i < d; ++i)
            tile = tile * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(z[static_cast<std::size_t>(i)]);
        const double want = spec.target().cell_mass(z) / sub;
        res.max_mass_deviation =
            std::max(res.max_mass_deviation, std::abs(empirical[flat] - want));
        tile_sum[tile] += exact[flat];
    }
    for (const auto& [tile, sum] : tile_sum) {
        const auto idx = spec.target().unflatten(tile);
        res.max_preimage_residual =
            std::max(res.max_preimage_residual, std::abs(sum - spec.target().cell_mass(idx)));
    }
    return res;
}

WBound w_bound_report(const TransportSpec& spec, std::int64_t grid_points) {
    const int d = spec.dim();
    const int n = spec.resolution();
    const int s = spec.order();
    WBound r;
    r.bound = std::sqrt(static_cast<double>(d)) / (n * std::ldexp(1.0, s));
    r.slack = r.bound;  // moving both measures to the refined centers
    const DiscreteMeasure image = pushforward_measure(spec, grid_points);
    const DiscreteMeasure target = discretize_refined(spec.target(), s);
    if (d == 1)
        r.refined_w = wasserstein1_1d(Measure1d::from(image), Measure1d::from(target));
    else
        r.refined_w = min_cost_transport(image, target).cost;
    r.measured = r.refined_w + r.slack;
    return r;
}

}  // namespace spacefill
