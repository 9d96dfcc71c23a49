#include "spacefill/serialization.hpp"

#include <algorithm>
#include <json.hpp>
#include <stdexcept>

#include "spacefill/relunet.hpp"

namespace spacefill {

using nlohmann::json;

namespace {

std::string prefix_key(std::size_t row, int level, int n) {
    std::vector<int> digits(static_cast<std::size_t>(level));
    for (int i = level - 1; i >= 0; --i) {
        digits[static_cast<std::size_t>(i)] = static_cast<int>(row % static_cast<std::size_t>(n));
        row /= static_cast<std::size_t>(n);
    }
    std::string key;
    for (int i = 0; i < level; ++i) {
        if (i) key += ',';
        key += std::to_string(digits[static_cast<std::size_t>(i)]);
    }
    return key;
}

std::size_t row_from_key(const std::string& key, int level, int n) {
    if (level == 0) {
        if (!key.empty()) throw std::invalid_argument("histogram JSON: level-0 key must be empty");
        return 0;
    }
    std::size_t row = 0;
    int parsed = 0;
    std::size_t pos = 0;
    while (pos <= key.size()) {
        const std::size_t next = key.find(',', pos);
        const std::string tok = key.substr(pos, next == std::string::npos ? next : next - pos);
        const int v = std::stoi(tok);
        if (v < 0 || v >= n) throw std::invalid_argument("histogram JSON: prefix digit out of range");
        row = row * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
        ++parsed;
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (parsed != level) throw std::invalid_argument("histogram JSON: prefix length mismatch");
    return row;
}

json histogram_body(const HistogramD& h) {
    return json{{"d", h.dim()}, {"n", h.resolution()}, {"weights", h.weights()}};
}

}  // namespace

std::string to_json(const HistogramD& h) { return histogram_body(h).dump(2); }

std::string to_json(const QuantizedHistogramD& h) {
    json j = histogram_body(h.base());
    j["delta_denominator"] = h.delta_denominator();
    json cond = json::object();
    const int n = h.resolution();
    for (int level = 0; level < h.dim(); ++level) {
        std::size_t rows = 1;
        for (int i = 0; i < level; ++i) rows *= static_cast<std::size_t>(n);
        for (std::size_t r = 0; r < rows; ++r) {
            auto units = h.conditional_units(level, r);
            cond[prefix_key(r, level, n)] =
                std::vector<std::int64_t>(units.begin(), units.end());
        }
    }
    j["conditionals"] = std::move(cond);
    return j.dump(2);
}

HistogramFile parse_histogram_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("histogram JSON: ") + e.what());
    }
    const int d = j.at("d").get<int>();
    const int n = j.at("n").get<int>();
    auto weights = j.at("weights").get<std::vector<double>>();
    HistogramD hist(d, n, std::move(weights));
    if (auto v = validate(hist))
        throw std::invalid_argument("histogram JSON: invalid histogram: " + v->rule);
    HistogramFile file{std::move(hist), std::nullopt};
    if (!j.contains("delta_denominator")) return file;

    const std::int64_t denom = j.at("delta_denominator").get<std::int64_t>();
    std::vector<std::vector<std::int64_t>> units(static_cast<std::size_t>(d));
    std::size_t rows = 1;
    for (int level = 0; level < d; ++level) {
        units[static_cast<std::size_t>(level)]
            .resize(rows * static_cast<std::size_t>(n), -1);
        rows *= static_cast<std::size_t>(n);
    }
    for (const auto& [key, value] : j.at("conditionals").items()) {
        const int level = key.empty() ? 0 : static_cast<int>(std::count(key.begin(), key.end(), ',')) + 1;
        if (level >= d) throw std::invalid_argument("histogram JSON: conditional prefix too long");
        const std::size_t row = row_from_key(key, level, n);
        auto row_units = value.get<std::vector<std::int64_t>>();
        if (row_units.size() != static_cast<std::size_t>(n))
            throw std::invalid_argument("histogram JSON: conditional row must have n entries");
        for (int k = 0; k < n; ++k)
            units[static_cast<std::size_t>(level)]
                 [row * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] =
                     row_units[static_cast<std::size_t>(k)];
    }
    for (const auto& level : units)
        for (std::int64_t u : level)
            if (u < 0) throw std::invalid_argument("histogram JSON: missing conditional row");
    QuantizedHistogramD q(file.histogram, denom, std::move(units));
    if (auto v = validate(q))
        throw std::invalid_argument("histogram JSON: invalid quantized histogram: " + v->rule);
    file.quantized = std::move(q);
    return file;
}

std::string to_json(const DiscreteMeasure& m) {
    json pts = json::array();
    for (int i = 0; i < m.size(); ++i) {
        auto p = m.point(i);
        pts.push_back(std::vector<double>(p.begin(), p.end()));
    }
    return json{{"points", std::move(pts)}, {"masses", m.masses}}.dump(2);
}

DiscreteMeasure parse_measure_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("measure JSON: ") + e.what());
    }
    DiscreteMeasure m;
    const auto& pts = j.at("points");
    if (pts.empty()) throw std::invalid_argument("measure JSON: empty support");
    m.dim = static_cast<int>(pts.front().size());
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != m.dim)
            throw std::invalid_argument("measure JSON: inconsistent point dimensions");
        for (const auto& c : p) m.points.push_back(c.get<double>());
    }
    m.masses = j.at("masses").get<std::vector<double>>();
    if (auto v = validate(m))
        throw std::invalid_argument("measure JSON: invalid measure: " + v->rule);
    return m;
}

std::string to_json(const PiecewiseLinear& f) {
    json ramps = json::array();
    for (const auto& r : f.ramps()) ramps.push_back({r.coeff, r.knot});
    return json{{"ramps", std::move(ramps)}}.dump(2);
}

PiecewiseLinear parse_pwl_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("pwl JSON: ") + e.what());
    }
    std::vector<PiecewiseLinear::Ramp> ramps;
    for (const auto& r : j.at("ramps")) {
        if (r.size() != 2) throw std::invalid_argument("pwl JSON: ramp must be [a, b]");
        ramps.push_back({r[0].get<double>(), r[1].get<double>()});
    }
    return PiecewiseLinear(std::move(ramps));
}

std::string serialize(const ReluNetwork& net) {
    json layers = json::array();
    for (const auto& L : net.layers()) {
        json rows = json::array();
        for (int r = 0; r < L.A.rows; ++r) {
            json row = json::array();
            for (int c = 0; c < L.A.cols; ++c) row.push_back(L.A.at(r, c));
            rows.push_back(std::move(row));
        }
        layers.push_back(json{{"A", std::move(rows)}, {"b", L.b}});
    }
    return json{{"layers", std::move(layers)}}.dump(2);
}

ReluNetwork deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("network JSON: ") + e.what());
    }
    const auto& jl = j.at("layers");
    if (!jl.is_array() || jl.empty())
        throw std::invalid_argument("network JSON: need a nonempty layer list");
    std::vector<AffineLayer> layers;
    for (const auto& l : jl) {
        const auto& A = l.at("A");
        const int rows = static_cast<int>(A.size());
        if (rows == 0) throw std::invalid_argument("network JSON: empty weight matrix");
        const int cols = static_cast<int>(A.front().size());
        AffineLayer layer{Matrix(rows, cols), l.at("b").get<std::vector<double>>()};
        for (int r = 0; r < rows; ++r) {
            if (static_cast<int>(A[static_cast<std::size_t>(r)].size()) != cols)
                throw std::invalid_argument("network JSON: ragged weight matrix");
            for (int c = 0; c < cols; ++c)
                layer.A.at(r, c) = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                                       .get<double>();
        }
        layers.push_back(std::move(layer));
    }
    return ReluNetwork(std::move(layers));
}

}  // namespace spacefill
