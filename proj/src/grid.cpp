#include "qgrid/grid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qgrid {

double GridSpec::total_load_mw() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.load_mw;
    return s;
}

double GridSpec::total_gen_mw() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.gen_mw;
    return s;
}

namespace {

int index_of_bus_id(const std::vector<Bus>& buses, int id, const char* what) {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return static_cast<int>(i);
    }
    throw std::invalid_argument(std::string("grid file: ") + what + " references unknown bus id " +
                                std::to_string(id));
}

}  // namespace

GridSpec GridSpec::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("grid file: malformed JSON: ") + e.what());
    }
    GridSpec spec;
    if (!j.contains("buses") || !j["buses"].is_array()) {
        throw std::invalid_argument("grid file: missing \"buses\" array");
    }
    if (!j.contains("lines") || !j["lines"].is_array()) {
        throw std::invalid_argument("grid file: missing \"lines\" array");
    }
    for (const auto& jb : j["buses"]) {
        Bus b;
        if (!jb.contains("id")) throw std::invalid_argument("grid file: bus without \"id\"");
        b.id = jb["id"].get<int>();
        b.load_mw = jb.value("load_mw", 0.0);
        b.gen_mw = jb.value("gen_mw", 0.0);
        spec.buses.push_back(b);
    }
    for (const auto& jl : j["lines"]) {
        Line l;
        if (!jl.contains("from") || !jl.contains("to")) {
            throw std::invalid_argument("grid file: line without \"from\"/\"to\"");
        }
        l.from_bus = index_of_bus_id(spec.buses, jl["from"].get<int>(), "line");
        l.to_bus = index_of_bus_id(spec.buses, jl["to"].get<int>(), "line");
        if (!jl.contains("susceptance")) {
            throw std::invalid_argument("grid file: line without \"susceptance\"");
        }
        l.susceptance = jl["susceptance"].get<double>();
        if (!jl.contains("limit_mw")) {
            throw std::invalid_argument("grid file: line without \"limit_mw\"");
        }
        l.limit_mw = jl["limit_mw"].get<double>();
        spec.lines.push_back(l);
    }
    if (!j.contains("slack_bus")) throw std::invalid_argument("grid file: missing \"slack_bus\"");
    spec.slack_bus = index_of_bus_id(spec.buses, j["slack_bus"].get<int>(), "slack_bus");
    spec.base_mva = j.value("base_mva", 100.0);
    spec.validate();
    return spec;
}

GridSpec GridSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

std::string GridSpec::to_json_string() const {
    nlohmann::json j;
    j["base_mva"] = base_mva;
    j["slack_bus"] = buses.at(static_cast<std::size_t>(slack_bus)).id;
    j["buses"] = nlohmann::json::array();
    for (const auto& b : buses) {
        j["buses"].push_back({{"id", b.id}, {"load_mw", b.load_mw}, {"gen_mw", b.gen_mw}});
    }
    j["lines"] = nlohmann::json::array();
    for (const auto& l : lines) {
        j["lines"].push_back({{"from", buses.at(static_cast<std::size_t>(l.from_bus)).id},
                              {"to", buses.at(static_cast<std::size_t>(l.to_bus)).id},
                              {"susceptance", l.susceptance},
                              {"limit_mw", l.limit_mw}});
    }
    return j.dump(2);
}

void GridSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write grid file: " + path);
    out << to_json_string() << "\n";
}

std::string GridSpec::fingerprint() const {
    // FNV-1a over the canonical serialization; stable across platforms.
    const std::string text = to_json_string();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void GridSpec::validate() const {
    if (buses.empty()) throw std::invalid_argument("grid: no buses");
    std::set<int> ids;
    for (const auto& b : buses) {
        if (!ids.insert(b.id).second) {
            throw std::invalid_argument("grid: duplicate bus id " + std::to_string(b.id));
        }
        if (b.load_mw < 0.0 || b.gen_mw < 0.0) {
            throw std::invalid_argument("grid: negative load or generation at bus " +
                                        std::to_string(b.id));
        }
    }
    if (slack_bus < 0 || slack_bus >= n_buses()) {
        throw std::invalid_argument("grid: slack bus index out of range");
    }
    if (buses[static_cast<std::size_t>(slack_bus)].gen_mw <= 0.0) {
        throw std::invalid_argument("grid: slack bus has no generation");
    }
    if (base_mva <= 0.0) throw std::invalid_argument("grid: base_mva must be positive");
    for (const auto& l : lines) {
        if (l.from_bus < 0 || l.from_bus >= n_buses() || l.to_bus < 0 || l.to_bus >= n_buses()) {
            throw std::invalid_argument("grid: line endpoint out of range");
        }
        if (l.from_bus == l.to_bus) throw std::invalid_argument("grid: line connects bus to itself");
        if (l.susceptance <= 0.0) throw std::invalid_argument("grid: line susceptance must be positive");
        if (l.limit_mw <= 0.0) throw std::invalid_argument("grid: line limit must be positive");
    }
    // The intact network must be one connected component.
    std::vector<int> reach;
    std::vector<bool> seen(buses.size(), false);
    reach.push_back(0);
    seen[0] = true;
    while (!reach.empty()) {
        const int u = reach.back();
        reach.pop_back();
        for (const auto& l : lines) {
            int v = -1;
            if (l.from_bus == u) v = l.to_bus;
            if (l.to_bus == u) v = l.from_bus;
            if (v >= 0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                reach.push_back(v);
            }
        }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
        throw std::invalid_argument("grid: network is not connected");
    }
}

GridSpec GridSpec::ieee14() {
    GridSpec g;
    g.base_mva = 100.0;
    auto bus = [&](int id, double load, double gen) { g.buses.push_back({id, load, gen}); };
    bus(1, 0.0, 219.0);
    bus(2, 21.7, 40.0);
    bus(3, 94.2, 0.0);
    bus(4, 47.8, 0.0);
    bus(5, 7.6, 0.0);
    bus(6, 11.2, 0.0);
    bus(7, 0.0, 0.0);
    bus(8, 0.0, 0.0);
    bus(9, 29.5, 0.0);
    bus(10, 9.0, 0.0);
    bus(11, 3.5, 0.0);
    bus(12, 6.1, 0.0);
    bus(13, 13.5, 0.0);
    bus(14, 14.9, 0.0);
    g.slack_bus = 0;
    // Susceptances are 1/x from the standard branch reactances. Limits are
    // max(25 MW, 1.9x the intact-case flow at nominal load): slack enough to
    // ride through single outages, tight enough that multi-line attacks can
    // cascade.
    auto line = [&](int from_id, int to_id, double b, double lim) {
        g.lines.push_back({from_id - 1, to_id - 1, b, lim});
    };
    line(1, 2, 16.900, 281.0);
    line(1, 5, 4.484, 135.1);
    line(2, 3, 5.051, 133.1);
    line(2, 4, 5.672, 104.9);
    line(2, 5, 5.751, 77.7);
    line(3, 4, 5.847, 45.9);
    line(4, 5, 23.750, 118.5);
    line(4, 7, 4.782, 55.1);
    line(4, 9, 1.798, 31.6);
    line(5, 6, 3.968, 80.0);
    line(6, 11, 5.028, 25.0);
    line(6, 12, 3.909, 25.0);
    line(6, 13, 7.676, 32.4);
    line(7, 8, 5.677, 25.0);
    line(7, 9, 9.090, 55.1);
    line(9, 10, 11.834, 25.0);
    line(9, 14, 3.699, 25.0);
    line(10, 11, 5.206, 25.0);
    line(12, 13, 5.003, 25.0);
    line(13, 14, 2.873, 25.0);
    g.validate();
    return g;
}

PowerFlowResult solve_dc_power_flow(const GridSpec& spec,
                                    const std::vector<bool>& line_in_service,
                                    const std::vector<double>& bus_load_mw) {
    const int nb = spec.n_buses();
    const int nl = spec.n_lines();
    if (static_cast<int>(line_in_service.size()) != nl) {
        throw std::invalid_argument("power flow: line_in_service size mismatch");
    }
    if (static_cast<int>(bus_load_mw.size()) != nb) {
        throw std::invalid_argument("power flow: bus_load_mw size mismatch");
    }

    PowerFlowResult res;
    res.flow_mw.assign(static_cast<std::size_t>(nl), 0.0);
    res.loading.assign(static_cast<std::size_t>(nl), 0.0);
    res.bus_energized.assign(static_cast<std::size_t>(nb), false);

    // Connected components over in-service lines.
    std::vector<int> comp(static_cast<std::size_t>(nb), -1);
    int n_comp = 0;
    for (int start = 0; start < nb; ++start) {
        if (comp[static_cast<std::size_t>(start)] >= 0) continue;
        const int c = n_comp++;
        std::vector<int> stack{start};
        comp[static_cast<std::size_t>(start)] = c;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int li = 0; li < nl; ++li) {
                if (!line_in_service[static_cast<std::size_t>(li)]) continue;
                const Line& l = spec.lines[static_cast<std::size_t>(li)];
                int v = -1;
                if (l.from_bus == u) v = l.to_bus;
                if (l.to_bus == u) v = l.from_bus;
                if (v >= 0 && comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = c;
                    stack.push_back(v);
                }
            }
        }
    }

    std::vector<double> theta(static_cast<std::size_t>(nb), 0.0);

    for (int c = 0; c < n_comp; ++c) {
        std::vector<int> members;
        for (int i = 0; i < nb; ++i) {
            if (comp[static_cast<std::size_t>(i)] == c) members.push_back(i);
        }
        double comp_gen = 0.0;
        for (int i : members) comp_gen += spec.buses[static_cast<std::size_t>(i)].gen_mw;
        if (comp_gen <= 0.0) continue;  // no generation: component is shed

        // Component slack: the system slack if present, else the largest
        // generator (ties to the lowest index).
        int local_slack = -1;
        if (comp[static_cast<std::size_t>(spec.slack_bus)] == c) {
            local_slack = spec.slack_bus;
        } else {
            double best = -1.0;
            for (int i : members) {
                const double g = spec.buses[static_cast<std::size_t>(i)].gen_mw;
                if (g > best) {
                    best = g;
                    local_slack = i;
                }
            }
        }

        const int m = static_cast<int>(members.size());
        if (m == 1) {
            res.bus_energized[static_cast<std::size_t>(members[0])] = true;
            continue;
        }

        // Row index within the reduced system (slack row removed).
        std::vector<int> row(static_cast<std::size_t>(nb), -1);
        int r = 0;
        for (int i : members) {
            if (i != local_slack) row[static_cast<std::size_t>(i)] = r++;
        }

        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m - 1, m - 1);
        Eigen::VectorXd P = Eigen::VectorXd::Zero(m - 1);
        for (int i : members) {
            if (i == local_slack) continue;
            const auto& bus = spec.buses[static_cast<std::size_t>(i)];
            P(row[static_cast<std::size_t>(i)]) =
                (bus.gen_mw - bus_load_mw[static_cast<std::size_t>(i)]) / spec.base_mva;
        }
        for (int li = 0; li < nl; ++li) {
            if (!line_in_service[static_cast<std::size_t>(li)]) continue;
            const Line& l = spec.lines[static_cast<std::size_t>(li)];
            if (comp[static_cast<std::size_t>(l.from_bus)] != c) continue;
            const int ri = row[static_cast<std::size_t>(l.from_bus)];
            const int rj = row[static_cast<std::size_t>(l.to_bus)];
            if (ri >= 0) B(ri, ri) += l.susceptance;
            if (rj >= 0) B(rj, rj) += l.susceptance;
            if (ri >= 0 && rj >= 0) {
                B(ri, rj) -= l.susceptance;
                B(rj, ri) -= l.susceptance;
            }
        }

        Eigen::LDLT<Eigen::MatrixXd> solver(B);
        bool ok = solver.info() == Eigen::Success;
        Eigen::VectorXd t;
        if (ok) {
            t = solver.solve(P);
            const double resid = (B * t - P).cwiseAbs().maxCoeff();
            res.max_residual_pu = std::max(res.max_residual_pu, resid);
            if (!(resid < 1e-8) || !t.allFinite()) ok = false;
        }
        if (!ok) continue;  // numerically singular: treat as shed

        for (int i : members) {
            res.bus_energized[static_cast<std::size_t>(i)] = true;
            theta[static_cast<std::size_t>(i)] =
                (i == local_slack) ? 0.0 : t(row[static_cast<std::size_t>(i)]);
        }
    }

    for (int li = 0; li < nl; ++li) {
        if (!line_in_service[static_cast<std::size_t>(li)]) continue;
        const Line& l = spec.lines[static_cast<std::size_t>(li)];
        if (!res.bus_energized[static_cast<std::size_t>(l.from_bus)]) continue;
        const double f = l.susceptance *
                         (theta[static_cast<std::size_t>(l.from_bus)] -
                          theta[static_cast<std::size_t>(l.to_bus)]) *
                         spec.base_mva;
        res.flow_mw[static_cast<std::size_t>(li)] = f;
        res.loading[static_cast<std::size_t>(li)] = std::abs(f) / l.limit_mw;
    }

    double total = 0.0;
    double served = 0.0;
    for (int i = 0; i < nb; ++i) {
        total += bus_load_mw[static_cast<std::size_t>(i)];
        if (res.bus_energized[static_cast<std::size_t>(i)]) {
            served += bus_load_mw[static_cast<std::size_t>(i)];
        }
    }
    res.served_load_mw = served;
    res.unserved_load_mw = total - served;
    res.slack_component_alive = res.bus_energized[static_cast<std::size_t>(spec.slack_bus)];
    return res;
}

}  // namespace qgrid
