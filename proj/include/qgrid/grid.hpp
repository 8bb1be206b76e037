#pragma once

#include <string>
#include <vector>

namespace qgrid {

struct Bus {
    int id = 0;  // external label from the grid file
    double load_mw = 0.0;
    double gen_mw = 0.0;
};

// from_bus/to_bus are indices into GridSpec::buses; positive flow runs
// from_bus -> to_bus.
struct Line {
    int from_bus = 0;
    int to_bus = 0;
    double susceptance = 1.0;  // p.u.
    double limit_mw = 1.0;     // thermal limit
};

class GridSpec {
public:
    std::vector<Bus> buses;
    std::vector<Line> lines;
    int slack_bus = 0;  // index into buses
    double base_mva = 100.0;

    int n_buses() const { return static_cast<int>(buses.size()); }
    int n_lines() const { return static_cast<int>(lines.size()); }
    double total_load_mw() const;
    double total_gen_mw() const;

    // Structured-text grid file (JSON with keys buses[], lines[], slack_bus,
    // base_mva; see README for the field list). Bus references in the file
    // use ids, remapped to indices on load.
    static GridSpec load(const std::string& path);
    void save(const std::string& path) const;
    std::string to_json_string() const;
    static GridSpec from_json_string(const std::string& text);

    // 14-bus / 20-line default network.
    static GridSpec ieee14();

    // Content fingerprint used to detect mismatched result sets.
    std::string fingerprint() const;

    // Throws std::invalid_argument on inconsistent or disconnected input.
    void validate() const;
};

struct PowerFlowResult {
    std::vector<double> flow_mw;     // per line; 0 when out of service or shed
    std::vector<double> loading;     // |flow| / limit
    std::vector<bool> bus_energized; // bus sits in a solved component with generation
    double served_load_mw = 0.0;
    double unserved_load_mw = 0.0;
    bool slack_component_alive = false;
    // Worst |B'theta - P| residual in p.u. across solved components.
    double max_residual_pu = 0.0;
};

// Linear DC power flow: B'theta = P per connected component that carries
// generation, with the component slack absorbing any imbalance. Components
// with load but no generation are shed (reported via bus_energized /
// unserved_load_mw); a singular component solve is shed the same way.
PowerFlowResult solve_dc_power_flow(const GridSpec& spec,
                                    const std::vector<bool>& line_in_service,
                                    const std::vector<double>& bus_load_mw);

}  // namespace qgrid
