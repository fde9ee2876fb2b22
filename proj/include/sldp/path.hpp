#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sldp/la.hpp"

namespace sldp {

enum class SimMode { Full, ZeroDrift, Skeleton };

std::string to_string(SimMode mode);
SimMode sim_mode_from_string(const std::string& s);

struct PathMeta {
    double epsilon = 1.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::string model_id;
    SimMode mode = SimMode::Full;
};

/// Discrete trajectory on a uniform grid: times[0] = 0, one H-state per knot.
struct Path {
    Vec times;
    std::vector<Vec> states;
    PathMeta meta;

    std::size_t n_knots() const { return times.size(); }
    const Vec& back() const { return states.back(); }
    void validate() const;
};

/// Binary record: fixed header (model_id, epsilon, dt, seed, mode) followed by
/// little-endian 64-bit reals for times and states.
void write_path_binary(const Path& p, std::ostream& os);
Path read_path_binary(std::istream& is);
void write_path_binary_file(const Path& p, const std::string& filename);
Path read_path_binary_file(const std::string& filename);

/// CSV rows: time, nodal values.
void write_path_csv(const Path& p, std::ostream& os);
void write_path_csv_file(const Path& p, const std::string& filename);

}  // namespace sldp
