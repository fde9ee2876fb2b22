#include "sldp/path.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sldp {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'D', 'P', 'P', 'T', 'H', '1'};

// On-disk reals are little-endian 64-bit; this build targets little-endian
// hosts only.
static_assert(std::endian::native == std::endian::little, "path records are little-endian");

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("path record: truncated input");
    return v;
}

}  // namespace

std::string to_string(SimMode mode) {
    switch (mode) {
        case SimMode::Full:
            return "full";
        case SimMode::ZeroDrift:
            return "zero_drift";
        case SimMode::Skeleton:
            return "skeleton";
    }
    return "?";
}

SimMode sim_mode_from_string(const std::string& s) {
    if (s == "full") return SimMode::Full;
    if (s == "zero_drift") return SimMode::ZeroDrift;
    if (s == "skeleton") return SimMode::Skeleton;
    throw std::invalid_argument("unknown simulation mode: " + s);
}

void Path::validate() const {
    if (times.empty() || times[0] != 0.0) throw std::invalid_argument("Path: times must start at 0");
    if (states.size() != times.size()) throw std::invalid_argument("Path: states/times length mismatch");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("Path: times must increase");
    for (const auto& s : states)
        if (!all_finite(s)) throw std::invalid_argument("Path: non-finite state");
}

void write_path_binary(const Path& p, std::ostream& os) {
    os.write(kMagic, sizeof(kMagic));
    const auto id_len = static_cast<std::uint32_t>(p.meta.model_id.size());
    put(os, id_len);
    os.write(p.meta.model_id.data(), id_len);
    put(os, p.meta.epsilon);
    put(os, p.meta.dt);
    put(os, p.meta.seed);
    const auto mode = static_cast<std::uint8_t>(p.meta.mode);
    put(os, mode);
    const auto n_times = static_cast<std::uint32_t>(p.times.size());
    const auto n_dof = static_cast<std::uint32_t>(p.states.empty() ? 0 : p.states[0].size());
    put(os, n_times);
    put(os, n_dof);
    os.write(reinterpret_cast<const char*>(p.times.data()), static_cast<std::streamsize>(sizeof(double) * n_times));
    for (const auto& s : p.states)
        os.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * n_dof));
}

Path read_path_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("path record: bad magic");
    Path p;
    const auto id_len = get<std::uint32_t>(is);
    p.meta.model_id.resize(id_len);
    is.read(p.meta.model_id.data(), id_len);
    p.meta.epsilon = get<double>(is);
    p.meta.dt = get<double>(is);
    p.meta.seed = get<std::uint64_t>(is);
    p.meta.mode = static_cast<SimMode>(get<std::uint8_t>(is));
    const auto n_times = get<std::uint32_t>(is);
    const auto n_dof = get<std::uint32_t>(is);
    p.times.resize(n_times);
    is.read(reinterpret_cast<char*>(p.times.data()), static_cast<std::streamsize>(sizeof(double) * n_times));
    p.states.assign(n_times, Vec(n_dof));
    for (auto& s : p.states)
        is.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * n_dof));
    if (!is) throw std::runtime_error("path record: truncated payload");
    return p;
}

void write_path_binary_file(const Path& p, const std::string& filename) {
    std::ofstream os(filename, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + filename);
    write_path_binary(p, os);
}

Path read_path_binary_file(const std::string& filename) {
    std::ifstream is(filename, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + filename);
    return read_path_binary(is);
}

void write_path_csv(const Path& p, std::ostream& os) {
    char buf[32];
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.times[k]);
        os << buf;
        for (double v : p.states[k]) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

void write_path_csv_file(const Path& p, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename);
    write_path_csv(p, os);
}

}  // namespace sldp
