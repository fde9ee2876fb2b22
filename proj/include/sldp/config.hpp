#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sldp {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plain key-value configuration with [section] headers, '#'/';' comments and
/// strict consumption tracking: every key a run does not recognize is fatal,
/// with its line number in the diagnostic. Typos must not silently corrupt
/// runs.
class Config {
public:
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");
    static Config parse_file(const std::string& filename);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const;
    std::size_t get_size(const std::string& section, const std::string& key, std::size_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 const std::vector<double>& fallback) const;

    /// Throws listing every key never read through a getter.
    void require_all_consumed() const;

    /// Key-order-independent canonical form and its 64-bit FNV-1a hash.
    std::string canonical() const;
    std::string hash_hex() const;

    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };
    const Entry* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void fail(const std::string& section, const std::string& key, const Entry& e,
                           const std::string& why) const;

    std::string origin_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace sldp
