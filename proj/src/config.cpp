#include "sldp/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sldp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            cfg.sections_[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        auto& sec = cfg.sections_[section];
        if (sec.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "' in [" +
                              section + "]");
        sec[key] = Entry{value, lineno, false};
    }
    return cfg;
}

Config Config::parse_file(const std::string& filename) {
    std::ifstream is(filename);
    if (!is) throw ConfigError("cannot open config file " + filename);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str(), filename);
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    return &kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

void Config::fail(const std::string& section, const std::string& key, const Entry& e, const std::string& why) const {
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": [" + section + "] " + key + " = '" + e.value +
                      "': " + why);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->consumed = true;
    return e->value;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->consumed = true;
    try {
        std::size_t pos = 0;
        const double v = std::stod(e->value, &pos);
        if (pos != e->value.size()) fail(section, key, *e, "trailing characters in number");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(section, key, *e, "not a number");
    }
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->consumed = true;
    // stoull silently wraps negatives, so reject them up front.
    if (e->value.find('-') != std::string::npos) fail(section, key, *e, "not an unsigned integer");
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(e->value, &pos);
        if (pos != e->value.size()) fail(section, key, *e, "trailing characters in integer");
        return static_cast<std::uint64_t>(v);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(section, key, *e, "not an unsigned integer");
    }
}

std::size_t Config::get_size(const std::string& section, const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(section, key, fallback));
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->consumed = true;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    fail(section, key, *e, "not a boolean (true/false)");
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key,
                                     const std::vector<double>& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->consumed = true;
    std::vector<double> out;
    std::string token;
    std::istringstream is(e->value);
    while (std::getline(is, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            fail(section, key, *e, "not a comma-separated list of numbers");
        }
    }
    if (out.empty()) fail(section, key, *e, "empty list");
    return out;
}

void Config::require_all_consumed() const {
    std::string complaints;
    for (const auto& [section, entries] : sections_)
        for (const auto& [key, entry] : entries)
            if (!entry.consumed)
                complaints += "\n  " + origin_ + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                              "' in [" + section + "]";
    if (!complaints.empty()) throw ConfigError("unrecognized configuration keys (strict parsing):" + complaints);
}

std::string Config::canonical() const {
    // std::map already orders sections and keys; values are emitted verbatim.
    // Root-level keys come first, before any section header, so the canonical
    // text parses back into an identical configuration.
    std::string out;
    for (const auto& [section, entries] : sections_) {
        if (!section.empty()) out += "[" + section + "]\n";
        for (const auto& [key, entry] : entries) out += key + "=" + entry.value + "\n";
    }
    return out;
}

std::string Config::hash_hex() const {
    const std::string c = canonical();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : c) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sldp
