#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace turb {

// Flat key-value configuration with [section] grouping. Keys are stored as
// "section.key"; values are strings parsed on access. Later assignments
// (e.g. command-line overrides) replace earlier ones.
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // whitespace- or comma-separated doubles
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;

    std::string require(const std::string& key) const;

    // canonical "key = value" listing, sorted by key; used for provenance
    std::string canonical() const;
    // FNV-1a hash of the canonical listing
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace turb
