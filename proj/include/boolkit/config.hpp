#ifndef BOOLKIT_CONFIG_HPP
#define BOOLKIT_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace boolkit {

/// Flat key=value configuration text: one pair per line, '#' starts a
/// comment, blank lines ignored, whitespace around keys and values trimmed.
/// Commands validate against their allowed-key sets; unknown keys are errors.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": expected key=value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": empty key");
            if (cfg.values_.count(key))
                throw std::invalid_argument("config: duplicate key " + key);
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("config: cannot open " + path);
        return parse(in);
    }

    static KeyValueConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw std::invalid_argument("config: missing required key " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_double(key, it->second);
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_size(key, it->second);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_size(key, it->second);
    }

    std::vector<std::size_t> get_size_list(const std::string& key,
                                           std::vector<std::size_t> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::size_t> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
        if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
        return out;
    }

    void override_value(const std::string& key, const std::string& value) {
        values_[key] = value;
    }

    /// Reject any key outside the allowed set.
    void validate_keys(const std::set<std::string>& allowed) const {
        std::string unknown;
        for (const auto& [key, value] : values_)
            if (!allowed.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
        if (!unknown.empty())
            throw std::invalid_argument("config: unknown keys: " + unknown);
    }

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return d;
        } catch (...) {
            throw std::invalid_argument("config: bad number for " + key + ": " + v);
        }
    }

    static std::size_t parse_size(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const unsigned long long u = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return std::size_t(u);
        } catch (...) {
            throw std::invalid_argument("config: bad count for " + key + ": " + v);
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace boolkit

#endif
