#include "plsa/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "plsa/csv.hpp"
#include "plsa/error.hpp"

namespace plsa {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw InvalidInput("config line " + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::string KeyValueConfig::get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw InvalidInput("config: missing key '" + key + "'");
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key) const {
    try {
        return csv::parse_double(get_string(key));
    } catch (const DataError&) {
        throw InvalidInput("config: key '" + key + "' is not a number");
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
    const std::string s = get_string(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw InvalidInput("config: key '" + key + "' is not an integer");
    }
    return v;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& f : csv::split(get_string(key), ',')) {
        try {
            out.push_back(csv::parse_double(f));
        } catch (const DataError&) {
            throw InvalidInput("config: key '" + key + "' has a non-numeric entry");
        }
    }
    return out;
}

}  // namespace plsa
