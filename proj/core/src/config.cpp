#include "dermx/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "dermx/errors.hpp"

namespace dermx {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (cfg.entries_.count(key))
            throw ConfigError("duplicate key '" + key + "' at line " + std::to_string(lineno));
        cfg.entries_[key] = value;
        cfg.consumed_[key] = false;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::raw(const std::string& key) {
    consumed_[key] = true;
    return entries_.at(key);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
    return has(key) ? raw(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not a number");
    }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    try {
        size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(d);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::pair<double, double> KeyValueConfig::get_pair(const std::string& key, std::pair<double, double> fallback) {
    if (!has(key)) return fallback;
    std::string v = raw(key);
    v.erase(std::remove_if(v.begin(), v.end(), [](char c) { return c == '(' || c == ')' || c == ' '; }), v.end());
    const size_t comma = v.find(',');
    if (comma == std::string::npos)
        throw ConfigError("key '" + key + "': expected pair 'a,b', got '" + v + "'");
    try {
        return {std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected pair 'a,b', got '" + v + "'");
    }
}

void KeyValueConfig::finish() const {
    std::string unknown;
    for (const auto& [key, used] : consumed_)
        if (!used) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
}

}  // namespace dermx
