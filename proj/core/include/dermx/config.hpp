#ifndef DERMX_CONFIG_HPP
#define DERMX_CONFIG_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dermx {

// Flat `key = value` configuration. Keys mirror config-struct field names
// (dotted prefixes for nesting, e.g. `augmentation.rotation`). `#` starts a
// comment. Unknown keys are hard errors: after consumers pull their keys,
// finish() rejects anything left over.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::filesystem::path& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    int get_int(const std::string& key, int fallback);
    bool get_bool(const std::string& key, bool fallback);
    // "a,b" pairs, e.g. scale = 0.85,1.15
    std::pair<double, double> get_pair(const std::string& key, std::pair<double, double> fallback);

    // Throws ConfigError naming any key never consumed by a getter.
    void finish() const;

    // Raw view (sorted), used for manifest snapshots.
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
    mutable std::map<std::string, bool> consumed_;
    std::string raw(const std::string& key);
};

}  // namespace dermx

#endif  // DERMX_CONFIG_HPP
