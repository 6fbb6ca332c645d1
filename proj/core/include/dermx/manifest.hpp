#ifndef DERMX_MANIFEST_HPP
#define DERMX_MANIFEST_HPP

#include <filesystem>
#include <map>
#include <string>

namespace dermx {

struct RunManifest {
    std::string command_line;
    std::map<std::string, std::string> config_snapshot;
    std::string dataset_hash;    // sha256 of the input bundle file
    std::string fold_plan_hash;  // empty when no fold plan is involved
    uint64_t seed = 0;
    std::string tool_version;
    std::string started_at;   // ISO 8601 UTC
    std::string finished_at;
};

std::string manifest_json(const RunManifest& manifest);

// exactly one manifest.json per output directory
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& dir);

std::string utc_timestamp();

// Advisory per-directory lock; a stale lock is reported, never stolen.
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::filesystem::path lock_path_;
    bool held_ = false;
};

}  // namespace dermx

#endif  // DERMX_MANIFEST_HPP
