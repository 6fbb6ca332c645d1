#include "dermx/manifest.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>

#include "dermx/bundle.hpp"
#include "dermx/errors.hpp"

namespace dermx {

using nlohmann::json;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string manifest_json(const RunManifest& manifest) {
    json j;
    j["command_line"] = manifest.command_line;
    j["config"] = manifest.config_snapshot;
    j["dataset_hash"] = manifest.dataset_hash;
    j["fold_plan_hash"] = manifest.fold_plan_hash;
    j["seed"] = manifest.seed;
    j["tool_version"] = manifest.tool_version;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    atomic_write(dir / "manifest.json", manifest_json(manifest));
}

RunManifest read_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no manifest.json in " + dir.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("manifest is not valid JSON: " + std::string(e.what()));
    }
    RunManifest m;
    m.command_line = j.at("command_line").get<std::string>();
    m.config_snapshot = j.at("config").get<std::map<std::string, std::string>>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.fold_plan_hash = j.at("fold_plan_hash").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    return m;
}

DirLock::DirLock(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    lock_path_ = dir / ".dermx.lock";
    std::error_code ec;
    if (std::filesystem::exists(lock_path_, ec))
        throw IoError("output directory is locked by another run: " + lock_path_.string() +
                      " (remove the lock file if that run is gone)");
    std::ofstream out(lock_path_);
    if (!out) throw IoError("cannot create lock file " + lock_path_.string());
    out << utc_timestamp() << "\n";
    held_ = true;
}

DirLock::~DirLock() {
    if (held_) {
        std::error_code ec;
        std::filesystem::remove(lock_path_, ec);
    }
}

}  // namespace dermx
