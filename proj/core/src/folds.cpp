#include "dermx/folds.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "dermx/bundle.hpp"
#include "dermx/errors.hpp"

namespace dermx {

std::vector<std::vector<std::string>> FoldPlan::members() const {
    std::vector<std::vector<std::string>> out(static_cast<size_t>(k));
    for (const auto& [id, fold] : assignments) out[static_cast<size_t>(fold)].push_back(id);
    return out;
}

int FoldPlan::fold_of(const std::string& image_id) const {
    auto it = assignments.find(image_id);
    if (it == assignments.end()) throw SchemaError("image '" + image_id + "' not in fold plan");
    return it->second;
}

FoldPlan make_folds(const std::vector<std::pair<std::string, Disease>>& items, int k,
                    uint64_t seed) {
    if (k < 1) throw SchemaError("make_folds requires k >= 1");
    FoldPlan plan;
    plan.seed = seed;
    plan.k = k;

    std::array<std::vector<std::string>, kNumDiseases + 1> by_class;
    for (const auto& [id, disease] : items) by_class[static_cast<size_t>(disease)].push_back(id);

    std::mt19937_64 rng(seed);
    int offset = 0;
    for (auto& ids : by_class) {
        std::sort(ids.begin(), ids.end());  // input order must not matter
        // hand-rolled Fisher-Yates keeps assignments identical across stdlibs
        for (size_t i = ids.size(); i > 1; --i)
            std::swap(ids[i - 1], ids[rng() % i]);
        for (size_t i = 0; i < ids.size(); ++i)
            plan.assignments[ids[i]] = static_cast<int>((offset + i) % k);
        offset = static_cast<int>((offset + ids.size()) % k);
    }
    return plan;
}

FoldPlan make_folds(const std::vector<ImageRecord>& records, int k, uint64_t seed) {
    std::vector<std::pair<std::string, Disease>> items;
    items.reserve(records.size());
    for (const auto& rec : records) items.emplace_back(rec.image_id, rec.gold_diagnosis);
    return make_folds(items, k, seed);
}

void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan) {
    nlohmann::json j;
    j["seed"] = plan.seed;
    j["k"] = plan.k;
    j["assignments"] = plan.assignments;
    atomic_write(path, j.dump(2) + "\n");
}

FoldPlan load_fold_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read fold plan " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("fold plan is not valid JSON: " + std::string(e.what()));
    }
    FoldPlan plan;
    plan.seed = j.at("seed").get<uint64_t>();
    plan.k = j.at("k").get<int>();
    plan.assignments = j.at("assignments").get<std::map<std::string, int>>();
    for (const auto& [id, fold] : plan.assignments)
        if (fold < 0 || fold >= plan.k) throw SchemaError("fold index out of range for '" + id + "'");
    return plan;
}

}  // namespace dermx
