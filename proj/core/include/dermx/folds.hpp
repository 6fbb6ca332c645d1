#ifndef DERMX_FOLDS_HPP
#define DERMX_FOLDS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dermx/types.hpp"

namespace dermx {

struct FoldPlan {
    uint64_t seed = 0;
    int k = 10;
    std::map<std::string, int> assignments;  // image_id -> fold in [0,k)

    std::vector<std::vector<std::string>> members() const;
    int fold_of(const std::string& image_id) const;
};

// Deterministic stratified partition: per disease the ids are sorted, then
// Fisher-Yates shuffled from the seed, then dealt round-robin starting at a
// rolling offset so per-class and total imbalance both stay <= 1.
FoldPlan make_folds(const std::vector<std::pair<std::string, Disease>>& items, int k = 10,
                    uint64_t seed = 0);
FoldPlan make_folds(const std::vector<ImageRecord>& records, int k = 10, uint64_t seed = 0);

void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan);
FoldPlan load_fold_plan(const std::filesystem::path& path);

}  // namespace dermx

#endif  // DERMX_FOLDS_HPP
