#include "dermx/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "dermx/errors.hpp"
#include "dermx/image_io.hpp"

namespace dermx {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const std::string& where) {
    for (const auto& k : required)
        if (!obj.contains(k)) throw SchemaError(where + ": missing key '" + k + "'");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& k = it.key();
        if (std::find(required.begin(), required.end(), k) == required.end() &&
            std::find(optional.begin(), optional.end(), k) == optional.end())
            throw SchemaError(where + ": unexpected key '" + k + "'");
    }
}

}  // namespace

RawAnnotationFile parse_annotations(const std::filesystem::path& index_path,
                                    const std::filesystem::path& images_root) {
    std::ifstream in(index_path);
    if (!in) throw IoError("annotation index not found: " + index_path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw SchemaError("annotation index is not valid JSON: " + std::string(e.what()));
    }

    require_keys(root, {"schema_version", "images"}, {}, "top level");
    RawAnnotationFile out;
    out.schema_version = root.at("schema_version").get<std::string>();
    out.images_root = images_root;

    std::set<std::string> seen_ids;
    for (size_t i = 0; i < root.at("images").size(); ++i) {
        const json& jimg = root.at("images").at(i);
        const std::string where = "images[" + std::to_string(i) + "]";
        require_keys(jimg, {"image_id", "source", "gold_diagnosis", "file_path", "evaluations"},
                     {"patient_id"}, where);
        RawImageEntry entry;
        entry.image_id = jimg.at("image_id").get<std::string>();
        if (!seen_ids.insert(entry.image_id).second)
            throw SchemaError("duplicate image_id '" + entry.image_id + "'");
        entry.source = source_from_name(jimg.at("source").get<std::string>());
        entry.gold_diagnosis = disease_from_name(jimg.at("gold_diagnosis").get<std::string>());
        if (jimg.contains("patient_id")) entry.patient_id = jimg.at("patient_id").get<std::string>();
        entry.file_path = jimg.at("file_path").get<std::string>();
        if (!std::filesystem::exists(images_root / entry.file_path))
            throw SchemaError(where + " (" + entry.image_id + "): image file missing: " +
                              (images_root / entry.file_path).string());

        for (size_t e = 0; e < jimg.at("evaluations").size(); ++e) {
            const json& jeval = jimg.at("evaluations").at(e);
            const std::string ewhere = where + ".evaluations[" + std::to_string(e) + "]";
            require_keys(jeval, {"rater_id", "diagnosis", "low_quality", "masks"}, {}, ewhere);
            RawEvaluation ev;
            ev.rater_id = jeval.at("rater_id").get<std::string>();
            if (ev.rater_id.empty()) throw SchemaError(ewhere + ": empty rater_id");
            ev.diagnosis = disease_from_name(jeval.at("diagnosis").get<std::string>());
            ev.low_quality = jeval.at("low_quality").get<bool>();
            for (auto it = jeval.at("masks").begin(); it != jeval.at("masks").end(); ++it) {
                const std::filesystem::path mask_path = images_root / it.value().get<std::string>();
                if (!std::filesystem::exists(mask_path))
                    throw SchemaError("dangling mask reference for image '" + entry.image_id +
                                      "', rater '" + ev.rater_id + "', characteristic '" + it.key() +
                                      "': " + mask_path.string());
                ev.mask_paths[it.key()] = mask_path;
            }
            if (ev.low_quality && !ev.mask_paths.empty())
                throw SchemaError(ewhere + " (" + entry.image_id + "): low-quality evaluation carries masks");
            entry.evaluations.push_back(std::move(ev));
        }
        out.images.push_back(std::move(entry));
    }
    return out;
}

CleanResult clean_dataset(const RawAnnotationFile& raw) {
    CleanResult result;
    result.log.raw_images = static_cast<int>(raw.images.size());

    // (a) images outside the target conditions: every evaluation says
    // "other", or the source never assigned one of the six gold labels
    std::vector<const RawImageEntry*> kept;
    for (const auto& entry : raw.images) {
        const bool all_other =
            entry.gold_diagnosis == Disease::kOther ||
            (!entry.evaluations.empty() &&
             std::all_of(entry.evaluations.begin(), entry.evaluations.end(),
                         [](const RawEvaluation& e) { return e.diagnosis == Disease::kOther; }));
        if (all_other) {
            ++result.log.all_other_dropped;
        } else {
            kept.push_back(&entry);
        }
    }

    // (b) one image per patient, lexicographically first image_id
    std::map<std::string, const RawImageEntry*> first_per_patient;
    for (const auto* entry : kept) {
        if (!entry->patient_id.has_value()) continue;
        auto [it, inserted] = first_per_patient.try_emplace(*entry->patient_id, entry);
        if (!inserted && entry->image_id < it->second->image_id) it->second = entry;
    }
    std::vector<const RawImageEntry*> deduped;
    for (const auto* entry : kept) {
        if (entry->patient_id.has_value() && first_per_patient.at(*entry->patient_id) != entry) {
            ++result.log.duplicate_patient_dropped;
        } else {
            deduped.push_back(entry);
        }
    }

    // (c) drop low-quality evaluations, then materialize surviving records
    for (const auto* entry : deduped) {
        ImageRecord rec;
        rec.image_id = entry->image_id;
        rec.source = entry->source;
        rec.gold_diagnosis = entry->gold_diagnosis;
        rec.patient_id = entry->patient_id;
        for (const auto& ev : entry->evaluations) {
            if (ev.low_quality) {
                ++result.log.low_quality_evaluations_dropped;
                continue;
            }
            Evaluation kept_eval;
            kept_eval.rater_id = ev.rater_id;
            kept_eval.diagnosis = ev.diagnosis;
            kept_eval.low_quality = false;
            for (const auto& [characteristic, path] : ev.mask_paths)
                kept_eval.characteristic_masks[characteristic] = read_mask(path);
            rec.evaluations.push_back(std::move(kept_eval));
        }
        if (rec.evaluations.empty()) {
            ++result.log.zero_evaluation_dropped;
            continue;
        }
        rec.pixels = read_image(raw.images_root / entry->file_path);
        for (const auto& ev : rec.evaluations)
            for (const auto& [characteristic, mask] : ev.characteristic_masks)
                if (mask.height() != rec.pixels.height() || mask.width() != rec.pixels.width())
                    throw SchemaError("mask dimensions mismatch for image '" + rec.image_id +
                                      "', rater '" + ev.rater_id + "', characteristic '" +
                                      characteristic + "'");
        result.log.retained_evaluations += static_cast<int>(rec.evaluations.size());
        result.records.push_back(std::move(rec));
    }
    result.log.retained_images = static_cast<int>(result.records.size());
    return result;
}

DatasetStats dataset_stats(const std::vector<ImageRecord>& records) {
    DatasetStats stats;
    for (const auto& rec : records)
        ++stats.counts[static_cast<size_t>(rec.source)][static_cast<size_t>(rec.gold_diagnosis)];
    return stats;
}

}  // namespace dermx
