#include "dermx/bundle.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

#include "dermx/errors.hpp"
#include "dermx/image_io.hpp"

namespace dermx {

namespace {

constexpr char kMagic[] = "DXBUNDLE";
constexpr uint32_t kVersion = 1;

using nlohmann::json;

class BlobWriter {
public:
    size_t add(const std::vector<uint8_t>& bytes) {
        offsets_.push_back({blob_.size(), bytes.size()});
        blob_.insert(blob_.end(), bytes.begin(), bytes.end());
        return offsets_.size() - 1;
    }

    json manifest() const {
        json j = json::array();
        for (const auto& [off, len] : offsets_) j.push_back({{"offset", off}, {"length", len}});
        return j;
    }

    const std::string& blob() const { return blob_; }

private:
    std::string blob_;
    std::vector<std::pair<size_t, size_t>> offsets_;
};

class BlobReader {
public:
    BlobReader(std::string blob, const json& manifest) : blob_(std::move(blob)) {
        for (const auto& entry : manifest)
            offsets_.push_back({entry.at("offset").get<size_t>(), entry.at("length").get<size_t>()});
    }

    std::vector<uint8_t> get(size_t index) const {
        if (index >= offsets_.size()) throw SchemaError("bundle blob index out of range");
        const auto& [off, len] = offsets_[index];
        if (off + len > blob_.size()) throw SchemaError("bundle blob region truncated");
        return {blob_.begin() + static_cast<long>(off), blob_.begin() + static_cast<long>(off + len)};
    }

private:
    std::string blob_;
    std::vector<std::pair<size_t, size_t>> offsets_;
};

void write_container(const std::filesystem::path& path, const json& header,
                     const std::string& blob) {
    std::string out;
    out.append(kMagic, 8);
    uint32_t version = kVersion;
    out.append(reinterpret_cast<const char*>(&version), 4);
    const std::string header_str = header.dump();
    uint64_t header_len = header_str.size();
    out.append(reinterpret_cast<const char*>(&header_len), 8);
    out.append(header_str);
    out.append(blob);
    atomic_write(path, out);
}

std::pair<json, std::string> read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open bundle " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw SchemaError("not a dermx bundle: " + path.string());
    uint32_t version;
    std::memcpy(&version, bytes.data() + 8, 4);
    if (version != kVersion)
        throw SchemaError("unsupported bundle version " + std::to_string(version));
    uint64_t header_len;
    std::memcpy(&header_len, bytes.data() + 12, 8);
    if (20 + header_len > bytes.size()) throw SchemaError("bundle header truncated");
    json header;
    try {
        header = json::parse(bytes.substr(20, header_len));
    } catch (const json::exception& e) {
        throw SchemaError("bundle header is not valid JSON: " + std::string(e.what()));
    }
    return {header, bytes.substr(20 + header_len)};
}

json record_to_json(const ImageRecord& rec, BlobWriter& blobs) {
    json j;
    j["image_id"] = rec.image_id;
    j["source"] = to_string(rec.source);
    j["gold_diagnosis"] = to_string(rec.gold_diagnosis);
    if (rec.patient_id) j["patient_id"] = *rec.patient_id;
    j["pixels"] = blobs.add(encode_png(rec.pixels));
    j["evaluations"] = json::array();
    for (const auto& ev : rec.evaluations) {
        json je;
        je["rater_id"] = ev.rater_id;
        je["diagnosis"] = to_string(ev.diagnosis);
        je["low_quality"] = ev.low_quality;
        je["masks"] = json::object();
        for (const auto& [name, mask] : ev.characteristic_masks)
            je["masks"][name] = blobs.add(encode_mask_png(mask));
        j["evaluations"].push_back(std::move(je));
    }
    return j;
}

ImageRecord record_from_json(const json& j, const BlobReader& blobs) {
    ImageRecord rec;
    rec.image_id = j.at("image_id").get<std::string>();
    rec.source = source_from_name(j.at("source").get<std::string>());
    rec.gold_diagnosis = disease_from_name(j.at("gold_diagnosis").get<std::string>());
    if (j.contains("patient_id")) rec.patient_id = j.at("patient_id").get<std::string>();
    rec.pixels = decode_image(blobs.get(j.at("pixels").get<size_t>()));
    for (const auto& je : j.at("evaluations")) {
        Evaluation ev;
        ev.rater_id = je.at("rater_id").get<std::string>();
        ev.diagnosis = disease_from_name(je.at("diagnosis").get<std::string>());
        ev.low_quality = je.at("low_quality").get<bool>();
        for (auto it = je.at("masks").begin(); it != je.at("masks").end(); ++it)
            ev.characteristic_masks[it.key()] = decode_mask(blobs.get(it.value().get<size_t>()));
        rec.evaluations.push_back(std::move(ev));
    }
    return rec;
}

json log_to_json(const CleaningLog& log) {
    return json{{"raw_images", log.raw_images},
                {"all_other_dropped", log.all_other_dropped},
                {"duplicate_patient_dropped", log.duplicate_patient_dropped},
                {"zero_evaluation_dropped", log.zero_evaluation_dropped},
                {"low_quality_evaluations_dropped", log.low_quality_evaluations_dropped},
                {"retained_images", log.retained_images},
                {"retained_evaluations", log.retained_evaluations}};
}

CleaningLog log_from_json(const json& j) {
    CleaningLog log;
    log.raw_images = j.at("raw_images").get<int>();
    log.all_other_dropped = j.at("all_other_dropped").get<int>();
    log.duplicate_patient_dropped = j.at("duplicate_patient_dropped").get<int>();
    log.zero_evaluation_dropped = j.at("zero_evaluation_dropped").get<int>();
    log.low_quality_evaluations_dropped = j.at("low_quality_evaluations_dropped").get<int>();
    log.retained_images = j.at("retained_images").get<int>();
    log.retained_evaluations = j.at("retained_evaluations").get<int>();
    return log;
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

void write_dataset_bundle(const std::filesystem::path& path, const std::vector<ImageRecord>& records,
                          const CleaningLog& log) {
    BlobWriter blobs;
    json header;
    header["type"] = "dataset";
    header["cleaning_log"] = log_to_json(log);
    header["records"] = json::array();
    for (const auto& rec : records) header["records"].push_back(record_to_json(rec, blobs));
    header["blobs"] = blobs.manifest();
    write_container(path, header, blobs.blob());
}

DatasetBundle read_dataset_bundle(const std::filesystem::path& path) {
    auto [header, blob] = read_container(path);
    if (header.at("type") != "dataset")
        throw SchemaError(path.string() + " is a " + header.at("type").get<std::string>() +
                          " bundle, expected dataset");
    BlobReader blobs(std::move(blob), header.at("blobs"));
    DatasetBundle bundle;
    bundle.log = log_from_json(header.at("cleaning_log"));
    for (const auto& j : header.at("records")) bundle.records.push_back(record_from_json(j, blobs));
    return bundle;
}

void write_labels_bundle(const std::filesystem::path& path, const LabelsBundle& bundle) {
    BlobWriter blobs;
    json header;
    header["type"] = "labels";
    header["characteristics"] = bundle.characteristics;
    header["fusion_denominator"] = bundle.fusion_denominator;
    header["min_samples"] = bundle.min_samples;
    header["min_pairwise_f1"] = bundle.min_pairwise_f1;
    header["records"] = json::array();
    for (const auto& rec : bundle.records) header["records"].push_back(record_to_json(rec, blobs));

    header["fused"] = json::array();
    for (const auto& fused : bundle.fused) {
        json jf;
        jf["image_id"] = fused.image_id;
        jf["gold_diagnosis"] = to_string(fused.gold_diagnosis);
        jf["presence"] = fused.presence;
        jf["fuzzy_maps"] = json::object();
        for (const auto& [name, cm] : fused.fuzzy_maps) {
            jf["fuzzy_maps"][name] = {{"h", cm.h},
                                      {"w", cm.w},
                                      {"denominator", cm.denominator},
                                      {"counts", blobs.add(cm.counts)}};
        }
        header["fused"].push_back(std::move(jf));
    }

    json jp;
    jp["characteristics"] = bundle.prevalence.characteristics;
    jp["rows"] = json::array();
    for (const auto& row : bundle.prevalence.rows) jp["rows"].push_back(row);
    json zero_rows = json::array();
    for (Disease d : bundle.prevalence.zero_evaluation_diseases) zero_rows.push_back(to_string(d));
    jp["zero_evaluation_diseases"] = zero_rows;
    header["prevalence"] = std::move(jp);

    header["blobs"] = blobs.manifest();
    write_container(path, header, blobs.blob());
}

LabelsBundle read_labels_bundle(const std::filesystem::path& path) {
    auto [header, blob] = read_container(path);
    if (header.at("type") != "labels")
        throw SchemaError(path.string() + " is a " + header.at("type").get<std::string>() +
                          " bundle, expected labels");
    BlobReader blobs(std::move(blob), header.at("blobs"));
    LabelsBundle bundle;
    bundle.characteristics = header.at("characteristics").get<std::vector<std::string>>();
    bundle.fusion_denominator = header.at("fusion_denominator").get<std::string>();
    bundle.min_samples = header.at("min_samples").get<int>();
    bundle.min_pairwise_f1 = header.at("min_pairwise_f1").get<double>();
    for (const auto& j : header.at("records")) bundle.records.push_back(record_from_json(j, blobs));
    for (const auto& jf : header.at("fused")) {
        FusedLabels fused;
        fused.image_id = jf.at("image_id").get<std::string>();
        fused.gold_diagnosis = disease_from_name(jf.at("gold_diagnosis").get<std::string>());
        fused.presence = jf.at("presence").get<std::vector<uint8_t>>();
        fused.characteristics = bundle.characteristics;
        for (auto it = jf.at("fuzzy_maps").begin(); it != jf.at("fuzzy_maps").end(); ++it) {
            FusedLabels::CountMap cm;
            cm.h = it.value().at("h").get<int>();
            cm.w = it.value().at("w").get<int>();
            cm.denominator = it.value().at("denominator").get<int>();
            cm.counts = blobs.get(it.value().at("counts").get<size_t>());
            fused.fuzzy_maps.emplace(it.key(), std::move(cm));
        }
        bundle.fused.push_back(std::move(fused));
    }
    const json& jp = header.at("prevalence");
    bundle.prevalence.characteristics = jp.at("characteristics").get<std::vector<std::string>>();
    for (size_t d = 0; d < kNumDiseases; ++d)
        bundle.prevalence.rows[d] = jp.at("rows").at(d).get<std::vector<double>>();
    for (const auto& name : jp.at("zero_evaluation_diseases"))
        bundle.prevalence.zero_evaluation_diseases.push_back(
            disease_from_name(name.get<std::string>()));
    return bundle;
}

}  // namespace dermx
