#include "dermx/checkpoint.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>

#include "dermx/bundle.hpp"
#include "dermx/errors.hpp"

namespace dermx {

namespace {

constexpr char kMagic[] = "DXCKPT\n\0";
constexpr uint32_t kVersion = 1;

using nlohmann::json;

json config_to_json(const DermXConfig& c) {
    return json{{"backbone", c.backbone},
                {"pretrained", c.pretrained},
                {"input_h", c.input_h},
                {"input_w", c.input_w},
                {"num_diseases", c.num_diseases},
                {"num_characteristics", c.num_characteristics},
                {"dense_width", c.dense_width},
                {"dropout", c.dropout},
                {"lambda_d", c.lambda_d},
                {"lambda_c", c.lambda_c},
                {"lambda_a", c.lambda_a},
                {"attention_full_second_order", c.attention_full_second_order},
                {"init_seed", c.init_seed}};
}

DermXConfig config_from_json(const json& j) {
    DermXConfig c;
    c.backbone = j.at("backbone").get<std::string>();
    c.pretrained = j.at("pretrained").get<bool>();
    c.input_h = j.at("input_h").get<int>();
    c.input_w = j.at("input_w").get<int>();
    c.num_diseases = j.at("num_diseases").get<int>();
    c.num_characteristics = j.at("num_characteristics").get<int>();
    c.dense_width = j.at("dense_width").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.lambda_d = j.at("lambda_d").get<double>();
    c.lambda_c = j.at("lambda_c").get<double>();
    c.lambda_a = j.at("lambda_a").get<double>();
    c.attention_full_second_order = j.at("attention_full_second_order").get<bool>();
    c.init_seed = j.at("init_seed").get<uint64_t>();
    return c;
}

struct RawCheckpoint {
    json header;
    std::vector<double> data;
};

RawCheckpoint read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw SchemaError("not a dermx checkpoint: " + path.string());
    uint32_t version;
    std::memcpy(&version, bytes.data() + 8, 4);
    if (version != kVersion)
        throw SchemaError("unsupported checkpoint version " + std::to_string(version));
    uint64_t header_len;
    std::memcpy(&header_len, bytes.data() + 12, 8);
    if (20 + header_len > bytes.size()) throw SchemaError("checkpoint header truncated");
    RawCheckpoint raw;
    try {
        raw.header = json::parse(bytes.substr(20, header_len));
    } catch (const json::exception& e) {
        throw SchemaError("checkpoint header is not valid JSON: " + std::string(e.what()));
    }
    const size_t payload = bytes.size() - 20 - header_len;
    if (payload % sizeof(double) != 0) throw SchemaError("checkpoint payload misaligned");
    raw.data.resize(payload / sizeof(double));
    std::memcpy(raw.data.data(), bytes.data() + 20 + header_len, payload);
    return raw;
}

void apply_tensors(DermXModel& model, const RawCheckpoint& raw, bool backbone_only) {
    std::map<std::string, std::pair<size_t, size_t>> directory;  // name -> (offset, numel)
    for (const auto& t : raw.header.at("tensors"))
        directory[t.at("name").get<std::string>()] = {t.at("offset").get<size_t>(),
                                                      t.at("numel").get<size_t>()};
    auto copy_into = [&](const std::string& name, std::vector<double>& dst) {
        auto it = directory.find(name);
        if (it == directory.end()) throw SchemaError("checkpoint is missing tensor '" + name + "'");
        const auto& [offset, numel] = it->second;
        if (numel != dst.size())
            throw SchemaError("checkpoint tensor '" + name + "' has " + std::to_string(numel) +
                              " values, model expects " + std::to_string(dst.size()));
        if (offset + numel > raw.data.size()) throw SchemaError("checkpoint data truncated");
        std::copy(raw.data.begin() + static_cast<long>(offset),
                  raw.data.begin() + static_cast<long>(offset + numel), dst.begin());
    };
    for (auto& p : model.parameters()) {
        if (backbone_only && p.name.rfind("backbone.", 0) != 0) continue;
        copy_into(p.name, p.tensor.leaf_data());
    }
    for (auto& [name, buf] : model.buffers()) {
        if (backbone_only && name.rfind("backbone.", 0) != 0) continue;
        copy_into(name, *buf);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, DermXModel& model) {
    json header;
    header["version"] = kVersion;
    header["kind"] = to_string(model.kind());
    header["config"] = config_to_json(model.config());
    header["disease_names"] = model.disease_names;
    header["characteristic_names"] = model.characteristic_names;
    header["tensors"] = json::array();

    std::vector<double> data;
    auto append = [&](const std::string& name, const std::vector<double>& values) {
        header["tensors"].push_back(
            {{"name", name}, {"offset", data.size()}, {"numel", values.size()}});
        data.insert(data.end(), values.begin(), values.end());
    };
    for (auto& p : model.parameters()) append(p.name, p.tensor.data());
    for (auto& [name, buf] : model.buffers()) append(name, *buf);

    std::string bytes;
    bytes.append(kMagic, 8);
    uint32_t version = kVersion;
    bytes.append(reinterpret_cast<const char*>(&version), 4);
    const std::string header_str = header.dump();
    uint64_t header_len = header_str.size();
    bytes.append(reinterpret_cast<const char*>(&header_len), 8);
    bytes.append(header_str);
    bytes.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
    atomic_write(path, bytes);
}

std::unique_ptr<DermXModel> load_checkpoint(const std::filesystem::path& path) {
    RawCheckpoint raw = read_raw(path);
    const DermXConfig config = config_from_json(raw.header.at("config"));
    const ModelKind kind = model_kind_from_name(raw.header.at("kind").get<std::string>());
    auto model = std::make_unique<DermXModel>(kind, config);
    model->disease_names = raw.header.at("disease_names").get<std::vector<std::string>>();
    model->characteristic_names =
        raw.header.at("characteristic_names").get<std::vector<std::string>>();
    apply_tensors(*model, raw, /*backbone_only=*/false);
    return model;
}

void load_pretrained_backbone(DermXModel& model) {
    const char* cache = std::getenv("DERMXKIT_CACHE");
    if (!cache || !*cache)
        throw ConfigError("pretrained=true requires DERMXKIT_CACHE to point at a weight cache");
    const std::filesystem::path path =
        std::filesystem::path(cache) / (model.config().backbone + ".ckpt");
    if (!std::filesystem::exists(path))
        throw IoError("pretrained backbone weights not found: " + path.string());
    apply_tensors(model, read_raw(path), /*backbone_only=*/true);
}

}  // namespace dermx
