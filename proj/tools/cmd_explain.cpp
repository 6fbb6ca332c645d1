#include <filesystem>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/bundle.hpp"
#include "dermx/checkpoint.hpp"
#include "dermx/explain_eval.hpp"
#include "dermx/manifest.hpp"
#include "dermx/overlays.hpp"
#include "dermx/resample.hpp"
#include "dermx/sha256.hpp"

namespace dermx::cli {

namespace {

struct ExplainOptions {
    std::string checkpoint;
    std::string labels;
    std::string out;
    std::vector<std::string> image_ids;  // empty: all
};

void run(const ExplainOptions& opt) {
    std::filesystem::create_directories(opt.out);
    DirLock lock(opt.out);

    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();
    manifest.dataset_hash = sha256_file_hex(opt.labels);
    manifest.config_snapshot = {{"checkpoint", opt.checkpoint}};

    auto model = load_checkpoint(opt.checkpoint);
    if (model->kind() == ModelKind::kDxOnly)
        throw SchemaError("the Dx-only model has no characteristic explanations to render");
    LabelsBundle labels = read_labels_bundle(opt.labels);
    const std::vector<std::string>* restrict_to = opt.image_ids.empty() ? nullptr : &opt.image_ids;
    TrainSet set = build_train_set(labels.records, labels.fused, model->config(), restrict_to);
    set.characteristic_names = labels.characteristics;
    if (set.samples.empty()) throw SchemaError("no matching images to explain");

    const std::filesystem::path dir(opt.out);
    int rendered = 0;
    for (const auto& s : set.samples) {
        auto maps = grad_cam_all(*model, s.image, GradCamHead::kCharacteristic);
        for (size_t c = 0; c < labels.characteristics.size(); ++c) {
            if (!s.z[c] || !s.has_mask[c]) continue;
            Grid up = resize_bilinear(maps[c].values, s.image.height(), s.image.width());
            for (auto& v : up.values()) v = std::clamp(v, 0.0, 1.0);
            render_overlays(s.image, s.image_masks[c], up,
                            dir / (s.image_id + "_" + labels.characteristics[c] + ".png"));
            ++rendered;
        }
    }
    manifest.finished_at = utc_timestamp();
    write_manifest(dir, manifest);
    std::cout << "rendered " << rendered << " overlay composites into " << opt.out << "\n";
}

}  // namespace

void setup_explain(CLI::App& app) {
    auto opt = std::make_shared<ExplainOptions>();
    CLI::App* cmd = app.add_subcommand("explain", "Render expert-vs-model attention overlays");
    cmd->add_option("--checkpoint", opt->checkpoint, "Model checkpoint")->required();
    cmd->add_option("--labels", opt->labels, "Labels bundle")->required();
    cmd->add_option("--out", opt->out, "Output directory")->required();
    cmd->add_option("--image-id", opt->image_ids, "Restrict to specific image ids");
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
