#include <filesystem>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/bundle.hpp"
#include "dermx/checkpoint.hpp"
#include "dermx/explain_eval.hpp"
#include "dermx/manifest.hpp"
#include "dermx/reports.hpp"
#include "dermx/sha256.hpp"

namespace dermx::cli {

namespace {

struct FaithfulnessOptions {
    std::string checkpoint;
    std::string labels;
    std::string out;
    std::string occlusion_source = "model";
    std::string fill = "mean";
    double binarize = 0.5;
};

void run(const FaithfulnessOptions& opt) {
    if (opt.occlusion_source != "model" && opt.occlusion_source != "expert")
        throw ConfigError("--occlusion-source must be model or expert");
    if (opt.fill != "mean" && opt.fill != "black") throw ConfigError("--fill must be mean or black");

    std::filesystem::create_directories(opt.out);
    DirLock lock(opt.out);

    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();
    manifest.dataset_hash = sha256_file_hex(opt.labels);
    manifest.config_snapshot = {{"checkpoint", opt.checkpoint},
                                {"occlusion_source", opt.occlusion_source},
                                {"fill", opt.fill}};

    auto model = load_checkpoint(opt.checkpoint);
    if (model->kind() == ModelKind::kDxOnly)
        throw SchemaError("faithfulness needs characteristic explanations; got a Dx-only model");
    LabelsBundle labels = read_labels_bundle(opt.labels);
    TrainSet set = build_train_set(labels.records, labels.fused, model->config());
    set.characteristic_names = labels.characteristics;

    const OcclusionSource source = opt.occlusion_source == "model" ? OcclusionSource::kModel
                                                                   : OcclusionSource::kExpert;
    const OcclusionFill fill = opt.fill == "mean" ? OcclusionFill::kDatasetMean
                                                  : OcclusionFill::kBlack;
    FaithfulnessReport report = faithfulness_report(*model, set, source, fill, opt.binarize);
    atomic_write(std::filesystem::path(opt.out) / "faithfulness.csv", csv_faithfulness(report));

    manifest.finished_at = utc_timestamp();
    write_manifest(opt.out, manifest);
    std::cout << "faithfulness F " << format_metric(report.f.mean) << " +/- "
              << format_metric(report.f.std) << " over " << report.records.size() << " images\n";
}

}  // namespace

void setup_faithfulness(CLI::App& app) {
    auto opt = std::make_shared<FaithfulnessOptions>();
    CLI::App* cmd = app.add_subcommand("faithfulness", "Contrastive-occlusion faithfulness only");
    cmd->add_option("--checkpoint", opt->checkpoint, "Model checkpoint")->required();
    cmd->add_option("--labels", opt->labels, "Labels bundle")->required();
    cmd->add_option("--out", opt->out, "Output directory")->required();
    cmd->add_option("--occlusion-source", opt->occlusion_source, "model|expert");
    cmd->add_option("--fill", opt->fill, "mean|black");
    cmd->add_option("--binarize", opt->binarize, "Grad-CAM binarization threshold (x per-map max)");
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
