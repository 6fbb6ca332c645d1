#include <filesystem>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/bundle.hpp"
#include "dermx/checkpoint.hpp"
#include "dermx/explain_eval.hpp"
#include "dermx/manifest.hpp"
#include "dermx/overlays.hpp"
#include "dermx/reports.hpp"
#include "dermx/resample.hpp"
#include "dermx/sha256.hpp"

namespace dermx::cli {

namespace {

struct EvalOptions {
    std::string checkpoint;
    std::string labels;
    std::string report_dir;
    std::string fold_plan;
    int fold = -1;  // -1: evaluate every image in the bundle
    std::string eval_at = "image";
    double tau = 0.05;
    std::string occlusion_source = "model";
    std::string fill = "mean";
    std::string pooling = "per_image";
    double binarize = 0.5;
    int overlay_images = 4;
};

void run(const EvalOptions& opt) {
    if (opt.eval_at != "image" && opt.eval_at != "feature")
        throw ConfigError("--eval-at must be image or feature");
    if (opt.occlusion_source != "model" && opt.occlusion_source != "expert")
        throw ConfigError("--occlusion-source must be model or expert");
    if (opt.fill != "mean" && opt.fill != "black") throw ConfigError("--fill must be mean or black");
    if (opt.pooling != "per_image" && opt.pooling != "pooled")
        throw ConfigError("--pooling must be per_image or pooled");

    std::filesystem::create_directories(opt.report_dir);
    DirLock lock(opt.report_dir);

    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();
    manifest.dataset_hash = sha256_file_hex(opt.labels);
    manifest.config_snapshot = {{"checkpoint", opt.checkpoint},
                                {"eval_at", opt.eval_at},
                                {"tau", std::to_string(opt.tau)},
                                {"occlusion_source", opt.occlusion_source},
                                {"fill", opt.fill},
                                {"pooling", opt.pooling},
                                {"binarize", std::to_string(opt.binarize)}};

    auto model = load_checkpoint(opt.checkpoint);
    LabelsBundle labels = read_labels_bundle(opt.labels);

    std::vector<std::string> keep;
    const std::vector<std::string>* restrict_to = nullptr;
    if (!opt.fold_plan.empty()) {
        FoldPlan plan = load_fold_plan(opt.fold_plan);
        manifest.fold_plan_hash = sha256_file_hex(opt.fold_plan);
        if (opt.fold < 0 || opt.fold >= plan.k) throw ConfigError("--fold out of range");
        for (const auto& rec : labels.records)
            if (plan.fold_of(rec.image_id) == opt.fold) keep.push_back(rec.image_id);
        restrict_to = &keep;
    }
    TrainSet set = build_train_set(labels.records, labels.fused, model->config(), restrict_to);
    set.characteristic_names = labels.characteristics;
    if (set.samples.empty()) throw SchemaError("evaluation set is empty");

    const std::filesystem::path dir(opt.report_dir);
    EvalOutputs outputs = evaluate_outputs(*model, set);

    atomic_write(dir / "diagnosis.csv",
                 csv_diagnosis(diagnosis_report({outputs}), to_string(model->kind())));

    const bool has_chars = model->kind() != ModelKind::kDxOnly;
    if (has_chars) {
        atomic_write(dir / "identification.csv",
                     csv_identification(identification_report({outputs}, labels.characteristics)));
        const EvalResolution res =
            opt.eval_at == "image" ? EvalResolution::kImage : EvalResolution::kFeature;
        const LocalizationPooling pooling = opt.pooling == "per_image"
                                                ? LocalizationPooling::kPerImage
                                                : LocalizationPooling::kPooled;
        atomic_write(dir / "localization_agreed.csv",
                     csv_localization(localization_report(*model, {&set},
                                                          LocalizationMode::kAgreedOnly, res, 0.5,
                                                          pooling)));
        atomic_write(dir / "localization_all.csv",
                     csv_localization(localization_report(*model, {&set},
                                                          LocalizationMode::kAllLabeled, res, 0.5,
                                                          pooling)));
        atomic_write(dir / "precision.csv",
                     csv_precision(explanation_precision(outputs, labels.prevalence,
                                                         labels.characteristics, opt.tau)));
        const OcclusionSource source = opt.occlusion_source == "model" ? OcclusionSource::kModel
                                                                       : OcclusionSource::kExpert;
        const OcclusionFill fill =
            opt.fill == "mean" ? OcclusionFill::kDatasetMean : OcclusionFill::kBlack;
        atomic_write(dir / "faithfulness.csv",
                     csv_faithfulness(faithfulness_report(*model, set, source, fill, opt.binarize)));

        // side-by-side composites for the first images
        if (opt.overlay_images > 0) {
            std::filesystem::create_directories(dir / "overlays");
            const size_t limit = std::min<size_t>(set.samples.size(),
                                                  static_cast<size_t>(opt.overlay_images));
            for (size_t i = 0; i < limit; ++i) {
                const TrainSample& s = set.samples[i];
                auto maps = grad_cam_all(*model, s.image, GradCamHead::kCharacteristic);
                for (size_t c = 0; c < labels.characteristics.size(); ++c) {
                    if (!s.z[c] || !s.has_mask[c]) continue;
                    Grid up = resize_bilinear(maps[c].values, s.image.height(), s.image.width());
                    for (auto& v : up.values()) v = std::clamp(v, 0.0, 1.0);
                    render_overlays(s.image, s.image_masks[c], up,
                                    dir / "overlays" /
                                        (s.image_id + "_" + labels.characteristics[c] + ".png"));
                }
            }
        }
    }

    manifest.finished_at = utc_timestamp();
    write_manifest(dir, manifest);
    std::cout << "evaluated " << set.samples.size() << " images into " << opt.report_dir << "\n";
}

}  // namespace

void setup_eval(CLI::App& app) {
    auto opt = std::make_shared<EvalOptions>();
    CLI::App* cmd = app.add_subcommand("eval", "Full explainability evaluation of a checkpoint");
    cmd->add_option("--checkpoint", opt->checkpoint, "Model checkpoint")->required();
    cmd->add_option("--labels", opt->labels, "Labels bundle")->required();
    cmd->add_option("--report-dir", opt->report_dir, "Output directory")->required();
    cmd->add_option("--fold-plan", opt->fold_plan, "Fold plan JSON (with --fold)");
    cmd->add_option("--fold", opt->fold, "Evaluate only this fold's test images");
    cmd->add_option("--eval-at", opt->eval_at, "Localization resolution: image|feature");
    cmd->add_option("--tau", opt->tau, "Expected-explanation prevalence threshold");
    cmd->add_option("--occlusion-source", opt->occlusion_source, "Faithfulness outlines: model|expert");
    cmd->add_option("--fill", opt->fill, "Occlusion fill: mean|black");
    cmd->add_option("--pooling", opt->pooling, "Localization averaging: per_image|pooled");
    cmd->add_option("--binarize", opt->binarize, "Grad-CAM binarization threshold (x per-map max)");
    cmd->add_option("--overlay-images", opt->overlay_images, "Images to render overlays for");
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
