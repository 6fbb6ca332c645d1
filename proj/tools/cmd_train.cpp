#include <filesystem>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/baselines.hpp"
#include "dermx/bundle.hpp"
#include "dermx/checkpoint.hpp"
#include "dermx/manifest.hpp"
#include "dermx/reports.hpp"
#include "dermx/sha256.hpp"
#include "dermx/train.hpp"

namespace dermx::cli {

namespace {

struct TrainOptions {
    std::string labels;
    std::string fold_plan;
    std::string model = "dermx";
    std::string config;
    std::string out;
    int fold = 0;
    uint64_t seed = 0;
    bool baselines = false;
};

DermXConfig model_config_from(KeyValueConfig& cfg, const std::string& kind,
                              const std::vector<std::string>& characteristics, uint64_t root_seed) {
    DermXConfig mc;
    mc.backbone = cfg.get_string("model.backbone", mc.backbone);
    mc.pretrained = cfg.get_bool("model.pretrained", mc.pretrained);
    mc.input_h = cfg.get_int("model.input_h", mc.input_h);
    mc.input_w = cfg.get_int("model.input_w", mc.input_w);
    mc.num_diseases = kNumDiseases;
    mc.num_characteristics = static_cast<int>(characteristics.size());
    mc.dense_width = cfg.get_int("model.dense_width", mc.dense_width);
    mc.dropout = cfg.get_double("model.dropout", mc.dropout);
    mc.lambda_d = cfg.get_double("model.lambda_d", 1.0);
    mc.lambda_c = cfg.get_double("model.lambda_c", 1.0);
    mc.lambda_a = cfg.get_double("model.lambda_a", kind == "dermx+" ? 10.0 : 0.0);
    mc.attention_full_second_order =
        cfg.get_bool("model.attention_full_second_order", mc.attention_full_second_order);
    // all randomness descends from the manifest's root seed unless overridden
    mc.init_seed = static_cast<uint64_t>(
        cfg.get_int("model.init_seed", static_cast<int>(root_seed) + 17));
    return mc;
}

void run(const TrainOptions& opt) {
    const ModelKind kind = model_kind_from_name(opt.model);

    KeyValueConfig cfg = opt.config.empty() ? KeyValueConfig::parse_string("")
                                            : KeyValueConfig::parse_file(opt.config);
    TrainConfig tc = TrainConfig::from_config(cfg);
    if (opt.seed != 0) tc.seed = opt.seed;

    LabelsBundle labels = read_labels_bundle(opt.labels);
    DermXConfig mc = model_config_from(cfg, opt.model, labels.characteristics, tc.seed);
    cfg.finish();  // any unconsumed key is a config error

    // the fold plan file is created on first use, then reused byte-identically
    FoldPlan plan;
    if (std::filesystem::exists(opt.fold_plan)) {
        plan = load_fold_plan(opt.fold_plan);
    } else {
        plan = make_folds(labels.records, 10, tc.seed);
        save_fold_plan(opt.fold_plan, plan);
        std::cout << "wrote new fold plan to " << opt.fold_plan << "\n";
    }
    if (opt.fold < 0 || opt.fold >= plan.k) throw ConfigError("--fold out of range");

    std::filesystem::create_directories(opt.out);
    DirLock lock(opt.out);

    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();
    manifest.dataset_hash = sha256_file_hex(opt.labels);
    manifest.fold_plan_hash = sha256_file_hex(opt.fold_plan);
    manifest.seed = tc.seed;
    for (const auto& [k, v] : cfg.entries()) manifest.config_snapshot[k] = v;
    manifest.config_snapshot["model"] = opt.model;
    manifest.config_snapshot["fold"] = std::to_string(opt.fold);

    std::vector<std::string> train_ids, test_ids;
    for (const auto& rec : labels.records)
        (plan.fold_of(rec.image_id) == opt.fold ? test_ids : train_ids).push_back(rec.image_id);
    const FuzzyScaleMode scale_mode =
        tc.fuzzy_scale == "area" ? FuzzyScaleMode::kArea : FuzzyScaleMode::kBilinear;
    TrainSet train_set = build_train_set(labels.records, labels.fused, mc, &train_ids, scale_mode);
    TrainSet test_set = build_train_set(labels.records, labels.fused, mc, &test_ids, scale_mode);
    train_set.characteristic_names = labels.characteristics;
    test_set.characteristic_names = labels.characteristics;

    DermXModel model(kind, mc);
    model.disease_names.assign(disease_names().begin(), disease_names().begin() + kNumDiseases);
    model.characteristic_names = labels.characteristics;
    if (mc.pretrained) load_pretrained_backbone(model);

    const std::filesystem::path out_dir(opt.out);
    EpochCallback on_epoch;
    if (tc.checkpoint_every > 0) {
        on_epoch = [&](int epoch, const DermXModel&) {
            if ((epoch + 1) % tc.checkpoint_every == 0 && epoch + 1 < tc.epochs) {
                char name[64];
                std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.ckpt", epoch + 1);
                save_checkpoint(out_dir / name, model);
            }
        };
    }

    TrainHistory history = train_model(model, train_set, &test_set, tc, on_epoch);

    save_checkpoint(out_dir / "checkpoint.ckpt", model);
    atomic_write(out_dir / "history.csv", csv_history(history));

    if (opt.baselines) {
        BaselineReport baselines = train_interpretable_baselines(labels.fused, plan);
        atomic_write(out_dir / "baselines.csv", csv_baselines(baselines));
    }

    manifest.finished_at = utc_timestamp();
    write_manifest(out_dir, manifest);

    const auto& last = history.epochs.back();
    std::cout << "trained " << opt.model << " for " << history.epochs.size() << " epochs; final L_D "
              << last.loss_diagnosis;
    if (last.loss_characteristics) std::cout << ", L_C " << *last.loss_characteristics;
    if (last.loss_attention) std::cout << ", L_A " << *last.loss_attention;
    if (last.val_macro_f1) std::cout << ", val macro-F1 " << *last.val_macro_f1;
    std::cout << "\n";
}

}  // namespace

void setup_train(CLI::App& app) {
    auto opt = std::make_shared<TrainOptions>();
    CLI::App* cmd = app.add_subcommand("train", "Train dx, dermx, or dermx+ on one fold");
    cmd->add_option("--labels", opt->labels, "Labels bundle")->required();
    cmd->add_option("--fold-plan", opt->fold_plan, "Fold plan JSON (created if missing)")->required();
    cmd->add_option("--model", opt->model, "dx | dermx | dermx+")->required();
    cmd->add_option("--config", opt->config, "Training config file (key = value)");
    cmd->add_option("--out", opt->out, "Run output directory")->required();
    cmd->add_option("--fold", opt->fold, "Test fold index (default 0)");
    cmd->add_option("--seed", opt->seed, "Override the config seed");
    cmd->add_flag("--baselines", opt->baselines, "Also fit the interpretable baselines");
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
