#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/bundle.hpp"
#include "dermx/fusion.hpp"
#include "dermx/manifest.hpp"
#include "dermx/reports.hpp"
#include "dermx/sha256.hpp"

namespace dermx::cli {

namespace {

struct FuseOptions {
    std::string dataset;
    std::string out;
    int min_samples = 30;
    double min_f1 = 0.30;
    std::string denominator = "correct";
};

void run(const FuseOptions& opt) {
    if (opt.denominator != "correct" && opt.denominator != "all")
        throw ConfigError("--denominator must be correct or all");

    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();
    manifest.dataset_hash = sha256_file_hex(opt.dataset);

    DatasetBundle dataset = read_dataset_bundle(opt.dataset);
    LabelsBundle labels;
    labels.records = std::move(dataset.records);
    labels.characteristics = select_characteristics(labels.records, opt.min_samples, opt.min_f1);
    if (labels.characteristics.empty())
        throw SchemaError("no characteristic survives the selection thresholds");
    labels.min_samples = opt.min_samples;
    labels.min_pairwise_f1 = opt.min_f1;
    labels.fusion_denominator = opt.denominator;

    FusionOptions fusion;
    fusion.denominator = opt.denominator == "correct" ? FusionDenominator::kCorrect
                                                      : FusionDenominator::kAll;
    for (const auto& rec : labels.records)
        labels.fused.push_back(fuse_labels(rec, labels.characteristics, fusion));
    labels.prevalence = prevalence_table(labels.records, labels.fused);

    write_labels_bundle(opt.out, labels);
    atomic_write(opt.out + ".sample_counts.csv",
                 csv_sample_counts(characteristic_sample_counts(labels.records)));
    atomic_write(opt.out + ".prevalence.csv", csv_prevalence(labels.prevalence));

    manifest.config_snapshot = {{"min_samples", std::to_string(opt.min_samples)},
                                {"min_f1", std::to_string(opt.min_f1)},
                                {"denominator", opt.denominator}};
    manifest.finished_at = utc_timestamp();
    atomic_write(opt.out + ".manifest.json", manifest_json(manifest));

    std::cout << "retained " << labels.characteristics.size() << " characteristics:";
    for (const auto& name : labels.characteristics) std::cout << " " << name;
    std::cout << "\n";
    for (const auto& d : labels.prevalence.zero_evaluation_diseases)
        std::cout << "warning: no correct-diagnosis evaluations for " << to_string(d)
                  << "; prevalence row is zero\n";
}

}  // namespace

void setup_fuse(CLI::App& app) {
    auto opt = std::make_shared<FuseOptions>();
    CLI::App* cmd = app.add_subcommand("fuse", "Build fused training targets from a dataset bundle");
    cmd->add_option("--dataset", opt->dataset, "Dataset bundle")->required();
    cmd->add_option("--out", opt->out, "Output labels bundle")->required();
    cmd->add_option("--min-samples", opt->min_samples, "Minimum dataset-wide sample count");
    cmd->add_option("--min-f1", opt->min_f1, "Minimum mean pairwise inter-rater F1");
    cmd->add_option("--denominator", opt->denominator, "Fuzzy denominator: correct|all");
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
