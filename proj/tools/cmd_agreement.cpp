#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/agreement.hpp"
#include "dermx/bundle.hpp"
#include "dermx/manifest.hpp"
#include "dermx/reports.hpp"
#include "dermx/sha256.hpp"

namespace dermx::cli {

namespace {

struct AgreementOptions {
    std::string dataset;
    std::string out;  // prefix: writes <out>.json and <out>_*.csv
};

void run(const AgreementOptions& opt) {
    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();
    manifest.dataset_hash = sha256_file_hex(opt.dataset);

    DatasetBundle dataset = read_dataset_bundle(opt.dataset);
    AgreementReport report = analyze_agreement(dataset.records);

    atomic_write(opt.out + ".json", json_agreement(report));
    atomic_write(opt.out + "_diagnosis.csv", csv_agreement_diagnosis(report.diagnosis));
    atomic_write(opt.out + "_binary.csv", csv_agreement_binary(report.characteristic_binary));
    atomic_write(opt.out + "_localization.csv",
                 csv_agreement_localization(report.characteristic_localization));
    manifest.finished_at = utc_timestamp();
    atomic_write(opt.out + ".manifest.json", manifest_json(manifest));

    std::cout << "diagnosis overall F1 " << format_metric(report.diagnosis.overall_f1.mean)
              << " +/- " << format_metric(report.diagnosis.overall_f1.std) << " over "
              << report.diagnosis.rows.size() << " diseases\n";
    for (const auto& rater : report.diagnosis.skipped_raters)
        std::cout << "warning: rater " << rater << " has no evaluations\n";
}

}  // namespace

void setup_agreement(CLI::App& app) {
    auto opt = std::make_shared<AgreementOptions>();
    CLI::App* cmd = app.add_subcommand("agreement", "Inter-rater agreement analytics");
    cmd->add_option("--dataset", opt->dataset, "Dataset bundle")->required();
    cmd->add_option("--out", opt->out, "Report prefix (<out>.json, <out>_*.csv)")->required();
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
