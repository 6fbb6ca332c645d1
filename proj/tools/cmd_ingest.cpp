#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermx/bundle.hpp"
#include "dermx/ingest.hpp"
#include "dermx/manifest.hpp"
#include "dermx/reports.hpp"
#include "dermx/sha256.hpp"

namespace dermx::cli {

namespace {

struct IngestOptions {
    std::string annotations;
    std::string images_root;
    std::string out;
};

void run(const IngestOptions& opt) {
    RunManifest manifest;
    manifest.command_line = command_line();
    manifest.tool_version = kToolVersion;
    manifest.started_at = utc_timestamp();

    RawAnnotationFile raw = parse_annotations(opt.annotations, opt.images_root);
    CleanResult cleaned = clean_dataset(raw);
    write_dataset_bundle(opt.out, cleaned.records, cleaned.log);

    const DatasetStats stats = dataset_stats(cleaned.records);
    atomic_write(opt.out + ".stats.csv", csv_dataset_stats(stats));
    atomic_write(opt.out + ".cleaning.csv", csv_cleaning_log(cleaned.log));

    manifest.dataset_hash = sha256_file_hex(opt.out);
    manifest.config_snapshot = {{"annotations", opt.annotations},
                                {"images_root", opt.images_root}};
    manifest.finished_at = utc_timestamp();
    // single-file output: the manifest rides next to the bundle
    atomic_write(opt.out + ".manifest.json", manifest_json(manifest));

    std::cout << "ingested " << cleaned.log.retained_images << " images, "
              << cleaned.log.retained_evaluations << " evaluations (raw " << cleaned.log.raw_images
              << ", all-other " << cleaned.log.all_other_dropped << ", duplicate-patient "
              << cleaned.log.duplicate_patient_dropped << ", low-quality evaluations "
              << cleaned.log.low_quality_evaluations_dropped << ")\n";
    std::cout << csv_dataset_stats(stats);
}

}  // namespace

void setup_ingest(CLI::App& app) {
    auto opt = std::make_shared<IngestOptions>();
    CLI::App* cmd = app.add_subcommand("ingest", "Parse and clean a raw annotation export");
    cmd->add_option("--annotations", opt->annotations, "Annotation index JSON")->required();
    cmd->add_option("--images-root", opt->images_root, "Directory with photos and masks")->required();
    cmd->add_option("--out", opt->out, "Output dataset bundle")->required();
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
