#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <json.hpp>

#include "commands.hpp"
#include "dermx/bundle.hpp"
#include "dermx/errors.hpp"
#include "dermx/reports.hpp"

namespace dermx::cli {

namespace {

struct ReportOptions {
    std::string runs;
    std::string agreement;  // optional agreement json for the Expert column
    std::string out = "comparison.csv";
};

ComparisonColumn expert_column(const std::filesystem::path& agreement_json) {
    std::ifstream in(agreement_json);
    if (!in) throw IoError("cannot open agreement report " + agreement_json.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("agreement report is not valid JSON: " + std::string(e.what()));
    }
    ComparisonColumn col;
    col.label = "expert";
    col.per_disease_f1.assign(kNumDiseases, std::nullopt);
    col.per_disease_std.assign(kNumDiseases, std::nullopt);
    for (const auto& row : j.at("diagnosis")) {
        const Disease d = disease_from_name(row.at("disease").get<std::string>());
        const auto& f1 = row.at("f1");
        if (!f1.at("mean").is_null())
            col.per_disease_f1[static_cast<size_t>(d)] = f1.at("mean").get<double>();
        if (!f1.at("std").is_null())
            col.per_disease_std[static_cast<size_t>(d)] = f1.at("std").get<double>();
    }
    const auto& overall = j.at("diagnosis_overall_f1");
    if (!overall.at("mean").is_null()) col.mean_f1 = overall.at("mean").get<double>();
    if (!overall.at("std").is_null()) col.mean_std = overall.at("std").get<double>();
    return col;
}

void run(const ReportOptions& opt) {
    std::vector<ComparisonColumn> columns;
    if (!std::filesystem::is_directory(opt.runs))
        throw IoError("runs directory not found: " + opt.runs);

    std::vector<std::filesystem::path> run_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(opt.runs))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "diagnosis.csv"))
            run_dirs.push_back(entry.path());
    std::sort(run_dirs.begin(), run_dirs.end());

    for (const auto& dir : run_dirs) {
        std::ifstream in(dir / "diagnosis.csv");
        std::string csv((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        columns.push_back(parse_diagnosis_csv(csv));
    }
    if (!opt.agreement.empty()) columns.push_back(expert_column(opt.agreement));
    if (columns.empty())
        throw SchemaError("no diagnosis.csv found under " + opt.runs + " and no --agreement given");

    // fixed presentation order: dx, dermx, dermx+, then anything else, expert last
    const auto rank = [](const std::string& label) {
        if (label == "dx") return 0;
        if (label == "dermx") return 1;
        if (label == "dermx+") return 2;
        if (label == "expert") return 9;
        return 5;
    };
    std::stable_sort(columns.begin(), columns.end(),
                     [&](const ComparisonColumn& a, const ComparisonColumn& b) {
                         return rank(a.label) < rank(b.label);
                     });

    const std::string csv = csv_comparison(columns);
    atomic_write(opt.out, csv);
    std::cout << csv;
}

}  // namespace

void setup_report(CLI::App& app) {
    auto opt = std::make_shared<ReportOptions>();
    CLI::App* cmd = app.add_subcommand("report", "Consolidated model/expert comparison table");
    cmd->add_option("--runs", opt->runs, "Directory of evaluation run directories")->required();
    cmd->add_option("--agreement", opt->agreement, "Agreement report JSON for the expert column");
    cmd->add_option("--out", opt->out, "Output CSV path");
    cmd->callback([opt] { run(*opt); });
}

}  // namespace dermx::cli
