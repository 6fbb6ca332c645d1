#ifndef DERMX_TOOLS_COMMANDS_HPP
#define DERMX_TOOLS_COMMANDS_HPP

#include <CLI11.hpp>

#include <string>

namespace dermx::cli {

inline constexpr const char* kToolVersion = "dermx-kit 0.1.0";

void setup_ingest(CLI::App& app);
void setup_fuse(CLI::App& app);
void setup_agreement(CLI::App& app);
void setup_train(CLI::App& app);
void setup_eval(CLI::App& app);
void setup_explain(CLI::App& app);
void setup_faithfulness(CLI::App& app);
void setup_report(CLI::App& app);

// full command line snapshot for manifests
void remember_argv(int argc, char** argv);
const std::string& command_line();

}  // namespace dermx::cli

#endif  // DERMX_TOOLS_COMMANDS_HPP
