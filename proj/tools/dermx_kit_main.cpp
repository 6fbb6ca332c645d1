#include <iostream>

#include "commands.hpp"
#include "dermx/errors.hpp"

namespace {

std::string g_command_line;

}  // namespace

namespace dermx::cli {

void remember_argv(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) {
        if (i) g_command_line += ' ';
        g_command_line += argv[i];
    }
}

const std::string& command_line() { return g_command_line; }

}  // namespace dermx::cli

int main(int argc, char** argv) {
    using namespace dermx;
    cli::remember_argv(argc, argv);

    CLI::App app{"DermX/DermX+ explainable dermatology toolkit"};
    app.set_version_flag("--version", cli::kToolVersion);
    app.require_subcommand(1);

    cli::setup_ingest(app);
    cli::setup_fuse(app);
    cli::setup_agreement(app);
    cli::setup_train(app);
    cli::setup_eval(app);
    cli::setup_explain(app);
    cli::setup_faithfulness(app);
    cli::setup_report(app);

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: category=usage " << e.what() << "\n";
        std::cerr << app.help() << std::flush;
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: category=config " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: category=io " << e.what() << "\n";
        return 4;
    } catch (const SchemaError& e) {
        std::cerr << "error: category=schema " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: category=internal " << e.what() << "\n";
        return 1;
    }
}
