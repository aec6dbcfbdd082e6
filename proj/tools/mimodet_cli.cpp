#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mimodet/mimodet.h"

namespace {

void print_line(const char* line, void*) {
    std::fputs(line, stdout);
    std::fputc('\n', stdout);
    std::fflush(stdout);
}

int fail(mimodet_status status) {
    std::fprintf(stderr, "mimodet: %s: %s\n", mimodet_status_name(status), mimodet_last_error());
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIMO detection experiments"};
    app.set_version_flag("--version", std::string(mimodet_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::string output_root;
    bool force = false;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_flag("--force", force, "Overwrite results of an earlier run with the same experiment id");
    run->add_option("--output-root", output_root, "Output root (overrides MIMODET_OUTPUT_ROOT and output_dir)");

    std::string checkpoint;
    auto* describe = app.add_subcommand("describe", "Print the metadata of a checkpoint");
    describe->add_option("checkpoint", checkpoint, "Checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    if (*run) {
        const mimodet_status st = mimodet_run_config(config_path.c_str(), force ? 1 : 0,
                                                     output_root.empty() ? nullptr : output_root.c_str(), print_line,
                                                     nullptr);
        return st == MIMODET_OK ? 0 : fail(st);
    }

    size_t needed = 0;
    mimodet_status st = mimodet_describe_checkpoint(checkpoint.c_str(), nullptr, 0, &needed);
    if (st != MIMODET_ERR_BUFFER) return fail(st);
    std::vector<char> buf(needed);
    st = mimodet_describe_checkpoint(checkpoint.c_str(), buf.data(), buf.size(), &needed);
    if (st != MIMODET_OK) return fail(st);
    std::fputs(buf.data(), stdout);
    return 0;
}
