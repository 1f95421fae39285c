#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "cajscc/cajscc.h"

namespace {

void print_line(const char* message, void*) {
    std::FILE* stream = std::string_view(message).starts_with("error:") ? stderr : stdout;
    std::fprintf(stream, "%s\n", message);
}

struct ConfigHandle {
    cajscc_config* ptr = nullptr;
    ~ConfigHandle() { cajscc_config_free(ptr); }
};

std::string describe(const std::string& command) {
    if (command == "train") return "train a model, write model.ckpt and metrics.csv";
    if (command == "eval") return "PSNR of model.checkpoint at eval.mu, write eval.csv";
    if (command == "sweep") return "PSNR over eval.mu_list, write sweep.csv";
    if (command == "report-power") return "per-subcarrier transmit power vs sorted gain, write power.csv";
    if (command == "csi-matrix") return "train-CSI x test-CSI PSNR matrix, write mismatch.csv";
    if (command == "gradcheck") return "finite-difference gradient checks, write gradcheck.csv";
    if (command == "estimator-bench") return "LS and MMSE estimation error vs SNR, write estimator_bench.csv";
    return {};
}

int fail(const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, cajscc_last_error());
    return CAJSCC_EXIT_VALIDATION;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel-adaptive JSCC over OFDM: train, evaluate and inspect models"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir = "out";
    long long seed = -1;
    std::vector<std::string> overrides;
    std::vector<std::string> commands;
    for (std::size_t i = 0; i < cajscc_command_count(); ++i) commands.emplace_back(cajscc_command_name(i));

    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config,-c", config_path, "key=value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "master seed (overrides the config)")->check(CLI::NonNegativeNumber);
        sub->add_option("--set", overrides, "override a configuration key, key=value (repeatable)");
    }
    app.add_flag_callback(
        "--list-keys",
        [] {
            for (std::size_t i = 0; i < cajscc_config_key_count(); ++i) std::printf("%s\n", cajscc_config_key(i));
            std::exit(0);
        },
        "print every configuration key and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return CAJSCC_EXIT_VALIDATION;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    ConfigHandle cfg;
    if (cajscc_config_new(&cfg.ptr) != CAJSCC_OK) return fail("config");
    if (!config_path.empty() && cajscc_config_load(cfg.ptr, config_path.c_str()) != CAJSCC_OK) {
        return fail(config_path.c_str());
    }
    for (const auto& assignment : overrides) {
        if (cajscc_config_assign(cfg.ptr, assignment.c_str()) != CAJSCC_OK) return fail("--set");
    }
    if (seed >= 0 && cajscc_config_set(cfg.ptr, "seed", std::to_string(seed).c_str()) != CAJSCC_OK) {
        return fail("--seed");
    }
    return cajscc_run(cfg.ptr, command.c_str(), out_dir.c_str(), print_line, nullptr);
}
