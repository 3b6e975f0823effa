// rotcert: train, sweep, certify, attack and audit rotation-smoothed
// quantum classifiers from a JSON experiment config.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rotcert/experiment.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Certified robustness of rotation-smoothed quantum classifiers"};
    app.set_version_flag("--version", rotcert::kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_file;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_file, "experiment config JSON")
        ->check(CLI::ExistingFile);
    app.add_option("--set", overrides,
                   "override a config value, e.g. --set noise.t=0.5")
        ->allow_extra_args(false);

    auto *train = app.add_subcommand("train", "train the classifier and save the model");
    auto *sweep = app.add_subcommand("sweep", "noisy vs noiseless accuracy over h and shots");

    auto *certify = app.add_subcommand("certify", "certify test inputs or inputs from a CSV");
    std::vector<std::size_t> indices;
    std::optional<std::string> input_file;
    certify->add_option("-i,--index", indices, "test-set indices (default: all)");
    certify->add_option("--input-file", input_file,
                        "CSV of inputs: feature columns then a label column");

    auto *attack = app.add_subcommand("attack", "search for label flips near each test input");
    rotcert::AttackRequest attack_req;
    std::optional<double> attack_tau;
    attack->add_option("--tau-d", attack_tau, "fixed trace-distance radius for every input");
    attack->add_option("--tau-scale", attack_req.tau_scale,
                       "attack at this multiple of each certified radius")
        ->excludes("--tau-d");

    auto *audit = app.add_subcommand("audit", "empirical privacy-ratio audit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? rotcert::kExitOk : rotcert::kExitError;
    }

    try {
        std::optional<std::filesystem::path> file;
        if (config_file) {
            file = *config_file;
        }
        const auto resolved = rotcert::resolve_config(file, overrides);
        const rotcert::RunContext ctx{resolved, rotcert::parse_config(resolved), std::cout};

        if (*train) {
            return rotcert::cmd_train(ctx);
        }
        if (*sweep) {
            return rotcert::cmd_sweep(ctx);
        }
        if (*certify) {
            rotcert::CertifyRequest req;
            req.indices = indices;
            if (input_file) {
                if (!indices.empty()) {
                    throw std::invalid_argument("use either --index or --input-file");
                }
                req.input_file = *input_file;
            }
            return rotcert::cmd_certify(ctx, req);
        }
        if (*attack) {
            attack_req.tau_d = attack_tau;
            return rotcert::cmd_attack(ctx, attack_req);
        }
        if (*audit) {
            return rotcert::cmd_audit(ctx);
        }
    } catch (const std::exception &e) {
        std::cerr << "rotcert: " << e.what() << '\n';
        return rotcert::kExitError;
    }
    return rotcert::kExitError;
}
