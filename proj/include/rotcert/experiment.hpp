#pragma once

// Config-driven experiment runs behind the rotcert command line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotcert/certify.hpp"
#include "rotcert/encode.hpp"
#include "rotcert/rotnoise.hpp"
#include "rotcert/vqc.hpp"

namespace rotcert {

inline constexpr const char *kToolVersion = "0.3.0";
inline constexpr const char *kSeedEnvVar = "ROTCERT_SEED";

/// Exit statuses shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitError = 1,
    kExitNotCertified = 2,
    kExitUncertifiable = 3,
};

struct DatasetSource {
    enum class Kind { synthetic, csv };
    Kind kind = Kind::synthetic;
    std::uint64_t seed = 7;
    std::size_t n = 200;
    double margin = 0.4;
    std::filesystem::path path;

    [[nodiscard]] Dataset load() const;
};

struct SweepConfig {
    std::vector<double> h_values;
    std::vector<std::uint64_t> shot_sizes;
    std::size_t repeats = 5;
    std::size_t noise_draws = 4096;
};

struct AttackConfig {
    std::size_t budget = 1000;
};

struct AuditConfig {
    std::size_t n_pairs = 500;
    double tau_d = 0.1;
    std::size_t n_noise = 1024;
};

struct ExperimentConfig {
    DatasetSource dataset;
    DatasetSource test_dataset;
    EncodingKind encoding = EncodingKind::angle;
    std::size_t encoding_qubits = 0;  // 0 = smallest register that fits
    std::size_t ansatz_layers = 2;
    TrainConfig train;
    NoiseConfig noise;
    std::optional<SweepConfig> sweep;
    CertifySampling certify;
    AttackConfig attack;
    AuditConfig audit;
    std::filesystem::path output_dir = "rotcert_out";
    std::optional<std::filesystem::path> model_path;
    std::uint64_t master_seed = 1;
    std::size_t workers = 1;

    [[nodiscard]] std::filesystem::path resolved_model_path() const;
};

/// The built-in configuration as JSON; every key a config file may set.
nlohmann::json default_config_json();

/// Applies one `dot.path=value` override. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json &config, const std::string &assignment);

/// defaults <- file <- overrides <- seed environment variable.
nlohmann::json resolve_config(const std::optional<std::filesystem::path> &file,
                              const std::vector<std::string> &overrides);

/// Throws std::invalid_argument naming the offending key.
ExperimentConfig parse_config(const nlohmann::json &resolved);

struct RunContext {
    nlohmann::json resolved;
    ExperimentConfig config;
    std::ostream &log;
};

struct CertifyRequest {
    std::vector<std::size_t> indices;                  // into the test set
    std::optional<std::filesystem::path> input_file;   // dataset-format CSV
};

struct AttackRequest {
    std::optional<double> tau_d;  // fixed radius for every input
    double tau_scale = 1.0;       // otherwise scale * certified radius
};

int cmd_train(const RunContext &ctx);
int cmd_sweep(const RunContext &ctx);
int cmd_certify(const RunContext &ctx, const CertifyRequest &request);
int cmd_attack(const RunContext &ctx, const AttackRequest &request);
int cmd_audit(const RunContext &ctx);

}  // namespace rotcert
