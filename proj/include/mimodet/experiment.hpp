#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mimodet/detector.hpp"
#include "mimodet/evaluation.hpp"
#include "mimodet/pipeline.hpp"

namespace mimodet {

// Overrides the config's output_dir when set.
inline constexpr const char* kOutputRootEnv = "MIMODET_OUTPUT_ROOT";

enum class Mode { Train, Curve, SoftCurve, Bench, OracleCheck };
std::string mode_name(Mode m);

struct OracleSettings {
    std::size_t trials = 1000;
    std::vector<double> snr_db{0.0, 5.0, 10.0};
};

struct ExperimentConfig {
    std::string experiment_id;
    Mode mode = Mode::Curve;
    std::string output_dir = "runs";
    std::uint64_t seed = 1;
    int workers = 0;  // 0: one for benches, every core otherwise
    ChannelModel channel;
    std::string constellation = "bpsk";

    TrainConfig train;
    std::string resume;  // checkpoint to continue training from

    std::vector<DetectorSpec> detectors;
    std::vector<double> snr_db;
    std::size_t trials = 1000;
    std::optional<RateMode> rate;
    std::size_t chunk = 500;
    bool per_layer = false;

    BenchOptions bench;
    OracleSettings oracle;

    std::string canonical_json;  // normalized config text, hashed below
    std::string config_hash;
};

// Parses and validates a config. Unknown fields and wrong types are
// ConfigErrors naming the field path; relative checkpoint paths resolve
// against `base_dir`.
ExperimentConfig parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct RunOptions {
    bool force = false;
    std::optional<std::string> output_root;  // beats the environment and the config
};

using LineSink = std::function<void(const std::string&)>;

// Executes the config's mode, writes artifacts under <root>/<experiment_id>
// and reports one line per result row. Returns the artifact directory.
std::filesystem::path run_experiment(const ExperimentConfig& cfg, const RunOptions& opt, const LineSink& out);

}  // namespace mimodet
