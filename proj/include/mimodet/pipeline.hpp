#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mimodet/channel.hpp"
#include "mimodet/checkpoint.hpp"
#include "mimodet/evaluation.hpp"
#include "mimodet/neural.hpp"

namespace mimodet {

struct TrainConfig {
    Architecture architecture = Architecture::DetNet;
    ChannelModel channel;
    std::string constellation = "bpsk";
    double snr_min_db = 7.0;
    double snr_max_db = 14.0;
    int batch_size = 500;
    long iterations = 20000;
    AdamHyper adam;
    std::uint64_t seed = 1;
    long checkpoint_every = 0;  // 0: only at the end
    long log_every = 100;

    int layers = 0;               // 0: 30 for DetNet, 6 for FullyCon
    std::vector<int> widths;      // FullyCon hidden widths; empty for 4K each
    int z_width = 0;              // 0: 8K
    int v_width = 0;              // 0: 4K
    double eta = 0.8;
    LossWeighting loss_weighting = LossWeighting::Log;
    double lr_decay = 1.0;        // multiplier applied every 1000 iterations
    std::optional<double> val_snr_db;  // default: middle of the training range
    std::size_t val_trials = 1000;
    std::string checkpoint_path;  // empty: no checkpoint files
    std::string config_hash;      // recorded in checkpoints

    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct TrainLogRow {
    long iteration = 0;
    double loss = 0.0;     // mean batch loss since the previous row
    double val_ber = 0.0;  // error rate at val_snr_db (SER for 8-PSK)
    double seconds = 0.0;
};

struct TrainResult {
    NetworkParams params;
    AdamState adam;
    long iterations = 0;  // total iterations applied, including resumed ones
    std::vector<TrainLogRow> log;
};

NetworkParams build_network(const TrainConfig& cfg);

// Online training: iteration i draws a fresh batch from stream i + 1 of the
// seed, so runs are reproducible and resumable. Passing `resume` continues
// from a checkpoint until cfg.iterations total.
TrainResult train(const TrainConfig& cfg, const std::optional<Checkpoint>& resume = std::nullopt,
                  const std::function<void(const TrainLogRow&)>& on_log = {});

using BatchDetectFn = std::function<std::vector<Vec>(std::span<const Sample>)>;

// Monte Carlo error rate of a batch detector at one SNR. Deterministic in seed.
ErrorCount validate(const BatchDetectFn& detect, const ChannelModel& m, const Constellation& c, double snr_db,
                    std::size_t trials, std::uint64_t seed);
ErrorCount validate(const NetworkParams& p, const ChannelModel& m, const Constellation& c, double snr_db,
                    std::size_t trials, std::uint64_t seed);

void write_train_log_csv(std::ostream& os, const std::vector<TrainLogRow>& rows, const std::vector<std::string>& header_comment);

}  // namespace mimodet
