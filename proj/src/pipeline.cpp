#include "mimodet/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>

#include "mimodet/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace mimodet {

namespace {

constexpr std::uint64_t kValidationStream = 1ull << 62;

void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
    static const bool done = [] {
        mallopt(M_MMAP_THRESHOLD, 256 << 20);
        mallopt(M_TRIM_THRESHOLD, 512 << 20);
        return true;
    }();
    (void)done;
#endif
}

}  // namespace

void TrainConfig::validate() const {
    channel.validate();
    const Constellation c = constellation_from_name(constellation);
    if (c.is_complex != channel.is_complex) throw ConfigError("channel.complex: does not match constellation");
    if (batch_size < 1) throw ConfigError("batch_size: must be at least 1");
    if (iterations < 1) throw ConfigError("iterations: must be at least 1");
    if (!(snr_min_db <= snr_max_db)) throw ConfigError("snr_min_db: must not exceed snr_max_db");
    if (layers < 0) throw ConfigError("layers: must be positive");
    if (!(adam.lr > 0.0)) throw ConfigError("adam.lr: must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("adam.beta1: must lie in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("adam.beta2: must lie in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw ConfigError("adam.epsilon: must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay: must lie in (0, 1]");
    if (log_every < 1) throw ConfigError("log_every: must be at least 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every: must be non-negative");
    if (val_trials < 1) throw ConfigError("val_trials: must be at least 1");
}

NetworkParams build_network(const TrainConfig& cfg) {
    const Constellation c = constellation_from_name(cfg.constellation);
    if (cfg.architecture == Architecture::FullyCon) {
        FullyConShape s = default_fullycon_shape(cfg.channel, c, cfg.layers ? cfg.layers : 6);
        if (!cfg.widths.empty()) {
            if (cfg.widths.size() != s.hidden.size())
                throw ConfigError("widths: expected " + std::to_string(s.hidden.size()) + " hidden widths");
            s.hidden = cfg.widths;
        }
        return FullyConParams(s);
    }
    DetNetShape s = default_detnet_shape(cfg.channel, c, cfg.layers ? cfg.layers : 30);
    if (cfg.z_width) s.z_width = cfg.z_width;
    if (cfg.v_width) s.v_width = cfg.v_width;
    s.eta = cfg.eta;
    s.weighting = cfg.loss_weighting;
    return DetNetParams(s);
}

ErrorCount validate(const BatchDetectFn& detect, const ChannelModel& m, const Constellation& c, double snr_db,
                    std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw ConfigError("trials: must be at least 1");
    const ChannelSource src(m);
    RngStream rng(seed, kValidationStream);
    const RateMode mode = default_rate_mode(c);
    ErrorCount total;
    constexpr std::size_t kChunk = 500;
    for (std::size_t done = 0; done < trials; done += kChunk) {
        const std::size_t n = std::min(kChunk, trials - done);
        std::vector<Sample> samples;
        samples.reserve(n);
        for (std::size_t i = 0; i < n; ++i) samples.push_back(sample_problem(src, c, snr_db, snr_db, rng));
        const std::vector<Vec> hard = detect(samples);
        for (std::size_t i = 0; i < n; ++i) {
            const ErrorCount e = error_rate(hard[i], samples[i].x, c, mode);
            total.errors += e.errors;
            total.denominator += e.denominator;
        }
    }
    return total;
}

ErrorCount validate(const NetworkParams& p, const ChannelModel& m, const Constellation& c, double snr_db,
                    std::size_t trials, std::uint64_t seed) {
    const bool gram = architecture_of(p) == Architecture::DetNet;
    return validate(
        [&](std::span<const Sample> s) {
            const Mat oh = forward_layer(p, make_batch(s, gram), c);
            std::vector<Vec> out;
            out.reserve(s.size());
            for (Eigen::Index b = 0; b < oh.cols(); ++b) out.push_back(hard_round(soft_decode(oh.col(b), c), c));
            return out;
        },
        m, c, snr_db, trials, seed);
}

TrainResult train(const TrainConfig& cfg, const std::optional<Checkpoint>& resume,
                  const std::function<void(const TrainLogRow&)>& on_log) {
    cfg.validate();
    keep_large_blocks_on_heap();
    const Constellation c = constellation_from_name(cfg.constellation);
    const ChannelSource src(cfg.channel);
    const double val_snr = cfg.val_snr_db.value_or(0.5 * (cfg.snr_min_db + cfg.snr_max_db));

    TrainResult r{build_network(cfg), AdamState(0, cfg.adam), 0, {}};
    if (resume) {
        require_compatible(resume->meta, cfg.channel, c);
        if (architecture_of(resume->params) != cfg.architecture ||
            block_of(resume->params).size() != block_of(r.params).size())
            throw IntegrityError("checkpoint mismatch: architecture differs from the training configuration");
        r.params = resume->params;
        r.iterations = resume->meta.iterations;
        if (resume->adam) r.adam = *resume->adam;
        r.adam.hyper = cfg.adam;
    } else {
        RngStream init(cfg.seed, 0);
        initialize(r.params, init);
    }
    if (r.adam.m.size() == 0) r.adam = AdamState(block_of(r.params).size(), cfg.adam);

    const auto save = [&](long iteration) {
        if (cfg.checkpoint_path.empty()) return;
        Checkpoint ck;
        ck.meta = {cfg.constellation, cfg.channel, iteration, cfg.config_hash, cfg.seed};
        ck.params = r.params;
        ck.adam = r.adam;
        save_checkpoint(cfg.checkpoint_path, ck);
    };

    const auto t0 = std::chrono::steady_clock::now();
    double window_loss = 0.0;
    long window = 0;
    std::vector<Sample> samples(static_cast<std::size_t>(cfg.batch_size));
    const bool gram = cfg.architecture == Architecture::DetNet;
    for (long it = r.iterations; it < cfg.iterations; ++it) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(it) + 1);
        for (auto& s : samples) s = sample_problem(src, c, cfg.snr_min_db, cfg.snr_max_db, rng);
        const Batch batch = make_batch(samples, gram);
        LossAndGradient lg;
        try {
            lg = gradient(r.params, batch, c);
        } catch (const NumericalError& e) {
            throw NumericalError("train: iteration " + std::to_string(it + 1) + ": " + e.what() +
                                 (cfg.checkpoint_path.empty() ? "" : "; last good checkpoint kept at " + cfg.checkpoint_path));
        }
        const double scale = std::pow(cfg.lr_decay, static_cast<double>(it / 1000));
        adam_step(block_of(r.params).flat(), lg.grad, r.adam, scale);
        r.iterations = it + 1;
        window_loss += lg.loss;
        ++window;

        if (r.iterations % cfg.log_every == 0 || r.iterations == cfg.iterations) {
            TrainLogRow row;
            row.iteration = r.iterations;
            row.loss = window_loss / static_cast<double>(window);
            const ErrorCount e = validate(r.params, cfg.channel, c, val_snr, cfg.val_trials, cfg.seed);
            row.val_ber = static_cast<double>(e.errors) / static_cast<double>(e.denominator);
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            r.log.push_back(row);
            if (on_log) on_log(row);
            window_loss = 0.0;
            window = 0;
        }
        if (cfg.checkpoint_every > 0 && r.iterations % cfg.checkpoint_every == 0) save(r.iterations);
    }
    save(r.iterations);
    return r;
}

void write_train_log_csv(std::ostream& os, const std::vector<TrainLogRow>& rows, const std::vector<std::string>& header_comment) {
    for (const auto& line : header_comment) os << "# " << line << '\n';
    os << "iteration,loss,val_ber,seconds\n" << std::setprecision(10);
    for (const auto& r : rows) os << r.iteration << ',' << r.loss << ',' << r.val_ber << ',' << r.seconds << '\n';
}

}  // namespace mimodet
