#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mimodet/channel.hpp"
#include "mimodet/constellation.hpp"
#include "mimodet/detector.hpp"
#include "mimodet/types.hpp"

namespace mimodet {

enum class RateMode { Ber, Ser };
std::string rate_mode_name(RateMode m);
// BER where bits are defined, SER for 8-PSK.
RateMode default_rate_mode(const Constellation& c);

struct ErrorCount {
    std::size_t errors = 0;
    std::size_t denominator = 0;
};

// SER counts complex symbols (a pair (j, j+K) is wrong if either part is);
// BER counts Gray-label bit mismatches. BER on 8-PSK is a DomainError.
ErrorCount error_rate(const Vec& x_hat, const Vec& x_true, const Constellation& c, RateMode mode);

// sum_s |P(s) - Q(s)|
double posterior_distance(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q);

// Per block: clamp negatives to zero, add 1e-12, normalize. Rows are real
// components, columns alphabet entries.
Mat soft_output_from_onehot(const Vec& x_oh_hat, const Constellation& c);

struct EvalRecord {
    std::string detector;
    std::string constellation;
    std::string regime;
    int K = 0;
    int N = 0;
    double snr_db = 0.0;
    std::size_t trials = 0;
    std::size_t skipped = 0;
    std::size_t errors = 0;
    std::size_t denominator = 0;
    double rate = 0.0;
    double stderr_rate = 0.0;  // binomial standard error of rate
    std::optional<double> mean_delta;
    std::optional<int> layer;
};

struct CurveOptions {
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    RateMode mode = RateMode::Ber;
    int workers = 1;
    std::size_t chunk = 500;  // samples generated per RNG stream
};

// Paired Monte Carlo: every detector sees the same sample at each
// (snr, trial) position.
std::vector<EvalRecord> accuracy_curve(const std::vector<const Detector*>& detectors, const ChannelModel& m,
                                       const Constellation& c, const std::vector<double>& snr_grid,
                                       const CurveOptions& opt);

// Error rate of every DetNet layer on the same paired samples.
std::vector<EvalRecord> layer_curve(const DetNetParams& p, const std::string& label, const ChannelModel& m,
                                    const Constellation& c, const std::vector<double>& snr_grid,
                                    const CurveOptions& opt);

// Mean posterior distance to exact_posteriors over components and trials.
// Detectors without soft output are refused.
std::vector<EvalRecord> soft_distance_curve(const std::vector<const Detector*>& detectors, const ChannelModel& m,
                                            const Constellation& c, const std::vector<double>& snr_grid,
                                            const CurveOptions& opt);

struct BenchRecord {
    std::string detector;
    std::size_t batch = 0;
    double mean_s = 0.0;  // median over repetitions of per-sample time
    double min_s = 0.0;
    double max_s = 0.0;
};

struct BenchOptions {
    std::vector<std::size_t> batch_sizes{1, 10, 100, 1000};
    int repetitions = 20;
    int warmup = 2;
    double snr_min_db = 0.0;
    double snr_max_db = 20.0;
    std::uint64_t seed = 1;
};

std::vector<BenchRecord> runtime_bench(const std::vector<const Detector*>& detectors, const ChannelModel& m,
                                       const Constellation& c, const BenchOptions& opt);

// CSV rendering. `header_comment` lines are written first, each prefixed "# ".
void write_curve_csv(std::ostream& os, const std::vector<EvalRecord>& rows, const std::vector<std::string>& header_comment);
void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& rows, const std::vector<std::string>& header_comment);

}  // namespace mimodet
