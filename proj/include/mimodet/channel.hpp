#pragma once

#include <cstdint>
#include <string>

#include "mimodet/constellation.hpp"
#include "mimodet/rng.hpp"
#include "mimodet/types.hpp"

namespace mimodet {

enum class Regime { Fixed, Varying };
enum class ChannelDistribution { IidGaussian, AlphaToeplitz };

struct ChannelModel {
    Regime regime = Regime::Varying;
    ChannelDistribution distribution = ChannelDistribution::IidGaussian;
    double alpha = 0.55;
    int K = 1;  // transmitted symbols (complex when is_complex)
    int N = 1;  // receive dimension (complex when is_complex)
    bool is_complex = false;
    // Seed of the single realization used by a fixed i.i.d. Gaussian channel.
    std::uint64_t fixed_seed = 0;

    Eigen::Index rows() const { return is_complex ? 2 * N : N; }
    Eigen::Index cols() const { return is_complex ? 2 * K : K; }

    // Throws ConfigError on N < K, K <= 0 or alpha outside (0, 1).
    void validate() const;
    std::string describe() const;
};

std::string regime_name(Regime r);
std::string distribution_name(ChannelDistribution d);

// Draws channel matrices for a model. Construction precomputes the fixed
// realization, so a source is cheap to reuse across samples.
class ChannelSource {
public:
    explicit ChannelSource(ChannelModel model);

    const ChannelModel& model() const { return model_; }
    bool deterministic() const { return fixed_.size() != 0; }
    Mat draw(RngStream& rng) const;

private:
    ChannelModel model_;
    Mat fixed_;
};

// Symmetric square root of the alpha-Toeplitz Gram matrix, zero padded to
// `rows` rows.
Mat toeplitz_channel(double alpha, Eigen::Index cols, Eigen::Index rows);

Mat sample_channel(const ChannelModel& m, RngStream& rng);

// sigma^2 = P_s * E[trace(H^T H)] / (dim(y) * 10^(snr_db / 10)).
double sigma_for_snr(const ChannelModel& m, const Constellation& c, double snr_db);

struct Sample {
    Mat H;
    Vec y;
    Vec x;
    Vec x_oh;
    double sigma2 = 0.0;
    double snr_db = 0.0;
};

Sample sample_problem(const ChannelSource& source, const Constellation& c, double snr_min_db, double snr_max_db,
                      RngStream& rng);
Sample sample_problem(const ChannelModel& m, const Constellation& c, double snr_min_db, double snr_max_db,
                      RngStream& rng);

// Uniform symbol vector of length m.cols(); 8-PSK draws whole complex points.
Vec sample_symbols(const ChannelModel& m, const Constellation& c, RngStream& rng);

}  // namespace mimodet
