#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "mimodet/constellation.hpp"
#include "mimodet/types.hpp"

namespace mimodet {

struct DetectorOutput {
    Vec hard;
    // rows: real components, columns: alphabet entries. Rows sum to one.
    std::optional<Mat> posteriors;
    std::size_t iterations = 0;
    std::size_t nodes_visited = 0;
    bool diverged = false;
};

struct AmpConfig {
    int iterations = 50;
    double damping = 0.0;  // in [0, 1)
};

// Largest exhaustive enumeration accepted by ml_detect_exhaustive and
// exact_posteriors.
inline constexpr double kMaxExhaustive = 16777216.0;  // 2^24

// ||y - Hx||^2, evaluated the same way by every search detector so that
// tie-breaking compares identical numbers.
double residual_norm2(const Mat& H, const Vec& y, const Vec& x);

// Lexicographic order on symbol vectors; the tie-break rule of every search.
bool lex_less(const Vec& a, const Vec& b);

DetectorOutput zf_detect(const Mat& H, const Vec& y, const Constellation& c);

DetectorOutput ml_detect_exhaustive(const Mat& H, const Vec& y, const Constellation& c);

DetectorOutput exact_posteriors(const Mat& H, const Vec& y, double sigma2, const Constellation& c);

// Posterior mean and variance of X given X + sqrt(tau2) Z = r, X drawn from
// the constellation's per-component prior.
std::pair<double, double> posterior_mean_denoiser(double r, double tau2, const Constellation& c);

DetectorOutput amp_detect(const Mat& H, const Vec& y, double sigma2, const Constellation& c,
                          const AmpConfig& cfg = {});

DetectorOutput sphere_decode(const Mat& H, const Vec& y, const Constellation& c);

DetectorOutput mbest_soft(const Mat& H, const Vec& y, double sigma2, const Constellation& c, std::size_t M);

}  // namespace mimodet
