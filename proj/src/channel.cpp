#include "mimodet/channel.hpp"

#include <cmath>
#include <sstream>

#include "mimodet/error.hpp"

namespace mimodet {

std::string regime_name(Regime r) { return r == Regime::Fixed ? "FC" : "VC"; }

std::string distribution_name(ChannelDistribution d) {
    return d == ChannelDistribution::IidGaussian ? "iid_gaussian" : "alpha_toeplitz";
}

void ChannelModel::validate() const {
    if (K <= 0) throw ConfigError("channel.K: must be positive");
    if (N < K) throw ConfigError("channel.N: must be at least K");
    if (distribution == ChannelDistribution::AlphaToeplitz && !(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("channel.alpha: must lie in (0, 1)");
    }
}

std::string ChannelModel::describe() const {
    std::ostringstream os;
    os << regime_name(regime) << ' ' << distribution_name(distribution);
    if (distribution == ChannelDistribution::AlphaToeplitz) os << '(' << alpha << ')';
    os << ' ' << K << 'x' << N << (is_complex ? " complex" : " real");
    return os.str();
}

Mat toeplitz_channel(double alpha, Eigen::Index cols, Eigen::Index rows) {
    Mat sigma(cols, cols);
    for (Eigen::Index i = 0; i < cols; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) sigma(i, j) = std::pow(alpha, static_cast<double>(std::abs(i - j)));

    Eigen::SelfAdjointEigenSolver<Mat> eig(sigma);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalError("toeplitz_channel: Gram matrix is not positive definite");
    }
    const Vec root = eig.eigenvalues().cwiseSqrt();
    Mat h = Mat::Zero(rows, cols);
    h.topRows(cols) = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    return h;
}

namespace {

Mat draw_iid(const ChannelModel& m, RngStream& rng) {
    if (!m.is_complex) {
        Mat h(m.rows(), m.cols());
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, j) = rng.normal();
        return h;
    }
    CMat hc(m.N, m.K);
    for (Eigen::Index j = 0; j < hc.cols(); ++j)
        for (Eigen::Index i = 0; i < hc.rows(); ++i) {
            const double re = rng.normal();
            const double im = rng.normal();
            hc(i, j) = {re, im};
        }
    return complex_to_real(hc);
}

}  // namespace

ChannelSource::ChannelSource(ChannelModel model) : model_(model) {
    model_.validate();
    if (model_.distribution == ChannelDistribution::AlphaToeplitz) {
        fixed_ = toeplitz_channel(model_.alpha, model_.cols(), model_.rows());
    } else if (model_.regime == Regime::Fixed) {
        RngStream rng(model_.fixed_seed, 0);
        fixed_ = draw_iid(model_, rng);
    }
}

Mat ChannelSource::draw(RngStream& rng) const {
    if (deterministic()) return fixed_;
    return draw_iid(model_, rng);
}

Mat sample_channel(const ChannelModel& m, RngStream& rng) { return ChannelSource(m).draw(rng); }

double sigma_for_snr(const ChannelModel& m, const Constellation& c, double snr_db) {
    const double rows = static_cast<double>(m.rows());
    const double cols = static_cast<double>(m.cols());
    const double trace = m.distribution == ChannelDistribution::IidGaussian ? rows * cols : cols;
    return c.component_energy * trace / (rows * std::pow(10.0, snr_db / 10.0));
}

Vec sample_symbols(const ChannelModel& m, const Constellation& c, RngStream& rng) {
    Vec x(m.cols());
    if (c.kind == ConstellationKind::Psk8) {
        const auto& points = Constellation::psk8_points();
        for (int j = 0; j < m.K; ++j) {
            const auto& p = points[rng.index(points.size())];
            x[j] = p.first;
            x[j + m.K] = p.second;
        }
        return x;
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = c.real_alphabet[rng.index(c.size())];
    return x;
}

Sample sample_problem(const ChannelSource& source, const Constellation& c, double snr_min_db, double snr_max_db,
                      RngStream& rng) {
    const ChannelModel& m = source.model();
    if (m.is_complex != c.is_complex) {
        throw ConfigError("channel.complex: does not match constellation " + std::string(c.name()));
    }
    if (!(snr_min_db <= snr_max_db)) throw ConfigError("snr range: min must not exceed max");

    Sample s;
    s.x = sample_symbols(m, c, rng);
    s.x_oh = encode_one_hot(s.x, c);
    s.H = source.draw(rng);
    s.snr_db = snr_min_db == snr_max_db ? snr_min_db : rng.uniform(snr_min_db, snr_max_db);
    s.sigma2 = sigma_for_snr(m, c, s.snr_db);
    const double sd = std::sqrt(s.sigma2);
    s.y = s.H * s.x;
    for (Eigen::Index i = 0; i < s.y.size(); ++i) s.y[i] += sd * rng.normal();
    return s;
}

Sample sample_problem(const ChannelModel& m, const Constellation& c, double snr_min_db, double snr_max_db,
                      RngStream& rng) {
    return sample_problem(ChannelSource(m), c, snr_min_db, snr_max_db, rng);
}

}  // namespace mimodet
