#include <gtest/gtest.h>

#include <cmath>

#include "mimodet/channel.hpp"
#include "mimodet/error.hpp"
#include "mimodet/neural.hpp"
#include "support/finite_difference.hpp"

using namespace mimodet;

namespace {

const Constellation& bpsk() {
    static const Constellation c = make_constellation(ConstellationKind::Bpsk);
    return c;
}

ChannelModel small_model() {
    ChannelModel m;
    m.K = 3;
    m.N = 5;
    return m;
}

std::vector<Sample> draw(const ChannelModel& m, const Constellation& c, int n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) out.push_back(sample_problem(m, c, 4.0, 12.0, rng));
    return out;
}

NetworkParams detnet(const ChannelModel& m, const Constellation& c, int layers, std::uint64_t seed) {
    NetworkParams p = DetNetParams(default_detnet_shape(m, c, layers));
    RngStream rng(seed, 0);
    initialize(p, rng);
    return p;
}

NetworkParams fullycon(const ChannelModel& m, const Constellation& c, int layers, std::uint64_t seed) {
    NetworkParams p = FullyConParams(default_fullycon_shape(m, c, layers));
    RngStream rng(seed, 0);
    initialize(p, rng);
    return p;
}

// Randomizes biases and step sizes so no gradient is trivially zero.
void perturb(NetworkParams& p, std::uint64_t seed) {
    RngStream rng(seed, 1);
    Vec& theta = block_of(p).flat();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
}

double worst_relative_error(const NetworkParams& p, const Batch& b, const Constellation& c) {
    const Vec analytic = gradient(p, b, c).grad;
    const Vec numeric = mimodet::testing::finite_difference_gradient(p, b, c, 1e-5);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, mimodet::testing::relative_error(analytic[i], numeric[i], 1e-6));
    return worst;
}

}  // namespace

TEST(FullyCon, ZeroWeightsGiveOutputBias) {
    auto p = std::get<FullyConParams>(fullycon(small_model(), bpsk(), 3, 1));
    p.block().flat().setZero();
    for (Eigen::Index i = 0; i < p.b(2).rows(); ++i) p.b(2)(i, 0) = 0.1 * static_cast<double>(i);
    RngStream rng(2, 0);
    for (int t = 0; t < 3; ++t) {
        Vec y(5);
        for (Eigen::Index i = 0; i < 5; ++i) y[i] = rng.normal();
        EXPECT_EQ(fullycon_forward(p, y), Vec(p.b(2).col(0)));
    }
}

TEST(FullyCon, SingleLayerIsAffine) {
    FullyConShape s;
    s.input_dim = 5;
    s.output_dim = 6;
    FullyConParams p(s);
    RngStream rng(3, 0);
    for (Eigen::Index i = 0; i < p.block().size(); ++i) p.block().flat()[i] = rng.normal();
    const Vec y = Vec::LinSpaced(5, -1.0, 2.0);
    EXPECT_LT((fullycon_forward(p, y) - (p.W(0) * y + p.b(0).col(0))).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FullyCon, ReluZeroesNegativeInputs) {
    FullyConShape s;
    s.input_dim = 4;
    s.hidden = {4};
    s.output_dim = 4;
    FullyConParams p(s);
    p.W(0) = Mat::Identity(4, 4);
    p.W(1) = Mat::Identity(4, 4);
    p.b(1) = Vec::Constant(4, 0.5);
    EXPECT_EQ(fullycon_forward(p, -Vec::LinSpaced(4, 1.0, 4.0)), Vec::Constant(4, 0.5));
}

TEST(FullyCon, ShapeMismatchIsConfigError) {
    const auto p = std::get<FullyConParams>(fullycon(small_model(), bpsk(), 3, 1));
    EXPECT_THROW(fullycon_forward(p, Vec::Zero(4)), ConfigError);
}

TEST(DetNet, ZeroWeightsIgnoreTheInput) {
    const auto m = small_model();
    auto p = std::get<DetNetParams>(detnet(m, bpsk(), 4, 1));
    Vec& theta = p.block().flat();
    RngStream rng(4, 0);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal();
    for (int k = 0; k < p.layers(); ++k) {
        p.get(k, DetNetParams::W1).setZero();
        p.get(k, DetNetParams::W2).setZero();
        p.get(k, DetNetParams::W3).setZero();
        p.delta1(k) = 0.0;
        p.delta2(k) = 0.0;
    }
    const auto samples = draw(m, bpsk(), 2, 5);
    const auto a = detnet_forward(p, samples[0].H, samples[0].y, bpsk());
    const auto b = detnet_forward(p, samples[1].H, samples[1].y, bpsk());
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], b[k]);
}

TEST(DetNet, ZeroStepSizesSingleLayerIgnoresChannel) {
    const auto m = small_model();
    NetworkParams np = detnet(m, bpsk(), 1, 2);
    perturb(np, 2);
    auto& p = std::get<DetNetParams>(np);
    p.delta1(0) = 0.0;
    p.delta2(0) = 0.0;
    const auto samples = draw(m, bpsk(), 2, 6);
    EXPECT_EQ(detnet_forward(p, samples[0].H, samples[0].y, bpsk())[0],
              detnet_forward(p, samples[1].H, samples[1].y, bpsk())[0]);
}

TEST(DetNet, LaterLayersDependOnFirstStepSize) {
    const auto m = small_model();
    NetworkParams p = detnet(m, bpsk(), 3, 3);
    perturb(p, 3);
    const auto s = draw(m, bpsk(), 1, 7);
    const double h = 1e-5;
    auto& d = std::get<DetNetParams>(p);
    const double saved = d.delta1(0);
    d.delta1(0) = saved + h;
    const Vec up = detnet_forward(d, s[0].H, s[0].y, bpsk())[2];
    d.delta1(0) = saved - h;
    const Vec down = detnet_forward(d, s[0].H, s[0].y, bpsk())[2];
    EXPECT_GT(((up - down) / (2 * h)).norm(), 1e-6);
}

TEST(DetNet, InvariantUnderOrthonormalLeftTransform) {
    const auto m = small_model();
    const NetworkParams p = detnet(m, bpsk(), 5, 4);
    const auto& d = std::get<DetNetParams>(p);
    RngStream rng(8, 0);
    for (const Sample& s : draw(m, bpsk(), 10, 8)) {
        const Mat Q = Eigen::HouseholderQR<Mat>(Mat::NullaryExpr(5, 5, [&] { return rng.normal(); })).householderQ();
        const auto a = detnet_forward(d, s.H, s.y, bpsk());
        const auto b = detnet_forward(d, Q * s.H, Q * s.y, bpsk());
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LT((a[k] - b[k]).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(DetNet, ForwardIsBitwiseDeterministic) {
    const auto m = small_model();
    const NetworkParams p = detnet(m, bpsk(), 5, 5);
    const auto s = draw(m, bpsk(), 4, 9);
    const Batch b = make_batch(s);
    const auto first = forward_batch(p, b, bpsk());
    const auto second = forward_batch(p, b, bpsk());
    for (std::size_t k = 0; k < first.size(); ++k) EXPECT_EQ(first[k], second[k]);
}

TEST(DetNet, BatchColumnsMatchSingleSampleForward) {
    const auto m = small_model();
    const NetworkParams p = detnet(m, bpsk(), 3, 6);
    const auto s = draw(m, bpsk(), 3, 10);
    const auto batched = forward_batch(p, make_batch(s), bpsk());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto single = detnet_forward(std::get<DetNetParams>(p), s[i].H, s[i].y, bpsk());
        for (std::size_t k = 0; k < single.size(); ++k)
            EXPECT_LT((batched[k].col(static_cast<Eigen::Index>(i)) - single[k]).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Loss, FullyConExamples) {
    const Vec a = (Vec(2) << 1, 0).finished();
    const Vec b = (Vec(2) << 0, 1).finished();
    EXPECT_EQ(fullycon_loss(a, a), 0.0);
    EXPECT_EQ(fullycon_loss(a, b), 2.0);
    RngStream rng(1, 0);
    Vec u(7), v(7);
    double naive = 0.0;
    for (int i = 0; i < 7; ++i) {
        u[i] = rng.normal();
        v[i] = rng.normal();
        naive += (u[i] - v[i]) * (u[i] - v[i]);
    }
    EXPECT_NEAR(fullycon_loss(u, v), naive, 1e-12);
    EXPECT_THROW(fullycon_loss(u, a), DomainError);
}

TEST(Loss, DetNetExamples) {
    const Vec x = (Vec(4) << 1, 0, 0, 1).finished();
    const std::vector<Vec> one{Vec::Constant(4, 7.0)};
    EXPECT_EQ(detnet_loss(x, one), 0.0);
    const Vec e = (Vec(4) << 0, 0, 0.5, 1).finished();
    const std::vector<Vec> two{Vec::Constant(4, 3.0), e};
    EXPECT_NEAR(detnet_loss(x, two), std::log(2.0) * (x - e).squaredNorm(), 1e-15);
    RngStream rng(2, 0);
    std::vector<Vec> three;
    double naive = 0.0;
    for (int l = 1; l <= 3; ++l) {
        Vec o(4);
        double sq = 0.0;
        for (int i = 0; i < 4; ++i) {
            o[i] = rng.normal();
            sq += (x[i] - o[i]) * (x[i] - o[i]);
        }
        naive += std::log(static_cast<double>(l)) * sq;
        three.push_back(o);
    }
    EXPECT_NEAR(detnet_loss(x, three), naive, 1e-12);
    EXPECT_NEAR(detnet_loss(x, one, LossWeighting::LogPlusOne), std::log(2.0) * (x - one[0]).squaredNorm(), 1e-12);
}

TEST(Loss, DetNetZeroOnlyWhenLaterLayersExact) {
    const Vec x = (Vec(4) << 0, 1, 1, 0).finished();
    std::vector<Vec> outs{Vec::Zero(4), x, x};
    EXPECT_EQ(detnet_loss(x, outs), 0.0);
    outs[2][0] += 1e-3;
    EXPECT_GT(detnet_loss(x, outs), 0.0);
}

TEST(Gradient, DetNetMatchesFiniteDifferences) {
    const auto m = small_model();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        NetworkParams p = detnet(m, bpsk(), 3, seed);
        perturb(p, seed);
        const auto s = draw(m, bpsk(), 4, 100 + seed);
        EXPECT_LT(worst_relative_error(p, make_batch(s), bpsk()), 1e-4) << "seed " << seed;
    }
}

TEST(Gradient, FullyConMatchesFiniteDifferences) {
    const auto m = small_model();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        NetworkParams p = fullycon(m, bpsk(), 3, seed);
        perturb(p, seed);
        const auto s = draw(m, bpsk(), 4, 200 + seed);
        EXPECT_LT(worst_relative_error(p, make_batch(s, false), bpsk()), 1e-4) << "seed " << seed;
    }
}

TEST(Gradient, ComplexQpskDetNetMatchesFiniteDifferences) {
    ChannelModel m;
    m.K = 2;
    m.N = 3;
    m.is_complex = true;
    const auto qpsk = make_constellation(ConstellationKind::Qpsk);
    NetworkParams p = detnet(m, qpsk, 2, 11);
    perturb(p, 11);
    EXPECT_LT(worst_relative_error(p, make_batch(draw(m, qpsk, 3, 12)), qpsk), 1e-4);
}

TEST(Gradient, ZeroWeightsGiveZeroFirstLayerGradients) {
    const auto m = small_model();
    NetworkParams p = fullycon(m, bpsk(), 3, 1);
    block_of(p).flat().setZero();
    const auto g = gradient(p, make_batch(draw(m, bpsk(), 4, 3), false), bpsk()).grad;
    const ParamBlock& blk = block_of(p);
    EXPECT_EQ(blk.mat_of(g, 0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(blk.mat_of(g, 2).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(blk.mat_of(g, 5).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, IdenticalBatchEqualsSingleSample) {
    const auto m = small_model();
    NetworkParams p = detnet(m, bpsk(), 3, 2);
    perturb(p, 2);
    const auto s = draw(m, bpsk(), 1, 4);
    const std::vector<Sample> repeated(5, s[0]);
    const auto single = gradient(p, make_batch(s), bpsk());
    const auto batch = gradient(p, make_batch(repeated), bpsk());
    EXPECT_NEAR(single.loss, batch.loss, 1e-12 * std::abs(single.loss));
    EXPECT_LT((single.grad - batch.grad).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + single.grad.cwiseAbs().maxCoeff()));
}

TEST(Gradient, NonFiniteLossNamesSample) {
    const auto m = small_model();
    NetworkParams p = detnet(m, bpsk(), 2, 2);
    auto s = draw(m, bpsk(), 3, 5);
    s[1].y[0] = std::numeric_limits<double>::infinity();
    try {
        gradient(p, make_batch(s), bpsk());
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(gradient(p, Batch{}, bpsk()), DomainError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    Vec theta = Vec::LinSpaced(4, -1, 1);
    const Vec before = theta;
    AdamState st(4);
    for (int i = 0; i < 10; ++i) adam_step(theta, Vec::Zero(4), st);
    EXPECT_EQ(theta, before);
    EXPECT_EQ(st.step, 10);
}

TEST(Adam, FirstStepMagnitude) {
    Vec theta = Vec::Zero(1);
    AdamState st(1);
    adam_step(theta, Vec::Ones(1), st);
    EXPECT_NEAR(theta[0], -1e-3 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ConstantGradientStepApproachesLr) {
    Vec theta = Vec::Zero(2);
    AdamState st(2);
    const Vec g = (Vec(2) << 3.0, -0.2).finished();
    Vec prev = theta;
    for (int i = 0; i < 2000; ++i) {
        prev = theta;
        adam_step(theta, g, st);
    }
    EXPECT_NEAR(theta[0] - prev[0], -1e-3, 1e-9);
    EXPECT_NEAR(theta[1] - prev[1], 1e-3, 1e-9);
}

TEST(Adam, ScaleAndSizeChecks) {
    Vec theta = Vec::Zero(1);
    AdamState st(1);
    adam_step(theta, Vec::Ones(1), st, 0.5);
    EXPECT_NEAR(theta[0], -5e-4 / (1.0 + 1e-8), 1e-15);
    EXPECT_THROW(adam_step(theta, Vec::Ones(2), st), DomainError);
}

TEST(Initialization, FanScaledBoundsAndStepSizes) {
    const auto m = small_model();
    const NetworkParams p = detnet(m, bpsk(), 2, 1);
    const auto& d = std::get<DetNetParams>(p);
    const DetNetShape& s = d.shape();
    EXPECT_EQ(s.z_width, 24);
    EXPECT_EQ(s.v_width, 12);
    EXPECT_GE(s.z_width, s.x_dim + s.v_width);
    for (int k = 0; k < 2; ++k) {
        const double bound = std::sqrt(6.0 / (s.x_dim + s.v_width + s.z_width));
        EXPECT_LE(d.get(k, DetNetParams::W1).cwiseAbs().maxCoeff(), bound);
        EXPECT_EQ(d.get(k, DetNetParams::B1).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(d.delta1(k), 1e-2);
        EXPECT_EQ(d.delta2(k), 1e-2);
    }
    const auto f = std::get<FullyConParams>(fullycon(m, bpsk(), 6, 1));
    EXPECT_EQ(f.shape().hidden, std::vector<int>(5, 12));
    EXPECT_EQ(f.shape().output_dim, 6);
}
