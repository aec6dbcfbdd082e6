// Acceptance suite: one PASS/FAIL line per criterion. Criterion numbers given
// as arguments select a subset; `--expect-fail N` marks criterion N as a
// known failure, which is still reported but does not affect the exit code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mimodet/baselines.hpp"
#include "mimodet/channel.hpp"
#include "mimodet/checkpoint.hpp"
#include "mimodet/detector.hpp"
#include "mimodet/error.hpp"
#include "mimodet/evaluation.hpp"
#include "mimodet/neural.hpp"
#include "mimodet/pipeline.hpp"
#include "support/finite_difference.hpp"

#ifndef MIMODET_ACCEPTANCE_DIR
#define MIMODET_ACCEPTANCE_DIR "acceptance_artifacts"
#endif

using namespace mimodet;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

// Desk-scale settings shared by the criteria that need trained networks.
constexpr int kVcK = 10;
constexpr int kVcN = 20;
constexpr long kVcIterations = 80000;
constexpr long kVc50Iterations = 66000;
constexpr int kVcBatch = 500;
constexpr double kVcSnrMin = 7.0;
constexpr double kVcSnrMax = 14.0;
const std::vector<double> kVcGrid{4.0, 5.5, 7.0, 8.5};
constexpr std::size_t kHardTrials = 100000;
constexpr std::size_t kSoftTrials = 5000;
constexpr std::size_t kLayerTrials = 100000;
constexpr double kTrainBudgetSeconds = 3600.0;
// Part of the checkpoint cache key; bumped when training arithmetic changes.
constexpr int kTrainingRevision = 2;

constexpr int kFcK = 15;
constexpr long kFcIterations = 10000;
constexpr double kFcSnrMin = 4.0;
constexpr double kFcSnrMax = 12.0;
constexpr std::size_t kFcTrials = 100000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

const Constellation& bpsk() {
    static const Constellation c = make_constellation(ConstellationKind::Bpsk);
    return c;
}

const Constellation& qam16() {
    static const Constellation c = make_constellation(ConstellationKind::Qam16);
    return c;
}

ChannelModel iid(int k, int n, bool complex = false) {
    ChannelModel m;
    m.K = k;
    m.N = n;
    m.is_complex = complex;
    return m;
}

ChannelModel toeplitz(int k) {
    ChannelModel m;
    m.regime = Regime::Fixed;
    m.distribution = ChannelDistribution::AlphaToeplitz;
    m.alpha = 0.55;
    m.K = k;
    m.N = k;
    return m;
}

std::string num(double v, int precision = 4) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

fs::path artifact_dir() {
    const char* env = std::getenv("MIMODET_ACCEPTANCE_DIR");
    const fs::path dir = env && *env ? fs::path(env) : fs::path(MIMODET_ACCEPTANCE_DIR);
    fs::create_directories(dir);
    return dir;
}

std::string training_key(const TrainConfig& cfg) {
    std::ostringstream os;
    os << 'r' << kTrainingRevision << ' ' << architecture_name(cfg.architecture) << ' ' << cfg.channel.describe() << ' '
       << cfg.constellation << ' ' << cfg.snr_min_db << ' ' << cfg.snr_max_db << ' ' << cfg.batch_size << ' '
       << cfg.adam.lr << ' ' << cfg.seed << ' ' << cfg.layers << ' ' << cfg.lr_decay << ' '
       << static_cast<int>(cfg.loss_weighting);
    const std::string s = os.str();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(s.data(), s.size());
    return hex.str();
}

struct Trained {
    NetworkParams params;
    double seconds = 0.0;  // cumulative training wall-clock
};

// Trains once per configuration; later runs reuse the cached checkpoint and
// its recorded training time. The iteration count is not part of the cache
// key, so raising it resumes an earlier run.
Trained trained(const std::string& name, TrainConfig cfg) {
    cfg.config_hash = training_key(cfg);
    const fs::path ckpt = artifact_dir() / (name + "-" + cfg.config_hash + ".ckpt");
    const fs::path timing = fs::path(ckpt.string() + ".seconds");
    cfg.checkpoint_path = ckpt.string();
    if (cfg.checkpoint_every == 0) cfg.checkpoint_every = 2000;

    double previous = 0.0;
    std::optional<Checkpoint> resume;
    if (fs::exists(ckpt)) {
        try {
            Checkpoint ck = load_checkpoint(ckpt.string());
            std::ifstream(timing) >> previous;
            if (ck.meta.iterations == cfg.iterations) return {ck.params, previous};
            if (ck.meta.iterations > cfg.iterations) throw IntegrityError("trained past " + std::to_string(cfg.iterations));
            resume = std::move(ck);
            std::cout << "  " << name << ": resuming at iteration " << resume->meta.iterations << std::endl;
        } catch (const Error& e) {
            std::cout << "  " << name << ": discarding cached checkpoint (" << e.what() << ")" << std::endl;
            previous = 0.0;
        }
    }
    std::cout << "  " << name << ": training " << cfg.iterations << " iterations" << std::endl;
    const TrainResult r = train(cfg, resume, [&](const TrainLogRow& row) {
        std::ofstream(timing) << std::setprecision(17) << previous + row.seconds;
        std::cout << "    " << name << " iteration " << row.iteration << " loss " << num(row.loss) << " val "
                  << num(row.val_ber) << " (" << num(previous + row.seconds, 5) << " s)" << std::endl;
    });
    double total = previous;
    std::ifstream(timing) >> total;
    return {r.params, total};
}

TrainConfig vc_config(int layers, long iterations) {
    TrainConfig cfg;
    cfg.channel = iid(kVcK, kVcN);
    cfg.layers = layers;
    cfg.batch_size = kVcBatch;
    cfg.iterations = iterations;
    cfg.snr_min_db = kVcSnrMin;
    cfg.snr_max_db = kVcSnrMax;
    cfg.lr_decay = 0.97;
    cfg.log_every = 1000;
    cfg.val_snr_db = 8.0;
    cfg.val_trials = 5000;
    cfg.seed = 1;
    return cfg;
}

const Trained& detnet30() {
    static const Trained t = trained("detnet30_vc", vc_config(30, kVcIterations));
    return t;
}

const Trained& detnet50() {
    static const Trained t = trained("detnet50_vc", vc_config(50, kVc50Iterations));
    return t;
}

const EvalRecord& find(const std::vector<EvalRecord>& recs, const std::string& detector, double snr) {
    for (const auto& r : recs)
        if (r.detector == detector && r.snr_db == snr) return r;
    throw std::runtime_error("no record for " + detector);
}

std::vector<const Detector*> raw(const std::vector<std::unique_ptr<Detector>>& v) {
    std::vector<const Detector*> out;
    for (const auto& d : v) out.push_back(d.get());
    return out;
}

void save_curve(const std::string& name, const std::vector<EvalRecord>& recs) {
    std::ofstream os(artifact_dir() / (name + ".csv"));
    write_curve_csv(os, recs, {"acceptance: " + name});
}

// 1. Gradient correctness.
Outcome gradients() {
    const auto t0 = clk::now();
    const ChannelModel m = iid(3, 5);
    double worst_detnet = 0.0, worst_fc = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RngStream rng(seed, 7);
        std::vector<Sample> samples;
        for (int i = 0; i < 4; ++i) samples.push_back(sample_problem(m, bpsk(), 4.0, 12.0, rng));
        for (Architecture a : {Architecture::DetNet, Architecture::FullyCon}) {
            NetworkParams p = a == Architecture::DetNet ? NetworkParams(DetNetParams(default_detnet_shape(m, bpsk(), 3)))
                                                        : NetworkParams(FullyConParams(default_fullycon_shape(m, bpsk(), 3)));
            RngStream init(seed, 0);
            initialize(p, init);
            Vec& theta = block_of(p).flat();
            for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
            const Batch b = make_batch(samples, a == Architecture::DetNet);
            const Vec analytic = gradient(p, b, bpsk()).grad;
            const Vec numeric = testing::finite_difference_gradient(p, b, bpsk(), 1e-5);
            double& worst = a == Architecture::DetNet ? worst_detnet : worst_fc;
            for (Eigen::Index i = 0; i < analytic.size(); ++i)
                worst = std::max(worst, testing::relative_error(analytic[i], numeric[i], 1e-6));
        }
    }
    const double t = seconds_since(t0);
    return {worst_detnet < 1e-4 && worst_fc < 1e-4 && t < 60.0,
            "max relative error DetNet " + num(worst_detnet, 3) + ", FullyCon " + num(worst_fc, 3) + " over 10 seeds; " +
                num(t, 3) + " s"};
}

// 2. Sphere decoder exactness.
Outcome sphere_exactness() {
    const auto t0 = clk::now();
    std::size_t agree = 0, total = 0;
    for (const auto& [m, c] : {std::pair{iid(4, 8), &bpsk()}, std::pair{iid(2, 2, true), &qam16()}}) {
        const ChannelSource src(m);
        RngStream rng(2, static_cast<std::uint64_t>(m.K));
        for (double snr : {0.0, 5.0, 10.0}) {
            for (int i = 0; i < 1000; ++i) {
                const Sample s = sample_problem(src, *c, snr, snr, rng);
                agree += sphere_decode(s.H, s.y, *c).hard == ml_detect_exhaustive(s.H, s.y, *c).hard;
                ++total;
            }
        }
    }
    const double t = seconds_since(t0);
    return {agree == total && t < 120.0,
            "sd==ml on " + std::to_string(agree) + "/" + std::to_string(total) +
                " instances (BPSK 4x8 and QAM16 2x2 complex, 1000 per SNR in {0,5,10} dB); " + num(t, 3) + " s"};
}

// 3. Bayes oracle consistency.
Outcome bayes_consistency() {
    const auto t0 = clk::now();
    const ChannelModel m = iid(4, 8);
    const std::size_t full_width = std::size_t{1} << (2 * m.K);
    RngStream rng(3, 0);
    double total = 0.0;
    std::size_t rows = 0;
    for (int i = 0; i < 200; ++i) {
        const Sample s = sample_problem(m, bpsk(), 0.0, 10.0, rng);
        const Mat a = *mbest_soft(s.H, s.y, s.sigma2, bpsk(), full_width).posteriors;
        const Mat b = *exact_posteriors(s.H, s.y, s.sigma2, bpsk()).posteriors;
        for (Eigen::Index j = 0; j < a.rows(); ++j, ++rows) total += posterior_distance(a.row(j), b.row(j));
    }
    const double mean = total / static_cast<double>(rows);
    const double t = seconds_since(t0);
    return {mean < 1e-6 && t < 60.0, "mean delta(mbest M=" + std::to_string(full_width) + ", exact) = " + num(mean, 3) + " over 200 instances; " +
                                         num(t, 3) + " s"};
}

// 4. Soft-output sanity.
Outcome soft_outputs() {
    const Trained& d30 = detnet30();
    const Trained& d50 = detnet50();
    const ChannelModel m = iid(kVcK, kVcN);
    const auto n30 = make_network_detector(d30.params, bpsk(), "detnet30");
    const auto n50 = make_network_detector(d50.params, bpsk(), "detnet50");
    DetectorSpec mb{"mbest"};
    mb.M = 5;
    const auto mbest = make_detector(mb, m, bpsk());
    CurveOptions opt;
    opt.trials = kSoftTrials;
    opt.seed = 40;
    const double top = kVcGrid.back();
    const auto recs = soft_distance_curve({n30.get(), n50.get(), mbest.get()}, m, bpsk(), {top}, opt);
    save_curve("criterion4_soft", recs);
    const double a = *find(recs, "detnet30", top).mean_delta;
    const double b = *find(recs, "detnet50", top).mean_delta;
    const double c = *find(recs, "mbest5", top).mean_delta;
    const bool budget = d30.seconds <= kTrainBudgetSeconds && d50.seconds <= kTrainBudgetSeconds;
    return {b <= a && b <= 1.2 * c && budget,
            "at " + num(top) + " dB over " + std::to_string(kSoftTrials) + " trials: delta DetNet-50 " + num(b) +
                ", DetNet-30 " + num(a) + ", M-Best(5) " + num(c) + " (need DetNet-50 <= DetNet-30 and <= " +
                num(1.2 * c) + "); training " + num(d30.seconds, 4) + " s / " + num(d50.seconds, 4) + " s"};
}

// 5. Hard-decision ordering.
Outcome hard_ordering() {
    const Trained& d30 = detnet30();
    const ChannelModel m = iid(kVcK, kVcN);
    std::vector<std::unique_ptr<Detector>> dets;
    dets.push_back(make_detector({"zf"}, m, bpsk()));
    dets.push_back(make_detector({"sd"}, m, bpsk()));
    dets.push_back(make_network_detector(d30.params, bpsk(), "detnet"));
    CurveOptions opt;
    opt.trials = kHardTrials;
    opt.seed = 50;
    const auto recs = accuracy_curve(raw(dets), m, bpsk(), kVcGrid, opt);
    save_curve("criterion5_hard", recs);
    bool pass = true;
    std::ostringstream os;
    for (double snr : kVcGrid) {
        const EvalRecord& sd = find(recs, "sd", snr);
        const EvalRecord& dn = find(recs, "detnet", snr);
        const double band = 2.0 * std::hypot(sd.stderr_rate, dn.stderr_rate);
        const bool lower = sd.rate <= dn.rate + band;
        const bool upper = dn.rate <= 2.0 * sd.rate;
        pass = pass && lower && upper;
        os << num(snr) << " dB: SD " << num(sd.rate, 3) << " DetNet " << num(dn.rate, 3) << " ratio "
           << num(dn.rate / std::max(sd.rate, 1e-300), 3) << (lower && upper ? "" : " (out of bound)") << "; ";
    }
    const double top = kVcGrid.back();
    const double zf = find(recs, "zf", top).rate;
    const double dn = find(recs, "detnet", top).rate;
    const bool beats_zf = dn <= 0.2 * zf;
    os << "top point DetNet/ZF " << num(dn / zf, 3) << (beats_zf ? "" : " (> 0.2)");
    return {pass && beats_zf, os.str()};
}

// 6. Fixed-channel regime.
Outcome fixed_channel() {
    const ChannelModel m = toeplitz(kFcK);
    TrainConfig base;
    base.channel = m;
    base.batch_size = 500;
    base.iterations = kFcIterations;
    base.snr_min_db = kFcSnrMin;
    base.snr_max_db = kFcSnrMax;
    base.lr_decay = 0.97;
    base.log_every = 1000;
    base.val_trials = 2000;
    TrainConfig fc_cfg = base;
    fc_cfg.architecture = Architecture::FullyCon;
    fc_cfg.layers = 6;
    TrainConfig dn_cfg = base;
    dn_cfg.layers = 30;
    const Trained fc = trained("fullycon_fc", fc_cfg);
    const Trained dn = trained("detnet30_fc", dn_cfg);

    std::vector<std::unique_ptr<Detector>> dets;
    dets.push_back(make_detector({"sd"}, m, bpsk()));
    dets.push_back(make_network_detector(fc.params, bpsk(), "fullycon"));
    dets.push_back(make_network_detector(dn.params, bpsk(), "detnet"));
    const double mid = 0.5 * (kFcSnrMin + kFcSnrMax);
    CurveOptions opt;
    opt.trials = kFcTrials;
    opt.seed = 60;
    const auto recs = accuracy_curve(raw(dets), m, bpsk(), {mid}, opt);
    save_curve("criterion6_fixed_channel", recs);
    const double sd = find(recs, "sd", mid).rate;
    const double f = find(recs, "fullycon", mid).rate;
    const double d = find(recs, "detnet", mid).rate;
    const auto pf = block_of(fc.params).size();
    const auto pd = block_of(dn.params).size();
    return {f <= 2.0 * sd && d <= 2.0 * sd && pf < pd,
            "Toeplitz 15x15 at " + num(mid) + " dB: SD " + num(sd, 3) + ", FullyCon " + num(f, 3) + ", DetNet " +
                num(d, 3) + " (bound " + num(2.0 * sd, 3) + "); parameters FullyCon " + std::to_string(pf) +
                " < DetNet " + std::to_string(pd)};
}

// 7. AMP near-optimality.
Outcome amp_near_optimal() {
    const ChannelModel m = iid(16, 32);
    const auto sd = make_detector({"sd"}, m, bpsk());
    const auto amp = make_detector({"amp"}, m, bpsk());
    CurveOptions cal;
    cal.trials = 20000;
    cal.seed = 70;
    const std::vector<double> grid{3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0};
    const auto probe = accuracy_curve({sd.get()}, m, bpsk(), grid, cal);
    double snr = grid.front();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : probe) {
        const double d = std::abs(std::log10(std::max(r.rate, 1e-12)) + 2.0);
        if (d < best) {
            best = d;
            snr = r.snr_db;
        }
    }
    CurveOptions opt;
    opt.trials = 100000;
    opt.seed = 71;
    const auto recs = accuracy_curve({sd.get(), amp.get()}, m, bpsk(), {snr}, opt);
    save_curve("criterion7_amp", recs);
    const double s = find(recs, "sd", snr).rate;
    const double a = find(recs, "amp", snr).rate;
    return {a <= 2.0 * s, "16x32 at " + num(snr) + " dB: SD " + num(s, 3) + ", AMP " + num(a, 3) + " (ratio " +
                              num(a / s, 3) + ", bound 2) over 1e5 paired trials"};
}

// 8. Per-layer trade-off.
Outcome per_layer() {
    const Trained& d30 = detnet30();
    const auto& p = std::get<DetNetParams>(d30.params);
    const int L = p.layers();
    const int half = (L + 1) / 2;
    const double snr = kVcGrid[kVcGrid.size() / 2];
    CurveOptions opt;
    opt.trials = kLayerTrials;
    opt.seed = 80;
    const auto recs = layer_curve(p, "detnet", iid(kVcK, kVcN), bpsk(), {snr}, opt);
    save_curve("criterion8_layers", recs);
    const auto at = [&](int layer) { return recs[static_cast<std::size_t>(layer - 1)]; };
    const EvalRecord a = at(L), b = at(half), c = at(1);
    const double sab = std::hypot(a.stderr_rate, b.stderr_rate);
    const double sbc = std::hypot(b.stderr_rate, c.stderr_rate);
    const bool ok = (b.rate - a.rate) > -2.0 * sab && (c.rate - b.rate) > -2.0 * sbc;
    return {ok, "at " + num(snr) + " dB: layer " + std::to_string(L) + " " + num(a.rate, 3) + ", layer " +
                    std::to_string(half) + " " + num(b.rate, 3) + ", layer 1 " + num(c.rate, 3)};
}

// 9. Batch-runtime trend.
Outcome batch_runtime() {
    const Trained& d30 = detnet30();
    const ChannelModel m = iid(kVcK, kVcN);
    const auto det = make_network_detector(d30.params, bpsk(), "detnet");
    BenchOptions opt;
    opt.seed = 90;
    const auto rows = runtime_bench({det.get()}, m, bpsk(), opt);
    const fs::path csv = artifact_dir() / "criterion9_bench.csv";
    {
        std::ofstream os(csv);
        write_bench_csv(os, rows, {"acceptance: criterion9_bench"});
    }
    double one = 0.0, thousand = 0.0;
    std::ostringstream table;
    for (const auto& r : rows) {
        if (r.batch == 1) one = r.mean_s;
        if (r.batch == 1000) thousand = r.mean_s;
        table << r.batch << ": " << num(r.mean_s * 1e6, 3) << " us; ";
    }
    const double speedup = one / thousand;
    return {speedup >= 5.0, "per-sample " + table.str() + "speedup " + num(speedup, 3) + " (table in " + csv.string() + ")"};
}

// 10. Invariant suites.
Outcome invariants() {
    std::size_t checks = 0;
    std::vector<std::string> broken;
    const auto expect = [&](bool ok, const std::string& what) {
        ++checks;
        if (!ok && std::find(broken.begin(), broken.end(), what) == broken.end()) broken.push_back(what);
    };
    RngStream rng(10, 0);
    for (ConstellationKind k : {ConstellationKind::Bpsk, ConstellationKind::Qpsk, ConstellationKind::Qam16,
                                ConstellationKind::Psk8}) {
        const Constellation c = make_constellation(k);
        const ChannelModel m = iid(3, 5, c.is_complex);
        for (int i = 0; i < 200; ++i) {
            const Sample s = sample_problem(m, c, 0.0, 20.0, rng);
            expect(soft_decode(encode_one_hot(s.x, c), c) == s.x, "one-hot roundtrip");
            expect(encode_one_hot(s.x, c) == s.x_oh, "sample one-hot matches symbols");
            if (c.is_complex) {
                CMat Hc(5, 3);
                CVec xc(3), wc(5);
                for (Eigen::Index r = 0; r < 5; ++r)
                    for (Eigen::Index q = 0; q < 3; ++q) Hc(r, q) = {rng.normal(), rng.normal()};
                for (Eigen::Index q = 0; q < 3; ++q) xc[q] = {s.x[q], s.x[q + 3]};
                for (Eigen::Index r = 0; r < 5; ++r) wc[r] = {rng.normal(), rng.normal()};
                const auto [Hr, yr] = complex_to_real(Hc, CVec(Hc * xc + wc));
                const Vec wr = realify(wc);
                expect((Hr * s.x + wr - yr).cwiseAbs().maxCoeff() < 1e-12, "complex/real model preservation");
            }
            if (c.size() <= 4) {
                const Mat p = *exact_posteriors(s.H, s.y, std::max(s.sigma2, 1e-3), c).posteriors;
                const Mat q = *mbest_soft(s.H, s.y, std::max(s.sigma2, 1e-3), c, 3).posteriors;
                for (Eigen::Index j = 0; j < p.rows(); ++j) {
                    expect(std::abs(p.row(j).sum() - 1.0) < 1e-9 && p.row(j).minCoeff() >= 0.0, "posterior rows normalized");
                    expect(std::abs(q.row(j).sum() - 1.0) < 1e-9 && q.row(j).minCoeff() >= 0.0, "posterior rows normalized");
                    const double d = posterior_distance(p.row(j), q.row(j));
                    expect(d >= 0.0 && d <= 2.0, "delta in [0, 2]");
                }
            }
        }
    }
    {
        const ChannelModel m = iid(4, 7);
        NetworkParams p = DetNetParams(default_detnet_shape(m, bpsk(), 6));
        RngStream init(11, 0);
        initialize(p, init);
        const auto& d = std::get<DetNetParams>(p);
        for (int i = 0; i < 50; ++i) {
            const Sample s = sample_problem(m, bpsk(), 0.0, 15.0, rng);
            const Mat Q = Eigen::HouseholderQR<Mat>(Mat::NullaryExpr(7, 7, [&](Eigen::Index, Eigen::Index) { return rng.normal(); })).householderQ();
            const auto a = detnet_forward(d, s.H, s.y, bpsk());
            const auto b = detnet_forward(d, Q * s.H, Q * s.y, bpsk());
            double gap = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) gap = std::max(gap, (a[k] - b[k]).cwiseAbs().maxCoeff());
            expect(gap < 1e-9, "DetNet orthonormal-left-transform invariance");
            const Mat soft = soft_output_from_onehot(a.back(), bpsk());
            for (Eigen::Index j = 0; j < soft.rows(); ++j)
                expect(std::abs(soft.row(j).sum() - 1.0) < 1e-9 && soft.row(j).minCoeff() >= 0.0,
                       "posterior rows normalized");
        }
    }
    for (int k : {5, 15, 30}) {
        const ChannelModel m = toeplitz(k);
        RngStream r(12, 0);
        const Mat H = sample_channel(m, r);
        const Mat G = H.transpose() * H;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < G.rows(); ++i)
            for (Eigen::Index j = 0; j < G.cols(); ++j)
                worst = std::max(worst, std::abs(G(i, j) - std::pow(0.55, static_cast<double>(std::abs(i - j)))));
        expect(worst < 1e-9, "Toeplitz H^T H at 1e-9");
    }
    std::string detail = std::to_string(checks) + " checks";
    for (const auto& b : broken) detail += "; broken: " + b;
    return {broken.empty(), detail};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "gradient correctness", gradients},
        {2, "sphere decoder exactness", sphere_exactness},
        {3, "Bayes oracle consistency", bayes_consistency},
        {4, "soft-output sanity", soft_outputs},
        {5, "hard-decision ordering", hard_ordering},
        {6, "fixed-channel regime", fixed_channel},
        {7, "AMP near-optimality", amp_near_optimal},
        {8, "per-layer trade-off", per_layer},
        {9, "batch-runtime trend", batch_runtime},
        {10, "invariant suites", invariants},
    };
    std::set<int> selected, expected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--expect-fail" && i + 1 < argc) {
            expected.insert(std::atoi(argv[++i]));
        } else {
            selected.insert(std::atoi(a.c_str()));
        }
    }

    std::cout << "artifacts: " << artifact_dir().string() << std::endl;
    int failures = 0;
    std::vector<std::string> summary;
    for (const Criterion& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = clk::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const bool known = expected.count(c.id) > 0;
        std::string line = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) + " (" +
                           c.name + "): " + o.detail + " [" + num(seconds_since(t0), 4) + " s]";
        if (!o.pass && known) line += " (expected failure)";
        std::cout << line << std::endl;
        summary.push_back(line);
        failures += !o.pass && !known;
    }
    std::cout << "\nsummary\n";
    for (const auto& s : summary) std::cout << s << '\n';
    return failures == 0 ? 0 : 1;
}
