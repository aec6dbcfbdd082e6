#include "mimodet/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

#include "mimodet/error.hpp"

namespace mimodet {

std::string rate_mode_name(RateMode m) { return m == RateMode::Ber ? "BER" : "SER"; }

RateMode default_rate_mode(const Constellation& c) {
    return c.bits_per_real_symbol > 0 ? RateMode::Ber : RateMode::Ser;
}

ErrorCount error_rate(const Vec& x_hat, const Vec& x_true, const Constellation& c, RateMode mode) {
    if (x_hat.size() != x_true.size()) throw DomainError("error_rate: length mismatch");
    const Eigen::Index n = x_true.size();
    ErrorCount e;
    if (mode == RateMode::Ser) {
        if (c.is_complex) {
            if (n % 2 != 0) throw DomainError("error_rate: complex symbol vectors have even length");
            const Eigen::Index k = n / 2;
            for (Eigen::Index j = 0; j < k; ++j)
                e.errors += (x_hat[j] != x_true[j] || x_hat[j + k] != x_true[j + k]) ? 1 : 0;
            e.denominator = static_cast<std::size_t>(k);
        } else {
            for (Eigen::Index j = 0; j < n; ++j) e.errors += x_hat[j] != x_true[j] ? 1 : 0;
            e.denominator = static_cast<std::size_t>(n);
        }
        return e;
    }
    if (c.bits_per_real_symbol == 0)
        throw DomainError("error_rate: bit error rate is undefined for " + std::string(c.name()) + ", use SER");
    for (Eigen::Index j = 0; j < n; ++j) {
        const std::size_t a = c.index_of(x_hat[j]);
        const std::size_t b = c.index_of(x_true[j]);
        if (a == Constellation::npos || b == Constellation::npos)
            throw DomainError("error_rate: entry " + std::to_string(j) + " is not an alphabet symbol");
        e.errors += static_cast<std::size_t>(std::popcount(c.bit_label(a) ^ c.bit_label(b)));
    }
    e.denominator = static_cast<std::size_t>(n) * static_cast<std::size_t>(c.bits_per_real_symbol);
    return e;
}

double posterior_distance(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q) {
    if (p.size() != q.size()) throw DomainError("posterior_distance: rows have different lengths");
    return (p - q).cwiseAbs().sum();
}

Mat soft_output_from_onehot(const Vec& x_oh_hat, const Constellation& c) {
    const auto s = static_cast<Eigen::Index>(c.size());
    if (x_oh_hat.size() % s != 0) throw DomainError("soft_output_from_onehot: length is not a multiple of |S|");
    Mat rows(x_oh_hat.size() / s, s);
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        Eigen::RowVectorXd r = x_oh_hat.segment(j * s, s).transpose().cwiseMax(0.0).array() + 1e-12;
        rows.row(j) = r / r.sum();
    }
    return rows;
}

namespace {

// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

std::uint64_t curve_stream(std::size_t snr_index, std::size_t chunk) {
    return (static_cast<std::uint64_t>(snr_index + 1) << 32) | static_cast<std::uint64_t>(chunk);
}

std::vector<Sample> draw_chunk(const ChannelSource& src, const Constellation& c, double snr_db, std::size_t n,
                               std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_problem(src, c, snr_db, snr_db, rng));
    return out;
}

struct Tally {
    std::size_t trials = 0;
    std::size_t skipped = 0;
    std::size_t errors = 0;
    std::size_t denominator = 0;
    double delta = 0.0;
    std::size_t delta_rows = 0;

    void merge(const Tally& o) {
        trials += o.trials;
        skipped += o.skipped;
        errors += o.errors;
        denominator += o.denominator;
        delta += o.delta;
        delta_rows += o.delta_rows;
    }
};

EvalRecord make_record(const std::string& label, const ChannelModel& m, const Constellation& c, double snr,
                       const Tally& t) {
    EvalRecord r;
    r.detector = label;
    r.constellation = std::string(c.name());
    r.regime = regime_name(m.regime);
    r.K = m.K;
    r.N = m.N;
    r.snr_db = snr;
    r.trials = t.trials;
    r.skipped = t.skipped;
    r.errors = t.errors;
    r.denominator = t.denominator;
    r.rate = t.denominator ? static_cast<double>(t.errors) / static_cast<double>(t.denominator) : 0.0;
    r.stderr_rate = t.denominator ? std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(t.denominator)) : 0.0;
    if (t.delta_rows) r.mean_delta = t.delta / static_cast<double>(t.delta_rows);
    return r;
}

void count_hard(const DetectorOutput& o, const Sample& s, const Constellation& c, RateMode mode, Tally& t) {
    ++t.trials;
    if (o.hard.size() == 0) {
        ++t.skipped;
        return;
    }
    const ErrorCount e = error_rate(o.hard, s.x, c, mode);
    t.errors += e.errors;
    t.denominator += e.denominator;
}

template <typename ChunkFn>
std::vector<Tally> run_chunks(std::size_t slots, std::size_t trials, const CurveOptions& opt, ChunkFn&& fn) {
    const std::size_t chunk = std::max<std::size_t>(opt.chunk, 1);
    const std::size_t nchunks = (trials + chunk - 1) / chunk;
    std::vector<std::vector<Tally>> per_chunk(nchunks, std::vector<Tally>(slots));
    parallel_for(nchunks, opt.workers, [&](std::size_t ci) {
        const std::size_t n = std::min(chunk, trials - ci * chunk);
        fn(ci, n, per_chunk[ci]);
    });
    std::vector<Tally> total(slots);
    for (const auto& tallies : per_chunk)
        for (std::size_t d = 0; d < slots; ++d) total[d].merge(tallies[d]);
    return total;
}

}  // namespace

std::vector<EvalRecord> accuracy_curve(const std::vector<const Detector*>& detectors, const ChannelModel& m,
                                       const Constellation& c, const std::vector<double>& snr_grid,
                                       const CurveOptions& opt) {
    if (opt.trials < 1) throw ConfigError("trials: must be at least 1");
    const ChannelSource src(m);
    std::vector<EvalRecord> out;
    for (std::size_t si = 0; si < snr_grid.size(); ++si) {
        const double snr = snr_grid[si];
        const auto totals = run_chunks(detectors.size(), opt.trials, opt, [&](std::size_t ci, std::size_t n, std::vector<Tally>& t) {
            const auto samples = draw_chunk(src, c, snr, n, opt.seed, curve_stream(si, ci));
            for (std::size_t d = 0; d < detectors.size(); ++d) {
                const auto outs = detectors[d]->detect(samples);
                for (std::size_t i = 0; i < n; ++i) count_hard(outs[i], samples[i], c, opt.mode, t[d]);
            }
        });
        for (std::size_t d = 0; d < detectors.size(); ++d) out.push_back(make_record(detectors[d]->label(), m, c, snr, totals[d]));
    }
    return out;
}

std::vector<EvalRecord> layer_curve(const DetNetParams& p, const std::string& label, const ChannelModel& m,
                                    const Constellation& c, const std::vector<double>& snr_grid,
                                    const CurveOptions& opt) {
    if (opt.trials < 1) throw ConfigError("trials: must be at least 1");
    const ChannelSource src(m);
    const NetworkParams net = p;
    const auto L = static_cast<std::size_t>(p.layers());
    std::vector<EvalRecord> out;
    for (std::size_t si = 0; si < snr_grid.size(); ++si) {
        const double snr = snr_grid[si];
        const auto totals = run_chunks(L, opt.trials, opt, [&](std::size_t ci, std::size_t n, std::vector<Tally>& t) {
            const auto samples = draw_chunk(src, c, snr, n, opt.seed, curve_stream(si, ci));
            const auto outs = forward_batch(net, make_batch(samples), c);
            for (std::size_t l = 0; l < L; ++l) {
                for (std::size_t i = 0; i < n; ++i) {
                    DetectorOutput o;
                    o.hard = hard_round(soft_decode(outs[l].col(static_cast<Eigen::Index>(i)), c), c);
                    count_hard(o, samples[i], c, opt.mode, t[l]);
                }
            }
        });
        for (std::size_t l = 0; l < L; ++l) {
            EvalRecord r = make_record(label, m, c, snr, totals[l]);
            r.layer = static_cast<int>(l) + 1;
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<EvalRecord> soft_distance_curve(const std::vector<const Detector*>& detectors, const ChannelModel& m,
                                            const Constellation& c, const std::vector<double>& snr_grid,
                                            const CurveOptions& opt) {
    if (opt.trials < 1) throw ConfigError("trials: must be at least 1");
    if (std::pow(static_cast<double>(c.size()), static_cast<double>(m.cols())) > kMaxExhaustive)
        throw RefusalError("soft_distance_curve: exact posteriors are intractable for this system size");
    for (const Detector* d : detectors)
        if (!d->soft()) throw ConfigError("soft_distance_curve: detector " + d->label() + " has no soft output");

    const ChannelSource src(m);
    std::vector<EvalRecord> out;
    for (std::size_t si = 0; si < snr_grid.size(); ++si) {
        const double snr = snr_grid[si];
        const auto totals = run_chunks(detectors.size(), opt.trials, opt, [&](std::size_t ci, std::size_t n, std::vector<Tally>& t) {
            const auto samples = draw_chunk(src, c, snr, n, opt.seed, curve_stream(si, ci));
            std::vector<Mat> exact;
            exact.reserve(n);
            for (const Sample& s : samples) exact.push_back(*exact_posteriors(s.H, s.y, s.sigma2, c).posteriors);
            for (std::size_t d = 0; d < detectors.size(); ++d) {
                const auto outs = detectors[d]->detect(samples);
                for (std::size_t i = 0; i < n; ++i) {
                    count_hard(outs[i], samples[i], c, opt.mode, t[d]);
                    if (!outs[i].posteriors) continue;
                    const Mat& q = *outs[i].posteriors;
                    for (Eigen::Index j = 0; j < q.rows(); ++j) t[d].delta += posterior_distance(exact[i].row(j), q.row(j));
                    t[d].delta_rows += static_cast<std::size_t>(q.rows());
                }
            }
        });
        for (std::size_t d = 0; d < detectors.size(); ++d) out.push_back(make_record(detectors[d]->label(), m, c, snr, totals[d]));
    }
    return out;
}

std::vector<BenchRecord> runtime_bench(const std::vector<const Detector*>& detectors, const ChannelModel& m,
                                       const Constellation& c, const BenchOptions& opt) {
    if (opt.repetitions < 1) throw ConfigError("repetitions: must be at least 1");
    using clock = std::chrono::steady_clock;
    const ChannelSource src(m);
    std::vector<BenchRecord> out;
    for (const Detector* det : detectors) {
        for (std::size_t bi = 0; bi < opt.batch_sizes.size(); ++bi) {
            const std::size_t batch = opt.batch_sizes[bi];
            if (batch < 1) throw ConfigError("batch_sizes: entries must be positive");
            RngStream rng(opt.seed, bi + 1);
            std::vector<Sample> samples;
            samples.reserve(batch);
            for (std::size_t i = 0; i < batch; ++i)
                samples.push_back(sample_problem(src, c, opt.snr_min_db, opt.snr_max_db, rng));

            std::vector<double> per_sample;
            for (int r = 0; r < opt.warmup + opt.repetitions; ++r) {
                const auto t0 = clock::now();
                const auto res = det->detect(samples);
                const std::chrono::duration<double> dt = clock::now() - t0;
                if (res.size() != batch) throw Error(ErrorKind::Numerical, "runtime_bench: detector dropped samples");
                if (r >= opt.warmup) per_sample.push_back(dt.count() / static_cast<double>(batch));
            }
            std::sort(per_sample.begin(), per_sample.end());
            BenchRecord rec;
            rec.detector = det->label();
            rec.batch = batch;
            rec.mean_s = per_sample[per_sample.size() / 2];
            rec.min_s = per_sample.front();
            rec.max_s = per_sample.back();
            if (det->search_based()) {
                // Per-instance spread: search cost depends on the realized SNR.
                for (const Sample& s : samples) {
                    const auto t0 = clock::now();
                    (void)det->detect(std::span<const Sample>(&s, 1));
                    const std::chrono::duration<double> dt = clock::now() - t0;
                    rec.min_s = std::min(rec.min_s, dt.count());
                    rec.max_s = std::max(rec.max_s, dt.count());
                }
            }
            out.push_back(rec);
        }
    }
    return out;
}

void write_curve_csv(std::ostream& os, const std::vector<EvalRecord>& rows, const std::vector<std::string>& header_comment) {
    for (const auto& line : header_comment) os << "# " << line << '\n';
    os << "detector,constellation,regime,K,N,snr_db,trials,errors,rate,stderr,layer,skipped,mean_delta\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.detector << ',' << r.constellation << ',' << r.regime << ',' << r.K << ',' << r.N << ',' << r.snr_db
           << ',' << r.trials << ',' << r.errors << ',' << r.rate << ',' << r.stderr_rate << ',';
        if (r.layer) os << *r.layer;
        os << ',' << r.skipped << ',';
        if (r.mean_delta) os << *r.mean_delta;
        os << '\n';
    }
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& rows, const std::vector<std::string>& header_comment) {
    for (const auto& line : header_comment) os << "# " << line << '\n';
    os << "detector,batch,mean_s,min_s,max_s\n";
    os << std::setprecision(6);
    for (const auto& r : rows) os << r.detector << ',' << r.batch << ',' << r.mean_s << ',' << r.min_s << ',' << r.max_s << '\n';
}

}  // namespace mimodet
