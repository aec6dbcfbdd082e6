#include "mimodet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mimodet/error.hpp"

namespace mimodet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const Mat& H, const Vec& y, const char* who) {
    if (H.rows() != y.size() || H.cols() == 0) {
        throw DomainError(std::string(who) + ": channel is " + std::to_string(H.rows()) + "x" +
                          std::to_string(H.cols()) + " but y has " + std::to_string(y.size()) + " entries");
    }
}

double search_space(Eigen::Index n, const Constellation& c) {
    return std::pow(static_cast<double>(c.size()), static_cast<double>(n));
}

void guard_exhaustive(Eigen::Index n, const Constellation& c, const char* who) {
    if (search_space(n, c) > kMaxExhaustive) {
        throw RefusalError(std::string(who) + ": " + std::to_string(c.size()) + "^" + std::to_string(n) +
                           " candidates exceed the 2^24 enumeration limit");
    }
}

bool pairs_valid(const Vec& x, const Constellation& c) {
    if (c.kind != ConstellationKind::Psk8) return true;
    const Eigen::Index k = x.size() / 2;
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& partners = c.compatible_real(x[j + k]);
        if (std::find(partners.begin(), partners.end(), x[j]) == partners.end()) return false;
    }
    return true;
}

// Visits every valid symbol vector of length n in lexicographic order.
template <typename Fn>
void enumerate_all(Eigen::Index n, const Constellation& c, Fn&& fn) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    Vec x(n);
    for (Eigen::Index j = 0; j < n; ++j) x[j] = c.real_alphabet[0];
    const std::size_t s = c.size();
    while (true) {
        if (pairs_valid(x, c)) fn(x, idx);
        Eigen::Index j = n - 1;
        while (j >= 0) {
            auto& d = idx[static_cast<std::size_t>(j)];
            if (++d < s) {
                x[j] = c.real_alphabet[d];
                break;
            }
            d = 0;
            x[j] = c.real_alphabet[0];
            --j;
        }
        if (j < 0) return;
    }
}

// Bayes weights exp(-(metric - ref) / (2 sigma2)) summed per (component, symbol).
class PosteriorAccumulator {
public:
    PosteriorAccumulator(Eigen::Index n, const Constellation& c, double ref, double sigma2)
        : c_(c), ref_(ref), scale_(0.5 / sigma2), w_(Mat::Zero(n, static_cast<Eigen::Index>(c.size()))) {}

    void add(const Vec& x, double metric) {
        const double weight = std::exp(-(metric - ref_) * scale_);
        for (Eigen::Index j = 0; j < x.size(); ++j) w_(j, static_cast<Eigen::Index>(c_.index_of(x[j]))) += weight;
    }

    void add_indexed(const std::vector<std::size_t>& idx, double metric) {
        const double weight = std::exp(-(metric - ref_) * scale_);
        for (std::size_t j = 0; j < idx.size(); ++j) w_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(idx[j])) += weight;
    }

    Mat finish() const {
        Mat p = w_;
        for (Eigen::Index j = 0; j < p.rows(); ++j) p.row(j) /= p.row(j).sum();
        return p;
    }

private:
    const Constellation& c_;
    double ref_;
    double scale_;
    Mat w_;
};

Vec rowwise_argmax(const Mat& p, const Constellation& c) {
    Vec hard(p.rows());
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < p.cols(); ++i)
            if (p(j, i) > p(j, best)) best = i;
        hard[j] = c.real_alphabet[static_cast<std::size_t>(best)];
    }
    return hard_round(hard, c);
}

// Allowed values of component i once all higher components are fixed.
const std::vector<double>& allowed_at(Eigen::Index i, const Vec& x, const Constellation& c) {
    if (c.kind == ConstellationKind::Psk8 && i < x.size() / 2) return c.compatible_real(x[i + x.size() / 2]);
    return c.real_alphabet;
}

struct Triangular {
    Mat R;
    Vec ytil;
    double ortho = 0.0;  // part of ||y||^2 outside the column space
};

Triangular triangularize(const Mat& H, const Vec& y, const char* who) {
    const Eigen::Index n = H.cols();
    if (H.rows() < n) throw NumericalError(std::string(who) + ": channel has fewer rows than columns");
    Eigen::HouseholderQR<Mat> qr(H);
    Triangular t;
    t.R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    const Vec qty = qr.householderQ().transpose() * y;
    t.ytil = qty.head(n);
    t.ortho = qty.tail(H.rows() - n).squaredNorm();
    const double scale = t.R.diagonal().cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(std::abs(t.R(i, i)) > 1e-12 * scale)) {
            throw NumericalError(std::string(who) + ": channel is rank deficient");
        }
    }
    return t;
}

double layer_center(const Triangular& t, const Vec& x, Eigen::Index i) {
    const Eigen::Index n = t.R.cols();
    double acc = t.ytil[i];
    for (Eigen::Index j = i + 1; j < n; ++j) acc -= t.R(i, j) * x[j];
    return acc / t.R(i, i);
}

class SchnorrEuchner {
public:
    SchnorrEuchner(const Mat& H, const Vec& y, const Constellation& c)
        : H_(H), y_(y), c_(c), t_(triangularize(H, y, "sphere_decode")), x_(Vec::Zero(H.cols())) {}

    DetectorOutput run() {
        descend(H_.cols() - 1, 0.0);
        DetectorOutput out;
        out.hard = best_x_;
        out.nodes_visited = nodes_;
        return out;
    }

private:
    double radius() const {
        if (best_metric_ == kInf) return kInf;
        return best_metric_ - t_.ortho + 1e-9 * (1.0 + best_metric_);
    }

    void descend(Eigen::Index i, double partial) {
        const double center = layer_center(t_, x_, i);
        const double rii2 = t_.R(i, i) * t_.R(i, i);
        std::vector<double> order = allowed_at(i, x_, c_);
        std::stable_sort(order.begin(), order.end(), [center](double a, double b) {
            return std::abs(a - center) < std::abs(b - center);
        });
        for (double s : order) {
            const double p = partial + rii2 * (s - center) * (s - center);
            if (p > radius()) break;
            ++nodes_;
            x_[i] = s;
            if (i == 0) {
                const double d = residual_norm2(H_, y_, x_);
                if (d < best_metric_ || (d == best_metric_ && lex_less(x_, best_x_))) {
                    best_metric_ = d;
                    best_x_ = x_;
                }
            } else {
                descend(i - 1, p);
            }
        }
        x_[i] = 0.0;
    }

    const Mat& H_;
    const Vec& y_;
    const Constellation& c_;
    Triangular t_;
    Vec x_;
    Vec best_x_;
    double best_metric_ = kInf;
    std::size_t nodes_ = 0;
};

}  // namespace

double residual_norm2(const Mat& H, const Vec& y, const Vec& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        double r = y[i];
        for (Eigen::Index j = 0; j < H.cols(); ++j) r -= H(i, j) * x[j];
        acc += r * r;
    }
    return acc;
}

bool lex_less(const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

DetectorOutput zf_detect(const Mat& H, const Vec& y, const Constellation& c) {
    check_shapes(H, y, "zf_detect");
    const Mat gram = H.transpose() * H;
    Eigen::LLT<Mat> llt(gram);
    // rcond is a 1-norm estimate of 1/cond(H^T H).
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
        throw NumericalError("zf_detect: H^T H is singular or ill conditioned");
    }
    DetectorOutput out;
    out.hard = hard_round(llt.solve(H.transpose() * y), c);
    return out;
}

DetectorOutput ml_detect_exhaustive(const Mat& H, const Vec& y, const Constellation& c) {
    check_shapes(H, y, "ml_detect_exhaustive");
    guard_exhaustive(H.cols(), c, "ml_detect_exhaustive");
    DetectorOutput out;
    double best = kInf;
    enumerate_all(H.cols(), c, [&](const Vec& x, const std::vector<std::size_t>&) {
        const double d = residual_norm2(H, y, x);
        ++out.nodes_visited;
        if (d < best || (d == best && lex_less(x, out.hard))) {
            best = d;
            out.hard = x;
        }
    });
    return out;
}

DetectorOutput exact_posteriors(const Mat& H, const Vec& y, double sigma2, const Constellation& c) {
    check_shapes(H, y, "exact_posteriors");
    if (!(sigma2 > 0.0)) throw DomainError("exact_posteriors: sigma2 must be positive");
    guard_exhaustive(H.cols(), c, "exact_posteriors");

    double ref = kInf;
    enumerate_all(H.cols(), c, [&](const Vec& x, const std::vector<std::size_t>&) {
        ref = std::min(ref, residual_norm2(H, y, x));
    });
    PosteriorAccumulator acc(H.cols(), c, ref, sigma2);
    std::size_t count = 0;
    enumerate_all(H.cols(), c, [&](const Vec& x, const std::vector<std::size_t>& idx) {
        acc.add_indexed(idx, residual_norm2(H, y, x));
        ++count;
    });
    DetectorOutput out;
    out.posteriors = acc.finish();
    out.hard = rowwise_argmax(*out.posteriors, c);
    out.nodes_visited = count;
    return out;
}

namespace {

// Softmax weights of the scalar posterior, shifted by the largest exponent.
void denoiser_weights(double r, double tau2, const Constellation& c, std::vector<double>& w) {
    const std::size_t s = c.size();
    w.resize(s);
    double top = -kInf;
    for (std::size_t i = 0; i < s; ++i) {
        const double d = r - c.real_alphabet[i];
        w[i] = c.prior[i] > 0.0 ? -d * d / (2.0 * tau2) + std::log(c.prior[i]) : -kInf;
        top = std::max(top, w[i]);
    }
    double total = 0.0;
    for (double& v : w) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : w) v /= total;
}

}  // namespace

std::pair<double, double> posterior_mean_denoiser(double r, double tau2, const Constellation& c) {
    if (!(tau2 > 0.0)) throw DomainError("posterior_mean_denoiser: tau2 must be positive");
    std::vector<double> w;
    denoiser_weights(r, tau2, c, w);
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        mean += w[i] * c.real_alphabet[i];
        second += w[i] * c.real_alphabet[i] * c.real_alphabet[i];
    }
    return {mean, std::max(0.0, second - mean * mean)};
}

DetectorOutput amp_detect(const Mat& H, const Vec& y, double sigma2, const Constellation& c, const AmpConfig& cfg) {
    check_shapes(H, y, "amp_detect");
    if (!(sigma2 > 0.0)) throw DomainError("amp_detect: sigma2 must be positive");
    if (cfg.iterations < 1) throw ConfigError("amp.iterations: must be at least 1");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw ConfigError("amp.damping: must lie in [0, 1)");

    const double m = static_cast<double>(H.rows());
    const Eigen::Index n = H.cols();
    const double scale = 1.0 / std::sqrt(m);
    const Mat A = H * scale;
    const Vec yt = y * scale;
    const double noise = sigma2 / m;
    const double beta = static_cast<double>(n) / m;

    Vec xhat = Vec::Zero(n);
    Vec z = yt;
    double tau2 = noise + beta * c.component_energy;
    Vec r(n);
    double last_tau2 = tau2;

    DetectorOutput out;
    for (int t = 0; t < cfg.iterations; ++t) {
        r = xhat + A.transpose() * z;
        Vec mean(n);
        double vbar = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto [mu, var] = posterior_mean_denoiser(r[i], tau2, c);
            mean[i] = mu;
            vbar += var;
        }
        vbar /= static_cast<double>(n);
        const Vec next = (1.0 - cfg.damping) * mean + cfg.damping * xhat;
        z = yt - A * next + z * (beta * vbar / tau2);
        last_tau2 = tau2;
        tau2 = noise + beta * vbar;
        xhat = next;
        out.iterations = static_cast<std::size_t>(t + 1);
        if (!xhat.allFinite() || xhat.norm() > 1e6) {
            out.diverged = true;
            break;
        }
    }

    Mat post(n, static_cast<Eigen::Index>(c.size()));
    std::vector<double> w;
    for (Eigen::Index i = 0; i < n; ++i) {
        denoiser_weights(r[i], last_tau2, c, w);
        for (std::size_t k = 0; k < w.size(); ++k) post(i, static_cast<Eigen::Index>(k)) = w[k];
    }
    out.posteriors = post;
    out.hard = hard_round(xhat.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; }), c);
    return out;
}

DetectorOutput sphere_decode(const Mat& H, const Vec& y, const Constellation& c) {
    check_shapes(H, y, "sphere_decode");
    return SchnorrEuchner(H, y, c).run();
}

DetectorOutput mbest_soft(const Mat& H, const Vec& y, double sigma2, const Constellation& c, std::size_t M) {
    check_shapes(H, y, "mbest_soft");
    if (M < 1) throw ConfigError("mbest.M: must be at least 1");
    if (!(sigma2 > 0.0)) throw DomainError("mbest_soft: sigma2 must be positive");
    const Triangular t = triangularize(H, y, "mbest_soft");
    const Eigen::Index n = H.cols();

    struct Partial {
        Vec x;
        double metric;
    };
    std::vector<Partial> survivors{{Vec::Zero(n), 0.0}};
    std::vector<Partial> next;
    DetectorOutput out;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        next.clear();
        const double rii2 = t.R(i, i) * t.R(i, i);
        for (const Partial& p : survivors) {
            const double center = layer_center(t, p.x, i);
            for (double s : allowed_at(i, p.x, c)) {
                Partial child{p.x, p.metric + rii2 * (s - center) * (s - center)};
                child.x[i] = s;
                next.push_back(std::move(child));
                ++out.nodes_visited;
            }
        }
        const auto better = [](const Partial& a, const Partial& b) {
            return a.metric < b.metric || (a.metric == b.metric && lex_less(a.x, b.x));
        };
        if (next.size() > M) {
            std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(M), next.end(), better);
            next.resize(M);
        } else {
            std::sort(next.begin(), next.end(), better);
        }
        survivors.swap(next);
    }

    std::vector<double> metrics;
    metrics.reserve(survivors.size());
    double ref = kInf;
    for (const Partial& p : survivors) {
        metrics.push_back(residual_norm2(H, y, p.x));
        const double d = metrics.back();
        if (d < ref || (d == ref && lex_less(p.x, out.hard))) {
            ref = d;
            out.hard = p.x;
        }
    }
    PosteriorAccumulator acc(n, c, ref, sigma2);
    for (std::size_t k = 0; k < survivors.size(); ++k) acc.add(survivors[k].x, metrics[k]);
    out.posteriors = acc.finish();
    out.iterations = survivors.size();
    return out;
}

}  // namespace mimodet
