#include "mimodet/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mimodet/error.hpp"

namespace mimodet {

namespace {

constexpr double kMemberTol = 1e-12;
constexpr double kHalfSqrt2 = std::numbers::sqrt2 / 2.0;

std::size_t nearest_index(double v, const std::vector<double>& alphabet) {
    std::size_t best = 0;
    double best_d = std::abs(v - alphabet[0]);
    for (std::size_t i = 1; i < alphabet.size(); ++i) {
        const double d = std::abs(v - alphabet[i]);
        // Strict comparison keeps the smaller symbol on ties.
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

const std::vector<std::pair<double, double>>& Constellation::psk8_points() {
    static const std::vector<std::pair<double, double>> points = {
        {1.0, 0.0},  {kHalfSqrt2, kHalfSqrt2},    {0.0, 1.0},  {-kHalfSqrt2, kHalfSqrt2},
        {-1.0, 0.0}, {-kHalfSqrt2, -kHalfSqrt2}, {0.0, -1.0}, {kHalfSqrt2, -kHalfSqrt2},
    };
    return points;
}

std::string_view kind_name(ConstellationKind kind) {
    switch (kind) {
        case ConstellationKind::Bpsk: return "bpsk";
        case ConstellationKind::Qpsk: return "qpsk";
        case ConstellationKind::Qam16: return "qam16";
        case ConstellationKind::Psk8: return "psk8";
    }
    return "unknown";
}

std::string_view Constellation::name() const { return kind_name(kind); }

Constellation make_constellation(ConstellationKind kind) {
    Constellation c;
    c.kind = kind;
    switch (kind) {
        case ConstellationKind::Bpsk:
            c.real_alphabet = {-1.0, 1.0};
            c.bits_per_real_symbol = 1;
            c.is_complex = false;
            break;
        case ConstellationKind::Qpsk:
            c.real_alphabet = {-1.0, 1.0};
            c.bits_per_real_symbol = 1;
            c.is_complex = true;
            break;
        case ConstellationKind::Qam16:
            c.real_alphabet = {-3.0, -1.0, 1.0, 3.0};
            c.bits_per_real_symbol = 2;
            c.is_complex = true;
            break;
        case ConstellationKind::Psk8:
            c.real_alphabet = {-1.0, -kHalfSqrt2, 0.0, kHalfSqrt2, 1.0};
            c.bits_per_real_symbol = 0;
            c.is_complex = true;
            break;
        default:
            throw ConfigError("unknown constellation kind");
    }
    c.onehot_dim = c.real_alphabet.size();
    double e = 0.0;
    for (double s : c.real_alphabet) e += s * s;
    c.symbol_energy = e / static_cast<double>(c.size());

    c.prior.assign(c.size(), 1.0 / static_cast<double>(c.size()));
    c.component_energy = c.symbol_energy;
    if (kind == ConstellationKind::Psk8) {
        c.prior.assign(c.size(), 0.0);
        c.psk8_partners_.assign(c.size(), {});
        double ce = 0.0;
        for (const auto& [re, im] : Constellation::psk8_points()) {
            c.prior[c.index_of(re)] += 1.0 / 8.0;
            ce += re * re / 8.0;
            c.psk8_partners_[c.index_of(im)].push_back(re);
        }
        for (auto& partners : c.psk8_partners_) std::sort(partners.begin(), partners.end());
        c.component_energy = ce;
    }
    return c;
}

Constellation constellation_from_name(std::string_view name) {
    if (name == "bpsk") return make_constellation(ConstellationKind::Bpsk);
    if (name == "qpsk") return make_constellation(ConstellationKind::Qpsk);
    if (name == "qam16") return make_constellation(ConstellationKind::Qam16);
    if (name == "psk8") return make_constellation(ConstellationKind::Psk8);
    throw ConfigError("constellation: unknown name \"" + std::string(name) + "\"");
}

std::size_t Constellation::index_of(double s) const {
    for (std::size_t i = 0; i < real_alphabet.size(); ++i) {
        if (std::abs(real_alphabet[i] - s) <= kMemberTol) return i;
    }
    return npos;
}

const std::vector<double>& Constellation::compatible_real(double imag) const {
    if (kind != ConstellationKind::Psk8) return real_alphabet;
    const std::size_t i = index_of(imag);
    if (i == npos) throw DomainError("compatible_real: imaginary part is not an 8-PSK component");
    return psk8_partners_[i];
}

Vec encode_one_hot(const Vec& x, const Constellation& c) {
    const auto s = static_cast<Eigen::Index>(c.onehot_dim);
    Vec out = Vec::Zero(x.size() * s);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const std::size_t k = c.index_of(x[i]);
        if (k == Constellation::npos) {
            throw DomainError("encode_one_hot: entry " + std::to_string(i) + " (" + std::to_string(x[i]) +
                              ") is not in the " + std::string(c.name()) + " alphabet");
        }
        out[i * s + static_cast<Eigen::Index>(k)] = 1.0;
    }
    return out;
}

Vec soft_decode(const Vec& x_oh, const Constellation& c) {
    const auto s = static_cast<Eigen::Index>(c.onehot_dim);
    if (x_oh.size() % s != 0) {
        throw DomainError("soft_decode: length " + std::to_string(x_oh.size()) + " is not a multiple of " +
                          std::to_string(s));
    }
    const Eigen::Map<const Vec> alphabet(c.real_alphabet.data(), s);
    Vec out(x_oh.size() / s);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = x_oh.segment(i * s, s).dot(alphabet);
    return out;
}

Vec hard_round(const Vec& x_soft, const Constellation& c) {
    Vec out(x_soft.size());
    if (c.kind != ConstellationKind::Psk8) {
        for (Eigen::Index i = 0; i < x_soft.size(); ++i) out[i] = c.real_alphabet[nearest_index(x_soft[i], c.real_alphabet)];
        return out;
    }
    if (x_soft.size() % 2 != 0) throw DomainError("hard_round: 8-PSK vectors must have even length");
    const Eigen::Index k = x_soft.size() / 2;
    const auto& points = Constellation::psk8_points();
    for (Eigen::Index j = 0; j < k; ++j) {
        const double re = x_soft[j];
        const double im = x_soft[j + k];
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < points.size(); ++p) {
            const double d = (re - points[p].first) * (re - points[p].first) +
                             (im - points[p].second) * (im - points[p].second);
            const bool smaller = d < best_d || (d == best_d && points[p] < points[best]);
            if (smaller) {
                best_d = d;
                best = p;
            }
        }
        out[j] = points[best].first;
        out[j + k] = points[best].second;
    }
    return out;
}

Mat complex_to_real(const CMat& hc) {
    const Eigen::Index n = hc.rows();
    const Eigen::Index k = hc.cols();
    Mat h(2 * n, 2 * k);
    h.topLeftCorner(n, k) = hc.real();
    h.topRightCorner(n, k) = -hc.imag();
    h.bottomLeftCorner(n, k) = hc.imag();
    h.bottomRightCorner(n, k) = hc.real();
    return h;
}

Vec realify(const CVec& v) {
    Vec out(2 * v.size());
    out << v.real(), v.imag();
    return out;
}

std::pair<Mat, Vec> complex_to_real(const CMat& hc, const CVec& yc) {
    if (hc.rows() != yc.size()) {
        throw DomainError("complex_to_real: channel has " + std::to_string(hc.rows()) + " rows but y has " +
                          std::to_string(yc.size()) + " entries");
    }
    return {complex_to_real(hc), realify(yc)};
}

}  // namespace mimodet
