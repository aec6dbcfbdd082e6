#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mimodet/types.hpp"

namespace mimodet {

enum class ConstellationKind { Bpsk, Qpsk, Qam16, Psk8 };

// Real-valued view of a digital constellation. Complex constellations are
// handled through their real and imaginary parts, each drawn from
// real_alphabet; a length-2K real vector holds the K real parts followed by
// the K imaginary parts.
struct Constellation {
    ConstellationKind kind = ConstellationKind::Bpsk;
    std::vector<double> real_alphabet;  // strictly increasing
    std::size_t onehot_dim = 0;
    int bits_per_real_symbol = 0;  // 0 means bit error rate is undefined (8-PSK)
    bool is_complex = false;
    // Mean of s^2 over real_alphabet.
    double symbol_energy = 0.0;
    // Mean transmitted energy per real component under uniform symbols. Equal
    // to symbol_energy except for 8-PSK, whose components are not uniform.
    double component_energy = 0.0;
    // Marginal probability of each alphabet entry in one real component.
    std::vector<double> prior;

    std::size_t size() const { return real_alphabet.size(); }
    std::string_view name() const;

    // Index of s in real_alphabet (tolerance 1e-12), or npos.
    std::size_t index_of(double s) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    // Gray label of alphabet entry i, bits_per_real_symbol wide.
    unsigned bit_label(std::size_t i) const { return static_cast<unsigned>(i ^ (i >> 1)); }

    // Real parts that may accompany a given imaginary part. For every kind
    // but 8-PSK this is the whole alphabet.
    const std::vector<double>& compatible_real(double imag) const;

    // The eight complex points of 8-PSK as (re, im) pairs, ordered by angle.
    static const std::vector<std::pair<double, double>>& psk8_points();

private:
    std::vector<std::vector<double>> psk8_partners_;
    friend Constellation make_constellation(ConstellationKind);
};

Constellation make_constellation(ConstellationKind kind);
// Accepts "bpsk", "qpsk", "qam16", "psk8"; anything else is a ConfigError.
Constellation constellation_from_name(std::string_view name);
std::string_view kind_name(ConstellationKind kind);

// Stacks the unit vector of each symbol; block i has length |S|.
Vec encode_one_hot(const Vec& x, const Constellation& c);

// Per block, sum_i s_i * w_i. No normalization.
Vec soft_decode(const Vec& x_oh, const Constellation& c);

// Nearest alphabet value per entry, ties toward the smaller symbol. For 8-PSK
// each (x_j, x_{j+K}) pair is mapped to the nearest of the eight points.
Vec hard_round(const Vec& x_soft, const Constellation& c);

// Real 2N x 2K embedding of a complex channel and the stacked observation.
std::pair<Mat, Vec> complex_to_real(const CMat& hc, const CVec& yc);
Mat complex_to_real(const CMat& hc);
// [Re v; Im v]
Vec realify(const CVec& v);

}  // namespace mimodet
