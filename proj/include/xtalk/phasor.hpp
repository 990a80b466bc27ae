#pragma once

#include <cmath>
#include <complex>

namespace xtalk {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

/// Complex amplitude-and-phase pair. Used both for crosstalk matrix entries
/// (how much of a line's signal reaches another qubit) and for compensation
/// drives (a deliberately injected copy of a remote line's tone).
/// Dimensionless: magnitudes are relative to the emitting line's amplitude.
struct Phasor {
    double re = 0.0;
    double im = 0.0;

    constexpr Phasor() = default;
    constexpr Phasor(double re_, double im_) : re(re_), im(im_) {}

    static Phasor polar(double magnitude, double phase_rad) {
        return {magnitude * std::cos(phase_rad), magnitude * std::sin(phase_rad)};
    }

    static Phasor from_complex(std::complex<double> z) { return {z.real(), z.imag()}; }
    std::complex<double> to_complex() const { return {re, im}; }

    double magnitude() const { return std::hypot(re, im); }

    /// Phase in (-pi, pi]; zero phasor reports phase 0.
    double phase() const {
        if (re == 0.0 && im == 0.0) return 0.0;
        double p = std::atan2(im, re);
        if (p <= -kPi) p = kPi;
        return p;
    }

    bool is_finite() const { return std::isfinite(re) && std::isfinite(im); }

    Phasor operator-() const { return {-re, -im}; }
    Phasor operator+(const Phasor& o) const { return {re + o.re, im + o.im}; }
    Phasor operator-(const Phasor& o) const { return {re - o.re, im - o.im}; }
    Phasor operator*(double s) const { return {re * s, im * s}; }

    /// Complex product: amplitudes multiply, phases add.
    Phasor operator*(const Phasor& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }

    bool operator==(const Phasor& o) const { return re == o.re && im == o.im; }
};

inline double phase_deg(const Phasor& p) { return p.phase() * 180.0 / kPi; }

}  // namespace xtalk
