#pragma once

#include <complex>
#include <span>

#include "xtalk/device.hpp"
#include "xtalk/pulse.hpp"
#include "xtalk/rng.hpp"

namespace xtalk {

/// Pure state of a driven two-level qubit in the frame rotating at its own
/// frequency. Norm is held at 1 (renormalized each integration step).
struct QubitState {
    std::complex<double> ground{1.0, 0.0};
    std::complex<double> excited{0.0, 0.0};

    double excited_population() const { return std::norm(excited); }
    double norm() const;
};

struct SimOptions {
    double dt_ns = 0.1;
    int shots = 1000;
    RngStream* rng = nullptr;     // required unless exact_probabilities
    bool exact_probabilities = false;  // skip SPAM and shot sampling (tests)
};

/// Effective-frequency shift of a driven qubit, MHz, cyclic, signed.
struct StarkShift {
    double mhz = 0.0;
};

/// Stark shift of the qubit transition under an off-resonant drive:
/// sgn(delta) * (sqrt(omega^2 + delta^2) - |delta|), omega and delta in MHz
/// (cyclic), delta = f_qubit - f_drive. Throws ValidationError at delta == 0
/// (resonant case; use the Rabi model instead).
StarkShift analytic_stark_shift(double omega_mhz, double delta_mhz);

/// Weak-drive approximation omega^2 / (2 delta); same domain restriction.
StarkShift approx_stark_shift(double omega_mhz, double delta_mhz);

/// Independent route to the same number: diagonalizes the 2x2 rotating-frame
/// Hamiltonian [[0, omega/2], [omega/2, -delta]] by Jacobi rotation and reads
/// the dressed-level splitting off the eigenvalues. Agrees with
/// analytic_stark_shift to 1e-10 relative.
StarkShift dressed_splitting_oracle(double omega_mhz, double delta_mhz);

/// Visibility of off-resonant Rabi oscillations, omega^2/(omega^2 + delta^2).
/// Approaches (omega/delta)^2 for omega << |delta| and 1 on resonance.
double rabi_visibility(double omega_mhz, double delta_mhz);

struct SimDiagnostics {
    double max_norm_drift = 0.0;  // max |norm - 1| before renormalization
    long long steps = 0;
};

/// Integrates i d|psi>/dt = H(t)|psi> in the frame rotating at the qubit
/// frequency under the rotating-wave approximation. Each resolved tone with
/// carrier detuned by delta_k = f_qubit - f_carrier contributes
///   (Omega_k(t)/2) [cos(2 pi delta_k t + phi_k) sx + sin(...) sy],
/// Omega_k(t) = rabi_scale * envelope_k(t). Ideal control pulses are applied
/// instantaneously at their scheduled times. Fixed-step RK4; tone-free gaps
/// are skipped (H = 0 there).
///
/// Preconditions (checked): 2 pi max(|delta_k|, Omega_k) dt < 0.1 for every
/// tone, and every carrier within 1 GHz of the qubit (RWA validity).
QubitState simulate(std::span<const ResolvedTone> tones, const QubitSpec& qubit,
                    double duration_ns, std::span<const ControlPulse> control_pulses,
                    const SimOptions& opts, SimDiagnostics* diag = nullptr);

enum class MeasureKind { bare, echo, ramsey };

struct MeasureContext {
    MeasureKind kind = MeasureKind::bare;
    double time_us = 0.0;          // tau for echo, delay for ramsey
    double spam_error = 0.0;       // symmetric readout flip probability
};

/// Estimated excited-state probability: ideal |excited|^2, contrast mixed
/// toward 1/2 by the coherence envelope (echo: exp(-2 tau / T2E), ramsey:
/// exp(-delay / T2R)), SPAM flip applied, then a binomial sample mean over
/// opts.shots. With opts.exact_probabilities the enveloped probability is
/// returned directly.
double measure(const QubitState& state, const MeasureContext& ctx, const QubitSpec& qubit,
               const SimOptions& opts);

}  // namespace xtalk
