#include "xtalk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "xtalk/errors.hpp"

namespace xtalk {

double QubitState::norm() const { return std::sqrt(std::norm(ground) + std::norm(excited)); }

StarkShift analytic_stark_shift(double omega_mhz, double delta_mhz) {
    if (delta_mhz == 0.0)
        throw ValidationError("analytic_stark_shift: zero detuning (resonant case, use the "
                              "Rabi model instead)");
    if (omega_mhz < 0.0) throw ValidationError("analytic_stark_shift: omega must be >= 0");
    // sqrt(o^2 + d^2) - |d| rewritten to avoid cancellation for small omega.
    const double magnitude =
        omega_mhz * omega_mhz / (std::hypot(omega_mhz, delta_mhz) + std::abs(delta_mhz));
    return {std::copysign(magnitude, delta_mhz)};
}

StarkShift approx_stark_shift(double omega_mhz, double delta_mhz) {
    if (delta_mhz == 0.0) throw ValidationError("approx_stark_shift: zero detuning");
    return {omega_mhz * omega_mhz / (2.0 * delta_mhz)};
}

StarkShift dressed_splitting_oracle(double omega_mhz, double delta_mhz) {
    // Jacobi diagonalization of [[0, o/2], [o/2, -d]]. A zero off-diagonal
    // needs no rotation (the matrix is already diagonal); otherwise the
    // rotation angle is theta = atan2(o, d) / 2, and the eigenvalue gap and
    // the bare gap |d| are combined trigonometrically so the small difference
    // never forms via large-number cancellation.
    if (omega_mhz == 0.0) return {0.0};
    const double theta = 0.5 * std::atan2(omega_mhz, delta_mhz);
    const double sin2t = std::sin(2.0 * theta);
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    double shift;
    if (delta_mhz >= 0.0)
        shift = omega_mhz * sin2t - 2.0 * delta_mhz * st * st;
    else
        shift = -omega_mhz * sin2t - 2.0 * delta_mhz * ct * ct;
    return {shift};
}

double rabi_visibility(double omega_mhz, double delta_mhz) {
    const double o2 = omega_mhz * omega_mhz;
    const double d2 = delta_mhz * delta_mhz;
    if (o2 == 0.0 && d2 == 0.0) return 0.0;
    return o2 / (o2 + d2);
}

namespace {

using cd = std::complex<double>;
constexpr cd kImag{0.0, 1.0};
constexpr double kTimeTolNs = 1e-9;

/// One active tone prepared for the inner loop: detuning rotators replace
/// per-sample trigonometry.
struct ActiveTone {
    const ResolvedTone* tone;
    double omega_peak;   // cyclic GHz at unit envelope value
    cd carrier_phase;    // exp(i theta(t)) at the current time
    cd carrier_half;     // advance by half a step
    bool cosine;
    cd env_phase;        // exp(i 2 pi (t - start) / duration)
    cd env_half;
};

struct HalfSample {
    double hx, hy;  // angular GHz (rad/ns), Hamiltonian = hx sx + hy sy
};

inline HalfSample field_at(const std::vector<ActiveTone>& tones, int sub) {
    // sub = 0, 1, 2 for t, t + h/2, t + h.
    HalfSample f{0.0, 0.0};
    for (const ActiveTone& a : tones) {
        cd ph = a.carrier_phase;
        if (sub >= 1) ph *= a.carrier_half;
        if (sub >= 2) ph *= a.carrier_half;
        double env = 1.0;
        if (a.cosine) {
            cd ep = a.env_phase;
            if (sub >= 1) ep *= a.env_half;
            if (sub >= 2) ep *= a.env_half;
            env = 0.5 * (1.0 - ep.real());
        }
        const double strength = kPi * a.omega_peak * env;  // pi * Omega(t)
        f.hx += strength * ph.real();
        f.hy += strength * ph.imag();
    }
    return f;
}

inline void derivative(const HalfSample& f, const cd& g, const cd& e, cd& dg, cd& de) {
    const cd hc{f.hx, f.hy};
    dg = -kImag * std::conj(hc) * e;
    de = -kImag * hc * g;
}

void apply_control_pulse(QubitState& psi, const ControlPulse& pulse) {
    const double c = std::cos(0.5 * pulse.angle_rad);
    const double s = std::sin(0.5 * pulse.angle_rad);
    const cd axis = std::polar(1.0, pulse.axis_phase_rad);
    const cd g = c * psi.ground - kImag * s * std::conj(axis) * psi.excited;
    const cd e = -kImag * s * axis * psi.ground + c * psi.excited;
    psi.ground = g;
    psi.excited = e;
}

}  // namespace

QubitState simulate(std::span<const ResolvedTone> tones, const QubitSpec& qubit,
                    double duration_ns, std::span<const ControlPulse> control_pulses,
                    const SimOptions& opts, SimDiagnostics* diag) {
    if (!(opts.dt_ns > 0.0)) throw ValidationError("simulate: dt must be > 0");
    if (!(duration_ns >= 0.0)) throw ValidationError("simulate: negative duration");

    // RWA validity and step-size preconditions, per tone.
    for (const ResolvedTone& t : tones) {
        const double delta_ghz = qubit.frequency_ghz - t.carrier_ghz;
        if (std::abs(delta_ghz) > 1.0)
            throw ValidationError("simulate: tone detuned by more than 1 GHz from the qubit; "
                                  "the rotating-wave model does not apply");
        const double omega_ghz = qubit.rabi_scale_mhz * 1e-3 * t.envelope.amplitude;
        if (kTwoPi * std::max(std::abs(delta_ghz), omega_ghz) * opts.dt_ns >= 0.1)
            throw ValidationError("simulate: dt too coarse for tone dynamics (need "
                                  "2 pi max(|delta|, omega) dt < 0.1)");
        if (!(t.envelope.duration_ns > 0.0))
            throw ValidationError("simulate: tone with non-positive duration");
    }

    // Event times: tone edges and control pulses split the timeline into
    // intervals with a fixed active-tone set; tone-free intervals cost nothing.
    std::vector<double> events{0.0, duration_ns};
    for (const ResolvedTone& t : tones) {
        if (t.start_ns < duration_ns) events.push_back(std::max(t.start_ns, 0.0));
        events.push_back(std::min(t.end_ns(), duration_ns));
    }
    for (const ControlPulse& p : control_pulses) {
        if (p.time_ns < -kTimeTolNs || p.time_ns > duration_ns + kTimeTolNs)
            throw ValidationError("simulate: control pulse outside the sequence");
        events.push_back(std::clamp(p.time_ns, 0.0, duration_ns));
    }
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end(),
                             [](double a, double b) { return std::abs(a - b) < kTimeTolNs; }),
                 events.end());

    // Sweep state: tone indices sorted by start time enter the active set as
    // the clock passes their start and leave past their end.
    std::vector<size_t> by_start(tones.size());
    for (size_t i = 0; i < by_start.size(); ++i) by_start[i] = i;
    std::sort(by_start.begin(), by_start.end(), [&](size_t a, size_t b) {
        return tones[a].start_ns < tones[b].start_ns;
    });
    size_t next_tone = 0;
    std::vector<size_t> active_idx;

    QubitState psi;
    SimDiagnostics local;
    auto apply_pulses_at = [&](double t) {
        for (const ControlPulse& p : control_pulses)
            if (std::abs(p.time_ns - t) < kTimeTolNs) apply_control_pulse(psi, p);
    };

    apply_pulses_at(events.front());
    for (size_t ev = 0; ev + 1 < events.size(); ++ev) {
        const double t0 = events[ev];
        const double t1 = events[ev + 1];
        const double span = t1 - t0;
        if (span > kTimeTolNs) {
            while (next_tone < by_start.size() &&
                   tones[by_start[next_tone]].start_ns <= t0 + kTimeTolNs)
                active_idx.push_back(by_start[next_tone++]);
            std::erase_if(active_idx,
                          [&](size_t i) { return tones[i].end_ns() <= t0 + kTimeTolNs; });

            std::vector<ActiveTone> active;
            active.reserve(active_idx.size());
            for (size_t idx : active_idx) {
                const ResolvedTone& t = tones[idx];
                if (t.end_ns() < t1 - kTimeTolNs) continue;  // ends inside (numerical fuzz)
                ActiveTone a;
                a.tone = &t;
                a.omega_peak = qubit.rabi_scale_mhz * 1e-3 * t.envelope.amplitude;
                a.cosine = t.envelope.shape == PulseShape::cosine;
                active.push_back(a);
            }
            if (!active.empty()) {
                const long long steps =
                    std::max<long long>(1, static_cast<long long>(std::ceil(span / opts.dt_ns)));
                const double h = span / static_cast<double>(steps);
                for (ActiveTone& a : active) {
                    const double delta_ghz = qubit.frequency_ghz - a.tone->carrier_ghz;
                    a.carrier_phase = std::polar(
                        1.0, kTwoPi * delta_ghz * t0 + a.tone->envelope.phase_rad);
                    a.carrier_half = std::polar(1.0, kTwoPi * delta_ghz * 0.5 * h);
                    a.env_phase = std::polar(
                        1.0, kTwoPi * (t0 - a.tone->start_ns) / a.tone->envelope.duration_ns);
                    a.env_half =
                        std::polar(1.0, kTwoPi * 0.5 * h / a.tone->envelope.duration_ns);
                }
                for (long long step = 0; step < steps; ++step) {
                    const HalfSample f0 = field_at(active, 0);
                    const HalfSample f1 = field_at(active, 1);
                    const HalfSample f2 = field_at(active, 2);

                    cd k1g, k1e, k2g, k2e, k3g, k3e, k4g, k4e;
                    derivative(f0, psi.ground, psi.excited, k1g, k1e);
                    derivative(f1, psi.ground + 0.5 * h * k1g, psi.excited + 0.5 * h * k1e, k2g,
                               k2e);
                    derivative(f1, psi.ground + 0.5 * h * k2g, psi.excited + 0.5 * h * k2e, k3g,
                               k3e);
                    derivative(f2, psi.ground + h * k3g, psi.excited + h * k3e, k4g, k4e);

                    psi.ground += (h / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
                    psi.excited += (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);

                    const double nrm = psi.norm();
                    local.max_norm_drift = std::max(local.max_norm_drift, std::abs(nrm - 1.0));
                    psi.ground /= nrm;
                    psi.excited /= nrm;
                    ++local.steps;

                    for (ActiveTone& a : active) {
                        a.carrier_phase *= a.carrier_half * a.carrier_half;
                        if (a.cosine) a.env_phase *= a.env_half * a.env_half;
                    }
                    if ((step & 0xFFF) == 0xFFF) {
                        // Rotator magnitudes wander by ~1 ulp per product.
                        for (ActiveTone& a : active) {
                            a.carrier_phase /= std::abs(a.carrier_phase);
                            if (a.cosine) a.env_phase /= std::abs(a.env_phase);
                        }
                    }
                }
            }
        }
        apply_pulses_at(t1);
    }

    if (diag) *diag = local;
    return psi;
}

double measure(const QubitState& state, const MeasureContext& ctx, const QubitSpec& qubit,
               const SimOptions& opts) {
    double p = state.excited_population();
    double envelope = 1.0;
    switch (ctx.kind) {
        case MeasureKind::bare:
            break;
        case MeasureKind::echo:
            envelope = std::exp(-2.0 * ctx.time_us / qubit.t2_echo_us);
            break;
        case MeasureKind::ramsey:
            envelope = std::exp(-ctx.time_us / qubit.t2_ramsey_us);
            break;
    }
    p = 0.5 + (p - 0.5) * envelope;
    if (opts.exact_probabilities) return p;

    const double flipped = p * (1.0 - ctx.spam_error) + (1.0 - p) * ctx.spam_error;
    if (opts.shots < 1) throw ValidationError("measure: shots must be >= 1");
    if (!opts.rng) throw ValidationError("measure: missing rng stream");
    const int hits = opts.rng->binomial(opts.shots, flipped);
    return static_cast<double>(hits) / static_cast<double>(opts.shots);
}

}  // namespace xtalk
