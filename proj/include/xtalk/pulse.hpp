#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xtalk/device.hpp"
#include "xtalk/phasor.hpp"

namespace xtalk {

enum class PulseShape { square, cosine };

/// Pulse envelope. `cosine` means (A/2)(1 - cos(2 pi t / duration)): zero at
/// both ends, peak A at the midpoint.
struct Envelope {
    PulseShape shape = PulseShape::square;
    double duration_ns = 0.0;
    double amplitude = 0.0;  // dimensionless, >= 0
    double phase_rad = 0.0;

    double value_at(double t_ns) const;  // 0 outside [0, duration)
};

/// One microwave tone emitted on a physical drive line.
struct DriveTone {
    int line = 0;  // qubit id whose line emits it
    double carrier_ghz = 0.0;
    Envelope envelope;
    double start_ns = 0.0;

    double end_ns() const { return start_ns + envelope.duration_ns; }
};

/// Ideal instantaneous rotation applied to the measured qubit: angle about an
/// equatorial axis at `axis_phase` (0 = x, pi/2 = y).
struct ControlPulse {
    double time_ns = 0.0;
    double angle_rad = 0.0;
    double axis_phase_rad = 0.0;
};

struct Sequence {
    std::vector<DriveTone> tones;
    std::vector<ControlPulse> control_pulses;
    double duration_ns = 0.0;
    int measured_qubit = 0;
};

/// A tone as experienced by one qubit after crosstalk resolution.
struct ResolvedTone {
    double carrier_ghz = 0.0;
    Envelope envelope;
    double start_ns = 0.0;

    double end_ns() const { return start_ns + envelope.duration_ns; }
};

/// Spin-echo interference scan: pi/2 - tau - pi - tau - pi/2 on the target,
/// a square test tone on the control line at the control frequency during the
/// second free-evolution half [tau, 2 tau], and a simultaneous compensation
/// copy on the target's own line with relative phasor `comp`.
/// The closing pi/2 is phase-inverted so a fully refocused echo returns the
/// qubit to the excited state (signal maximum at perfect compensation).
Sequence build_echo_scan_sequence(int target, int control, double tau_us,
                                  double test_amplitude, double test_phase_rad,
                                  const Phasor& comp, const DeviceModel& device);

/// Ramsey fringe sequence: pi/2 at t=0, pi/2 at t=delay with phase
/// 2 pi * artificial_detuning * delay; a square test tone on the control line
/// spans the full delay, optionally with a compensation copy as in the echo
/// builder.
Sequence build_ramsey_sequence(int target, int control, double delay_us,
                               double test_amplitude, std::optional<Phasor> comp,
                               double artificial_detuning_mhz, const DeviceModel& device);

/// Calibrated compensation phasors keyed by (control line, target line).
class CompensationMap {
public:
    void set(int control, int target, const Phasor& comp);
    const Phasor* find(int control, int target) const;
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::pair<int, int>, Phasor> entries_;
};

/// One gate pulse of an RB train: a cosine tone of `gate_ns` on the owning
/// qubit's line at its own frequency. amplitude 0 encodes an idle slot.
struct TimedPulse {
    double start_ns = 0.0;
    double amplitude = 0.0;
    double phase_rad = 0.0;
};

using GateTrain = std::vector<TimedPulse>;

/// Assembles per-qubit gate trains (indexed by qubit id) into one sequence.
/// All pulses must sit on the common `gate_ns` grid. When `comp` is given,
/// every tone on line j additionally emits on each other same-band line k a
/// copy at line j's carrier scaled by the compensation phasor for (j -> k).
Sequence build_rb_sequence(const std::vector<GateTrain>& trains, const DeviceModel& device,
                           const CompensationMap* comp = nullptr, double gate_ns = 30.0);

/// Applies the crosstalk matrix: every tone emitted on line j contributes a
/// tone on `qubit` with complex amplitude scaled by C[qubit][j]. Resolved
/// amplitudes below 1e-12 are dropped. Linear in the tone list.
std::vector<ResolvedTone> resolve_qubit_drive(const Sequence& sequence, int qubit,
                                              const DeviceModel& device);

/// Line-oriented text dump (one tone per line), used by golden-file tests.
std::string dump_sequence(const Sequence& sequence);

}  // namespace xtalk
