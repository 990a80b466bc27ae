#include "xtalk/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <sstream>
#include <unordered_map>

#include "xtalk/errors.hpp"
#include "xtalk/io_util.hpp"

namespace xtalk {

double Envelope::value_at(double t_ns) const {
    if (t_ns < 0.0 || t_ns >= duration_ns) return 0.0;
    switch (shape) {
        case PulseShape::square:
            return amplitude;
        case PulseShape::cosine:
            return 0.5 * amplitude * (1.0 - std::cos(kTwoPi * t_ns / duration_ns));
    }
    return 0.0;
}

namespace {

constexpr double kResolvedAmplitudeFloor = 1e-12;

DriveTone square_tone(int line, double carrier_ghz, double start_ns, double duration_ns,
                      double amplitude, double phase_rad) {
    DriveTone tone;
    tone.line = line;
    tone.carrier_ghz = carrier_ghz;
    tone.start_ns = start_ns;
    tone.envelope = {PulseShape::square, duration_ns, amplitude, phase_rad};
    return tone;
}

void check_pair(const DeviceModel& device, int target, int control) {
    if (!device.valid_id(target)) throw ValidationError("invalid target id");
    if (!device.valid_id(control)) throw ValidationError("invalid control id");
    if (target == control) throw ValidationError("target and control must differ");
}

}  // namespace

Sequence build_echo_scan_sequence(int target, int control, double tau_us,
                                  double test_amplitude, double test_phase_rad,
                                  const Phasor& comp, const DeviceModel& device) {
    check_pair(device, target, control);
    if (!(tau_us > 0.0)) throw ValidationError("tau must be > 0");

    const double tau_ns = tau_us * 1000.0;
    const double f_control = device.qubit(control).frequency_ghz;

    Sequence seq;
    seq.measured_qubit = target;
    seq.duration_ns = 2.0 * tau_ns;
    seq.control_pulses = {
        {0.0, kPi / 2.0, 0.0},
        {tau_ns, kPi, 0.0},
        {2.0 * tau_ns, kPi / 2.0, kPi},  // inverted so full refocus ends excited
    };

    // Test tone on the control line during the second half only.
    seq.tones.push_back(
        square_tone(control, f_control, tau_ns, tau_ns, test_amplitude, test_phase_rad));
    // Compensation copy on the target's own line, scaled and rotated by comp.
    const double comp_amplitude = comp.magnitude() * test_amplitude;
    if (comp_amplitude > 0.0)
        seq.tones.push_back(square_tone(target, f_control, tau_ns, tau_ns, comp_amplitude,
                                        test_phase_rad + comp.phase()));
    return seq;
}

Sequence build_ramsey_sequence(int target, int control, double delay_us,
                               double test_amplitude, std::optional<Phasor> comp,
                               double artificial_detuning_mhz, const DeviceModel& device) {
    check_pair(device, target, control);
    if (!(delay_us > 0.0)) throw ValidationError("delay must be > 0");

    const double delay_ns = delay_us * 1000.0;
    const double f_control = device.qubit(control).frequency_ghz;

    Sequence seq;
    seq.measured_qubit = target;
    seq.duration_ns = delay_ns;
    seq.control_pulses = {
        {0.0, kPi / 2.0, 0.0},
        {delay_ns, kPi / 2.0, kTwoPi * artificial_detuning_mhz * delay_us},
    };

    if (test_amplitude > 0.0) {
        seq.tones.push_back(square_tone(control, f_control, 0.0, delay_ns, test_amplitude, 0.0));
        if (comp) {
            const double comp_amplitude = comp->magnitude() * test_amplitude;
            if (comp_amplitude > 0.0)
                seq.tones.push_back(
                    square_tone(target, f_control, 0.0, delay_ns, comp_amplitude, comp->phase()));
        }
    }
    return seq;
}

void CompensationMap::set(int control, int target, const Phasor& comp) {
    entries_[{control, target}] = comp;
}

const Phasor* CompensationMap::find(int control, int target) const {
    auto it = entries_.find({control, target});
    return it == entries_.end() ? nullptr : &it->second;
}

Sequence build_rb_sequence(const std::vector<GateTrain>& trains, const DeviceModel& device,
                           const CompensationMap* comp, double gate_ns) {
    if (static_cast<int>(trains.size()) > device.qubit_count())
        throw ValidationError("more gate trains than qubits");

    Sequence seq;
    seq.measured_qubit = 0;
    double end = 0.0;
    for (int line = 0; line < static_cast<int>(trains.size()); ++line) {
        const double f_line = device.qubit(line).frequency_ghz;
        for (const TimedPulse& pulse : trains[line]) {
            const double slots = pulse.start_ns / gate_ns;
            if (std::abs(slots - std::round(slots)) > 1e-9)
                throw ValidationError("gate train misaligned with the " +
                                      format_double(gate_ns) + " ns grid on line " +
                                      std::to_string(line));
            end = std::max(end, pulse.start_ns + gate_ns);
            if (pulse.amplitude <= 0.0) continue;  // idle slot

            DriveTone tone;
            tone.line = line;
            tone.carrier_ghz = f_line;
            tone.start_ns = pulse.start_ns;
            tone.envelope = {PulseShape::cosine, gate_ns, pulse.amplitude, pulse.phase_rad};
            seq.tones.push_back(tone);

            if (!comp) continue;
            for (int other = 0; other < device.qubit_count(); ++other) {
                if (other == line || !device.same_band(other, line)) continue;
                const Phasor* c = comp->find(line, other);
                if (!c) continue;
                const double amp = c->magnitude() * pulse.amplitude;
                if (amp <= 0.0) continue;
                DriveTone copy = tone;
                copy.line = other;
                copy.envelope.amplitude = amp;
                copy.envelope.phase_rad = pulse.phase_rad + c->phase();
                seq.tones.push_back(copy);
            }
        }
    }
    seq.duration_ns = end;
    return seq;
}

std::vector<ResolvedTone> resolve_qubit_drive(const Sequence& sequence, int qubit,
                                              const DeviceModel& device) {
    if (!device.valid_id(qubit)) throw ValidationError("invalid qubit id");

    // Tones sharing carrier, start, shape and duration add coherently;
    // accumulate their complex amplitudes before thresholding so exactly
    // cancelling pairs drop out.
    struct Slot {
        double carrier_ghz;
        PulseShape shape;
        double start_ns;
        double duration_ns;
        std::complex<double> amplitude;
    };
    std::unordered_map<std::uint64_t, std::vector<size_t>> index;  // by start bits
    std::vector<Slot> slots;
    for (const DriveTone& tone : sequence.tones) {
        const Phasor& c = device.crosstalk.at(qubit, tone.line);
        const std::complex<double> amp =
            std::polar(tone.envelope.amplitude, tone.envelope.phase_rad) * c.to_complex();
        std::uint64_t key;
        std::memcpy(&key, &tone.start_ns, sizeof key);
        bool merged = false;
        auto& bucket = index[key];
        for (size_t si : bucket) {
            Slot& s = slots[si];
            if (s.carrier_ghz == tone.carrier_ghz && s.shape == tone.envelope.shape &&
                s.duration_ns == tone.envelope.duration_ns) {
                s.amplitude += amp;
                merged = true;
                break;
            }
        }
        if (!merged) {
            bucket.push_back(slots.size());
            slots.push_back({tone.carrier_ghz, tone.envelope.shape, tone.start_ns,
                             tone.envelope.duration_ns, amp});
        }
    }

    std::vector<ResolvedTone> resolved;
    for (const Slot& s : slots) {
        const double magnitude = std::abs(s.amplitude);
        if (magnitude < kResolvedAmplitudeFloor) continue;
        ResolvedTone r;
        r.carrier_ghz = s.carrier_ghz;
        r.start_ns = s.start_ns;
        r.envelope = {s.shape, s.duration_ns, magnitude, std::arg(s.amplitude)};
        resolved.push_back(r);
    }
    std::sort(resolved.begin(), resolved.end(),
              [](const ResolvedTone& a, const ResolvedTone& b) {
                  return a.start_ns < b.start_ns;
              });
    return resolved;
}

std::string dump_sequence(const Sequence& sequence) {
    std::ostringstream out;
    out << "# line carrier_ghz shape start_ns duration_ns amplitude phase_rad\n";
    for (const DriveTone& t : sequence.tones) {
        out << t.line << ' ' << format_double(t.carrier_ghz) << ' '
            << (t.envelope.shape == PulseShape::square ? "square" : "cosine") << ' '
            << format_double(t.start_ns) << ' ' << format_double(t.envelope.duration_ns) << ' '
            << format_double(t.envelope.amplitude) << ' ' << format_double(t.envelope.phase_rad)
            << '\n';
    }
    return out.str();
}

}  // namespace xtalk
