#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "xtalk/phasor.hpp"

namespace xtalk {

/// Static parameters of one fixed-frequency qubit.
/// Units: frequency GHz, coherence times us, rabi_scale MHz of peak Rabi
/// frequency per unit drive amplitude.
struct QubitSpec {
    int id = 0;
    double frequency_ghz = 0.0;
    double t1_us = 0.0;
    double t2_echo_us = 0.0;
    double t2_ramsey_us = 0.0;
    double rabi_scale_mhz = 0.0;
    std::string band = "default";
};

/// Complex leakage map: entry (target, line) is the phasor with which a
/// signal emitted on `line` arrives at `target`. Diagonal is identically 1.
/// Entries are stored in polar form (magnitude, degrees), the device-file
/// representation, so file round-trips are bit-exact; the cartesian phasor is
/// derived once and cached.
class CrosstalkMatrix {
public:
    CrosstalkMatrix() = default;
    explicit CrosstalkMatrix(int n);

    int size() const { return n_; }
    const Phasor& at(int target, int line) const;
    void set(int target, int line, const Phasor& value);
    void set_polar(int target, int line, double magnitude, double phase_deg);
    double magnitude_of(int target, int line) const;
    double phase_deg_of(int target, int line) const;

private:
    struct Entry {
        double magnitude = 0.0;
        double phase_deg = 0.0;
        Phasor cartesian;
    };
    int n_ = 0;
    std::vector<Entry> entries_;
};

/// The simulated device. Immutable after construction; safe to share across
/// workers. The crosstalk matrix is ground truth for the simulator only --
/// the calibration engine sees it exclusively through measurements.
struct DeviceModel {
    std::string name = "device";
    std::vector<QubitSpec> qubits;
    CrosstalkMatrix crosstalk;
    int readout_shots_default = 1000;
    std::uint64_t rng_seed = 1;
    double spam_error = 0.02;

    int qubit_count() const { return static_cast<int>(qubits.size()); }
    const QubitSpec& qubit(int id) const;
    bool valid_id(int id) const { return id >= 0 && id < qubit_count(); }
    bool same_band(int a, int b) const;

    /// All ordered same-band (control, target) pairs, control != target.
    std::vector<std::pair<int, int>> same_band_pairs() const;
};

/// Checks every type invariant; throws ValidationError naming the violated
/// field on failure.
void validate_device(const DeviceModel& device);

/// Signed detuning frequency[target] - frequency[control], in MHz.
double detuning_mhz(const DeviceModel& device, int target, int control);

DeviceModel parse_device(std::istream& in, const std::string& origin = "<stream>");
DeviceModel load_device(const std::string& path);
std::string format_device(const DeviceModel& device);
void save_device(const DeviceModel& device, const std::string& path);

/// The shipped 7-qubit demo fixture: two interleaved frequency bands near
/// 5.6 and 6.2 GHz and a documented synthetic crosstalk matrix. Identical to
/// devices/demo_7q.device in the repository.
DeviceModel demo_device_7q();

/// Two-qubit fixture with a single crosstalk entry, handy for tests and for
/// the scan/verify walkthroughs in the README.
DeviceModel demo_device_pair();

}  // namespace xtalk
