#include "xtalk/device.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "xtalk/errors.hpp"
#include "xtalk/io_util.hpp"

namespace xtalk {

CrosstalkMatrix::CrosstalkMatrix(int n) : n_(n), entries_(static_cast<size_t>(n) * n) {
    for (int i = 0; i < n; ++i)
        entries_[static_cast<size_t>(i) * n + i] = {1.0, 0.0, Phasor{1.0, 0.0}};
}

const Phasor& CrosstalkMatrix::at(int target, int line) const {
    return entries_[static_cast<size_t>(target) * n_ + line].cartesian;
}

void CrosstalkMatrix::set(int target, int line, const Phasor& value) {
    entries_[static_cast<size_t>(target) * n_ + line] = {value.magnitude(), phase_deg(value),
                                                         value};
}

void CrosstalkMatrix::set_polar(int target, int line, double magnitude, double phase_deg) {
    entries_[static_cast<size_t>(target) * n_ + line] = {
        magnitude, phase_deg, Phasor::polar(magnitude, phase_deg * kPi / 180.0)};
}

double CrosstalkMatrix::magnitude_of(int target, int line) const {
    return entries_[static_cast<size_t>(target) * n_ + line].magnitude;
}

double CrosstalkMatrix::phase_deg_of(int target, int line) const {
    return entries_[static_cast<size_t>(target) * n_ + line].phase_deg;
}

const QubitSpec& DeviceModel::qubit(int id) const {
    if (!valid_id(id)) throw ValidationError("qubit id out of range: " + std::to_string(id));
    return qubits[static_cast<size_t>(id)];
}

bool DeviceModel::same_band(int a, int b) const { return qubit(a).band == qubit(b).band; }

std::vector<std::pair<int, int>> DeviceModel::same_band_pairs() const {
    std::vector<std::pair<int, int>> pairs;
    for (int control = 0; control < qubit_count(); ++control)
        for (int target = 0; target < qubit_count(); ++target)
            if (control != target && same_band(control, target))
                pairs.emplace_back(control, target);
    return pairs;
}

void validate_device(const DeviceModel& device) {
    const int n = device.qubit_count();
    if (n == 0) throw ValidationError("device has no qubits");

    std::set<int> ids;
    for (const QubitSpec& q : device.qubits) ids.insert(q.id);
    if (static_cast<int>(ids.size()) != n || *ids.begin() != 0 || *ids.rbegin() != n - 1)
        throw ValidationError("qubit ids must be unique and dense 0.." + std::to_string(n - 1));

    for (const QubitSpec& q : device.qubits) {
        const std::string tag = "qubit " + std::to_string(q.id) + ": ";
        if (!(q.frequency_ghz > 0)) throw ValidationError(tag + "frequency_ghz must be > 0");
        if (!(q.t1_us > 0)) throw ValidationError(tag + "t1_us must be > 0");
        if (!(q.t2_echo_us > 0)) throw ValidationError(tag + "t2_echo_us must be > 0");
        if (!(q.t2_ramsey_us > 0)) throw ValidationError(tag + "t2_ramsey_us must be > 0");
        if (q.t2_ramsey_us > q.t2_echo_us)
            throw ValidationError(tag + "t2_ramsey_us must not exceed t2_echo_us");
        if (q.t2_echo_us > 2.0 * q.t1_us)
            throw ValidationError(tag + "t2_echo_us must not exceed 2*t1_us");
        if (!(q.rabi_scale_mhz > 0)) throw ValidationError(tag + "rabi_scale_mhz must be > 0");
    }

    if (device.crosstalk.size() != n)
        throw ValidationError("crosstalk matrix size must equal the qubit count");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Phasor& c = device.crosstalk.at(i, j);
            const std::string tag =
                "crosstalk[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            if (!c.is_finite()) throw ValidationError(tag + " must be finite");
            if (i == j) {
                if (c.re != 1.0 || c.im != 0.0)
                    throw ValidationError(tag + ": diagonal entries must be exactly 1");
            } else if (!(c.magnitude() < 1.0)) {
                throw ValidationError(tag + ": off-diagonal magnitude must be < 1");
            }
        }
    }

    if (device.spam_error < 0.0 || device.spam_error > 0.1)
        throw ValidationError("spam_error must lie in [0, 0.1]");
    if (device.readout_shots_default < 1)
        throw ValidationError("readout_shots_default must be >= 1");
}

double detuning_mhz(const DeviceModel& device, int target, int control) {
    if (!device.valid_id(target)) throw ValidationError("invalid target id");
    if (!device.valid_id(control)) throw ValidationError("invalid control id");
    if (target == control) throw ValidationError("detuning requires target != control");
    return (device.qubit(target).frequency_ghz - device.qubit(control).frequency_ghz) * 1000.0;
}

namespace {

struct RawEntry {
    int i = -1;
    int j = -1;
    double magnitude = 0.0;
    double phase_deg = 0.0;
    bool has_i = false, has_j = false, has_mag = false, has_phase = false;
};

double parse_number(const std::string& text, const std::string& context, int line_no) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(context + ": bad number '" + text + "' (line " +
                         std::to_string(line_no) + ")");
    return value;
}

long long parse_integer(const std::string& text, const std::string& context, int line_no) {
    long long value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(context + ": bad integer '" + text + "' (line " +
                         std::to_string(line_no) + ")");
    return value;
}

}  // namespace

DeviceModel parse_device(std::istream& in, const std::string& origin) {
    DeviceModel device;
    device.spam_error = 0.0;

    enum class Section { top, qubit, crosstalk };
    Section section = Section::top;
    std::vector<QubitSpec> qubits;
    std::vector<RawEntry> entries;
    QubitSpec current_qubit;
    RawEntry current_entry;
    bool qubit_open = false, entry_open = false, saw_id = false;

    auto close_qubit = [&] {
        if (!qubit_open) return;
        if (!saw_id) throw ParseError(origin + ": [qubit] section missing 'id'");
        qubits.push_back(current_qubit);
        current_qubit = QubitSpec{};
        qubit_open = false;
        saw_id = false;
    };
    auto close_entry = [&] {
        if (!entry_open) return;
        if (!(current_entry.has_i && current_entry.has_j && current_entry.has_mag &&
              current_entry.has_phase))
            throw ParseError(origin + ": [crosstalk] section needs i, j, magnitude, phase_deg");
        entries.push_back(current_entry);
        current_entry = RawEntry{};
        entry_open = false;
    };

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;

        if (key == "[qubit]") {
            close_qubit();
            close_entry();
            section = Section::qubit;
            qubit_open = true;
            continue;
        }
        if (key == "[crosstalk]") {
            close_qubit();
            close_entry();
            section = Section::crosstalk;
            entry_open = true;
            continue;
        }
        if (key.front() == '[')
            throw ParseError(origin + ": unknown section " + key + " (line " +
                             std::to_string(line_no) + ")");

        std::string value;
        if (!(ls >> value))
            throw ParseError(origin + ": key '" + key + "' has no value (line " +
                             std::to_string(line_no) + ")");
        std::string extra;
        if (ls >> extra)
            throw ParseError(origin + ": trailing token '" + extra + "' (line " +
                             std::to_string(line_no) + ")");

        switch (section) {
            case Section::top:
                if (key == "format_version") {
                    if (parse_integer(value, origin, line_no) != 1)
                        throw ParseError(origin + ": unsupported format_version " + value);
                } else if (key == "name") {
                    device.name = value;
                } else if (key == "spam_error") {
                    device.spam_error = parse_number(value, origin, line_no);
                } else if (key == "rng_seed") {
                    device.rng_seed =
                        static_cast<std::uint64_t>(parse_integer(value, origin, line_no));
                } else if (key == "readout_shots_default") {
                    device.readout_shots_default =
                        static_cast<int>(parse_integer(value, origin, line_no));
                } else {
                    throw ParseError(origin + ": unknown key '" + key + "' (line " +
                                     std::to_string(line_no) + ")");
                }
                break;
            case Section::qubit:
                if (key == "id")
                    current_qubit.id = static_cast<int>(parse_integer(value, origin, line_no)),
                    saw_id = true;
                else if (key == "frequency_ghz")
                    current_qubit.frequency_ghz = parse_number(value, origin, line_no);
                else if (key == "t1_us")
                    current_qubit.t1_us = parse_number(value, origin, line_no);
                else if (key == "t2_echo_us")
                    current_qubit.t2_echo_us = parse_number(value, origin, line_no);
                else if (key == "t2_ramsey_us")
                    current_qubit.t2_ramsey_us = parse_number(value, origin, line_no);
                else if (key == "rabi_scale_mhz")
                    current_qubit.rabi_scale_mhz = parse_number(value, origin, line_no);
                else if (key == "band")
                    current_qubit.band = value;
                else
                    throw ParseError(origin + ": unknown qubit key '" + key + "' (line " +
                                     std::to_string(line_no) + ")");
                break;
            case Section::crosstalk:
                if (key == "i")
                    current_entry.i = static_cast<int>(parse_integer(value, origin, line_no)),
                    current_entry.has_i = true;
                else if (key == "j")
                    current_entry.j = static_cast<int>(parse_integer(value, origin, line_no)),
                    current_entry.has_j = true;
                else if (key == "magnitude")
                    current_entry.magnitude = parse_number(value, origin, line_no),
                    current_entry.has_mag = true;
                else if (key == "phase_deg")
                    current_entry.phase_deg = parse_number(value, origin, line_no),
                    current_entry.has_phase = true;
                else
                    throw ParseError(origin + ": unknown crosstalk key '" + key + "' (line " +
                                     std::to_string(line_no) + ")");
                break;
        }
    }
    close_qubit();
    close_entry();

    if (qubits.empty()) throw ParseError(origin + ": no [qubit] sections");
    std::sort(qubits.begin(), qubits.end(),
              [](const QubitSpec& a, const QubitSpec& b) { return a.id < b.id; });
    device.qubits = std::move(qubits);

    const int n = device.qubit_count();
    device.crosstalk = CrosstalkMatrix(n);
    for (const RawEntry& e : entries) {
        if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
            throw ParseError(origin + ": crosstalk index (" + std::to_string(e.i) + ", " +
                             std::to_string(e.j) + ") out of range");
        if (e.magnitude < 0.0)
            throw ParseError(origin + ": crosstalk magnitude must be >= 0");
        device.crosstalk.set_polar(e.i, e.j, e.magnitude, e.phase_deg);
    }

    validate_device(device);
    return device;
}

DeviceModel load_device(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open device file: " + path);
    return parse_device(in, path);
}

std::string format_device(const DeviceModel& device) {
    std::ostringstream out;
    out << "# device file (format documented in README)\n";
    out << "format_version 1\n";
    out << "name " << device.name << "\n";
    out << "spam_error " << format_double(device.spam_error) << "\n";
    out << "rng_seed " << device.rng_seed << "\n";
    out << "readout_shots_default " << device.readout_shots_default << "\n";
    for (const QubitSpec& q : device.qubits) {
        out << "\n[qubit]\n";
        out << "id " << q.id << "\n";
        out << "frequency_ghz " << format_double(q.frequency_ghz) << "\n";
        out << "t1_us " << format_double(q.t1_us) << "\n";
        out << "t2_echo_us " << format_double(q.t2_echo_us) << "\n";
        out << "t2_ramsey_us " << format_double(q.t2_ramsey_us) << "\n";
        out << "rabi_scale_mhz " << format_double(q.rabi_scale_mhz) << "\n";
        out << "band " << q.band << "\n";
    }
    const int n = device.qubit_count();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (device.crosstalk.magnitude_of(i, j) == 0.0) continue;
            out << "\n[crosstalk]\n";
            out << "i " << i << "\n";
            out << "j " << j << "\n";
            out << "magnitude " << format_double(device.crosstalk.magnitude_of(i, j)) << "\n";
            out << "phase_deg " << format_double(device.crosstalk.phase_deg_of(i, j)) << "\n";
        }
    }
    return out.str();
}

void save_device(const DeviceModel& device, const std::string& path) {
    validate_device(device);
    atomic_write(path, format_device(device));
}

namespace {

QubitSpec make_qubit(int id, double f_ghz, double t1, double t2e, double t2r, double rabi,
                     std::string band) {
    QubitSpec q;
    q.id = id;
    q.frequency_ghz = f_ghz;
    q.t1_us = t1;
    q.t2_echo_us = t2e;
    q.t2_ramsey_us = t2r;
    q.rabi_scale_mhz = rabi;
    q.band = std::move(band);
    return q;
}

}  // namespace

DeviceModel demo_device_7q() {
    // Synthetic 7-qubit chain: odd-indexed qubits sit in the high band near
    // 6.2 GHz (ids 1 and 3 at 6.2718 / 6.2497 GHz, id 5 another 5.5 MHz above
    // id 3), even-indexed ones in the low band near 5.6 GHz with close
    // same-band neighbours. The crosstalk values below are invented; only the
    // frequencies and detunings are meaningful. Qubit 5 is deliberately left
    // with a single cross-band aggressor (line 6), which intra-band
    // compensation cannot address.
    DeviceModel device;
    device.name = "demo-7q";
    device.spam_error = 0.02;
    device.rng_seed = 745001;
    device.readout_shots_default = 1000;
    device.qubits = {
        make_qubit(0, 5.6023, 42.0, 34.0, 15.0, 33.0, "low"),
        make_qubit(1, 6.2718, 38.0, 30.0, 12.0, 33.0, "high"),
        make_qubit(2, 5.6093, 45.0, 40.0, 18.0, 33.0, "low"),
        make_qubit(3, 6.2497, 36.0, 28.0, 11.0, 33.0, "high"),
        make_qubit(4, 5.5852, 30.0, 24.0, 10.0, 33.0, "low"),
        make_qubit(5, 6.2552, 40.0, 32.0, 14.0, 33.0, "high"),
        make_qubit(6, 5.5942, 33.0, 26.0, 9.0, 33.0, "low"),
    };
    device.crosstalk = CrosstalkMatrix(7);
    auto set = [&](int i, int j, double mag, double deg) {
        device.crosstalk.set_polar(i, j, mag, deg);
    };
    // High band.
    set(3, 5, 0.10, 137.0);
    set(3, 1, 0.03, -60.0);
    set(1, 5, 0.08, 25.0);
    set(1, 3, 0.05, 170.0);
    // Low band.
    set(0, 2, 0.07, 80.0);
    set(2, 0, 0.07, -15.0);
    set(4, 6, 0.07, -150.0);
    set(6, 4, 0.06, 10.0);
    set(6, 2, 0.04, -135.0);
    // Cross-band leakage; qubit 5 has no same-band aggressor at all.
    set(5, 6, 0.10, -110.0);
    set(2, 1, 0.02, 45.0);
    set(4, 3, 0.01, -80.0);
    validate_device(device);
    return device;
}

DeviceModel demo_device_pair() {
    DeviceModel device;
    device.name = "demo-pair";
    device.spam_error = 0.02;
    device.rng_seed = 20260808;
    device.readout_shots_default = 1000;
    device.qubits = {
        make_qubit(0, 6.2497, 36.0, 30.0, 12.0, 33.0, "main"),
        make_qubit(1, 6.2718, 38.0, 30.0, 12.0, 33.0, "main"),
    };
    device.crosstalk = CrosstalkMatrix(2);
    device.crosstalk.set_polar(0, 1, 0.05, 30.0);
    device.crosstalk.set_polar(1, 0, 0.04, -120.0);
    validate_device(device);
    return device;
}

}  // namespace xtalk
