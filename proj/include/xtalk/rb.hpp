#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtalk/calibration.hpp"
#include "xtalk/device.hpp"
#include "xtalk/rng.hpp"

namespace xtalk {

/// Physical pulse alphabet for Clifford decompositions. Each entry is one
/// 30 ns cosine pulse on the qubit's own line (Idle = empty slot).
enum class PulsePrimitive { Idle, X90, Xm90, X180, Y90, Ym90, Y180 };

struct Mat2 {
    std::array<std::complex<double>, 4> m{};  // row-major 2x2
    Mat2 operator*(const Mat2& o) const;
};

/// The 24-element single-qubit Clifford group with minimal-length
/// decompositions over {X+-90, Y+-90, X180, Y180}, generated once by
/// breadth-first search so every decomposition reproduces its element's
/// rotation exactly (up to global phase). Index 0 is the identity.
class CliffordGroup {
public:
    static const CliffordGroup& instance();

    static constexpr int size = 24;

    int compose(int after, int before) const { return compose_[after * size + before]; }
    int inverse(int element) const { return inverse_[element]; }
    const std::vector<PulsePrimitive>& decomposition(int element) const;
    const Mat2& matrix(int element) const { return matrices_[element]; }

    /// Average physical pulses per element, idle-implemented identity included.
    double average_pulses() const;

private:
    CliffordGroup();
    std::vector<Mat2> matrices_;
    std::vector<std::vector<PulsePrimitive>> decompositions_;
    std::vector<int> compose_;
    std::vector<int> inverse_;
};

/// m uniform random Clifford indices plus the unique recovery element whose
/// composition with the sequence is the identity (returned last).
std::vector<int> sample_clifford_sequence(int m, RngStream& rng);

enum class RBMode { separate, simultaneous_raw, simultaneous_compensated };

std::string to_string(RBMode mode);

struct RBConfig {
    std::vector<int> lengths = {2, 4, 8, 16, 32, 64, 128, 256};
    int sequences_per_length = 12;
    int shots = 1000;
    double gate_ns = 30.0;
    /// Depolarizing strength per Clifford (recovery included); the default
    /// puts the separate-mode error per gate near 0.2%.
    double gate_depol = 0.004;
    double max_dt_ns = 0.1;  // integrator step, refined per qubit as needed
};

struct RBResult {
    int qubit = 0;
    RBMode mode = RBMode::separate;
    std::vector<int> lengths;
    std::vector<double> survival;       // mean recovery probability per length
    std::vector<double> survival_var;   // variance of the per-sequence means
    double p = 0.0;                     // decay parameter of A p^m + B
    double epg = 0.0;                   // (1 - p) / 2
    double fit_ci = 0.0;                // 1-sigma half-width on epg
};

/// Randomized benchmarking over the given qubits. `separate` runs one qubit
/// at a time with all other lines silent; the simultaneous modes align every
/// qubit's pulses on a shared 30 ns grid (slots pad to the widest Clifford in
/// play, the worst case for tone overlap). Clifford draws depend on
/// (seed, qubit, length, sequence) but not on the mode, so mode comparisons
/// are paired. Throws ValidationError if `comp` is missing in compensated
/// mode.
std::vector<RBResult> run_rb(const DeviceModel& device, std::span<const int> qubits,
                             RBMode mode, const RBConfig& config,
                             const CompensationMap* comp = nullptr);

struct RBDecayFit {
    double p = 0.0;
    double epg = 0.0;
    double fit_ci = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// Weighted least squares of F(m) = A p^m + B with 0 < p <= 1 and B held
/// near the depolarized baseline. Variances of the per-length means weight
/// the residuals (zero variance = unweighted).
RBDecayFit fit_rb_decay(std::span<const int> lengths, std::span<const double> survival,
                        std::span<const double> variance);

/// Fraction of the crosstalk-induced EPG excess removed by compensation:
/// 100 (raw - comp) / (raw - separate). Empty when raw <= separate (no
/// excess to attribute, the ratio is undefined).
std::optional<double> crosstalk_error_reduction(double separate_epg, double raw_epg,
                                                double comp_epg);

/// Raw per-sequence survival export (mode, qubit, m, sequence, survival).
struct RBRawRecord {
    RBMode mode;
    int qubit;
    int length;
    int sequence;
    double survival;
};

/// As run_rb, but also fills `raw_records` for columnar export.
std::vector<RBResult> run_rb_collect(const DeviceModel& device, std::span<const int> qubits,
                                     RBMode mode, const RBConfig& config,
                                     const CompensationMap* comp,
                                     std::vector<RBRawRecord>* raw_records);

}  // namespace xtalk
