#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtalk/device.hpp"
#include "xtalk/dynamics.hpp"
#include "xtalk/phasor.hpp"

namespace xtalk {

/// One echo-scan measurement at compensation setting r.
struct ScanSample {
    Phasor r;
    double signal = 0.0;  // normalized probability in [0, 1]
    double tau_us = 0.0;
};

/// Outcome of calibrating one (control -> target) pair. `comp` is the
/// compensation phasor that cancels the crosstalk (the estimate of -C).
struct CalibrationResult {
    int control = 0;
    int target = 0;
    Phasor comp;
    double residual = 0.0;             // RMS misfit of the final linecut fits
    std::vector<double> tau_schedule;  // strictly increasing, us
    long long evaluations = 0;         // number of measurement settings run
    bool converged = false;
};

struct StarkMatrixEntry {
    int control = 0;
    int target = 0;
    double shift_mhz = 0.0;
};

/// Rectangular grid of phasor points, row-major over (re, im).
std::vector<Phasor> make_phasor_grid(Phasor center, double half_extent, int points_per_axis);

/// Simulates the echo scan at every grid point. Deterministic given the
/// device seed; points evaluate concurrently on independent RNG streams.
std::vector<ScanSample> rings_scan(const DeviceModel& device, int target, int control,
                                   double amplitude, double tau_us,
                                   std::span<const Phasor> grid, const SimOptions& opts);

struct LinecutPoint {
    double x = 0.0;       // coordinate along the scanned axis
    double signal = 0.0;
};

struct LinecutFit {
    double center = 0.0;
    double uncertainty = 0.0;
    double rms_residual = 0.0;
    double contrast = 0.0;
    double offset = 0.0;
};

struct LinecutFitOptions {
    int starts = 7;               // multistart count across the scanned range
    double max_rms = 0.15;        // residual above this throws FitError
    std::optional<double> previous_center;  // tie-break toward continuity
};

/// Least-squares fit of S(x) = off + c cos(2 pi shift(scale |x - x0|) tau)
/// along one scan axis, where shift() is the analytic Stark model with the
/// given drive scale (MHz per unit of x) and detuning. Offset and contrast
/// are free nuisance parameters (SPAM and decay make the ideal contrast
/// unattainable). Requires >= 15 samples; windows holding less than one full
/// fringe still fit through the curvature near the center, with accordingly
/// inflated uncertainty.
LinecutFit fit_linecut(std::span<const LinecutPoint> samples, double drive_scale_mhz,
                       double delta_mhz, double tau_us, const LinecutFitOptions& opts = {});

struct CalibrationConfig {
    double amplitude = 0.5;           // test-pulse amplitude A
    double tau_start_us = 0.5;
    double tau_growth = 2.0;
    double tau_max_us = 4.0;
    double expected_crosstalk = 0.2;  // coarse scan covers 2x this bound
    int coarse_points = 21;           // per axis
    int linecut_points = 41;
    double fringes_per_side = 2.0;    // linecut window sizing
    int shots = 1000;
    int max_iterations = 12;
    double convergence_rel = 1e-3;    // stop when |center update| < this * |center|
};

/// Two-stage search for the compensation phasor of one (control -> target)
/// pair: a coarse grid scan at tau_start locates the interference-ring
/// center, then alternating orthogonal linecut fits refine it while tau grows
/// geometrically (each doubling doubles the phase sensitivity). tau is capped
/// at min(tau_max, T2E/2) to keep echo contrast workable.
CalibrationResult calibrate_pair(const DeviceModel& device, int target, int control,
                                 const CalibrationConfig& config);

struct VerifyPoint {
    double amplitude = 0.0;
    double shift_mhz = 0.0;  // extracted fringe frequency minus the baseline
};

struct VerifyConfig {
    double artificial_detuning_mhz = 0.5;
    double delay_start_us = 0.1;
    double delay_step_us = 0.15;
    int delay_points = 41;
    int shots = 1000;
};

/// Ramsey verification: for each test amplitude, runs a Ramsey fringe scan
/// with the baseline artificial detuning, extracts the fringe frequency
/// (spectral peak, then local quadrature-fit refinement) and returns the
/// shift relative to the baseline. `comp` absent = uncompensated.
std::vector<VerifyPoint> verify_ramsey(const DeviceModel& device, int target, int control,
                                       std::span<const double> amplitudes,
                                       std::optional<Phasor> comp, const VerifyConfig& config);

struct StarkScaleFit {
    double scale_mhz = 0.0;       // fitted Omega per unit amplitude
    double rel_residual = 0.0;    // RMS misfit / RMS shift
};

/// Fits shift(A) = analytic_stark_shift(scale * A, delta) to a verification
/// series with the drive scale as the single free parameter.
StarkScaleFit fit_stark_scale(std::span<const VerifyPoint> series, double delta_mhz);

/// Predicted shift matrix entries from calibrated pairs:
/// entry(control j -> target i) = stark(|comp_ij| * omega0, detuning(i, j)).
/// Throws ValidationError if a requested pair has no calibration.
std::vector<StarkMatrixEntry> stark_matrix(const DeviceModel& device,
                                           std::span<const CalibrationResult> calibrations,
                                           double omega0_mhz);

/// Calibration table file round-trip (CSV with commented header).
std::string format_calibration_table(std::span<const CalibrationResult> results);
std::vector<CalibrationResult> parse_calibration_table(std::istream& in);
std::vector<CalibrationResult> load_calibration_table(const std::string& path);
void save_calibration_table(std::span<const CalibrationResult> results, const std::string& path);

/// Compensation map view of a calibration table (converged entries only).
CompensationMap to_compensation_map(std::span<const CalibrationResult> results);

}  // namespace xtalk
