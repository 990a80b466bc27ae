#include "xtalk/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>

#include "xtalk/errors.hpp"
#include "xtalk/io_util.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/pulse.hpp"

namespace xtalk {

namespace {

constexpr std::uint64_t kScanDomain = 0x7363616eULL;      // "scan"
constexpr std::uint64_t kRamseyDomain = 0x72616d73ULL;    // "rams"

double echo_signal_at(const DeviceModel& device, int target, int control, double amplitude,
                      double tau_us, const Phasor& r, const SimOptions& opts, RngStream* rng) {
    Sequence seq = build_echo_scan_sequence(target, control, tau_us, amplitude, 0.0, r, device);
    const std::vector<ResolvedTone> tones = resolve_qubit_drive(seq, target, device);
    SimOptions local = opts;
    local.rng = rng;
    const QubitState psi =
        simulate(tones, device.qubit(target), seq.duration_ns, seq.control_pulses, local);
    MeasureContext ctx;
    ctx.kind = MeasureKind::echo;
    ctx.time_us = tau_us;
    ctx.spam_error = device.spam_error;
    return measure(psi, ctx, device.qubit(target), local);
}

std::vector<ScanSample> scan_points(const DeviceModel& device, int target, int control,
                                    double amplitude, double tau_us,
                                    std::span<const Phasor> points, const SimOptions& opts,
                                    std::uint64_t stream_salt) {
    std::vector<ScanSample> samples(points.size());
    parallel_for(static_cast<int>(points.size()), [&](int i) {
        RngStream rng = RngStream::child(device.rng_seed, kScanDomain ^ stream_salt,
                                         static_cast<std::uint64_t>(i));
        samples[static_cast<size_t>(i)] = {
            points[static_cast<size_t>(i)],
            echo_signal_at(device, target, control, amplitude, tau_us,
                           points[static_cast<size_t>(i)], opts, &rng),
            tau_us};
    });
    return samples;
}

double linecut_misfit(std::span<const LinecutPoint> samples, double drive_scale_mhz,
                      double abs_delta_mhz, double delta_sign, double tau_us, double center,
                      double* offset_out = nullptr, double* contrast_out = nullptr) {
    // Profile out the linear nuisance parameters (offset, contrast) for a
    // trial center; returns the sum of squared residuals.
    double s_b = 0.0, s_bb = 0.0, s_y = 0.0, s_by = 0.0, s_yy = 0.0;
    const double n = static_cast<double>(samples.size());
    for (const LinecutPoint& pt : samples) {
        const double omega = drive_scale_mhz * std::abs(pt.x - center);
        const double shift =
            analytic_stark_shift(omega, delta_sign * abs_delta_mhz).mhz;
        const double basis = std::cos(kTwoPi * shift * tau_us);
        s_b += basis;
        s_bb += basis * basis;
        s_y += pt.signal;
        s_by += basis * pt.signal;
        s_yy += pt.signal * pt.signal;
    }
    const double det = n * s_bb - s_b * s_b;
    double offset, contrast;
    if (std::abs(det) < 1e-12 * n * n) {
        contrast = 0.0;
        offset = s_y / n;
    } else {
        contrast = (n * s_by - s_b * s_y) / det;
        offset = (s_y - contrast * s_b) / n;
    }
    if (offset_out) *offset_out = offset;
    if (contrast_out) *contrast_out = contrast;
    // SSE expanded to avoid a second pass.
    return std::max(0.0, s_yy - 2.0 * offset * s_y - 2.0 * contrast * s_by + n * offset * offset +
                             2.0 * offset * contrast * s_b + contrast * contrast * s_bb);
}

double golden_minimize(const std::function<double(double)>& f, double lo, double hi, int iters) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

}  // namespace

std::vector<Phasor> make_phasor_grid(Phasor center, double half_extent, int points_per_axis) {
    if (points_per_axis < 1) throw ValidationError("grid needs at least 1 point per axis");
    if (points_per_axis == 1) return {center};
    if (!(half_extent > 0.0)) throw ValidationError("grid half-extent must be > 0");
    std::vector<Phasor> grid;
    grid.reserve(static_cast<size_t>(points_per_axis) * points_per_axis);
    const double step = 2.0 * half_extent / (points_per_axis - 1);
    for (int iy = 0; iy < points_per_axis; ++iy)
        for (int ix = 0; ix < points_per_axis; ++ix)
            grid.push_back({center.re - half_extent + ix * step,
                            center.im - half_extent + iy * step});
    return grid;
}

std::vector<ScanSample> rings_scan(const DeviceModel& device, int target, int control,
                                   double amplitude, double tau_us,
                                   std::span<const Phasor> grid, const SimOptions& opts) {
    if (!(amplitude > 0.0)) throw ValidationError("rings_scan: amplitude must be > 0");
    if (!(tau_us > 0.0)) throw ValidationError("rings_scan: tau must be > 0");
    if (grid.empty()) throw ValidationError("rings_scan: empty grid");
    return scan_points(device, target, control, amplitude, tau_us, grid, opts, 0);
}

LinecutFit fit_linecut(std::span<const LinecutPoint> samples, double drive_scale_mhz,
                       double delta_mhz, double tau_us, const LinecutFitOptions& opts) {
    if (samples.size() < 15)
        throw ValidationError("fit_linecut: need at least 15 samples along the cut");
    if (delta_mhz == 0.0) throw ValidationError("fit_linecut: zero detuning");
    if (!(drive_scale_mhz > 0.0)) throw ValidationError("fit_linecut: drive scale must be > 0");

    double xmin = samples.front().x, xmax = samples.front().x;
    for (const LinecutPoint& pt : samples) {
        xmin = std::min(xmin, pt.x);
        xmax = std::max(xmax, pt.x);
    }
    const double range = xmax - xmin;
    if (!(range > 0.0)) throw ValidationError("fit_linecut: degenerate scan range");

    const double abs_delta = std::abs(delta_mhz);
    const double sign = delta_mhz >= 0.0 ? 1.0 : -1.0;
    auto misfit = [&](double center) {
        return linecut_misfit(samples, drive_scale_mhz, abs_delta, sign, tau_us, center);
    };

    const int starts = std::max(opts.starts, 5);
    std::vector<double> seeds;
    for (int k = 0; k < starts; ++k)
        seeds.push_back(xmin + range * (k + 0.5) / starts);
    if (opts.previous_center) seeds.push_back(*opts.previous_center);

    const double cell = range / starts;
    double best_center = seeds.front();
    double best_sse = std::numeric_limits<double>::infinity();
    for (double seed : seeds) {
        const double local =
            golden_minimize(misfit, seed - cell, seed + cell, 48);
        const double sse = misfit(local);
        const bool better =
            sse < best_sse - 1e-15 ||
            (std::abs(sse - best_sse) <= 1e-15 && opts.previous_center &&
             std::abs(local - *opts.previous_center) < std::abs(best_center - *opts.previous_center));
        if (better) {
            best_sse = sse;
            best_center = local;
        }
    }

    LinecutFit fit;
    fit.center = best_center;
    best_sse = linecut_misfit(samples, drive_scale_mhz, abs_delta, sign, tau_us, best_center,
                              &fit.offset, &fit.contrast);
    const double n = static_cast<double>(samples.size());
    fit.rms_residual = std::sqrt(best_sse / n);
    if (fit.rms_residual > opts.max_rms)
        throw FitError("fit_linecut: residual " + format_double(fit.rms_residual) +
                       " above threshold " + format_double(opts.max_rms) +
                       "; rescan wider or denser");

    // 1-sigma uncertainty from the curvature of the misfit at the optimum.
    const double step = std::max(range * 1e-3, 1e-9);
    const double curvature =
        (misfit(best_center + step) - 2.0 * best_sse + misfit(best_center - step)) /
        (step * step);
    const double variance_floor = best_sse / std::max(n - 3.0, 1.0);
    fit.uncertainty =
        curvature > 0.0 ? std::sqrt(2.0 * variance_floor / curvature) : range;
    return fit;
}

namespace {

/// Linecut half-width holding roughly `fringes` oscillations per side:
/// invert phase = shift(scale w) tau = fringes for w.
double linecut_half_width(double fringes, double tau_us, double abs_delta_mhz,
                          double drive_scale_mhz) {
    const double shift_needed = fringes / tau_us;
    const double omega = std::sqrt(shift_needed * (shift_needed + 2.0 * abs_delta_mhz));
    return omega / drive_scale_mhz;
}

}  // namespace

CalibrationResult calibrate_pair(const DeviceModel& device, int target, int control,
                                 const CalibrationConfig& config) {
    if (!device.valid_id(target) || !device.valid_id(control) || target == control)
        throw ValidationError("calibrate_pair: invalid qubit pair");
    if (!(config.tau_start_us < config.tau_max_us))
        throw ValidationError("calibrate_pair: tau_start must be below tau_max");
    if (!(config.tau_growth > 1.0))
        throw ValidationError("calibrate_pair: tau_growth must exceed 1");
    if (!(config.amplitude > 0.0))
        throw ValidationError("calibrate_pair: amplitude must be > 0");

    const QubitSpec& victim = device.qubit(target);
    const double delta = detuning_mhz(device, target, control);
    if (delta == 0.0)
        throw ValidationError("calibrate_pair: degenerate pair (zero detuning)");
    const double scale = config.amplitude * victim.rabi_scale_mhz;
    const double tau_cap = std::min(config.tau_max_us, 0.5 * victim.t2_echo_us);

    SimOptions opts;
    opts.shots = config.shots;

    CalibrationResult result;
    result.control = control;
    result.target = target;
    std::uint64_t salt = (static_cast<std::uint64_t>(target) << 40) ^
                         (static_cast<std::uint64_t>(control) << 24);

    // Stage 1: coarse grid around zero compensation; the ring center is the
    // neighbourhood-smoothed signal maximum.
    const double extent = 2.0 * config.expected_crosstalk;
    const int np = config.coarse_points;
    const std::vector<Phasor> grid = make_phasor_grid({0.0, 0.0}, extent, np);
    const std::vector<ScanSample> coarse =
        scan_points(device, target, control, config.amplitude, config.tau_start_us, grid, opts,
                    ++salt);
    result.evaluations += static_cast<long long>(coarse.size());

    Phasor center{0.0, 0.0};
    double best_score = -1.0;
    for (int iy = 0; iy < np; ++iy) {
        for (int ix = 0; ix < np; ++ix) {
            double acc = 0.0;
            int cnt = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jx >= np || jy < 0 || jy >= np) continue;
                    acc += coarse[static_cast<size_t>(jy) * np + jx].signal;
                    ++cnt;
                }
            }
            const double score = acc / cnt;
            if (score > best_score) {
                best_score = score;
                center = coarse[static_cast<size_t>(iy) * np + ix].r;
            }
        }
    }

    // Stage 2: alternating orthogonal linecut fits with geometrically growing
    // tau. Each linecut reuses the ring-pattern fit; the window shrinks as
    // fringes speed up.
    double tau = config.tau_start_us;
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
    const double min_width = extent / (np - 1);

    while (true) {
        if (++iterations > config.max_iterations) break;
        const double width = std::clamp(
            linecut_half_width(config.fringes_per_side, tau, std::abs(delta), scale), min_width,
            extent);

        double rms = 0.0;
        Phasor updated = center;
        for (int axis = 0; axis < 2; ++axis) {
            std::vector<Phasor> points(static_cast<size_t>(config.linecut_points));
            std::vector<double> xs(points.size());
            for (size_t k = 0; k < points.size(); ++k) {
                const double x = (axis == 0 ? updated.re : updated.im) - width +
                                 2.0 * width * static_cast<double>(k) /
                                     static_cast<double>(points.size() - 1);
                xs[k] = x;
                points[k] = axis == 0 ? Phasor{x, updated.im} : Phasor{updated.re, x};
            }
            const std::vector<ScanSample> cut = scan_points(
                device, target, control, config.amplitude, tau, points, opts, ++salt);
            result.evaluations += static_cast<long long>(cut.size());

            std::vector<LinecutPoint> data(cut.size());
            for (size_t k = 0; k < cut.size(); ++k) data[k] = {xs[k], cut[k].signal};

            LinecutFitOptions fopts;
            fopts.previous_center = axis == 0 ? updated.re : updated.im;
            const LinecutFit fit = fit_linecut(data, scale, delta, tau, fopts);
            (axis == 0 ? updated.re : updated.im) = fit.center;
            rms = std::max(rms, fit.rms_residual);
        }

        result.tau_schedule.push_back(tau);
        residual = rms;
        const double update = (updated - center).magnitude();
        center = updated;

        if (update < config.convergence_rel * std::max(center.magnitude(), 1e-12)) {
            converged = true;
            break;
        }
        tau *= config.tau_growth;
        if (tau > tau_cap) {
            converged = true;
            break;
        }
    }

    result.comp = center;
    result.residual = residual;
    result.converged = converged;
    return result;
}

std::vector<VerifyPoint> verify_ramsey(const DeviceModel& device, int target, int control,
                                       std::span<const double> amplitudes,
                                       std::optional<Phasor> comp, const VerifyConfig& config) {
    if (amplitudes.size() < 2)
        throw ValidationError("verify_ramsey: need at least 2 amplitudes");
    const double f_art = config.artificial_detuning_mhz;
    const double span_us = config.delay_step_us * (config.delay_points - 1);
    if (!(f_art > 0.0) || span_us * f_art < 2.0)
        throw ValidationError("verify_ramsey: delay grid must span >= 2 periods of the "
                              "artificial detuning");

    SimOptions opts;
    opts.shots = config.shots;
    const QubitSpec& victim = device.qubit(target);

    std::vector<VerifyPoint> series(amplitudes.size());
    parallel_for(static_cast<int>(amplitudes.size()), [&](int ai) {
        const double amplitude = amplitudes[static_cast<size_t>(ai)];
        std::vector<double> delays(static_cast<size_t>(config.delay_points));
        std::vector<double> signal(delays.size());
        for (size_t k = 0; k < delays.size(); ++k) {
            delays[k] = config.delay_start_us + config.delay_step_us * static_cast<double>(k);
            RngStream rng = RngStream::child(
                device.rng_seed, kRamseyDomain ^ (comp ? 0x1000u : 0u) ^ (std::uint64_t(ai) << 20),
                static_cast<std::uint64_t>(k));
            Sequence seq = build_ramsey_sequence(target, control, delays[k], amplitude, comp,
                                                 f_art, device);
            SimOptions local = opts;
            local.rng = &rng;
            const QubitState psi = simulate(resolve_qubit_drive(seq, target, device), victim,
                                            seq.duration_ns, seq.control_pulses, local);
            MeasureContext ctx;
            ctx.kind = MeasureKind::ramsey;
            ctx.time_us = delays[k];
            ctx.spam_error = device.spam_error;
            signal[k] = measure(psi, ctx, victim, local);
        }

        // Coarse periodogram peak, then quadrature-fit refinement of the
        // fringe frequency.
        double mean = 0.0;
        for (double s : signal) mean += s;
        mean /= static_cast<double>(signal.size());

        const double f_nyquist = 0.5 / config.delay_step_us;
        const double f_lo = 0.05 * f_art;
        const double f_hi = 0.98 * f_nyquist;
        const double f_step = 1.0 / (8.0 * span_us);
        double best_f = f_lo, best_power = -1.0;
        for (double f = f_lo; f <= f_hi; f += f_step) {
            double cr = 0.0, ci = 0.0;
            for (size_t k = 0; k < delays.size(); ++k) {
                const double y = signal[k] - mean;
                cr += y * std::cos(kTwoPi * f * delays[k]);
                ci += y * std::sin(kTwoPi * f * delays[k]);
            }
            const double power = cr * cr + ci * ci;
            if (power > best_power) {
                best_power = power;
                best_f = f;
            }
        }
        if (best_f <= f_lo + f_step || best_f >= f_hi - f_step)
            throw FitError("verify_ramsey: fringe extraction failed (peak at scan edge)");

        auto sse_at = [&](double f) {
            double sc = 0.0, ss = 0.0, scc = 0.0, sss = 0.0, scs = 0.0;
            double sy = 0.0, syc = 0.0, sys = 0.0, syy = 0.0;
            const double n = static_cast<double>(delays.size());
            for (size_t k = 0; k < delays.size(); ++k) {
                const double c = std::cos(kTwoPi * f * delays[k]);
                const double s = std::sin(kTwoPi * f * delays[k]);
                const double y = signal[k];
                sc += c;
                ss += s;
                scc += c * c;
                sss += s * s;
                scs += c * s;
                sy += y;
                syc += y * c;
                sys += y * s;
                syy += y * y;
            }
            // Solve the 3x3 normal equations for (offset, a, b) by Cramer.
            const double m[9] = {n, sc, ss, sc, scc, scs, ss, scs, sss};
            const double rhs[3] = {sy, syc, sys};
            const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                               m[1] * (m[3] * m[8] - m[5] * m[6]) +
                               m[2] * (m[3] * m[7] - m[4] * m[6]);
            if (std::abs(det) < 1e-12) return syy;
            const double d0 = rhs[0] * (m[4] * m[8] - m[5] * m[7]) -
                              m[1] * (rhs[1] * m[8] - m[5] * rhs[2]) +
                              m[2] * (rhs[1] * m[7] - m[4] * rhs[2]);
            const double d1 = m[0] * (rhs[1] * m[8] - rhs[2] * m[5]) -
                              rhs[0] * (m[3] * m[8] - m[5] * m[6]) +
                              m[2] * (m[3] * rhs[2] - rhs[1] * m[6]);
            const double d2 = m[0] * (m[4] * rhs[2] - m[7] * rhs[1]) -
                              m[1] * (m[3] * rhs[2] - m[6] * rhs[1]) +
                              rhs[0] * (m[3] * m[7] - m[4] * m[6]);
            const double off = d0 / det, a = d1 / det, b = d2 / det;
            double sse = 0.0;
            for (size_t k = 0; k < delays.size(); ++k) {
                const double model = off + a * std::cos(kTwoPi * f * delays[k]) +
                                     b * std::sin(kTwoPi * f * delays[k]);
                const double r = signal[k] - model;
                sse += r * r;
            }
            return sse;
        };
        const double refined =
            golden_minimize(sse_at, best_f - 2.0 * f_step, best_f + 2.0 * f_step, 60);
        series[static_cast<size_t>(ai)] = {amplitude, refined - f_art};
    });
    return series;
}

StarkScaleFit fit_stark_scale(std::span<const VerifyPoint> series, double delta_mhz) {
    if (series.size() < 2) throw ValidationError("fit_stark_scale: need >= 2 points");
    if (delta_mhz == 0.0) throw ValidationError("fit_stark_scale: zero detuning");

    double max_abs_shift = 0.0, max_amp = 0.0, rms_shift = 0.0;
    for (const VerifyPoint& p : series) {
        max_abs_shift = std::max(max_abs_shift, std::abs(p.shift_mhz));
        max_amp = std::max(max_amp, std::abs(p.amplitude));
        rms_shift += p.shift_mhz * p.shift_mhz;
    }
    rms_shift = std::sqrt(rms_shift / static_cast<double>(series.size()));
    if (!(max_amp > 0.0)) throw ValidationError("fit_stark_scale: all amplitudes zero");

    const double omega_needed =
        std::sqrt(max_abs_shift * (max_abs_shift + 2.0 * std::abs(delta_mhz)));
    const double hi = std::max(3.0 * omega_needed / max_amp, 1e-3);
    auto sse_at = [&](double scale) {
        double sse = 0.0;
        for (const VerifyPoint& p : series) {
            const double model =
                analytic_stark_shift(scale * std::abs(p.amplitude), delta_mhz).mhz;
            const double r = p.shift_mhz - model;
            sse += r * r;
        }
        return sse;
    };
    const double scale = golden_minimize(sse_at, 0.0, hi, 70);
    StarkScaleFit fit;
    fit.scale_mhz = scale;
    const double rms_misfit = std::sqrt(sse_at(scale) / static_cast<double>(series.size()));
    fit.rel_residual = rms_shift > 0.0 ? rms_misfit / rms_shift : rms_misfit;
    return fit;
}

std::vector<StarkMatrixEntry> stark_matrix(const DeviceModel& device,
                                           std::span<const CalibrationResult> calibrations,
                                           double omega0_mhz) {
    if (!(omega0_mhz > 0.0)) throw ValidationError("stark_matrix: omega0 must be > 0");
    std::vector<StarkMatrixEntry> entries;
    for (const auto& [control, target] : device.same_band_pairs()) {
        const CalibrationResult* found = nullptr;
        for (const CalibrationResult& r : calibrations)
            if (r.control == control && r.target == target) found = &r;
        if (!found)
            throw ValidationError("stark_matrix: missing calibration for pair (control " +
                                  std::to_string(control) + " -> target " +
                                  std::to_string(target) + ")");
        const double omega = found->comp.magnitude() * omega0_mhz;
        const double delta = detuning_mhz(device, target, control);
        entries.push_back({control, target, analytic_stark_shift(omega, delta).mhz});
    }
    return entries;
}

std::string format_calibration_table(std::span<const CalibrationResult> results) {
    std::ostringstream out;
    out << "control,target,comp_magnitude,comp_phase_deg,residual,evaluations,converged\n";
    for (const CalibrationResult& r : results) {
        out << r.control << ',' << r.target << ',' << format_double(r.comp.magnitude()) << ','
            << format_double(phase_deg(r.comp)) << ',' << format_double(r.residual) << ','
            << r.evaluations << ',' << (r.converged ? 1 : 0) << '\n';
    }
    return out.str();
}

std::vector<CalibrationResult> parse_calibration_table(std::istream& in) {
    std::vector<CalibrationResult> results;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header
            continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw ParseError("calibration table line " + std::to_string(line_no) +
                             ": expected 7 fields");
        auto num = [&](int idx) {
            double v = 0.0;
            const std::string& s = fields[static_cast<size_t>(idx)];
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                throw ParseError("calibration table line " + std::to_string(line_no) +
                                 ": bad number '" + s + "'");
            return v;
        };
        CalibrationResult r;
        r.control = static_cast<int>(num(0));
        r.target = static_cast<int>(num(1));
        r.comp = Phasor::polar(num(2), num(3) * kPi / 180.0);
        r.residual = num(4);
        r.evaluations = static_cast<long long>(num(5));
        r.converged = num(6) != 0.0;
        results.push_back(r);
    }
    if (!header_seen) throw ParseError("calibration table: missing header line");
    return results;
}

std::vector<CalibrationResult> load_calibration_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open calibration table: " + path);
    return parse_calibration_table(in);
}

void save_calibration_table(std::span<const CalibrationResult> results,
                            const std::string& path) {
    atomic_write(path, format_calibration_table(results));
}

CompensationMap to_compensation_map(std::span<const CalibrationResult> results) {
    CompensationMap map;
    for (const CalibrationResult& r : results)
        if (r.converged) map.set(r.control, r.target, r.comp);
    return map;
}

}  // namespace xtalk
