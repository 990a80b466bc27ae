// Campaign runner: loads a device file, runs scans / calibration / Ramsey
// verification / randomized benchmarking, and writes plot-ready CSV files.
// All output files carry a self-describing header (device hash, seed,
// parameters) and are written atomically, so a failed command leaves nothing
// behind and identical configs produce byte-identical outputs.

#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xtalk/calibration.hpp"
#include "xtalk/device.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/io_util.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/rb.hpp"

namespace {

using namespace xtalk;

struct CommonArgs {
    std::string device_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--device", args.device_path, "device file")->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "override the device rng seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--workers", args.workers, "worker threads (0 = machine parallelism)");
}

DeviceModel open_device(const CommonArgs& args) {
    DeviceModel device = load_device(args.device_path);
    if (args.seed_given) device.rng_seed = args.seed;
    set_worker_count(args.workers);
    return device;
}

std::string header_block(const std::string& command, const CommonArgs& args,
                         const DeviceModel& device, const std::string& parameters) {
    std::ostringstream out;
    out << "# xtalksim " << command << "\n";
    out << "# device: " << args.device_path << " fnv1a64=" << file_hash_hex(args.device_path)
        << "\n";
    out << "# seed: " << device.rng_seed << "\n";
    out << "# parameters: " << parameters << "\n";
    return out.str();
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

// ---------------------------------------------------------------------------

struct ScanArgs {
    CommonArgs common;
    int target = 0;
    int control = 1;
    double amplitude = 0.5;
    std::vector<double> taus = {2.5};
    int grid_points = 41;
    double extent = 0.15;
    double center_re = 0.0;
    double center_im = 0.0;
    std::string linecut_axis;  // "re" or "im"; empty = full 2D grid
    double linecut_fixed = 0.0;
    int linecut_points = 81;
    int shots = 1000;
};

int cmd_scan(const ScanArgs& args) {
    DeviceModel device = open_device(args.common);
    SimOptions opts;
    opts.shots = args.shots;

    std::ostringstream params;
    params << "target=" << args.target << " control=" << args.control
           << " amplitude=" << format_double(args.amplitude) << " shots=" << args.shots;

    std::ostringstream body;
    if (args.linecut_axis.empty()) {
        if (args.taus.size() != 1)
            throw ValidationError("grid mode expects exactly one --tau");
        const std::vector<Phasor> grid =
            make_phasor_grid({args.center_re, args.center_im}, args.extent, args.grid_points);
        const std::vector<ScanSample> samples = rings_scan(
            device, args.target, args.control, args.amplitude, args.taus[0], grid, opts);
        params << " mode=grid tau_us=" << format_double(args.taus[0])
               << " grid=" << args.grid_points << " extent=" << format_double(args.extent)
               << " center=(" << format_double(args.center_re) << ","
               << format_double(args.center_im) << ")";
        body << "r_re,r_im,signal\n";
        for (const ScanSample& s : samples)
            body << format_double(s.r.re) << ',' << format_double(s.r.im) << ','
                 << format_double(s.signal) << '\n';
    } else {
        if (args.linecut_axis != "re" && args.linecut_axis != "im")
            throw ValidationError("--linecut must be 're' or 'im'");
        if (args.linecut_points < 2) throw ValidationError("--linecut-points must be >= 2");
        for (double tau : args.taus)
            if (!(tau > 0.0)) throw ValidationError("tau values must be > 0");
        params << " mode=linecut axis=" << args.linecut_axis
               << " fixed=" << format_double(args.linecut_fixed)
               << " extent=" << format_double(args.extent)
               << " points=" << args.linecut_points << " taus=";
        for (size_t i = 0; i < args.taus.size(); ++i)
            params << (i ? ";" : "") << format_double(args.taus[i]);
        body << "axis_value,tau_us,signal\n";
        for (double tau : args.taus) {
            std::vector<Phasor> points(static_cast<size_t>(args.linecut_points));
            for (int k = 0; k < args.linecut_points; ++k) {
                const double x = args.center_re - args.extent +
                                 2.0 * args.extent * k / (args.linecut_points - 1);
                points[static_cast<size_t>(k)] = args.linecut_axis == "re"
                                                     ? Phasor{x, args.linecut_fixed}
                                                     : Phasor{args.linecut_fixed, x};
            }
            const std::vector<ScanSample> samples = rings_scan(
                device, args.target, args.control, args.amplitude, tau, points, opts);
            for (size_t k = 0; k < samples.size(); ++k) {
                const double x = args.linecut_axis == "re" ? samples[k].r.re : samples[k].r.im;
                body << format_double(x) << ',' << format_double(tau) << ','
                     << format_double(samples[k].signal) << '\n';
            }
        }
    }

    const std::string name = args.linecut_axis.empty() ? "scan_grid.csv" : "scan_linecut.csv";
    atomic_write(join_path(args.common.out_dir, name),
                 header_block("scan", args.common, device, params.str()) + body.str());
    std::cout << "wrote " << join_path(args.common.out_dir, name) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    CommonArgs common;
    CalibrationConfig config;
    std::vector<std::string> pairs;  // "control:target"; empty = all same-band
};

int cmd_calibrate(const CalibrateArgs& args) {
    DeviceModel device = open_device(args.common);

    std::vector<std::pair<int, int>> pairs;
    if (args.pairs.empty()) {
        pairs = device.same_band_pairs();
    } else {
        for (const std::string& spec : args.pairs) {
            const auto colon = spec.find(':');
            if (colon == std::string::npos)
                throw ValidationError("--pair expects control:target");
            pairs.emplace_back(std::stoi(spec.substr(0, colon)),
                               std::stoi(spec.substr(colon + 1)));
        }
    }

    std::vector<CalibrationResult> results;
    for (const auto& [control, target] : pairs)
        results.push_back(calibrate_pair(device, target, control, args.config));

    std::ostringstream params;
    params << "amplitude=" << format_double(args.config.amplitude)
           << " tau_start=" << format_double(args.config.tau_start_us)
           << " tau_growth=" << format_double(args.config.tau_growth)
           << " tau_max=" << format_double(args.config.tau_max_us)
           << " coarse_points=" << args.config.coarse_points
           << " expected_crosstalk=" << format_double(args.config.expected_crosstalk)
           << " linecut_points=" << args.config.linecut_points
           << " shots=" << args.config.shots << " pairs=" << pairs.size();

    const std::string path = join_path(args.common.out_dir, "calibration.csv");
    atomic_write(path, header_block("calibrate", args.common, device, params.str()) +
                           format_calibration_table(results));
    std::cout << "wrote " << path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    CommonArgs common;
    int target = 0;
    int control = 1;
    std::string table_path;
    std::vector<double> amplitudes = {0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0};
    VerifyConfig config;
};

int cmd_verify(const VerifyArgs& args) {
    DeviceModel device = open_device(args.common);
    const std::vector<CalibrationResult> table = load_calibration_table(args.table_path);

    const Phasor* comp = nullptr;
    for (const CalibrationResult& r : table)
        if (r.control == args.control && r.target == args.target) comp = &r.comp;
    if (!comp)
        throw ValidationError("calibration table has no entry for control " +
                              std::to_string(args.control) + " -> target " +
                              std::to_string(args.target));

    const auto uncompensated = verify_ramsey(device, args.target, args.control,
                                             args.amplitudes, std::nullopt, args.config);
    const auto compensated = verify_ramsey(device, args.target, args.control, args.amplitudes,
                                           *comp, args.config);
    const double delta = detuning_mhz(device, args.target, args.control);
    const StarkScaleFit fit = fit_stark_scale(uncompensated, delta);

    std::ostringstream params;
    params << "target=" << args.target << " control=" << args.control
           << " artificial_detuning_mhz=" << format_double(args.config.artificial_detuning_mhz)
           << " delay_points=" << args.config.delay_points << " shots=" << args.config.shots
           << " stark_fit_scale_mhz=" << format_double(fit.scale_mhz)
           << " stark_fit_rel_residual=" << format_double(fit.rel_residual);

    std::ostringstream body;
    body << "amplitude,shift_uncompensated_mhz,shift_compensated_mhz\n";
    for (size_t i = 0; i < uncompensated.size(); ++i)
        body << format_double(uncompensated[i].amplitude) << ','
             << format_double(uncompensated[i].shift_mhz) << ','
             << format_double(compensated[i].shift_mhz) << '\n';

    const std::string path = join_path(args.common.out_dir, "verify.csv");
    atomic_write(path, header_block("verify", args.common, device, params.str()) + body.str());
    std::cout << "wrote " << path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct RbArgs {
    CommonArgs common;
    std::string table_path;
    RBConfig config;
};

int cmd_rb(const RbArgs& args) {
    DeviceModel device = open_device(args.common);
    const std::vector<CalibrationResult> table = load_calibration_table(args.table_path);
    const CompensationMap comp = to_compensation_map(table);

    std::vector<int> qubits(static_cast<size_t>(device.qubit_count()));
    for (int q = 0; q < device.qubit_count(); ++q) qubits[static_cast<size_t>(q)] = q;

    std::vector<RBRawRecord> records;
    const auto separate =
        run_rb_collect(device, qubits, RBMode::separate, args.config, nullptr, &records);
    const auto raw = run_rb_collect(device, qubits, RBMode::simultaneous_raw, args.config,
                                    nullptr, &records);
    const auto compensated = run_rb_collect(device, qubits, RBMode::simultaneous_compensated,
                                            args.config, &comp, &records);

    std::ostringstream params;
    params << "lengths=";
    for (size_t i = 0; i < args.config.lengths.size(); ++i)
        params << (i ? ";" : "") << args.config.lengths[i];
    params << " sequences=" << args.config.sequences_per_length
           << " shots=" << args.config.shots
           << " gate_depol=" << format_double(args.config.gate_depol);

    std::ostringstream survival;
    survival << "mode,qubit,length,sequence,survival\n";
    for (const RBRawRecord& r : records)
        survival << to_string(r.mode) << ',' << r.qubit << ',' << r.length << ','
                 << r.sequence << ',' << format_double(r.survival) << '\n';

    std::ostringstream summary;
    summary << "qubit,separate_epg_pct,raw_epg_pct,compensated_epg_pct,reduction_pct\n";
    for (size_t i = 0; i < qubits.size(); ++i) {
        const auto reduction =
            crosstalk_error_reduction(separate[i].epg, raw[i].epg, compensated[i].epg);
        summary << qubits[i] << ',' << format_double(100.0 * separate[i].epg) << ','
                << format_double(100.0 * raw[i].epg) << ','
                << format_double(100.0 * compensated[i].epg) << ','
                << (reduction ? format_double(*reduction) : "NA") << '\n';
    }

    const std::string header = header_block("rb", args.common, device, params.str());
    atomic_write(join_path(args.common.out_dir, "rb_survival.csv"), header + survival.str());
    atomic_write(join_path(args.common.out_dir, "rb_summary.csv"), header + summary.str());
    std::cout << "wrote " << join_path(args.common.out_dir, "rb_summary.csv") << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct StarkMatrixArgs {
    CommonArgs common;
    std::string table_path;
    double omega0_mhz = 33.0;
};

int cmd_stark_matrix(const StarkMatrixArgs& args) {
    DeviceModel device = open_device(args.common);
    const std::vector<CalibrationResult> table = load_calibration_table(args.table_path);
    const std::vector<StarkMatrixEntry> entries = stark_matrix(device, table, args.omega0_mhz);

    std::ostringstream params;
    params << "omega0_mhz=" << format_double(args.omega0_mhz);

    // n x n grid, rows = target, columns = control; blank where no entry.
    const int n = device.qubit_count();
    std::vector<std::string> cells(static_cast<size_t>(n) * n);
    for (const StarkMatrixEntry& e : entries)
        cells[static_cast<size_t>(e.target) * n + e.control] = format_double(e.shift_mhz);

    std::ostringstream body;
    body << "target";
    for (int j = 0; j < n; ++j) body << ",control_" << j;
    body << '\n';
    for (int i = 0; i < n; ++i) {
        body << i;
        for (int j = 0; j < n; ++j) body << ',' << cells[static_cast<size_t>(i) * n + j];
        body << '\n';
    }

    const std::string path = join_path(args.common.out_dir, "stark_matrix.csv");
    atomic_write(path,
                 header_block("stark-matrix", args.common, device, params.str()) + body.str());
    std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microwave-crosstalk calibration simulator"};
    app.require_subcommand(1);

    ScanArgs scan;
    CLI::App* scan_cmd =
        app.add_subcommand("scan", "echo interference scan over the compensation plane");
    add_common(scan_cmd, scan.common);
    scan_cmd->add_option("--target", scan.target)->required();
    scan_cmd->add_option("--control", scan.control)->required();
    scan_cmd->add_option("--amplitude", scan.amplitude, "test pulse amplitude");
    scan_cmd->add_option("--tau", scan.taus, "free-evolution half-time(s), us")
        ->delimiter(',');
    scan_cmd->add_option("--grid", scan.grid_points, "grid points per axis");
    scan_cmd->add_option("--extent", scan.extent, "scan half-extent in |r|");
    scan_cmd->add_option("--center-re", scan.center_re);
    scan_cmd->add_option("--center-im", scan.center_im);
    scan_cmd->add_option("--linecut", scan.linecut_axis, "linecut axis: re or im");
    scan_cmd->add_option("--fixed", scan.linecut_fixed, "fixed value of the other axis");
    scan_cmd->add_option("--linecut-points", scan.linecut_points);
    scan_cmd->add_option("--shots", scan.shots);

    CalibrateArgs cal;
    CLI::App* cal_cmd =
        app.add_subcommand("calibrate", "recover compensation phasors for same-band pairs");
    add_common(cal_cmd, cal.common);
    cal_cmd->add_option("--amplitude", cal.config.amplitude);
    cal_cmd->add_option("--tau-start", cal.config.tau_start_us);
    cal_cmd->add_option("--tau-growth", cal.config.tau_growth);
    cal_cmd->add_option("--tau-max", cal.config.tau_max_us);
    cal_cmd->add_option("--coarse-points", cal.config.coarse_points);
    cal_cmd->add_option("--expected-crosstalk", cal.config.expected_crosstalk);
    cal_cmd->add_option("--linecut-points", cal.config.linecut_points);
    cal_cmd->add_option("--shots", cal.config.shots);
    cal_cmd->add_option("--pair", cal.pairs,
                        "control:target (repeatable; default all same-band pairs)");

    VerifyArgs ver;
    CLI::App* ver_cmd = app.add_subcommand(
        "verify", "Ramsey frequency-shift verification with and without compensation");
    add_common(ver_cmd, ver.common);
    ver_cmd->add_option("--target", ver.target)->required();
    ver_cmd->add_option("--control", ver.control)->required();
    ver_cmd->add_option("--table", ver.table_path, "calibration table")->required();
    ver_cmd->add_option("--amplitudes", ver.amplitudes)->delimiter(',');
    ver_cmd->add_option("--artificial-detuning", ver.config.artificial_detuning_mhz);
    ver_cmd->add_option("--delay-start", ver.config.delay_start_us);
    ver_cmd->add_option("--delay-step", ver.config.delay_step_us);
    ver_cmd->add_option("--delay-points", ver.config.delay_points);
    ver_cmd->add_option("--shots", ver.config.shots);

    RbArgs rb;
    CLI::App* rb_cmd = app.add_subcommand(
        "rb", "randomized benchmarking: separate, simultaneous raw, compensated");
    add_common(rb_cmd, rb.common);
    rb_cmd->add_option("--table", rb.table_path, "calibration table")->required();
    rb_cmd->add_option("--lengths", rb.config.lengths)->delimiter(',');
    rb_cmd->add_option("--sequences", rb.config.sequences_per_length);
    rb_cmd->add_option("--shots", rb.config.shots);
    rb_cmd->add_option("--gate-depol", rb.config.gate_depol);

    StarkMatrixArgs sm;
    CLI::App* sm_cmd =
        app.add_subcommand("stark-matrix", "predicted shift matrix from a calibration table");
    add_common(sm_cmd, sm.common);
    sm_cmd->add_option("--table", sm.table_path, "calibration table")->required();
    sm_cmd->add_option("--omega0", sm.omega0_mhz, "peak Rabi frequency at unit amplitude");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan_cmd->parsed()) return cmd_scan(scan);
        if (cal_cmd->parsed()) return cmd_calibrate(cal);
        if (ver_cmd->parsed()) return cmd_verify(ver);
        if (rb_cmd->parsed()) return cmd_rb(rb);
        if (sm_cmd->parsed()) return cmd_stark_matrix(sm);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
