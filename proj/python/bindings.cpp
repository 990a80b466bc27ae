// Python bindings for the main operations: device handling, Stark-shift
// models, the echo-scan calibration loop, Ramsey verification and randomized
// benchmarking. Phasors cross the boundary as python complex numbers.

#include <complex>
#include <optional>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xtalk/calibration.hpp"
#include "xtalk/device.hpp"
#include "xtalk/dynamics.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/rb.hpp"

namespace py = pybind11;
using namespace xtalk;

namespace {

std::complex<double> to_c(const Phasor& p) { return p.to_complex(); }
Phasor to_phasor(std::complex<double> z) { return Phasor::from_complex(z); }

}  // namespace

PYBIND11_MODULE(_xtalksim, m) {
    m.doc() = "microwave-crosstalk calibration simulator";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::class_<QubitSpec>(m, "QubitSpec")
        .def_readonly("id", &QubitSpec::id)
        .def_readonly("frequency_ghz", &QubitSpec::frequency_ghz)
        .def_readonly("t1_us", &QubitSpec::t1_us)
        .def_readonly("t2_echo_us", &QubitSpec::t2_echo_us)
        .def_readonly("t2_ramsey_us", &QubitSpec::t2_ramsey_us)
        .def_readonly("rabi_scale_mhz", &QubitSpec::rabi_scale_mhz)
        .def_readonly("band", &QubitSpec::band);

    py::class_<DeviceModel>(m, "DeviceModel")
        .def_property_readonly("qubit_count", &DeviceModel::qubit_count)
        .def_readwrite("rng_seed", &DeviceModel::rng_seed)
        .def_readonly("spam_error", &DeviceModel::spam_error)
        .def_readonly("name", &DeviceModel::name)
        .def("qubit", &DeviceModel::qubit, py::return_value_policy::copy)
        .def("same_band", &DeviceModel::same_band)
        .def("same_band_pairs", &DeviceModel::same_band_pairs)
        .def("crosstalk_entry",
             [](const DeviceModel& dev, int target, int line) {
                 return to_c(dev.crosstalk.at(target, line));
             })
        .def("set_crosstalk_entry",
             [](DeviceModel& dev, int target, int line, std::complex<double> value) {
                 dev.crosstalk.set(target, line, to_phasor(value));
                 validate_device(dev);
             });

    m.def("load_device", &load_device, py::arg("path"));
    m.def("save_device", &save_device, py::arg("device"), py::arg("path"));
    m.def("demo_device_7q", &demo_device_7q);
    m.def("demo_device_pair", &demo_device_pair);
    m.def("detuning_mhz", &detuning_mhz, py::arg("device"), py::arg("target"),
          py::arg("control"));

    m.def("analytic_stark_shift",
          [](double omega, double delta) { return analytic_stark_shift(omega, delta).mhz; },
          py::arg("omega_mhz"), py::arg("delta_mhz"));
    m.def("approx_stark_shift",
          [](double omega, double delta) { return approx_stark_shift(omega, delta).mhz; },
          py::arg("omega_mhz"), py::arg("delta_mhz"));
    m.def("dressed_splitting_oracle",
          [](double omega, double delta) {
              return dressed_splitting_oracle(omega, delta).mhz;
          },
          py::arg("omega_mhz"), py::arg("delta_mhz"));
    m.def("rabi_visibility", &rabi_visibility, py::arg("omega_mhz"), py::arg("delta_mhz"));

    py::class_<CalibrationConfig>(m, "CalibrationConfig")
        .def(py::init<>())
        .def_readwrite("amplitude", &CalibrationConfig::amplitude)
        .def_readwrite("tau_start_us", &CalibrationConfig::tau_start_us)
        .def_readwrite("tau_growth", &CalibrationConfig::tau_growth)
        .def_readwrite("tau_max_us", &CalibrationConfig::tau_max_us)
        .def_readwrite("expected_crosstalk", &CalibrationConfig::expected_crosstalk)
        .def_readwrite("coarse_points", &CalibrationConfig::coarse_points)
        .def_readwrite("linecut_points", &CalibrationConfig::linecut_points)
        .def_readwrite("shots", &CalibrationConfig::shots);

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("control", &CalibrationResult::control)
        .def_readonly("target", &CalibrationResult::target)
        .def_property_readonly("comp",
                               [](const CalibrationResult& r) { return to_c(r.comp); })
        .def_readonly("residual", &CalibrationResult::residual)
        .def_readonly("tau_schedule", &CalibrationResult::tau_schedule)
        .def_readonly("evaluations", &CalibrationResult::evaluations)
        .def_readonly("converged", &CalibrationResult::converged);

    m.def("calibrate_pair", &calibrate_pair, py::arg("device"), py::arg("target"),
          py::arg("control"), py::arg("config") = CalibrationConfig{});

    m.def("rings_scan",
          [](const DeviceModel& device, int target, int control, double amplitude,
             double tau_us, const std::vector<std::complex<double>>& grid, int shots) {
              std::vector<Phasor> points;
              points.reserve(grid.size());
              for (auto z : grid) points.push_back(to_phasor(z));
              SimOptions opts;
              opts.shots = shots;
              const auto samples =
                  rings_scan(device, target, control, amplitude, tau_us, points, opts);
              std::vector<std::tuple<std::complex<double>, double>> out;
              out.reserve(samples.size());
              for (const ScanSample& s : samples) out.emplace_back(to_c(s.r), s.signal);
              return out;
          },
          py::arg("device"), py::arg("target"), py::arg("control"), py::arg("amplitude"),
          py::arg("tau_us"), py::arg("grid"), py::arg("shots") = 1000);

    py::class_<VerifyConfig>(m, "VerifyConfig")
        .def(py::init<>())
        .def_readwrite("artificial_detuning_mhz", &VerifyConfig::artificial_detuning_mhz)
        .def_readwrite("delay_start_us", &VerifyConfig::delay_start_us)
        .def_readwrite("delay_step_us", &VerifyConfig::delay_step_us)
        .def_readwrite("delay_points", &VerifyConfig::delay_points)
        .def_readwrite("shots", &VerifyConfig::shots);

    m.def("verify_ramsey",
          [](const DeviceModel& device, int target, int control,
             const std::vector<double>& amplitudes, std::optional<std::complex<double>> comp,
             const VerifyConfig& config) {
              std::optional<Phasor> phasor;
              if (comp) phasor = to_phasor(*comp);
              const auto series =
                  verify_ramsey(device, target, control, amplitudes, phasor, config);
              std::vector<std::pair<double, double>> out;
              for (const VerifyPoint& p : series) out.emplace_back(p.amplitude, p.shift_mhz);
              return out;
          },
          py::arg("device"), py::arg("target"), py::arg("control"), py::arg("amplitudes"),
          py::arg("comp") = std::nullopt, py::arg("config") = VerifyConfig{});

    m.def("stark_matrix",
          [](const DeviceModel& device, const std::vector<CalibrationResult>& calibrations,
             double omega0_mhz) {
              const auto entries = stark_matrix(device, calibrations, omega0_mhz);
              std::vector<std::tuple<int, int, double>> out;
              for (const StarkMatrixEntry& e : entries)
                  out.emplace_back(e.control, e.target, e.shift_mhz);
              return out;
          },
          py::arg("device"), py::arg("calibrations"), py::arg("omega0_mhz") = 33.0);

    py::enum_<RBMode>(m, "RBMode")
        .value("separate", RBMode::separate)
        .value("simultaneous_raw", RBMode::simultaneous_raw)
        .value("simultaneous_compensated", RBMode::simultaneous_compensated);

    py::class_<RBConfig>(m, "RBConfig")
        .def(py::init<>())
        .def_readwrite("lengths", &RBConfig::lengths)
        .def_readwrite("sequences_per_length", &RBConfig::sequences_per_length)
        .def_readwrite("shots", &RBConfig::shots)
        .def_readwrite("gate_depol", &RBConfig::gate_depol);

    py::class_<RBResult>(m, "RBResult")
        .def_readonly("qubit", &RBResult::qubit)
        .def_readonly("lengths", &RBResult::lengths)
        .def_readonly("survival", &RBResult::survival)
        .def_readonly("p", &RBResult::p)
        .def_readonly("epg", &RBResult::epg)
        .def_readonly("fit_ci", &RBResult::fit_ci);

    m.def("run_rb",
          [](const DeviceModel& device, const std::vector<int>& qubits, RBMode mode,
             const RBConfig& config,
             const std::vector<CalibrationResult>& calibrations) {
              if (mode == RBMode::simultaneous_compensated) {
                  const CompensationMap comp = to_compensation_map(calibrations);
                  return run_rb(device, qubits, mode, config, &comp);
              }
              return run_rb(device, qubits, mode, config, nullptr);
          },
          py::arg("device"), py::arg("qubits"), py::arg("mode"),
          py::arg("config") = RBConfig{},
          py::arg("calibrations") = std::vector<CalibrationResult>{});

    m.def("crosstalk_error_reduction",
          [](double separate_epg, double raw_epg, double comp_epg) -> py::object {
              const auto value = crosstalk_error_reduction(separate_epg, raw_epg, comp_epg);
              if (!value) return py::none();
              return py::float_(*value);
          },
          py::arg("separate_epg"), py::arg("raw_epg"), py::arg("comp_epg"));

    m.def("sample_clifford_sequence",
          [](int m_length, std::uint64_t seed) {
              RngStream rng(seed);
              return sample_clifford_sequence(m_length, rng);
          },
          py::arg("m"), py::arg("seed"));

    m.attr("__version__") = "0.1.0";
}
