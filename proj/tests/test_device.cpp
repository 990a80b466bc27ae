#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "xtalk/device.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/io_util.hpp"

using namespace xtalk;

namespace {

std::string device_path(const std::string& name) {
    return std::string(XTALKSIM_DEVICE_DIR) + "/" + name;
}

bool models_identical(const DeviceModel& a, const DeviceModel& b) {
    if (a.qubit_count() != b.qubit_count()) return false;
    for (int i = 0; i < a.qubit_count(); ++i) {
        const QubitSpec &qa = a.qubit(i), &qb = b.qubit(i);
        if (qa.frequency_ghz != qb.frequency_ghz || qa.t1_us != qb.t1_us ||
            qa.t2_echo_us != qb.t2_echo_us || qa.t2_ramsey_us != qb.t2_ramsey_us ||
            qa.rabi_scale_mhz != qb.rabi_scale_mhz || qa.band != qb.band)
            return false;
        for (int j = 0; j < a.qubit_count(); ++j)
            if (!(a.crosstalk.at(i, j) == b.crosstalk.at(i, j))) return false;
    }
    return a.spam_error == b.spam_error && a.rng_seed == b.rng_seed &&
           a.readout_shots_default == b.readout_shots_default;
}

}  // namespace

TEST_CASE("phasor basics") {
    Phasor p = Phasor::polar(0.05, kPi / 6.0);
    CHECK(p.magnitude() == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(p.phase() == doctest::Approx(kPi / 6.0).epsilon(1e-12));
    CHECK(Phasor{0.0, 0.0}.phase() == 0.0);
    // atan2 corner: phase stays in (-pi, pi]
    CHECK(Phasor{-1.0, -0.0}.phase() == doctest::Approx(kPi));
    CHECK((Phasor{1.0, 2.0} * Phasor{3.0, -1.0}).re == doctest::Approx(5.0));
    CHECK((Phasor{1.0, 2.0} * Phasor{3.0, -1.0}).im == doctest::Approx(5.0));
}

TEST_CASE("load 2-qubit device file round-trips the crosstalk entry") {
    DeviceModel dev = load_device(device_path("pair.device"));
    REQUIRE(dev.qubit_count() == 2);
    const Phasor& c = dev.crosstalk.at(0, 1);
    CHECK(c.magnitude() == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(phase_deg(c) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(dev.crosstalk.at(0, 0) == Phasor{1.0, 0.0});
    CHECK(dev.crosstalk.at(1, 1) == Phasor{1.0, 0.0});
}

TEST_CASE("non-unit diagonal entry is rejected by name") {
    std::istringstream in(R"(
[qubit]
id 0
frequency_ghz 5.0
t1_us 30
t2_echo_us 25
t2_ramsey_us 10
rabi_scale_mhz 33

[crosstalk]
i 0
j 0
magnitude 0.9
phase_deg 0
)");
    try {
        parse_device(in);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("diagonal") != std::string::npos);
    }
}

TEST_CASE("7-qubit fixture file matches the built-in model") {
    DeviceModel file = load_device(device_path("demo_7q.device"));
    DeviceModel code = demo_device_7q();
    CHECK(models_identical(file, code));
    REQUIRE(file.qubit_count() == 7);
    CHECK(detuning_mhz(file, 5, 3) == doctest::Approx(5.5).epsilon(1e-9));
    CHECK(std::abs(detuning_mhz(file, 3, 1)) == doctest::Approx(22.1).epsilon(1e-9));
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            if (i != j) CHECK(file.crosstalk.at(i, j).magnitude() <= 0.1 + 1e-12);
    // two bands, compensation pairs: 3 high-band qubits + 4 low-band qubits
    CHECK(file.same_band_pairs().size() == 3 * 2 + 4 * 3);
}

TEST_CASE("detuning values and antisymmetry") {
    DeviceModel dev = demo_device_pair();
    CHECK(detuning_mhz(dev, 0, 1) == doctest::Approx(-22.1).epsilon(1e-9));

    DeviceModel seven = demo_device_7q();
    for (int a = 0; a < seven.qubit_count(); ++a)
        for (int b = 0; b < seven.qubit_count(); ++b) {
            if (a == b) continue;
            CHECK(detuning_mhz(seven, a, b) ==
                  doctest::Approx(-detuning_mhz(seven, b, a)).epsilon(1e-12));
        }

    DeviceModel equal = demo_device_pair();
    equal.qubits[1].frequency_ghz = equal.qubits[0].frequency_ghz;
    CHECK(detuning_mhz(equal, 0, 1) == 0.0);

    CHECK_THROWS_AS(detuning_mhz(dev, 0, 5), ValidationError);
    CHECK_THROWS_AS(detuning_mhz(dev, 0, 0), ValidationError);
}

TEST_CASE("save/load reproduces numeric content bit-exactly") {
    DeviceModel dev = demo_device_7q();
    // Push in awkward doubles to exercise the shortest-round-trip formatting.
    dev.qubits[2].frequency_ghz = 5.612345678901234;
    dev.qubits[2].t2_ramsey_us = 0.1 + 0.2;
    dev.crosstalk.set_polar(4, 2, 0.03123456789012345, -137.12345678901234);
    dev.crosstalk.set(0, 4, Phasor{0.0123456789012345, -0.0234567890123456});

    const auto tmp = std::filesystem::temp_directory_path() / "xtalk_roundtrip.device";
    save_device(dev, tmp.string());
    DeviceModel back = load_device(tmp.string());

    // text fixed point: saving the loaded model reproduces the file verbatim
    CHECK(format_device(back) == format_device(dev));

    for (int i = 0; i < dev.qubit_count(); ++i) {
        CHECK(back.qubit(i).frequency_ghz == dev.qubit(i).frequency_ghz);
        CHECK(back.qubit(i).t2_ramsey_us == dev.qubit(i).t2_ramsey_us);
        for (int j = 0; j < dev.qubit_count(); ++j) {
            CHECK(back.crosstalk.magnitude_of(i, j) == dev.crosstalk.magnitude_of(i, j));
            CHECK(back.crosstalk.phase_deg_of(i, j) == dev.crosstalk.phase_deg_of(i, j));
        }
    }
    CHECK(back.crosstalk.magnitude_of(4, 2) == 0.03123456789012345);
    CHECK(back.crosstalk.phase_deg_of(4, 2) == -137.12345678901234);
    CHECK(models_identical(load_device(tmp.string()), back));
    std::filesystem::remove(tmp);
}

TEST_CASE("validation rejects broken devices with named fields") {
    DeviceModel dev = demo_device_pair();
    dev.qubits[0].t2_echo_us = 100.0;  // exceeds 2*t1
    CHECK_THROWS_AS(validate_device(dev), ValidationError);

    dev = demo_device_pair();
    dev.qubits[1].id = 3;  // not dense
    CHECK_THROWS_AS(validate_device(dev), ValidationError);

    dev = demo_device_pair();
    dev.spam_error = 0.2;
    CHECK_THROWS_AS(validate_device(dev), ValidationError);

    dev = demo_device_pair();
    dev.crosstalk.set(0, 1, Phasor{1.2, 0.0});
    CHECK_THROWS_AS(validate_device(dev), ValidationError);
}

TEST_CASE("parser rejects unknown keys and malformed lines") {
    auto expect_parse_error = [](const std::string& text) {
        std::istringstream in(text);
        CHECK_THROWS_AS(parse_device(in), ParseError);
    };
    expect_parse_error("bogus_key 1\n");
    expect_parse_error("[qubit]\nid 0\nfrequency_ghz 5\ncolour blue\n");
    expect_parse_error("[mystery]\n");
    expect_parse_error("[qubit]\nid 0\nfrequency_ghz 5 6\n");
    expect_parse_error("[crosstalk]\ni 0\nj 1\nmagnitude -0.1\nphase_deg 0\n");
    expect_parse_error("");  // no qubits at all
}
