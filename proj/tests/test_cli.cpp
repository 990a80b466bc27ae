#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "xtalk/calibration.hpp"
#include "xtalk/device.hpp"
#include "xtalk/io_util.hpp"

using namespace xtalk;
namespace fs = std::filesystem;

namespace {

const std::string kCli = XTALKSIM_CLI_PATH;
const std::string kPairDevice = std::string(XTALKSIM_DEVICE_DIR) + "/pair.device";

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("scan grid finds the compensation point") {
    const fs::path out = fresh_dir("xtalk_cli_scan");
    // wide window, unit amplitude: the first ring sits well inside the scan
    // and the smoothed central cell clears the shot noise decisively
    REQUIRE(run_cli("scan --device " + kPairDevice + " --out " + out.string() +
                    " --target 0 --control 1 --grid 21 --extent 0.25 --tau 2.5 "
                    "--amplitude 1 --shots 4000") == 0);

    std::ifstream in(out / "scan_grid.csv");
    REQUIRE(in.good());
    std::string line;
    int header_lines = 0;
    bool saw_columns = false;
    std::vector<double> res, ims, signals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            ++header_lines;
            continue;
        }
        if (!saw_columns) {
            CHECK(line == "r_re,r_im,signal");
            saw_columns = true;
            continue;
        }
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        res.push_back(std::stod(a));
        ims.push_back(std::stod(b));
        signals.push_back(std::stod(c));
    }
    CHECK(header_lines >= 4);  // command, device hash, seed, parameters
    REQUIRE(signals.size() == 21 * 21);

    // neighbourhood-smoothed maximum within one grid cell of -C[0][1]
    double best_score = -1.0, best_re = 0.0, best_im = 0.0;
    for (int iy = 0; iy < 21; ++iy) {
        for (int ix = 0; ix < 21; ++ix) {
            double acc = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jx >= 21 || jy < 0 || jy >= 21) continue;
                    acc += signals[static_cast<size_t>(jy) * 21 + jx];
                    ++n;
                }
            if (acc / n > best_score) {
                best_score = acc / n;
                best_re = res[static_cast<size_t>(iy) * 21 + ix];
                best_im = ims[static_cast<size_t>(iy) * 21 + ix];
            }
        }
    }
    DeviceModel dev = load_device(kPairDevice);
    const Phasor want = -dev.crosstalk.at(0, 1);
    const double cell = 2.0 * 0.25 / 20.0;
    CHECK(std::abs(best_re - want.re) <= cell + 1e-9);
    CHECK(std::abs(best_im - want.im) <= cell + 1e-9);
}

TEST_CASE("single-point scan at the optimum reads the decayed maximum") {
    const fs::path out = fresh_dir("xtalk_cli_point");
    DeviceModel dev = load_device(kPairDevice);
    const Phasor want = -dev.crosstalk.at(0, 1);
    std::ostringstream cmd;
    cmd << "scan --device " << kPairDevice << " --out " << out.string()
        << " --target 0 --control 1 --grid 1 --tau 2.5 --shots 4000 --center-re " << want.re
        << " --center-im " << want.im;
    REQUIRE(run_cli(cmd.str()) == 0);

    std::ifstream in(out / "scan_grid.csv");
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') last = line;
    const double signal = std::stod(last.substr(last.rfind(',') + 1));
    const double decayed_max = 0.5 * (1.0 + std::exp(-2.0 * 2.5 / 30.0));
    CHECK(signal == doctest::Approx(decayed_max).epsilon(0.05));
}

TEST_CASE("malformed arguments leave no partial outputs") {
    const fs::path out = fresh_dir("xtalk_cli_bad");
    CHECK(run_cli("scan --device " + kPairDevice + " --out " + out.string() +
                  " --target 0 --control 1 --grid 0 --tau 2.5") != 0);
    CHECK(fs::is_empty(out));

    CHECK(run_cli("scan --device " + kPairDevice + " --out " + out.string() +
                  " --target 0 --control 1 --no-such-flag") != 0);
    CHECK(fs::is_empty(out));

    CHECK(run_cli("verify --device " + kPairDevice + " --out " + out.string() +
                  " --target 0 --control 1 --table /nonexistent.csv") != 0);
    CHECK(fs::is_empty(out));
}

TEST_CASE("calibrate then verify, rb and stark-matrix consume the table") {
    const fs::path out = fresh_dir("xtalk_cli_flow");
    REQUIRE(run_cli("calibrate --device " + kPairDevice + " --out " + out.string()) == 0);

    auto table = load_calibration_table((out / "calibration.csv").string());
    REQUIRE(table.size() == 2);
    DeviceModel dev = load_device(kPairDevice);
    for (const CalibrationResult& r : table) {
        CHECK(r.converged);
        const Phasor truth = dev.crosstalk.at(r.target, r.control);
        CHECK(std::abs(r.comp.magnitude() - truth.magnitude()) / truth.magnitude() < 0.02);
    }

    REQUIRE(run_cli("verify --device " + kPairDevice + " --out " + out.string() +
                    " --target 0 --control 1 --table " + (out / "calibration.csv").string() +
                    " --amplitudes 0,0.5,1.0") == 0);
    CHECK(fs::exists(out / "verify.csv"));

    REQUIRE(run_cli("rb --device " + kPairDevice + " --out " + out.string() + " --table " +
                    (out / "calibration.csv").string() +
                    " --lengths 2,4,8,16 --sequences 3 --shots 200") == 0);
    CHECK(fs::exists(out / "rb_survival.csv"));
    std::ifstream summary(out / "rb_summary.csv");
    std::string line;
    int rows = 0;
    while (std::getline(summary, line))
        if (!line.empty() && line[0] != '#' && line.find("qubit,") == std::string::npos) ++rows;
    CHECK(rows == 2);

    REQUIRE(run_cli("stark-matrix --device " + kPairDevice + " --out " + out.string() +
                    " --table " + (out / "calibration.csv").string()) == 0);
    std::ifstream matrix(out / "stark_matrix.csv");
    std::ostringstream content;
    content << matrix.rdbuf();
    CHECK(content.str().find("target,control_0,control_1") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const fs::path out1 = fresh_dir("xtalk_cli_det1");
    const fs::path out2 = fresh_dir("xtalk_cli_det2");
    const std::string scan_args = " --target 0 --control 1 --grid 9 --extent 0.1 --tau 1.5 "
                                  "--seed 4242";
    REQUIRE(run_cli("scan --device " + kPairDevice + " --out " + out1.string() + scan_args) ==
            0);
    REQUIRE(run_cli("scan --device " + kPairDevice + " --out " + out2.string() + scan_args) ==
            0);
    CHECK(read_file((out1 / "scan_grid.csv").string()) ==
          read_file((out2 / "scan_grid.csv").string()));

    // a different seed must change the samples
    REQUIRE(run_cli("scan --device " + kPairDevice + " --out " + out2.string() + scan_args +
                    "1") == 0);
    CHECK(read_file((out1 / "scan_grid.csv").string()) !=
          read_file((out2 / "scan_grid.csv").string()));
}
