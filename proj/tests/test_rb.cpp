#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "xtalk/device.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/rb.hpp"

using namespace xtalk;

namespace {

Mat2 primitive_matrix(PulsePrimitive p) {
    double axis = 0.0, angle = 0.0;
    switch (p) {
        case PulsePrimitive::Idle: break;
        case PulsePrimitive::X90: axis = 0.0; angle = kPi / 2; break;
        case PulsePrimitive::Xm90: axis = kPi; angle = kPi / 2; break;
        case PulsePrimitive::X180: axis = 0.0; angle = kPi; break;
        case PulsePrimitive::Y90: axis = kPi / 2; angle = kPi / 2; break;
        case PulsePrimitive::Ym90: axis = -kPi / 2; angle = kPi / 2; break;
        case PulsePrimitive::Y180: axis = kPi / 2; angle = kPi; break;
    }
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    const std::complex<double> a = std::polar(1.0, axis);
    Mat2 u;
    u.m = {std::complex<double>{c, 0.0}, std::complex<double>{0.0, -1.0} * s * std::conj(a),
           std::complex<double>{0.0, -1.0} * s * a, std::complex<double>{c, 0.0}};
    return u;
}

bool same_rotation(const Mat2& a, const Mat2& b) {
    const std::complex<double> tr = std::conj(a.m[0]) * b.m[0] + std::conj(a.m[2]) * b.m[2] +
                                    std::conj(a.m[1]) * b.m[1] + std::conj(a.m[3]) * b.m[3];
    return std::abs(std::abs(tr) - 2.0) < 1e-10;
}

}  // namespace

TEST_CASE("clifford group closure and decompositions") {
    const CliffordGroup& group = CliffordGroup::instance();

    // every decomposition reproduces its element's rotation exactly
    for (int e = 0; e < CliffordGroup::size; ++e) {
        Mat2 u = primitive_matrix(PulsePrimitive::Idle);
        for (PulsePrimitive p : group.decomposition(e)) u = primitive_matrix(p) * u;
        CHECK(same_rotation(u, group.matrix(e)));
    }

    // composition table closes and inverses compose to the identity
    for (int a = 0; a < CliffordGroup::size; ++a) {
        for (int b = 0; b < CliffordGroup::size; ++b) {
            const int c = group.compose(a, b);
            CHECK(c >= 0);
            CHECK(c < CliffordGroup::size);
            CHECK(same_rotation(group.matrix(c), group.matrix(a) * group.matrix(b)));
        }
        CHECK(group.compose(group.inverse(a), a) == 0);
        CHECK(group.compose(a, group.inverse(a)) == 0);
    }

    // standard physical-pulse budget: 45 pulses over 24 elements
    CHECK(group.average_pulses() == doctest::Approx(1.875).epsilon(1e-12));
}

TEST_CASE("sampled sequences invert to the identity") {
    const CliffordGroup& group = CliffordGroup::instance();

    RngStream rng(17);
    auto single = sample_clifford_sequence(1, rng);
    REQUIRE(single.size() == 2);
    CHECK(single[1] == group.inverse(single[0]));

    for (int m : {1, 3, 16}) {
        RngStream stream = RngStream::child(99, 1, static_cast<std::uint64_t>(m));
        auto seq = sample_clifford_sequence(m, stream);
        REQUIRE(static_cast<int>(seq.size()) == m + 1);
        int product = 0;
        for (int element : seq) product = group.compose(element, product);
        CHECK(product == 0);
    }

    CHECK_THROWS_AS(sample_clifford_sequence(0, rng), ValidationError);
}

TEST_CASE("clifford sampling is uniform (chi-square)") {
    RngStream rng(2024);
    std::vector<int> counts(CliffordGroup::size, 0);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
        auto seq = sample_clifford_sequence(1, rng);
        ++counts[static_cast<size_t>(seq[0])];
    }
    const double expected = static_cast<double>(draws) / CliffordGroup::size;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 55.0);  // dof = 23, far above any plausible uniform draw
}

TEST_CASE("rb decay fit recovers synthetic parameters") {
    const std::vector<int> lengths = {2, 4, 8, 16, 32, 64, 128, 256};

    SUBCASE("exact data") {
        for (double p : {0.995, 0.9958}) {
            std::vector<double> survival, variance;
            for (int m : lengths) survival.push_back(0.5 + 0.45 * std::pow(p, m));
            const RBDecayFit fit = fit_rb_decay(lengths, survival, variance);
            CHECK(fit.p == doctest::Approx(p).epsilon(1e-6));
            CHECK(fit.epg == doctest::Approx(0.5 * (1.0 - p)).epsilon(1e-4));
        }
        // Table-scale sanity: p = 0.9958 is an error per gate of 0.21%
        std::vector<double> survival;
        for (int m : lengths) survival.push_back(0.5 + 0.45 * std::pow(0.9958, m));
        CHECK(fit_rb_decay(lengths, survival, {}).epg ==
              doctest::Approx(0.0021).epsilon(1e-3));
    }

    SUBCASE("binomial-noise coverage") {
        const double p_true = 0.992, a = 0.46, b = 0.5;
        int covered = 0;
        const int trials = 20;
        for (int t = 0; t < trials; ++t) {
            std::vector<double> survival, variance;
            for (int m : lengths) {
                const double mean = b + a * std::pow(p_true, m);
                RngStream rng = RngStream::child(500 + t, 3, static_cast<std::uint64_t>(m));
                // 30 sequences of 1000 shots each
                double acc = 0.0, acc2 = 0.0;
                const int seqs = 30;
                for (int s = 0; s < seqs; ++s) {
                    const double v = rng.binomial(1000, mean) / 1000.0;
                    acc += v;
                    acc2 += v * v;
                }
                const double mu = acc / seqs;
                survival.push_back(mu);
                variance.push_back((acc2 / seqs - mu * mu) / (seqs - 1));
            }
            const RBDecayFit fit = fit_rb_decay(lengths, survival, variance);
            // fit_ci is the 95% half-width on epg = (1 - p)/2
            if (std::abs(fit.epg - 0.5 * (1.0 - p_true)) <= fit.fit_ci) ++covered;
        }
        CHECK(covered >= 18);  // >= 90% of seeds
    }

    SUBCASE("preconditions") {
        std::vector<int> three = {2, 4, 8};
        std::vector<double> s3 = {0.9, 0.8, 0.7};
        CHECK_THROWS_AS(fit_rb_decay(three, s3, {}), ValidationError);
    }
}

TEST_CASE("crosstalk error reduction arithmetic") {
    // the exact quotient for the rounded triple is 89.0
    auto q4 = crosstalk_error_reduction(0.21, 1.21, 0.32);
    REQUIRE(q4.has_value());
    CHECK(*q4 == doctest::Approx(100.0 * 0.89 / 1.00).epsilon(1e-12));

    auto q2 = crosstalk_error_reduction(0.19, 1.05, 0.26);
    REQUIRE(q2.has_value());
    CHECK(*q2 == doctest::Approx(91.86046511627907).epsilon(1e-9));

    auto flat = crosstalk_error_reduction(0.2, 1.0, 1.0);
    REQUIRE(flat.has_value());
    CHECK(*flat == doctest::Approx(0.0));

    CHECK_FALSE(crosstalk_error_reduction(0.3, 0.3, 0.2).has_value());
    CHECK_FALSE(crosstalk_error_reduction(0.4, 0.3, 0.2).has_value());
}

TEST_CASE("zero crosstalk makes separate and simultaneous RB agree") {
    DeviceModel dev = demo_device_pair();
    dev.crosstalk = CrosstalkMatrix(2);

    RBConfig config;
    config.lengths = {2, 4, 8, 16, 32, 64, 128};
    config.sequences_per_length = 10;
    config.shots = 1000;

    const std::vector<int> qubits = {0, 1};
    auto separate = run_rb(dev, qubits, RBMode::separate, config);
    auto simultaneous = run_rb(dev, qubits, RBMode::simultaneous_raw, config);
    for (size_t i = 0; i < qubits.size(); ++i) {
        const double gap = std::abs(separate[i].epg - simultaneous[i].epg);
        const double tol =
            3.0 * std::sqrt(separate[i].fit_ci * separate[i].fit_ci +
                            simultaneous[i].fit_ci * simultaneous[i].fit_ci) +
            1e-4;
        CHECK(gap < tol);
        // intrinsic depolarizing alone: epg tracks gate_depol / 2
        CHECK(separate[i].epg == doctest::Approx(config.gate_depol / 2.0).epsilon(0.35));
    }
}

TEST_CASE("rb results are deterministic and modes share clifford draws") {
    DeviceModel dev = demo_device_pair();
    RBConfig config;
    config.lengths = {2, 4, 8, 16};
    config.sequences_per_length = 4;
    config.shots = 300;
    const std::vector<int> qubits = {0, 1};

    auto a = run_rb(dev, qubits, RBMode::separate, config);
    auto b = run_rb(dev, qubits, RBMode::separate, config);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].p == b[i].p);
        REQUIRE(a[i].survival.size() == b[i].survival.size());
        for (size_t k = 0; k < a[i].survival.size(); ++k)
            CHECK(a[i].survival[k] == b[i].survival[k]);
    }
}

TEST_CASE("run_rb validates its inputs") {
    DeviceModel dev = demo_device_pair();
    RBConfig config;
    const std::vector<int> qubits = {0, 1};

    RBConfig unsorted = config;
    unsorted.lengths = {4, 2};
    CHECK_THROWS_AS(run_rb(dev, qubits, RBMode::separate, unsorted), ValidationError);

    CHECK_THROWS_AS(run_rb(dev, qubits, RBMode::simultaneous_compensated, config, nullptr),
                    ValidationError);

    const std::vector<int> bogus = {0, 9};
    CHECK_THROWS_AS(run_rb(dev, bogus, RBMode::separate, config), ValidationError);
}
