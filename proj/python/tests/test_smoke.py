"""Smoke tests for the python bindings: exercises the main operations on the
shipped demo devices. Meant to run fast; the C++ suites carry the detailed
coverage."""

import math
import os
import sys
import tempfile
import unittest

import xtalksim as xs


class StarkShiftTest(unittest.TestCase):
    def test_exact_value(self):
        self.assertAlmostEqual(xs.analytic_stark_shift(5.0, 22.1), 0.5585524692112678, places=12)
        self.assertAlmostEqual(xs.analytic_stark_shift(5.0, -22.1), -0.5585524692112678, places=12)

    def test_oracle_agreement(self):
        for omega in (0.0, 1.0, 8.5, 33.0):
            for delta in (5.5, -16.6, 22.1, -400.0):
                a = xs.analytic_stark_shift(omega, delta)
                b = xs.dressed_splitting_oracle(omega, delta)
                self.assertLessEqual(abs(a - b), 1e-10 * max(abs(a), abs(b), 1e-18))

    def test_approx_and_visibility(self):
        self.assertAlmostEqual(xs.approx_stark_shift(5.0, 22.1), 25.0 / 44.2, places=12)
        self.assertAlmostEqual(xs.rabi_visibility(4.0, 4.0), 0.5, places=12)

    def test_zero_detuning_rejected(self):
        with self.assertRaises(ValueError):
            xs.analytic_stark_shift(1.0, 0.0)


class DeviceTest(unittest.TestCase):
    def test_demo_devices(self):
        dev = xs.demo_device_7q()
        self.assertEqual(dev.qubit_count, 7)
        self.assertAlmostEqual(xs.detuning_mhz(dev, 5, 3), 5.5, places=9)
        self.assertAlmostEqual(abs(xs.detuning_mhz(dev, 3, 1)), 22.1, places=9)
        self.assertEqual(len(dev.same_band_pairs()), 18)
        self.assertEqual(dev.crosstalk_entry(0, 0), 1.0 + 0.0j)

    def test_save_load_roundtrip(self):
        dev = xs.demo_device_pair()
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "roundtrip.device")
            xs.save_device(dev, path)
            back = xs.load_device(path)
        self.assertEqual(back.qubit_count, dev.qubit_count)
        self.assertEqual(back.crosstalk_entry(0, 1), dev.crosstalk_entry(0, 1))


class CalibrationTest(unittest.TestCase):
    def test_calibrate_recovers_compensation(self):
        dev = xs.demo_device_pair()
        truth = dev.crosstalk_entry(0, 1)
        result = xs.calibrate_pair(dev, 0, 1)
        self.assertTrue(result.converged)
        self.assertLess(abs(abs(result.comp) - abs(truth)) / abs(truth), 0.02)
        err = math.remainder(math.atan2(result.comp.imag, result.comp.real)
                             - math.atan2(-truth.imag, -truth.real), 2 * math.pi)
        self.assertLess(abs(err) * 180 / math.pi, 2.0)
        self.assertLess(result.evaluations, 50000)

    def test_rings_scan_signal_range(self):
        dev = xs.demo_device_pair()
        grid = [complex(x / 50.0, 0.0) for x in range(-5, 6)]
        samples = xs.rings_scan(dev, 0, 1, 0.5, 1.0, grid, shots=300)
        self.assertEqual(len(samples), len(grid))
        for _, signal in samples:
            self.assertGreaterEqual(signal, 0.0)
            self.assertLessEqual(signal, 1.0)


class RBTest(unittest.TestCase):
    def test_reduction_arithmetic(self):
        self.assertAlmostEqual(xs.crosstalk_error_reduction(0.21, 1.21, 0.32), 89.0, places=9)
        self.assertIsNone(xs.crosstalk_error_reduction(0.4, 0.3, 0.2))

    def test_clifford_sequence_inverts(self):
        seq = xs.sample_clifford_sequence(8, seed=7)
        self.assertEqual(len(seq), 9)
        for element in seq:
            self.assertIn(element, range(24))

    def test_small_rb_run(self):
        dev = xs.demo_device_pair()
        config = xs.RBConfig()
        config.lengths = [2, 4, 8, 16]
        config.sequences_per_length = 3
        config.shots = 200
        results = xs.run_rb(dev, [0, 1], xs.RBMode.separate, config)
        self.assertEqual(len(results), 2)
        for r in results:
            self.assertGreater(r.p, 0.9)
            self.assertLessEqual(r.p, 1.0)
            self.assertGreaterEqual(r.epg, 0.0)


if __name__ == "__main__":
    sys.exit(unittest.main())
