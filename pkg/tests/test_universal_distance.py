import os
import sys
import unittest

import numpy as np

# Add the repo root to path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.config import SafetyParams, VehicleGeometry
from modules.scenario_distances import d_brake_for_swerve, d_swerve_for_brake, d_swerve_for_swerve
from modules.universal_distance import (
    UNIFORM_COLUMNS,
    TripleState,
    braking_only,
    crossover_speed,
    max_reduction,
    sweep_uniform,
    uniform_illustration,
    universal,
    universal_terms,
    universal_with_positions,
)


class TestUniversal(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_two_vehicles(self):
        expected = max(
            d_swerve_for_brake(20.0, 20.0, 0.1, self.g, self.g, self.p).distance,
            d_brake_for_swerve(20.0, 20.0, 0.1, self.g, self.g, self.p).distance,
        )
        self.assertAlmostEqual(universal(TripleState(20.0, 20.0), self.p, self.g), expected)

    def test_three_vehicle_terms_are_floored(self):
        terms = universal_terms(TripleState(20.0, 20.0, 20.0), self.p, self.g)
        self.assertEqual(set(terms), {"sb_12", "bs_12", "ss_13", "bb_13"})
        for key in ("ss_13", "bb_13"):
            self.assertGreaterEqual(terms[key], self.g.d_f + self.g.d_r)

    def test_literal_repeats_brake_for_swerve(self):
        terms = universal_terms(TripleState(20.0, 20.0), self.p, self.g, literal=True)
        self.assertEqual(set(terms), {"bs_12", "bs_12_repeat"})

    def test_positions_need_spacing(self):
        with self.assertRaises(ValueError):
            universal_with_positions(TripleState(20.0, 20.0, 20.0), self.p, self.g)
        wide = universal_with_positions(TripleState(20.0, 20.0, 20.0, d_23=1000.0), self.p, self.g)
        self.assertAlmostEqual(wide, universal(TripleState(20.0, 20.0), self.p, self.g))

    def test_negative_speed(self):
        with self.assertRaises(ValueError):
            TripleState(-1.0, 0.0)


class TestUniformBlock(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.speeds = np.arange(0.0, 30.0 + 1e-9, 0.5)

    def test_braking_only(self):
        self.assertAlmostEqual(braking_only(20.0, SafetyParams(), self.g), 83.72)

    def test_swerving_saves_distance_at_speed(self):
        p = SafetyParams()
        for v in (20.0, 30.0):
            self.assertLess(uniform_illustration(v, p, self.g), 0.6 * braking_only(v, p, self.g))

    def test_sweep_table(self):
        table = sweep_uniform(self.speeds, SafetyParams(), self.g)
        self.assertEqual(list(table.columns), UNIFORM_COLUMNS)
        self.assertEqual(len(table), 61)
        self.assertTrue(np.all(table["d_hat"] >= table["d_sb"] - 1e-9))

    def test_crossover_and_reduction(self):
        speeds = np.arange(0.0, 30.0 + 1e-9, 0.05)
        for a_min_brake, expected in ((2.0, 8.1), (3.0, 11.4), (4.0, 14.6)):
            table = sweep_uniform(speeds, SafetyParams(a_min_brake=a_min_brake), self.g)
            crossover = crossover_speed(table)
            self.assertIsNotNone(crossover)
            self.assertLess(abs(crossover - expected), 0.5, f"a_min_brake={a_min_brake}: {crossover:.2f}")
            self.assertGreaterEqual(max_reduction(table), 0.35)

    def test_swerve_for_swerve_cruise_leaves_crossover_alone(self):
        # either cruise term keeps half of d_ss well below d_sb around the crossover
        p = SafetyParams()
        for v in (7.5, 8.0, 8.5):
            sb = d_swerve_for_brake(v, v, p.rho, self.g, self.g, p).distance
            for literal in (False, True):
                ss = d_swerve_for_swerve(v, v, 2.0 * p.rho, self.g, self.g, p, literal=literal).distance
                self.assertLess(ss / 2.0, sb - 5.0)
            self.assertAlmostEqual(uniform_illustration(v, p, self.g), sb)


if __name__ == '__main__':
    unittest.main()
