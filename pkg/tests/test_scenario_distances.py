import json
import math
import os
import sys
import unittest

# Add the repo root to path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.config import SafetyParams, VehicleGeometry
from modules.kinematic_swerve import build_swerve, clearance, rear_axle_clearance
from modules.rotation_geometry import rotated_extents
from modules.scenario_distances import (
    SCENARIOS,
    d_brake_for_brake,
    d_brake_for_swerve,
    d_swerve_for_brake,
    d_swerve_for_swerve,
    scenario_distance,
)


class TestBrakeForBrake(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_equal_speeds(self):
        result = d_brake_for_brake(20.0, 20.0, 0.1, self.g, self.g, self.p)
        self.assertAlmostEqual(result.distance, 83.72)
        self.assertAlmostEqual(result.interior, 79.02)

    def test_standing_still_is_extents(self):
        result = d_brake_for_brake(0.0, 0.0, 0.0, self.g, self.g, self.p)
        self.assertAlmostEqual(result.distance, 4.7)

    def test_negative_speed(self):
        with self.assertRaises(ValueError):
            d_brake_for_brake(-1.0, 0.0, 0.1, self.g, self.g, self.p)


class TestSwerveForBrake(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_standing_rear_without_reaction(self):
        result = d_swerve_for_brake(0.0, 0.0, 0.0, self.g, self.g, self.p)
        self.assertAlmostEqual(result.distance, 4.7)

    def test_stationary_obstacle_crossover(self):
        # braking is shorter up to 7 m/s, swerving from 9 m/s on
        for v_f_equals_v_r in (False, True):
            for v in range(0, 31):
                v_f = float(v) if v_f_equals_v_r else 0.0
                if v_f_equals_v_r and v < 9:
                    continue
                sb = d_swerve_for_brake(float(v), v_f, 0.1, self.g, self.g, self.p).distance
                bb = d_brake_for_brake(float(v), v_f, 0.1, self.g, self.g, self.p).distance
                if v <= 7:
                    self.assertGreater(sb, bb, f"v={v}")
                elif v >= 9:
                    self.assertLess(sb, bb, f"v={v}, v_f={v_f}")

    def test_clearance_measured_at_rear_axle(self):
        result = d_swerve_for_brake(20.0, 0.0, 0.1, self.g, self.g, self.p)
        m = build_swerve(20.2, self.g, self.p)
        y_c = result.components["y_c"]
        expected = rear_axle_clearance(m, y_c)
        self.assertEqual(result.components["arc_case"], "SecondArc")
        self.assertAlmostEqual(result.components["x_c"], expected.x_c + result.extent_rear)
        self.assertAlmostEqual(result.t_c, expected.t_c)
        self.assertGreater(expected.x_c, clearance(m, y_c).x_c)

    def test_literal_measures_centre_of_mass(self):
        corrected = d_swerve_for_brake(20.0, 0.0, 0.1, self.g, self.g, self.p)
        literal = d_swerve_for_brake(20.0, 0.0, 0.1, self.g, self.g, self.p, literal=True)
        m = build_swerve(20.2, self.g, self.p)
        y_c = corrected.components["y_c"]
        self.assertAlmostEqual(literal.components["x_c"], clearance(m, y_c).x_c + literal.extent_rear)
        self.assertAlmostEqual(
            corrected.distance - literal.distance, rear_axle_clearance(m, y_c).x_c - clearance(m, y_c).x_c
        )

    def test_components_serialize(self):
        result = d_swerve_for_brake(20.0, 20.0, 0.1, self.g, self.g, self.p)
        payload = json.loads(result.to_json())
        self.assertEqual(payload["scenario"], "sb")
        self.assertAlmostEqual(payload["distance"], result.distance)


class TestBrakeForSwerve(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_standing_rear(self):
        result = d_brake_for_swerve(0.0, 20.0, 0.0, self.g, self.g, self.p)
        theta = build_swerve(20.0, self.g, self.p).theta_max
        self.assertAlmostEqual(result.interior, 0.0)
        self.assertAlmostEqual(result.distance, self.g.d_f + rotated_extents(self.g, theta).d_bar)

    def test_stationary_lead_matches_braking(self):
        bs = d_brake_for_swerve(20.0, 0.0, 0.1, self.g, self.g, self.p)
        bb = d_brake_for_brake(20.0, 0.0, 0.1, self.g, self.g, self.p)
        self.assertAlmostEqual(bs.distance, bb.distance)
        self.assertAlmostEqual(bs.distance, 108.72)
        self.assertIsNone(bs.to_dict()["t_c"])


class TestSwerveForSwerve(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_zero_reaction(self):
        m = build_swerve(20.0, self.g, self.p)
        v_prime = 20.0 * math.cos(m.psi_max)
        expected = (
            20.0 * m.duration + 400.0 / 4.0 - (v_prime * m.duration + v_prime ** 2 / 16.0)
            + rotated_extents(self.g, m.theta_max).d_prime + rotated_extents(self.g, m.theta_max).d_bar
        )
        corrected = d_swerve_for_swerve(20.0, 20.0, 0.0, self.g, self.g, self.p)
        literal = d_swerve_for_swerve(20.0, 20.0, 0.0, self.g, self.g, self.p, literal=True)
        self.assertAlmostEqual(corrected.distance, expected)
        self.assertAlmostEqual(literal.distance, expected)

    def test_display_charges_less_swerve_travel(self):
        corrected = d_swerve_for_swerve(20.0, 20.0, 0.1, self.g, self.g, self.p)
        literal = d_swerve_for_swerve(20.0, 20.0, 0.1, self.g, self.g, self.p, literal=True)
        self.assertAlmostEqual(corrected.distance - literal.distance, 2.02)

    def test_standing_lead_never_clears(self):
        result = d_swerve_for_swerve(20.0, 0.0, 0.1, self.g, self.g, self.p)
        self.assertEqual(result.v_f_prime, 0.0)
        self.assertTrue(result.warnings)

    def test_ordering_violation_logged_as_warning(self):
        with self.assertLogs(level="WARNING") as captured:
            result = d_swerve_for_swerve(20.0, 0.0, 0.1, self.g, self.g, self.p)
        self.assertTrue(any(record.levelname == "WARNING" for record in captured.records))
        self.assertTrue(any("interval ordering" in line for line in captured.output))
        self.assertIn(result.warnings[-1], "\n".join(captured.output))


class TestDispatch(unittest.TestCase):
    def test_every_scenario(self):
        g, p = VehicleGeometry(), SafetyParams()
        for name in SCENARIOS:
            result = scenario_distance(name, 20.0, 20.0, p, g)
            self.assertEqual(result.name, name)
            self.assertGreaterEqual(result.distance, g.d_f + g.d_r - 1e-9)

    def test_unknown(self):
        with self.assertRaises(KeyError):
            scenario_distance("xx", 1.0, 1.0, SafetyParams(), VehicleGeometry())


if __name__ == '__main__':
    unittest.main()
