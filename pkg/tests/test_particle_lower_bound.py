import math
import os
import sys
import unittest

# Add the repo root to path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.config import DynamicParams, SafetyParams, VehicleGeometry
from modules.particle_lower_bound import kinematic_pair, lower_bound, paired_lower_bound, particle_clearance
from modules.rotation_geometry import inner_half_side
from modules.scenario_distances import d_swerve_for_brake


class TestParticleClearance(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_moving_particle(self):
        t_c, x_bar_c = particle_clearance(20.2, 2.02, self.g, self.p)
        self.assertAlmostEqual(t_c, math.sqrt(2.02))
        self.assertAlmostEqual(x_bar_c, 20.2 * t_c - t_c ** 2 + inner_half_side(self.g))

    def test_particle_stops_first(self):
        _, x_bar_c = particle_clearance(1.0, 2.02, self.g, self.p)
        self.assertAlmostEqual(x_bar_c, 0.25 + inner_half_side(self.g))

    def test_rejects_negative_inputs(self):
        with self.assertRaises(ValueError):
            particle_clearance(10.0, -0.1, self.g, self.p)
        with self.assertRaises(ValueError):
            lower_bound(-1.0, 0.0, 2.0, self.g, self.p)


class TestLowerBound(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_stationary_lead(self):
        result = lower_bound(20.0, 0.0, 2.02, self.g, self.p)
        _, x_bar_c = particle_clearance(20.2, 2.02, self.g, self.p)
        self.assertAlmostEqual(result.d_bar_long, 2.01 + x_bar_c)

    def test_lead_braking_from_real_speed(self):
        capped = lower_bound(20.0, 25.0, 2.02, self.g, self.p)
        real = lower_bound(20.0, 25.0, 2.02, self.g, self.p, cap_lead_speed=False)
        t_c, x_bar_c = particle_clearance(20.2, 2.02, self.g, self.p)
        lead = 25.0 * (0.1 + t_c) - 4.0 * (0.1 + t_c) ** 2
        self.assertAlmostEqual(real.d_bar_long, 2.01 + x_bar_c - lead)
        self.assertLess(real.d_bar_long, capped.d_bar_long)

    def test_slow_lead_unaffected_by_cap(self):
        capped = lower_bound(20.0, 10.0, 2.02, self.g, self.p)
        real = lower_bound(20.0, 10.0, 2.02, self.g, self.p, cap_lead_speed=False)
        self.assertAlmostEqual(real.d_bar_long, capped.d_bar_long)

    def test_below_kinematic_distance(self):
        bound = paired_lower_bound(20.0, 0.0, self.g, self.g, self.p)
        kinematic = d_swerve_for_brake(20.0, 0.0, 0.1, self.g, self.g, self.p)
        self.assertLessEqual(bound.d_bar_long, kinematic.interior)

    def test_brackets_kinematic_travel(self):
        for v0 in range(8, 31, 2):
            pair = kinematic_pair(float(v0), self.g, self.g, self.p)
            self.assertLessEqual(pair["x_c_lower"], pair["x_c_kinematic"], f"v0={v0}")
            self.assertLessEqual(pair["t_c_lower"], pair["t_c_kinematic"], f"v0={v0}")


class TestTireBound(unittest.TestCase):
    def test_tire_peak_particle_is_faster(self):
        g, p = VehicleGeometry(), SafetyParams()
        for v0 in (10.0, 20.0, 30.0):
            pair = kinematic_pair(v0, g, g, p, DynamicParams())
            self.assertLess(pair["x_c_lower_tire"], pair["x_c_lower"], f"v0={v0}")
            self.assertGreater(pair["x_c_lower_tire"], inner_half_side(g))

    def test_tire_column_needs_dynamic_params(self):
        pair = kinematic_pair(20.0, VehicleGeometry(), VehicleGeometry(), SafetyParams())
        self.assertNotIn("x_c_lower_tire", pair)


if __name__ == '__main__':
    unittest.main()
