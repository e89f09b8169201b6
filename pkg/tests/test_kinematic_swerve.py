import math
import os
import sys
import unittest

import numpy as np

# Add the repo root to path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.config import SafetyParams, VehicleGeometry
from modules.errors import (
    ClearanceUnreachableError,
    DegenerateSpeedError,
    DomainError,
    HeadingLimitError,
    InfeasibleLaneChangeError,
)
from modules.kinematic_swerve import (
    TRAJECTORY_COLUMNS,
    ArcCase,
    build_swerve,
    clearance,
    first_crossing,
    integrate_bicycle,
    min_turn_radius_steering,
    pose_at,
    rear_axle_clearance,
    sample_trajectory,
)
from modules.rotation_geometry import lateral_clearance


class TestTurnRadius(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_steering_limited_radius(self):
        self.assertAlmostEqual(min_turn_radius_steering(self.g, self.p), 4.641, places=3)

    def test_literal_radius(self):
        self.assertAlmostEqual(min_turn_radius_steering(self.g, self.p, literal=True), 1.7220, places=3)


class TestBuildSwerve(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()

    def test_highway_speed(self):
        m = build_swerve(20.0, self.g, self.p)
        self.assertAlmostEqual(m.R_c, 200.0)
        self.assertAlmostEqual(m.theta_max, 0.1361, places=4)
        self.assertAlmostEqual(m.psi_max, m.theta_max + m.beta_c)
        self.assertAlmostEqual(m.duration, 2.0 * m.R_c * m.theta_max / 20.0)
        self.assertAlmostEqual(m.lateral_accel, self.p.a_lat_min)

    def test_end_of_swerve(self):
        m = build_swerve(20.0, self.g, self.p)
        x, y, theta, psi = pose_at(m, m.duration)
        self.assertAlmostEqual(float(y), self.p.alpha, places=9)
        self.assertAlmostEqual(float(theta), 0.0, places=9)
        self.assertAlmostEqual(float(x), m.x_end, places=9)

    def test_straight_after_swerve(self):
        m = build_swerve(20.0, self.g, self.p)
        x, y, _, _ = pose_at(m, m.duration + 1.0)
        self.assertAlmostEqual(float(x), m.x_end + 20.0)
        self.assertEqual(float(y), self.p.alpha)

    def test_zero_speed(self):
        with self.assertRaises(DegenerateSpeedError):
            build_swerve(0.0, self.g, self.p)

    def test_heading_limit(self):
        with self.assertRaises(HeadingLimitError):
            build_swerve(1.0, self.g, SafetyParams(alpha=8.0))

    def test_infeasible_offset(self):
        with self.assertRaises(InfeasibleLaneChangeError):
            build_swerve(1.0, self.g, SafetyParams(alpha=20.0))


class TestClearance(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()
        self.m = build_swerve(20.0, self.g, self.p)

    def test_zero_clearance(self):
        result = clearance(self.m, 0.0)
        self.assertEqual((result.x_c, result.t_c), (0.0, 0.0))

    def test_switch_point(self):
        result = clearance(self.m, self.m.y_hat)
        self.assertEqual(result.arc_case, ArcCase.FIRST_ARC)
        self.assertAlmostEqual(result.t_c, self.m.duration / 2.0)
        self.assertAlmostEqual(result.x_c, self.m.x_hat)

    def test_continuous_across_switch(self):
        below = clearance(self.m, self.m.y_hat - 1e-12)
        above = clearance(self.m, self.m.y_hat + 1e-12)
        self.assertEqual(above.arc_case, ArcCase.SECOND_ARC)
        self.assertLess(abs(above.x_c - below.x_c), 1e-4)
        self.assertLess(abs(above.t_c - below.t_c), 1e-5)

    def test_lane_offset_is_reached_before_the_end(self):
        # y overshoots alpha and first meets it while the heading is still +beta
        result = clearance(self.m, self.p.alpha)
        self.assertAlmostEqual(result.t_c, self.m.duration - 2.0 * self.m.R_c * self.m.beta_c / 20.0)

    def test_unreachable(self):
        with self.assertRaises(ClearanceUnreachableError):
            clearance(self.m, self.p.alpha + 0.1)
        with self.assertRaises(DomainError):
            clearance(self.m, -0.1)

    def test_matches_integrated_bicycle(self):
        for v in (8.0, 20.0, 30.0):
            m = build_swerve(v, self.g, self.p)
            y_c = lateral_clearance(self.g, self.g, m.theta_max, self.p)
            closed = clearance(m, y_c)
            t_c, x_c = first_crossing(integrate_bicycle(m, self.g, dt=1e-3), y_c)
            self.assertLess(abs(x_c - closed.x_c), 0.01)
            self.assertLess(abs(t_c - closed.t_c), 1e-3)


class TestRearAxleClearance(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()
        self.p = SafetyParams()
        self.m = build_swerve(20.0, self.g, self.p)

    def test_first_and_second_arc(self):
        self.assertEqual(rear_axle_clearance(self.m, 0.5).arc_case, ArcCase.FIRST_ARC)
        self.assertEqual(rear_axle_clearance(self.m, 3.0).arc_case, ArcCase.SECOND_ARC)

    def test_continuous_at_half_offset(self):
        half = 0.5 * self.p.alpha
        below = rear_axle_clearance(self.m, half)
        above = rear_axle_clearance(self.m, half + 1e-9)
        self.assertLess(abs(above.x_c - below.x_c), 1e-4)
        self.assertLess(abs(above.t_c - below.t_c), 1e-5)
        self.assertAlmostEqual(below.t_c, 0.5 * self.m.duration)

    def test_full_offset_at_end_of_swerve(self):
        result = rear_axle_clearance(self.m, self.p.alpha)
        self.assertAlmostEqual(result.t_c, self.m.duration)
        self.assertAlmostEqual(result.x_c, self.m.x_end, places=9)

    def test_later_than_centre_of_mass(self):
        for y_c in (0.5, 1.5, 2.5, 3.5):
            self.assertGreater(rear_axle_clearance(self.m, y_c).t_c, clearance(self.m, y_c).t_c)

    def test_matches_integrated_bicycle(self):
        for v in (8.0, 20.0, 30.0):
            m = build_swerve(v, self.g, self.p)
            path = integrate_bicycle(m, self.g, dt=1e-3)
            path["y"] = path["y"] - self.g.l_r * np.sin(path["theta"])
            for y_c in (1.0, 2.5):
                closed = rear_axle_clearance(m, y_c)
                t_c, x_c = first_crossing(path, y_c)
                self.assertLess(abs(x_c - closed.x_c), 0.01)
                self.assertLess(abs(t_c - closed.t_c), 1e-3)

    def test_unreachable(self):
        with self.assertRaises(ClearanceUnreachableError):
            rear_axle_clearance(self.m, self.p.alpha + 0.1)
        with self.assertRaises(DomainError):
            rear_axle_clearance(self.m, -0.1)


class TestTrajectory(unittest.TestCase):
    def test_sampled_table(self):
        p = SafetyParams()
        m = build_swerve(20.0, VehicleGeometry(), p)
        table = sample_trajectory(m, 0.01)
        self.assertEqual(list(table.columns), TRAJECTORY_COLUMNS)
        self.assertTrue(np.all(np.diff(table["t"].to_numpy()) > 0.0))
        self.assertEqual(table["t"].iloc[-1], m.duration)
        self.assertEqual(table["y"].iloc[-1], p.alpha)
        self.assertEqual(table["theta"].iloc[-1], 0.0)
        self.assertLessEqual(table["theta"].max(), m.theta_max + 1e-12)

    def test_sampled_lateral_offset_never_decreases(self):
        m = build_swerve(20.0, VehicleGeometry(), SafetyParams())
        y = sample_trajectory(m, 0.01)["y"].to_numpy()
        self.assertTrue(np.all(np.diff(y) >= 0.0))

    def test_bad_step(self):
        m = build_swerve(20.0, VehicleGeometry(), SafetyParams())
        with self.assertRaises(DomainError):
            sample_trajectory(m, 0.0)

    def test_first_crossing_never_reached(self):
        m = build_swerve(20.0, VehicleGeometry(), SafetyParams())
        with self.assertRaises(ClearanceUnreachableError):
            first_crossing(sample_trajectory(m, 0.01), 10.0)

    def test_low_speed_uses_steering_limit(self):
        g, p = VehicleGeometry(), SafetyParams()
        m = build_swerve(1.0, g, p)
        self.assertAlmostEqual(m.R_c, min_turn_radius_steering(g, p))
        self.assertLess(m.psi_max, math.pi / 2)


if __name__ == '__main__':
    unittest.main()
