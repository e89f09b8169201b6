import io
import json
import math
import os
import sys
import tempfile
import unittest

import pandas as pd

# Add the repo root to path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.config import DynamicParams, SafetyParams, VehicleGeometry
from modules.errors import DomainError
from modules.sweeps import (
    BRACKETING_COLUMNS,
    SweepSpec,
    bracketed,
    bracketing_row,
    run_bracketing,
    run_sweep,
    write_csv,
    write_warnings,
)


class TestSweepSpec(unittest.TestCase):
    def test_inclusive_grid(self):
        grid = SweepSpec("v_all", 0.0, 30.0, 0.5).grid()
        self.assertEqual(len(grid), 61)
        self.assertAlmostEqual(grid[-1], 30.0)

    def test_single_point(self):
        self.assertEqual(len(SweepSpec("v_r", 12.0, 12.0, 1.0).grid()), 1)

    def test_invalid_specs(self):
        with self.assertRaises(DomainError):
            SweepSpec("v_all", 0.0, 10.0, 0.0)
        with self.assertRaises(DomainError):
            SweepSpec("v_all", 10.0, 0.0, 1.0)
        with self.assertRaises(DomainError):
            SweepSpec("speed", 0.0, 10.0, 1.0)
        with self.assertRaises(DomainError):
            SweepSpec("v_all", 0.0, 10.0, 1.0, outputs=("d_xx",))
        with self.assertRaises(DomainError):
            SweepSpec("v_all", 0.0, 10.0, 1.0, mode="printed")

    def test_columns(self):
        self.assertEqual(SweepSpec("v_all", 0.0, 1.0, 1.0).columns(), ["v", "d_bb", "d_sb", "d_bs", "d_ss", "d_hat"])
        self.assertEqual(SweepSpec("v_f", 0.0, 1.0, 1.0, outputs=("d_hat", "d_bb")).columns(), ["v_r", "v_f", "d_bb", "d_hat"])


class TestRunSweep(unittest.TestCase):
    def setUp(self):
        self.g = VehicleGeometry()

    def test_rows_in_grid_order(self):
        spec = SweepSpec("v_r", 0.0, 20.0, 5.0, outputs=("d_bb",), other_speed=20.0)
        result = run_sweep(spec, self.g, SafetyParams(), jobs=4)
        self.assertEqual(result.table["v_r"].tolist(), [0.0, 5.0, 10.0, 15.0, 20.0])
        self.assertTrue((result.table["v_f"] == 20.0).all())
        self.assertAlmostEqual(result.table["d_bb"].iloc[-1], 83.72)
        self.assertEqual(result.warnings, [])
        self.assertFalse(result.all_failed)

    def test_literal_mode(self):
        corrected = run_sweep(SweepSpec("v_all", 20.0, 20.0, 1.0, outputs=("d_bb",)), self.g, SafetyParams())
        literal = run_sweep(SweepSpec("v_all", 20.0, 20.0, 1.0, outputs=("d_bb",), mode="literal"), self.g, SafetyParams())
        self.assertGreater(literal.table["d_bb"].iloc[0], corrected.table["d_bb"].iloc[0])

    def test_failed_rows_are_blank(self):
        # a 20 m lane offset cannot be reached at the steering-limited radius
        p = SafetyParams(alpha=20.0)
        result = run_sweep(SweepSpec("v_all", 0.0, 10.0, 5.0), self.g, p, jobs=2)
        self.assertEqual(len(result.table), 3)
        self.assertTrue(math.isnan(result.table["d_hat"].iloc[0]))
        self.assertEqual(result.table["v"].iloc[0], 0.0)
        self.assertTrue(math.isfinite(result.table["d_hat"].iloc[2]))
        self.assertGreaterEqual(result.failed_rows, 1)
        self.assertTrue(result.warnings[0].startswith("row 0 "))
        self.assertIn("InfeasibleLaneChangeError", result.warnings[0])

    def test_all_failed(self):
        result = run_sweep(SweepSpec("v_all", 0.0, 0.0, 1.0), self.g, SafetyParams(alpha=20.0))
        self.assertTrue(result.all_failed)


class TestBracketing(unittest.TestCase):
    def test_kinematic_columns_only(self):
        g, p = VehicleGeometry(), SafetyParams()
        row = bracketing_row(20.0, g, p, DynamicParams(), dynamic=False)
        self.assertLess(row["x_c_lower"], row["x_c_kinematic"])
        self.assertTrue(math.isnan(row["x_c_dyn_constrained"]))

        result = run_bracketing([10.0, 20.0], g, p, DynamicParams(), dynamic=False)
        self.assertEqual(list(result.table.columns), BRACKETING_COLUMNS)
        self.assertFalse(bracketed(result.table).any())

    def test_bracketed_rows(self):
        table = pd.DataFrame({
            "v0": [10.0, 20.0],
            "x_c_kinematic": [20.0, 40.0],
            "x_c_lower": [15.0, 30.0],
            "x_c_lower_tire": [12.0, 24.0],
            "x_c_dyn_constrained": [18.0, 41.0],
            "x_c_dyn_unconstrained": [16.0, 41.0],
        })
        self.assertEqual(bracketed(table).tolist(), [True, False])
        self.assertEqual(bracketed(table, "x_c_dyn_constrained").tolist(), [True, False])

    def test_unconstrained_swerve_is_bracketed(self):
        g, p = VehicleGeometry(), SafetyParams()
        row = bracketing_row(
            20.0, g, p, DynamicParams(), search=dict(dt=5e-3, brake_values=[0.0, 4.0], target_levels=2),
        )
        self.assertLess(row["x_c_lower_tire"], row["x_c_lower"])
        self.assertTrue(bracketed(pd.DataFrame([row], columns=BRACKETING_COLUMNS)).iloc[0])


class TestOutputFiles(unittest.TestCase):
    def test_csv_header(self):
        table = pd.DataFrame({"v": [0.0, 0.5], "d_bb": [4.72, 5.1234567891]})
        buffer = io.StringIO()
        write_csv(table, buffer, "abc123")
        lines = buffer.getvalue().splitlines()
        self.assertEqual(lines[0], "# config_hash=abc123")
        self.assertEqual(lines[1], "v,d_bb")
        self.assertEqual(lines[3], "0.5,5.12345679")

    def test_warnings_sidecar(self):
        test_dir = tempfile.mkdtemp()
        csv_path = os.path.join(test_dir, "sweep.csv")
        self.assertIsNone(write_warnings([], csv_path))
        path = write_warnings(["row 0 (v=0): boom"], csv_path)
        self.assertEqual(path, csv_path + ".warnings.json")
        with open(path) as f:
            self.assertEqual(json.load(f), {"warnings": ["row 0 (v=0): boom"]})
        os.remove(path)
        os.rmdir(test_dir)


if __name__ == '__main__':
    unittest.main()
