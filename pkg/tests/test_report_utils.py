import io
import os
import sys
import unittest

import pandas as pd
from rich.console import Console

# Add the repo root to path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.report_utils import render_dataframe


class TestRenderDataframe(unittest.TestCase):

    def setUp(self):
        self.buffer = io.StringIO()
        self.console = Console(file=self.buffer, width=200)
        self.df = pd.DataFrame({
            "scenario": ["bb", "sb", "[ss]"],
            "distance": [83.72, 60.5, float("nan")],
        })

    def test_renders_all_rows(self):
        table = render_dataframe(self.df, title="Distances", console=self.console)
        self.assertEqual(table.row_count, 3)
        output = self.buffer.getvalue()
        self.assertIn("83.7200", output)
        # bracketed text survives instead of being read as markup
        self.assertIn("[ss]", output)

    def test_filter_keeps_matching_rows(self):
        table = render_dataframe(self.df, filter_col="scenario", keep=["sb"], console=self.console)
        self.assertEqual(table.row_count, 1)
        self.assertIn("60.5000", self.buffer.getvalue())

    def test_filter_with_no_match(self):
        table = render_dataframe(self.df, filter_col="scenario", keep=["universal"], console=self.console)
        self.assertEqual(table.row_count, 0)
        self.assertIn("No rows match the scenario filter", self.buffer.getvalue())

    def test_empty_frame(self):
        table = render_dataframe(pd.DataFrame(), console=self.console)
        self.assertEqual(table.row_count, 0)
        self.assertIn("No rows to display", self.buffer.getvalue())

    def test_unknown_filter_column_is_ignored(self):
        table = render_dataframe(self.df, filter_col="missing", keep=["bb"], console=self.console)
        self.assertEqual(table.row_count, 3)


if __name__ == '__main__':
    unittest.main()
