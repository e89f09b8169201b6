import math
from typing import Iterable, Optional

import pandas as pd
from rich.console import Console
from rich.markup import escape
from rich.table import Table

# stdout carries JSON and CSV; tables go to stderr
stderr_console = Console(stderr=True)


def _cell(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.4f}"
    # free text (warnings, case inputs) may contain square brackets
    return escape(str(value))


def render_dataframe(
    df: pd.DataFrame, filter_col: Optional[str] = None, keep: Optional[Iterable] = None,
    title: Optional[str] = None, console: Optional[Console] = None,
) -> Table:
    """
    Renders a DataFrame as a rich table, optionally keeping only rows whose
    filter_col value is in keep.

    Returns the table so callers can reuse it.
    """
    console = console or stderr_console
    table = Table(title=escape(title) if title else None)

    if df.empty:
        console.print("[dim]No rows to display.[/dim]")
        return table

    if filter_col and filter_col in df.columns and keep is not None:
        df = df[df[filter_col].isin(list(keep))]
        if df.empty:
            console.print(f"[dim]No rows match the {escape(filter_col)} filter.[/dim]")
            return table

    for column in df.columns:
        table.add_column(escape(str(column)), justify="right" if pd.api.types.is_numeric_dtype(df[column]) else "left")
    for row in df.itertuples(index=False):
        table.add_row(*(_cell(value) for value in row))
    console.print(table)
    return table
