from shutil import get_terminal_size
from typing import Dict

import numpy as np
import pandas as pd
from rich import box
from rich.rule import Rule
from rich.table import Table
from rich.text import Text

from coexist._kpis.common.pprint import make_warning
from coexist._kpis.common.result import smartround
from coexist.cli import console

__all__ = ["print_error", "print_warning", "print_rule", "print_table"]


err_text = Text("ERR!", style="red")


def print_error(e: Exception):
    """Pretty print exceptions"""
    text = Text(style="bright")
    text.append(err_text)
    text.append(f" {e}")

    console.print(text)


def print_warning(msg: str):
    f_warning = make_warning(msg)

    console.print(f_warning)


def print_rule(title: str, color: str = "blue"):
    size = get_terminal_size()
    ncols = min(size.columns, 80)

    rule = Rule(title, style=f"bright_{color}")
    console.print(rule, width=ncols)


def _format_cell(value) -> Text:
    if isinstance(value, (float, np.floating)) and np.isnan(value):
        return Text("-", style="dim")
    return Text(str(smartround(value, 4)))


def print_table(df: pd.DataFrame, metadata: Dict[str, str] = None, title: str = None):
    """Pretty print a KPI table with its run metadata as the caption"""
    caption = None
    if metadata:
        caption = ", ".join(f"{key} {value}" for key, value in metadata.items())

    table = Table(box=box.SIMPLE_HEAD, title=title, caption=caption)
    for column in df.columns:
        table.add_column(column, justify="right")
    for row in df.itertuples(index=False):
        table.add_row(*(_format_cell(value) for value in row))

    console.print(table)
