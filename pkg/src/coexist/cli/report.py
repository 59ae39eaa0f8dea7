"""Result tables: writing, reading and comparing them

A table is written as CSV preceded by ``#`` metadata lines, or as a JSON
object holding the same metadata and the rows as an array. Nothing in a
table depends on the time of the run, so re-running a command reproduces
its output byte for byte.
"""
import json
import math
import subprocess
from dataclasses import dataclass
from io import StringIO
from pathlib import Path
from typing import Dict
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
import pandas as pd

import coexist
from coexist.cli.parsing import DataParsingError

__all__ = [
    "COLUMN_UNITS",
    "git_describe",
    "run_metadata",
    "write_table",
    "read_table",
    "GridMismatchError",
    "degradation_report",
    "degradation_peaks",
]


COLUMN_UNITS = {
    "p_sc_analytic": "1",
    "p_sc_mc": "1",
    "mc_ci": "1",
    "p_delivery": "1",
    "n_tx_mean": "transmissions",
    "delay_s": "s",
    "energy_J": "J",
    "lifetime_s": "s",
    "p_sc_mrc": "1",
    "n_tx_mrc": "transmissions",
    "lifetime_mrc_s": "s",
    "p_delivery_mc": "1",
    "n_tx_mean_mc": "transmissions",
    "delay_s_mc": "s",
    "energy_J_mc": "J",
    "lifetime_s_mc": "s",
    "p_sc_single": "1",
    "p_sc_multi": "1",
    "p_sc_degradation_pct": "%",
    "lifetime_single_s": "s",
    "lifetime_multi_s": "s",
    "lifetime_degradation_pct": "%",
    "p_sc_peak": "flag",
    "lifetime_peak": "flag",
}

FLOAT_FORMAT = "%.10g"

Table = Tuple[Dict[str, str], pd.DataFrame]


def git_describe() -> str:
    """``git describe`` of the source tree, or ``"unknown"`` outside a checkout"""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(coexist.__file__).parent,
            capture_output=True,
            text=True,
            check=True,
        )
    except (OSError, subprocess.CalledProcessError):
        return "unknown"

    return out.stdout.strip() or "unknown"


def run_metadata(sweep_unit: str, **fields) -> Dict[str, str]:
    """Metadata block of a table, with the version and source revision first"""
    meta = {"tool": f"coexist {coexist.__version__}", "git": git_describe()}
    meta.update({key: str(value) for key, value in fields.items()})
    meta["sweep_value_unit"] = sweep_unit

    return meta


def _column_units(df: pd.DataFrame, meta: Dict[str, str]) -> str:
    units = []
    for column in df.columns:
        if column == "sweep_value":
            unit = meta.get("sweep_value_unit", "?")
        else:
            unit = COLUMN_UNITS.get(column, "?")
        units.append(f"{column} [{unit}]")

    return ", ".join(units)


def _json_value(value) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


def write_table(df: pd.DataFrame, meta: Dict[str, str], out, as_json: bool = False):
    """Writes ``df`` and its metadata to the path or file object ``out``"""
    meta = dict(meta)
    meta["columns"] = _column_units(df, meta)

    if as_json:
        rows = [
            {column: _json_value(value) for column, value in row.items()}
            for row in df.to_dict(orient="records")
        ]
        text = json.dumps({"metadata": meta, "rows": rows}, indent=2) + "\n"
    else:
        header = "".join(f"# {key}: {value}\n" for key, value in meta.items())
        text = header + df.to_csv(index=False, float_format=FLOAT_FORMAT)

    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)


def read_table(path: Union[str, Path]) -> Table:
    """Reads a table written by ``write_table``

    Raises
    ------
    DataParsingError
        If the file is neither format
    """
    text = Path(path).read_text()

    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            meta, rows = doc["metadata"], doc["rows"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataParsingError(f"{path} is not a result table") from e
        df = pd.DataFrame(rows).astype(float)
        return meta, df

    meta = {}
    lines = text.splitlines()
    for line in lines:
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition(": ")
        meta[key] = value

    body = [line for line in lines if not line.startswith("#")]
    if not body:
        raise DataParsingError(f"{path} holds no table")

    try:
        df = pd.read_csv(StringIO("\n".join(body)))
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataParsingError(f"{path} is not a result table") from e

    if "sweep_value" not in df.columns:
        raise DataParsingError(f"{path} has no sweep_value column")

    return meta, df


# ------------------------------------------------------------------------------
# Degradation


@dataclass
class GridMismatchError(DataParsingError):
    """Error for comparing tables swept over different grids"""

    nsingle: int
    nmulti: int

    def __str__(self):
        if self.nsingle != self.nmulti:
            return (
                f"Tables have {self.nsingle} and {self.nmulti} rows; "
                "they must share one sweep grid"
            )
        return "Tables have different sweep values; they must share one sweep grid"


def _pick(df: pd.DataFrame, *columns: str) -> pd.Series:
    for column in columns:
        if column in df.columns:
            return df[column]

    raise DataParsingError(f"Table has none of the columns {', '.join(columns)}")


def _peak_flags(pct: np.ndarray) -> np.ndarray:
    """1 at the first row where ``pct`` is largest, 0 elsewhere"""
    flags = np.zeros(len(pct), dtype=int)
    if not np.isnan(pct).all():
        flags[np.nanargmax(pct)] = 1
    return flags


def degradation_report(
    single: pd.DataFrame, multi: pd.DataFrame, floor: float = 0.01
) -> pd.DataFrame:
    """Percentage by which coexistence degrades each KPI at each sweep point

    Degradation is 100·(1 − multi/single) for the success probability and the
    battery lifetime. Points where the single-technology success probability
    is below ``floor`` are out of coverage, and their percentages are NaN.
    The ``p_sc_peak`` and ``lifetime_peak`` columns flag the row where each
    degradation is largest.

    Parameters
    ----------
    single : ``DataFrame``
        Table of the single-technology baseline
    multi : ``DataFrame``
        Table of the coexistence scenario
    floor : ``float``, default ``0.01``
        Smallest baseline success probability worth comparing

    Raises
    ------
    GridMismatchError
        If the tables were not swept over the same values
    """
    if len(single) != len(multi):
        raise GridMismatchError(len(single), len(multi))
    grid = single["sweep_value"].to_numpy(dtype=float)
    multi_grid = multi["sweep_value"].to_numpy(dtype=float)
    if not np.allclose(grid, multi_grid, rtol=1e-9, atol=0):
        raise GridMismatchError(len(single), len(multi))

    p_single = _pick(single, "p_sc_analytic", "p_sc_mc").to_numpy(dtype=float)
    p_multi = _pick(multi, "p_sc_analytic", "p_sc_mc").to_numpy(dtype=float)
    life_single = _pick(single, "lifetime_s", "lifetime_s_mc").to_numpy(dtype=float)
    life_multi = _pick(multi, "lifetime_s", "lifetime_s_mc").to_numpy(dtype=float)

    covered = p_single >= floor
    with np.errstate(divide="ignore", invalid="ignore"):
        p_pct = np.where(covered, 100 * (1 - p_multi / p_single), np.nan)
        life_pct = np.where(
            covered & (life_single > 0), 100 * (1 - life_multi / life_single), np.nan
        )

    return pd.DataFrame(
        {
            "sweep_value": grid,
            "p_sc_single": p_single,
            "p_sc_multi": p_multi,
            "p_sc_degradation_pct": p_pct,
            "lifetime_single_s": life_single,
            "lifetime_multi_s": life_multi,
            "lifetime_degradation_pct": life_pct,
            "p_sc_peak": _peak_flags(p_pct),
            "lifetime_peak": _peak_flags(life_pct),
        }
    )


def degradation_peaks(report: pd.DataFrame) -> Dict[str, Optional[Tuple[float, float]]]:
    """Sweep value and percentage of the largest degradation of each KPI"""
    peaks = {}
    for kpi in ("p_sc", "lifetime"):
        flagged = report.index[report[f"{kpi}_peak"] == 1]
        if len(flagged) == 0:
            peaks[kpi] = None
        else:
            row = report.loc[flagged[0]]
            pct = row[f"{kpi}_degradation_pct"]
            peaks[kpi] = (float(row["sweep_value"]), float(pct))

    return peaks
