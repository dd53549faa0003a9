"""CSV output shared by the command-line tools.

All files use '.' decimals, '\\n' line endings and a header row. Floats are
written with 17 significant digits so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import math
import sys
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

IMPULSE_COLUMNS = ("index", "G")
BOUND_COLUMNS = ("case", "t", "alpha", "term1", "term2", "f", "sigma2")
STUDY_COLUMNS = ("t", "w1_hat", "se", "bound_f", "sigma2", "case")
PLOT_COLUMNS = ("t", "w1_hat", "bound_f", "prop1")
W1_COLUMNS = ("N", "w1", "se")
VARIANCE_COLUMNS = (
    "t",
    "sigma2_exact",
    "sigma2_lower_poscorr",
    "sigma2_lower_decay",
    "decay_admissible",
    "decay_threshold",
)


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def write_rows(target, columns: Sequence[str], rows: Iterable[Mapping]):
    """
    Write ``rows`` as CSV.

    Args:
        target: Output path (parent directories are created) or None for stdout
        columns: Header row; each row must provide these keys
        rows: Mappings from column name to value
    """
    if target is None:
        _write(sys.stdout, columns, rows)
        return
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        _write(handle, columns, rows)


def _write(handle, columns, rows):
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[name]) for name in columns])


def impulse_rows(g) -> list[dict]:
    return [{"index": j, "G": float(value)} for j, value in enumerate(g)]
