"""Result tables and their CSV / SVG / metadata persistence.

CSV output is byte-deterministic: fixed column order, UTF-8, LF line
endings, floats rendered with 17 significant digits so parsing the file
recovers the exact binary values. Run metadata (seed, trials, config hash,
wall time) lives in a JSON sidecar next to the CSV, never in the CSV
itself, so reruns with equal seeds produce identical CSV bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

FLOAT_FORMAT = "%.17g"


@dataclass
class ResultTable:
    """Named, equal-length column series plus run metadata.

    The first column is the sweep axis. Monte Carlo columns carry a paired
    standard-error column named "<column>_se"; closed-form columns have no
    pair. Column order is the insertion order and is part of the output
    contract.
    """

    name: str
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        self._validate()

    def _validate(self) -> None:
        lengths = {v.shape for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns must have equal length, got {lengths}")
        for col in self.columns:
            if col.endswith("_se") and col[:-3] not in self.columns:
                raise ValueError(f"standard-error column {col!r} has no base column")

    def add(self, name: str, values) -> None:
        """Append a closed-form or axis column."""
        if name in self.columns:
            raise ValueError(f"duplicate column {name!r}")
        self.columns[name] = np.asarray(values, dtype=float)
        self._validate()

    def add_mc(self, name: str, means, ses) -> None:
        """Append a Monte Carlo column together with its standard errors."""
        self.add(name, means)
        self.add(name + "_se", ses)

    @property
    def n_rows(self) -> int:
        if not self.columns:
            return 0
        return next(iter(self.columns.values())).size

    def series_names(self) -> list[str]:
        """Plottable series: every column except the axis and the SE pairs."""
        names = list(self.columns)
        return [n for n in names[1:] if not n.endswith("_se")]


def _format_value(x: float) -> str:
    return FLOAT_FORMAT % x


def table_to_csv_text(table: ResultTable) -> str:
    """Render the table as deterministic CSV text (LF, header row)."""
    names = list(table.columns)
    lines = [",".join(names)]
    cols = [table.columns[n] for n in names]
    for i in range(table.n_rows):
        lines.append(",".join(_format_value(c[i]) for c in cols))
    return "\n".join(lines) + "\n"


def _write_csv(table: ResultTable, path: str) -> None:
    text = table_to_csv_text(table)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    meta = dict(table.metadata)
    meta["experiment"] = table.name
    meta["columns"] = list(table.columns)
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_svg(table: ResultTable, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.fonttype"] = "none"  # keep labels as text elements
    names = list(table.columns)
    if not names:
        raise ValueError("cannot plot a table with no columns")
    x_name = names[0]
    x = table.columns[x_name]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for series in table.series_names():
        y = table.columns[series]
        se_name = series + "_se"
        if se_name in table.columns:
            ax.errorbar(x, y, yerr=table.columns[se_name], label=series, capsize=2)
        else:
            ax.plot(x, y, "--", label=series)
    ax.set_xlabel(x_name)
    ax.set_title(table.name)
    ax.grid(True, alpha=0.3)
    if table.series_names():
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit(table: ResultTable, format: str, path: str) -> None:
    """Write the table to path as "csv" (plus .meta.json sidecar) or "svg".

    I/O failures are re-raised as OSError carrying the target path.
    """
    if format not in ("csv", "svg"):
        raise ValueError(f"unknown output format: {format!r}")
    try:
        if format == "csv":
            _write_csv(table, path)
        else:
            _write_svg(table, path)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc
