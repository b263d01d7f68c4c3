"""CSV input and output: comma-delimited, one header line, LF endings, UTF-8."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import IoFailure
from .measures import Dataset


def _fmt(x) -> str:
    return format(float(x), ".17g")


def save_dataset(data: Dataset, path, column: str = "value") -> Path:
    """Write one value per line under a single header line."""
    p = Path(path)
    try:
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(column + "\n")
            fh.writelines(_fmt(v) + "\n" for v in data.values)
    except OSError as exc:
        raise IoFailure(f"cannot write {p}: {exc}") from exc
    return p


def load_dataset(path, order_preserved: bool = False) -> Dataset:
    """Read a one-column CSV with a header line.

    A file with several columns is read from its first column.

    Raises
    ------
    IoFailure
        If the file cannot be read.
    ValueError
        If a row does not parse as a finite number or there are no rows.
    """
    p = Path(path)
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {p}: {exc}") from exc
    rows = [ln for ln in lines[1:] if ln.strip()]
    if not rows:
        raise ValueError(f"{p} has no data rows")
    values = []
    for k, ln in enumerate(rows, start=2):
        field = ln.split(",")[0].strip()
        try:
            values.append(float(field))
        except ValueError:
            raise ValueError(f"{p}:{k}: cannot parse {field!r} as a number") from None
    return Dataset(np.array(values), order_preserved)


def save_cloud(cloud, path) -> list[Path]:
    """Write particles (parameters, normalized weight, distance) plus a JSON sidecar."""
    p = Path(path)
    side = p.with_suffix(".json")
    w = cloud.weights
    try:
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join([*cloud.names, "weight", "distance"]) + "\n")
            for theta, wi, d in zip(cloud.thetas, w, cloud.distances):
                fh.write(",".join(_fmt(v) for v in (*theta, wi, d)) + "\n")
        meta = {"epsilon": cloud.epsilon, "total_simulations": cloud.total_simulations,
                "epsilon_trace": list(cloud.epsilon_trace), "info": cloud.info}
        side.write_text(json.dumps(meta, indent=1, default=_jsonable) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {p}: {exc}") from exc
    return [p, side]


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")
