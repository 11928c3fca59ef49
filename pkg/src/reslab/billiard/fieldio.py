"""Plain-text grid files for cavity wave functions.

Format::

    # billiard-field v1, nx=<int> ny=<int> h=<float> x0=<float> y0=<float>
    <ny rows of nx values, row-major, y ascending>

Values are written with 17 significant digits so every float reads back
bit-identically.  When the two spacings differ, ``hy=<float>`` is appended
to the header; a ``quantity=<re|im>`` field marks files that hold a real or
imaginary part instead of ``|Phi|^2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..errors import IoFailure, ParseError
from .geometry import X_LEFT, BilliardGeometry

HEADER = "# billiard-field v1"
QUANTITIES = ("abs2", "re", "im")


@dataclass(frozen=True)
class FieldGrid:
    values: np.ndarray  # shape (ny, nx), row 0 at y0
    h: float
    hy: float
    x0: float
    y0: float
    quantity: str = "abs2"

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def field_grid(field, geom: BilliardGeometry, quantity: str = "abs2") -> FieldGrid:
    """Tabulate an interior field of shape ``(nx_int, ny_int)`` (index ``[i, j]``)."""
    f = np.asarray(field)
    if f.ndim != 2:
        raise ValueError("field must be a 2-D array over the interior grid")
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    hx = geom.width / (f.shape[0] + 1)
    hy = geom.height / (f.shape[1] + 1)
    if quantity == "abs2":
        vals = np.abs(f) ** 2
    elif quantity == "re":
        vals = np.real(f)
    else:
        vals = np.imag(f)
    return FieldGrid(np.ascontiguousarray(vals.T, dtype=float), hx, hy, X_LEFT + hx, geom.y_d + hy, quantity)


def format_field(grid: FieldGrid) -> str:
    head = f"{HEADER}, nx={grid.nx} ny={grid.ny} h={_fmt(grid.h)} x0={_fmt(grid.x0)} y0={_fmt(grid.y0)}"
    if abs(grid.hy - grid.h) > 1e-12 * grid.h:
        head += f" hy={_fmt(grid.hy)}"
    if grid.quantity != "abs2":
        head += f" quantity={grid.quantity}"
    lines = [head]
    lines += [" ".join(_fmt(v) for v in row) for row in grid.values]
    return "\n".join(lines) + "\n"


def export_field(field, geom: BilliardGeometry, path, quantity: str = "abs2") -> FieldGrid:
    """Write ``|Phi|^2`` (or the real/imaginary part) of an interior field to ``path``."""
    grid = field_grid(field, geom, quantity)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_field(grid))
    except OSError as exc:
        raise IoFailure(f"cannot write field file {path}: {exc}") from exc
    return grid


_KV = re.compile(r"(\w+)=(\S+)")


def parse_field(text: str) -> FieldGrid:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(HEADER):
        raise ParseError(1, "missing billiard-field header")
    kv = dict(_KV.findall(lines[0]))
    try:
        nx, ny = int(kv["nx"]), int(kv["ny"])
        h, x0, y0 = float(kv["h"]), float(kv["x0"]), float(kv["y0"])
    except (KeyError, ValueError) as exc:
        raise ParseError(1, f"bad header field: {exc}") from exc
    hy = float(kv.get("hy", h))
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) != ny:
        raise ParseError(len(lines), f"expected {ny} data rows, found {len(rows)}")
    vals = np.empty((ny, nx))
    for k, ln in enumerate(rows):
        parts = ln.split()
        if len(parts) != nx:
            raise ParseError(k + 2, f"expected {nx} values, found {len(parts)}")
        try:
            vals[k] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(k + 2, str(exc)) from exc
    return FieldGrid(vals, h, hy, x0, y0, kv.get("quantity", "abs2"))


def read_field(path) -> FieldGrid:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read field file {path}: {exc}") from exc
    return parse_field(text)
