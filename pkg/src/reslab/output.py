"""Result files: CSV tables, JSON manifest, SVG plots, field grids.

Data files are byte-deterministic: floats use 17 significant digits, keys
are sorted and nothing time-dependent is written.  Wall-clock timings go to
a separate ``timings.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .billiard.fieldio import export_field
from .config import RunConfig, config_dict, format_config
from .core import ResonanceSet
from .errors import IoFailure
from .sweeps import ConductanceTable, CrossingEvent, SweepResult


@dataclass
class RunOutput:
    """Everything one run produced, ready to be written."""

    mode: str
    result: Any
    meta: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    crossings: list[CrossingEvent] = field(default_factory=list)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    return buf.getvalue()


def _write(path: str, text: str) -> str:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


# -- tables -------------------------------------------------------------------


def _mix_cols(sets) -> int:
    n = 0
    for s in sets:
        if s is None:
            continue
        for st in s:
            if st.mixing is not None:
                n = max(n, len(st.mixing))
    return n


def _state_rows(prefix, rset: ResonanceSet, labels, nmix):
    rows = []
    for i, st in enumerate(rset):
        mix = list(np.abs(st.mixing)) if st.mixing is not None else []
        mix += [float("nan")] * (nmix - len(mix))
        traj = [int(labels[i])] if labels is not None else []
        rows.append(prefix + [i, st.energy.re, st.width] + traj + [st.norm_sq, rset.biorthogonality] + mix)
    return rows


def sweep_tables(res: SweepResult) -> dict[str, str]:
    p = res.parameter
    nmix = _mix_cols(res.sets)
    header = [p, "state", "E", "Gamma", "trajectory", "norm_sq", "B"] + [f"b{j + 1}" for j in range(nmix)]
    rows = []
    for k, (val, rset) in enumerate(zip(res.values, res.sets)):
        if rset is None:
            continue
        rows += _state_rows([val], rset, res.labels[k], nmix)
    diag = [
        [val, k, ws, n, b, flag]
        for k, (val, ws, n, b, flag) in enumerate(
            zip(res.values, res.width_sum, res.state_count, res.biorthogonality, res.flags)
        )
    ]
    out = {
        "states.csv": _csv(header, rows),
        "diagnostics.csv": _csv([p, "step", "width_sum", "state_count", "B", "flag"], diag),
    }
    return out


def crossing_table(events: Sequence[CrossingEvent], parameter: str) -> str:
    rows = [
        [e.parameter_value, e.step, e.pair[0], e.pair[1], e.min_gap, e.classification, e.branch_point_candidate]
        for e in events
    ]
    return _csv([parameter, "step", "traj_a", "traj_b", "min_gap", "classification", "branch_point"], rows)


def poles_table(rset: ResonanceSet) -> str:
    nmix = _mix_cols([rset])
    header = ["state", "E", "Gamma", "norm_sq", "B"] + [f"b{j + 1}" for j in range(nmix)]
    rows = [r for r in _state_rows([], rset, None, nmix)]
    return _csv(header, rows)


def scattering_table(sols, taus=None) -> str:
    two = bool(sols) and sols[0].S.shape[0] == 2
    if two:
        header = ["E", "k", "G", "R2", "unitarity", "reciprocity"]
        rows = [
            [s.E, s.k, s.conductance, abs(s.S[0, 0]) ** 2, s.unitarity_defect(), abs(s.S[0, 1] - s.S[1, 0])]
            for s in sols
        ]
    else:
        header = ["E", "k", "R_re", "R_im", "R_abs", "phase", "time_delay"]
        phase = np.unwrap(np.angle([s.R_amp for s in sols])) if sols else []
        taus = taus if taus is not None else [float("nan")] * len(sols)
        rows = [
            [s.E, s.k, s.R_amp.real, s.R_amp.imag, abs(s.R_amp), ph, t]
            for s, ph, t in zip(sols, phase, taus)
        ]
    return _csv(header, rows)


def conductance_table(tab: ConductanceTable) -> str:
    rows = []
    for w, vals in zip(tab.w_values, tab.values):
        for (a, b), v in zip(tab.bands, vals):
            rows.append([w, a, b, v])
    return _csv(["slide_w", "band_lo", "band_hi", "integrated_conductance"], rows)


# -- SVG ----------------------------------------------------------------------

SVG_W, SVG_H, PAD = 640, 420, 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _c(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step - 1e-9) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def svg_plot(series, xlabel: str, ylabel: str, title: str, lines: bool = True) -> str:
    """Line/scatter plot of ``[(label, xs, ys), ...]`` as an SVG document."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series]) if series else np.zeros(0)
    ys = np.concatenate([np.asarray(s[2], float) for s in series]) if series else np.zeros(0)
    ok = np.isfinite(xs) & np.isfinite(ys)
    if ok.any():
        x0, x1 = float(xs[ok].min()), float(xs[ok].max())
        y0, y1 = float(ys[ok].min()), float(ys[ok].max())
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = SVG_W - 2 * PAD, SVG_H - 2 * PAD

    def X(x):
        return PAD + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return SVG_H - PAD - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<text x="{SVG_W // 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{PAD}" y="{PAD}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(
            f'<text x="{_c(X(t))}" y="{SVG_H - PAD + 16}" text-anchor="middle" font-family="sans-serif" font-size="10">{t:.4g}</text>'
        )
    for t in _ticks(y0, y1):
        out.append(
            f'<text x="{PAD - 6}" y="{_c(Y(t) + 3)}" text-anchor="end" font-family="sans-serif" font-size="10">{t:.4g}</text>'
        )
    out.append(
        f'<text x="{SVG_W // 2}" y="{SVG_H - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{xlabel}</text>'
    )
    out.append(
        f'<text x="14" y="{SVG_H // 2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {SVG_H // 2})">{ylabel}</text>'
    )
    for k, (label, sx, sy) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = [(X(a), Y(b)) for a, b in zip(sx, sy) if math.isfinite(a) and math.isfinite(b)]
        if not pts:
            continue
        if lines and len(pts) > 1:
            d = " ".join(f"{_c(a)},{_c(b)}" for a, b in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{d}"><title>{label}</title></polyline>')
        else:
            for a, b in pts:
                out.append(f'<circle cx="{_c(a)}" cy="{_c(b)}" r="2" fill="{color}"><title>{label}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_svg(res: SweepResult) -> str:
    series = [
        (f"trajectory {t.id}", np.real(t.energies), np.asarray(t.widths)) for t in res.trajectories
    ]
    return svg_plot(series, "E", "Gamma", f"pole trajectories vs {res.parameter}")


def poles_svg(rset: ResonanceSet) -> str:
    return svg_plot([("poles", rset.energies.real, rset.widths)], "E", "Gamma", "S-matrix poles", lines=False)


def scattering_svg(sols) -> str:
    E = [s.E for s in sols]
    if sols and sols[0].S.shape[0] == 2:
        return svg_plot([("G", E, [s.conductance for s in sols])], "E", "G", "conductance")
    phase = np.unwrap(np.angle([s.R_amp for s in sols])) if sols else []
    return svg_plot([("arg R", E, phase)], "E", "arg R", "reflection phase")


def conductance_svg(tab: ConductanceTable) -> str:
    series = [
        (f"{a:.4g}..{b:.4g}", tab.w_values, tab.values[:, j]) for j, (a, b) in enumerate(tab.bands)
    ]
    return svg_plot(series, "slide_w", "integrated G", "integrated conductance")


# -- driver -------------------------------------------------------------------


def emit_results(run: RunOutput, config: RunConfig, out_dir: str | None = None) -> list[str]:
    """Write the files selected by ``config.outputs``; returns their paths."""
    out_dir = out_dir or config.out_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    fmts = config.outputs
    res = run.result
    files: dict[str, str] = {}
    svg = None
    if isinstance(res, SweepResult):
        if "csv" in fmts:
            files.update(sweep_tables(res))
            files["crossings.csv"] = crossing_table(run.crossings, res.parameter)
        svg = trajectory_svg(res)
    elif isinstance(res, ResonanceSet):
        if "csv" in fmts:
            files["poles.csv"] = poles_table(res)
        svg = poles_svg(res)
    elif isinstance(res, ConductanceTable):
        if "csv" in fmts:
            files["integrated_conductance.csv"] = conductance_table(res)
        svg = conductance_svg(res)
    else:  # list of ScatteringSolution
        if "csv" in fmts:
            files["scattering.csv"] = scattering_table(res, run.meta.get("time_delay"))
        svg = scattering_svg(res)
    if "svg" in fmts:
        files["plot.svg"] = svg
    if "json" in fmts:
        manifest = {
            "mode": run.mode,
            "config": config_dict(config),
            "config_text": format_config(config),
            "solver": {k: v for k, v in run.meta.items() if not k.startswith("_") and k != "time_delay"},
            "files": sorted(files),
        }
        files["manifest.json"] = json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n"
        files["timings.json"] = json.dumps(_jsonable(run.timings), indent=2, sort_keys=True) + "\n"
    paths = [_write(os.path.join(out_dir, name), text) for name, text in sorted(files.items())]
    if "field" in fmts and isinstance(res, ResonanceSet):
        geom = run.meta.get("_geometry")
        for k, fld in enumerate(res.meta.get("fields", [])):
            p = os.path.join(out_dir, f"field_{k:03d}.txt")
            export_field(fld, geom, p)
            paths.append(p)
    if "field" in fmts and isinstance(res, list) and res:
        p = os.path.join(out_dir, "field_scatter.txt")
        export_field(res[0].field, run.meta.get("_geometry"), p)
        paths.append(p)
    return paths
