"""Line-oriented run configuration.

Each non-blank line is ``key = value``; ``#`` starts a comment.  A value
``start : step : stop`` on a sweepable key makes that key the swept
parameter (exactly one per sweep run).  Matrices are written row by row with
``;`` between rows, e.g. ``H0 = 0 0.1; 0.1 1``.  Energy lists accept either
``a, b, c`` or a ``start : step : stop`` range.

Unknown keys and keys that the chosen mode does not use are errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .billiard.geometry import BilliardGeometry, DiscretizationParams
from .errors import ParseError, ReslabError, ValidationError
from .schematic import StatisticalParams, TwoLevelParams
from .sweeps import BILLIARD_PARAMS, ONE_CHANNEL, STATISTICAL_PARAMS, TWO_LEVEL_PARAMS, SweepSpec

MODES = (
    "schematic-sweep",
    "poles",
    "scatter",
    "conduct",
    "billiard-sweep",
    "integrated-conductance",
)
FORMATS = ("csv", "json", "svg", "field")
MODELS = ("two-level", "statistical")


@dataclass(frozen=True)
class Triplet:
    start: float
    step: float
    stop: float

    def __str__(self) -> str:
        return f"{_num(self.start)} : {_num(self.step)} : {_num(self.stop)}"

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return np.round(self.start + self.step * np.arange(n + 1), 12) + 0.0


def _num(x: float) -> str:
    return repr(float(x))


# -- value kinds ----------------------------------------------------------------


def _p_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _p_int(s: str) -> int:
    return int(s)


def _p_bool(s: str) -> bool:
    t = s.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


def _p_triplet(s: str) -> Triplet:
    parts = [p.strip() for p in s.split(":")]
    if len(parts) != 3:
        raise ValueError("expected start : step : stop")
    a, st, b = (_p_float(p) for p in parts)
    if st == 0:
        raise ValueError("step must be nonzero")
    if (b - a) / st < 0:
        raise ValueError("step points away from stop")
    return Triplet(a, st, b)


def _p_float_or_triplet(s: str):
    return _p_triplet(s) if ":" in s else _p_float(s)


def _p_matrix(s: str) -> tuple[tuple[float, ...], ...]:
    rows = [r.split() for r in s.split(";")]
    if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
        raise ValueError("rows must be nonempty and of equal length")
    return tuple(tuple(_p_float(x) for x in r) for r in rows)


def _p_energies(s: str):
    if ":" in s:
        return _p_triplet(s)
    vals = tuple(_p_float(x) for x in s.replace(",", " ").split())
    if not vals:
        raise ValueError("no energies given")
    return vals


def _p_pair(s: str) -> tuple[float, float]:
    vals = tuple(_p_float(x) for x in s.replace(",", " ").split())
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise ValueError("expected two ascending numbers")
    return vals


def _p_bands(s: str) -> tuple[tuple[float, float], ...]:
    return tuple(_p_pair(b) for b in s.split(";"))


def _p_formats(s: str) -> tuple[str, ...]:
    items = tuple(x.strip() for x in s.replace(",", " ").split())
    for x in items:
        if x not in FORMATS:
            raise ValueError(f"unknown format {x!r}; choose from {FORMATS}")
    return tuple(f for f in FORMATS if f in items)


def _p_choice(options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {options}")
        return s

    return parse


def _p_str(s: str) -> str:
    if not s:
        raise ValueError("empty value")
    return s


def _f_matrix(m) -> str:
    return "; ".join(" ".join(_num(x) for x in row) for row in m)


def _f_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, Triplet):
        return str(v)
    if isinstance(v, str):
        return v
    raise TypeError(type(v))


SCHEMATIC = {"schematic-sweep"}
BILLIARD = {"poles", "scatter", "conduct", "billiard-sweep", "integrated-conductance"}
ALL = SCHEMATIC | BILLIARD
SWEEPS = {"schematic-sweep", "billiard-sweep"}

# key -> (parser, formatter, modes that accept it)
KEYS: dict[str, tuple[Any, Any, set]] = {
    "mode": (_p_choice(MODES), _f_value, ALL),
    "model": (_p_choice(MODELS), _f_value, SCHEMATIC),
    "E1": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "E2": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "Gamma1": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "Gamma2": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "v_in": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "w_ex": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "rew_scale": (_p_float_or_triplet, _f_value, SCHEMATIC),
    "H0": (_p_matrix, _f_matrix, SCHEMATIC),
    "ReW": (_p_matrix, _f_matrix, SCHEMATIC),
    "V": (_p_matrix, _f_matrix, SCHEMATIC),
    "x_r": (_p_float_or_triplet, _f_value, BILLIARD),
    "y_d": (_p_float_or_triplet, _f_value, BILLIARD),
    "slide_w": (_p_float_or_triplet, _f_value, BILLIARD),
    "scatterer_x": (_p_float, _f_value, BILLIARD),
    "scatterer_y": (_p_float, _f_value, BILLIARD),
    "scatterer_radius": (_p_float, _f_value, BILLIARD),
    "lead2": (_p_bool, _f_value, BILLIARD),
    "h": (_p_float, _f_value, BILLIARD),
    "ecs_theta": (_p_float, _f_value, BILLIARD),
    "ecs_start": (_p_float, _f_value, BILLIARD),
    "lead_length": (_p_float, _f_value, BILLIARD),
    "lead_refine": (_p_int, _f_value, BILLIARD),
    "n_modes": (_p_int, _f_value, BILLIARD),
    "window": (_p_pair, lambda v: f"{_num(v[0])}, {_num(v[1])}", BILLIARD | SCHEMATIC),
    "energies": (
        _p_energies,
        lambda v: str(v) if isinstance(v, Triplet) else ", ".join(_num(x) for x in v),
        {"scatter", "conduct"},
    ),
    "bands": (
        _p_bands,
        lambda v: "; ".join(f"{_num(a)} {_num(b)}" for a, b in v),
        {"integrated-conductance"},
    ),
    "mixing": (_p_bool, _f_value, {"poles", "billiard-sweep"}),
    "match_gate": (_p_float, _f_value, SWEEPS),
    "g_max": (_p_float, _f_value, SWEEPS),
    "crossing_ratio": (_p_float, _f_value, SWEEPS),
    "rel_tol": (_p_float, _f_value, {"integrated-conductance"}),
    "outputs": (_p_formats, lambda v: ", ".join(v), ALL),
    "out_dir": (_p_str, _f_value, ALL),
}
SWEEPABLE = {
    "two-level": TWO_LEVEL_PARAMS,
    "statistical": STATISTICAL_PARAMS,
    "billiard-sweep": BILLIARD_PARAMS,
    "integrated-conductance": ("slide_w",),
}
DEFAULT_BANDS = ((math.pi**2, 25.0), (25.0, 4 * math.pi**2))


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values`` holds the keys that were set."""

    values: tuple[tuple[str, Any], ...]

    def get(self, key: str, default=None):
        for k, v in self.values:
            if k == key:
                return v
        return default

    def __contains__(self, key: str) -> bool:
        return any(k == key for k, _ in self.values)

    @property
    def mode(self) -> str:
        return self.get("mode")

    @property
    def model(self) -> str:
        return self.get("model", "two-level")

    @property
    def outputs(self) -> tuple[str, ...]:
        return self.get("outputs", ("csv", "json", "svg"))

    @property
    def out_dir(self) -> str:
        return self.get("out_dir", "reslab-out")

    @property
    def window(self) -> tuple[float, float]:
        return self.get("window", ONE_CHANNEL)

    @property
    def sweep_key(self) -> str | None:
        for k, v in self.values:
            if isinstance(v, Triplet) and k not in ("energies",):
                return k
        return None

    # -- typed views ------------------------------------------------------------

    def _scalar(self, key, default=None):
        v = self.get(key, default)
        return v.start if isinstance(v, Triplet) else v

    def two_level(self) -> TwoLevelParams:
        kw = {k: self._scalar(k, 0.0) for k in TWO_LEVEL_PARAMS}
        return TwoLevelParams(**kw)

    def statistical(self) -> StatisticalParams:
        H0 = np.array(self.get("H0"), dtype=float)
        ReW = np.array(self.get("ReW"), dtype=float) if "ReW" in self else np.zeros_like(H0)
        return StatisticalParams(H0, ReW, np.array(self.get("V"), dtype=float))

    def geometry(self) -> BilliardGeometry:
        g = BilliardGeometry()
        kw = {}
        for k in ("x_r", "y_d", "slide_w", "scatterer_radius"):
            if k in self:
                kw[k] = self._scalar(k)
        cx, cy = g.scatterer_center
        kw["scatterer_center"] = (self.get("scatterer_x", cx), self.get("scatterer_y", cy))
        kw["lead2_enabled"] = self.get("lead2", self.mode in ("conduct", "integrated-conductance"))
        return BilliardGeometry(**kw)

    def disc(self) -> DiscretizationParams:
        kw = {k: self.get(k) for k in ("h", "ecs_theta", "ecs_start", "lead_length", "lead_refine", "n_modes") if k in self}
        return DiscretizationParams(**kw)

    def sweep_spec(self) -> SweepSpec:
        key = self.sweep_key
        t: Triplet = self.get(key)
        if self.mode == "billiard-sweep":
            target = self.geometry()
            disc = self.disc()
        elif self.model == "statistical":
            target, disc = self.statistical(), None
        else:
            target, disc = self.two_level(), None
        return SweepSpec(
            key,
            t.start,
            t.stop,
            t.step,
            target,
            window=self.window,
            disc=disc,
            match_gate=self.get("match_gate"),
            mixing=self.get("mixing", False),
        )

    def energies(self) -> np.ndarray:
        e = self.get("energies")
        return e.values() if isinstance(e, Triplet) else np.array(e, dtype=float)

    def bands(self) -> tuple[tuple[float, float], ...]:
        return self.get("bands", DEFAULT_BANDS)


# -- parsing ------------------------------------------------------------------


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ParseError
        Malformed line, unknown or repeated key, unparsable value.
    ValidationError
        Values that parse but violate a constraint of the target type.
    """
    seen: dict[str, tuple[int, Any]] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(n, "expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ParseError(n, f"unknown key {key!r}")
        if key in seen:
            raise ParseError(n, f"key {key!r} given twice")
        try:
            seen[key] = (n, KEYS[key][0](val))
        except ValueError as exc:
            raise ParseError(n, f"{key}: {exc}") from exc
    if "mode" not in seen:
        raise ValidationError("mode", "required")
    order = list(KEYS)
    cfg = RunConfig(tuple((k, seen[k][1]) for k in sorted(seen, key=order.index)))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    mode = cfg.mode
    for k, _ in cfg.values:
        if mode not in KEYS[k][2]:
            raise ValidationError(k, f"not used in mode {mode!r}")
    triplets = [k for k, v in cfg.values if isinstance(v, Triplet) and k != "energies"]
    if mode in ("schematic-sweep", "billiard-sweep", "integrated-conductance"):
        allowed = SWEEPABLE[cfg.model if mode == "schematic-sweep" else mode]
        if len(triplets) != 1:
            raise ValidationError("sweep", f"exactly one of {allowed} must be a start : step : stop triplet")
        if triplets[0] not in allowed:
            raise ValidationError(triplets[0], f"cannot be swept in this mode; choose from {allowed}")
    elif triplets:
        raise ValidationError(triplets[0], f"sweep triplets are not used in mode {mode!r}")

    if mode == "schematic-sweep":
        if cfg.model == "statistical":
            for k in ("H0", "V"):
                if k not in cfg:
                    raise ValidationError(k, "required for the statistical model")
            for k in ("E1", "E2", "Gamma1", "Gamma2", "v_in"):
                if k in cfg:
                    raise ValidationError(k, "not used by the statistical model")
            for k in ("w_ex", "rew_scale"):
                if k in cfg and not isinstance(cfg.get(k), Triplet):
                    raise ValidationError(k, "is a scale factor of the statistical model; give it as a sweep")
        else:
            for k in ("E1", "E2"):
                if k not in cfg:
                    raise ValidationError(k, "required for the two-level model")
            for k in ("H0", "ReW", "V", "rew_scale"):
                if k in cfg:
                    raise ValidationError(k, "not used by the two-level model")
    if mode in ("scatter", "conduct") and "energies" not in cfg:
        raise ValidationError("energies", "required")
    if mode == "scatter" and cfg.get("lead2", False):
        raise ValidationError("lead2", "mode 'scatter' uses one lead; use mode 'conduct'")
    if mode in ("conduct", "integrated-conductance") and cfg.get("lead2", True) is False:
        raise ValidationError("lead2", f"mode {mode!r} needs two leads")
    if "rel_tol" in cfg and not 0 < cfg.get("rel_tol") < 1:
        raise ValidationError("rel_tol", "must lie in (0, 1)")
    for k in ("match_gate", "g_max", "crossing_ratio"):
        if k in cfg and not cfg.get(k) > 0:
            raise ValidationError(k, "must be > 0")

    # construct the target objects; their own checks raise ValidationError
    try:
        if mode == "schematic-sweep":
            cfg.sweep_spec()
        else:
            cfg.disc()
            geom = cfg.geometry()
            if mode == "billiard-sweep":
                cfg.sweep_spec()
            if mode == "integrated-conductance":
                for w in cfg.get("slide_w").values():
                    geom.with_(slide_w=float(w))
                for a, b in cfg.bands():
                    if a < ONE_CHANNEL[0] - 1e-9 or b > ONE_CHANNEL[1] + 1e-9:
                        raise ValidationError("bands", "must lie within (pi^2, 4 pi^2)")
            if mode in ("scatter", "conduct"):
                e = cfg.energies()
                if e.size == 0 or e.min() <= ONE_CHANNEL[0] or e.max() >= ONE_CHANNEL[1]:
                    raise ValidationError("energies", "must lie inside (pi^2, 4 pi^2)")
    except ValidationError:
        raise
    except ReslabError as exc:
        raise ValidationError("config", str(exc)) from exc


def format_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(format_config(c)) == c``."""
    lines = []
    for k, v in cfg.values:
        lines.append(f"{k} = {KEYS[k][1](v)}")
    return "\n".join(lines) + "\n"


def config_dict(cfg: RunConfig) -> dict:
    """JSON-friendly echo of the configuration."""
    out = {}
    for k, v in cfg.values:
        if isinstance(v, Triplet):
            out[k] = {"start": v.start, "step": v.step, "stop": v.stop}
        elif isinstance(v, tuple):
            out[k] = [list(x) if isinstance(x, tuple) else x for x in v]
        else:
            out[k] = v
    return out
