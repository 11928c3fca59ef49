"""Cavity geometry and discretization settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable

from ..errors import ValidationError

X_LEFT = -1.5
LEAD_WIDTH = 1.0
# lead 1 mouth on the top wall
LEAD1_SPAN = (-1.5, -0.5)


@dataclass(frozen=True)
class BilliardGeometry:
    """Rectangle ``[-1.5, x_r] x [y_d, 0]`` with a disk and one or two leads.

    Lead 1 leaves the top wall over ``x in [-1.5, -0.5]``; lead 2 (optional)
    leaves the bottom wall over ``x in [x_r - 1, x_r]``.  Each mouth carries a
    slide that leaves an opening of width ``1 - 2*slide_w`` centred in the
    mouth: ``slide_w = 0.5`` seals the cavity, ``slide_w = 0`` opens it fully.
    A ``scatterer_radius`` of 0 means an empty rectangle.
    """

    x_r: float = 1.5
    y_d: float = -3.0
    scatterer_center: tuple[float, float] = (0.3, -1.2)
    scatterer_radius: float = 0.5
    slide_w: float = 0.15
    lead2_enabled: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "scatterer_center", tuple(float(c) for c in self.scatterer_center)
        )
        self.validate()

    @property
    def x_l(self) -> float:
        return X_LEFT

    @property
    def width(self) -> float:
        return self.x_r - X_LEFT

    @property
    def height(self) -> float:
        return -self.y_d

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def opening(self) -> float:
        return LEAD_WIDTH - 2.0 * self.slide_w

    @property
    def lead1_span(self) -> tuple[float, float]:
        return LEAD1_SPAN

    @property
    def lead2_span(self) -> tuple[float, float]:
        return (self.x_r - LEAD_WIDTH, self.x_r)

    def openings(self) -> list[tuple[float, float]]:
        spans = [self.lead1_span] + ([self.lead2_span] if self.lead2_enabled else [])
        return [(a + self.slide_w, b - self.slide_w) for a, b in spans]

    def validate(self) -> None:
        for name in ("x_r", "y_d", "scatterer_radius", "slide_w"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.x_r < 1.5 - 1e-12:
            raise ValidationError("x_r", "must be >= 1.5")
        if self.y_d > -3.0 + 1e-12:
            raise ValidationError("y_d", "must be <= -3")
        if self.area < 9.0 - 1e-9:
            raise ValidationError("y_d", f"cavity area {self.area:g} below the 3x3 minimum")
        if not 0.0 <= self.slide_w <= 0.5:
            raise ValidationError("slide_w", "must lie in [0, 0.5]")
        r = self.scatterer_radius
        if r < 0:
            raise ValidationError("scatterer_radius", "must be >= 0")
        if r > 0:
            cx, cy = self.scatterer_center
            clearance = min(cx - X_LEFT, self.x_r - cx, -cy, cy - self.y_d)
            if clearance <= r:
                raise ValidationError(
                    "scatterer_center", "disk must lie strictly inside the cavity"
                )

    def with_(self, **changes) -> "BilliardGeometry":
        return replace(self, **changes)

    def x_marks(self) -> list[float]:
        """x coordinates that have to sit on grid lines."""
        marks = [X_LEFT, self.x_r, LEAD1_SPAN[1]]
        spans = [self.lead1_span]
        if self.lead2_enabled:
            marks.append(self.lead2_span[0])
            spans.append(self.lead2_span)
        if 0.0 < self.slide_w < 0.5:
            for a, b in spans:
                marks += [a + self.slide_w, b - self.slide_w]
        return marks


@dataclass(frozen=True)
class DiscretizationParams:
    """Finite-difference and complex-scaling settings.

    ``h`` is a target spacing; the grid snaps it per axis so that walls,
    lead edges and slide edges fall on grid lines.  ``align_x`` lists extra
    x coordinates that must also be grid-aligned (a sweep uses it to keep
    one grid for every slide position).  ``n_modes = None`` keeps all
    transverse lead modes in the matching boundary.  Lead rows are spaced
    ``hy / lead_refine``.
    """

    h: float = 0.05
    ecs_theta: float = 0.35
    ecs_start: float = 2.0
    lead_length: float = 6.0
    n_modes: int | None = None
    lead_refine: int = 4
    align_x: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "align_x", tuple(float(a) for a in self.align_x))
        if not 0.0 < self.h <= 0.1:
            raise ValidationError("h", "must satisfy 0 < h <= 0.1")
        if not 0.0 < self.ecs_theta < math.pi / 2:
            raise ValidationError("ecs_theta", "must lie in (0, pi/2)")
        if self.ecs_start <= 0:
            raise ValidationError("ecs_start", "must be > 0")
        if self.lead_length < 3:
            raise ValidationError("lead_length", "must be >= 3")
        if int(self.lead_refine) != self.lead_refine or self.lead_refine < 1:
            raise ValidationError("lead_refine", "must be a positive integer")
        if self.n_modes is not None and self.n_modes < 3:
            raise ValidationError("n_modes", "must be >= 3")

    def with_(self, **changes) -> "DiscretizationParams":
        return replace(self, **changes)


def _fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**6)


def _fgcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return b
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


def snap_spacing(origin: float, marks: Iterable[float], h_target: float) -> float:
    """Largest spacing <= ``h_target`` putting every mark on the grid."""
    g = Fraction(0)
    o = _fraction(origin)
    for m in marks:
        g = _fgcd(g, abs(_fraction(m) - o))
    if g == 0:
        return h_target
    n = math.ceil(float(g) / h_target - 1e-9)
    return float(g / n)


def slide_alignment(values: Iterable[float]) -> tuple[float, ...]:
    """Slide-edge x coordinates of lead 1 for a set of slide positions."""
    out = []
    for w in values:
        if 0.0 < w < 0.5:
            out += [LEAD1_SPAN[0] + w, LEAD1_SPAN[1] - w]
    return tuple(out)
