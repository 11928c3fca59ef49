"""Open rectangular microwave billiard: spectra, poles, scattering, field files."""

from .fieldio import FieldGrid, export_field, read_field
from .geometry import BilliardGeometry, DiscretizationParams, slide_alignment, snap_spacing
from .grid import build_lattice
from .scattering import (
    BreitWignerFit,
    Scatterer,
    ScatteringSolution,
    conductance,
    fit_breit_wigner,
    reflection_phase,
    scattering_solve,
    time_delay,
)
from .spectra import ClosedSpectrum, closed_spectrum, find_poles

__all__ = [
    "BilliardGeometry",
    "BreitWignerFit",
    "ClosedSpectrum",
    "DiscretizationParams",
    "FieldGrid",
    "Scatterer",
    "ScatteringSolution",
    "build_lattice",
    "closed_spectrum",
    "conductance",
    "export_field",
    "find_poles",
    "fit_breit_wigner",
    "read_field",
    "reflection_phase",
    "scattering_solve",
    "slide_alignment",
    "snap_spacing",
    "time_delay",
]
