"""Execute a validated RunConfig."""

from __future__ import annotations

import time

import numpy as np

from .billiard.scattering import Scatterer, phase_derivative
from .billiard.spectra import closed_spectrum, find_poles
from .config import RunConfig
from .output import RunOutput
from .sweeps import detect_crossings, integrated_conductance, run_sweep


def run(cfg: RunConfig, threads: int = 1) -> RunOutput:
    t0 = time.perf_counter()
    mode = cfg.mode
    meta: dict = {}
    crossings = []
    if mode in ("schematic-sweep", "billiard-sweep"):
        spec = cfg.sweep_spec()
        result = run_sweep(spec, threads=threads)
        crossings = detect_crossings(
            result, g_max=cfg.get("g_max"), ratio=cfg.get("crossing_ratio", 0.1)
        )
        meta.update(result.meta)
        meta["n_steps"] = len(result.values)
        meta["failed_steps"] = sorted(result.errors)
    elif mode == "poles":
        geom, disc = cfg.geometry(), cfg.disc()
        basis = None
        if cfg.get("mixing", False):
            basis = closed_spectrum(geom.with_(slide_w=0.5), disc, cfg.window)
        result = find_poles(geom, disc, cfg.window, basis=basis)
        meta.update({k: v for k, v in result.meta.items() if k not in ("fields", "lattice")})
        meta["_geometry"] = geom
    elif mode in ("scatter", "conduct"):
        geom, disc = cfg.geometry(), cfg.disc()
        sc = Scatterer(geom, disc)
        energies = cfg.energies()
        result = [sc.solve(float(e)) for e in energies]
        if mode == "scatter":
            meta["time_delay"] = [phase_derivative(sc, float(e)) for e in energies]
        meta.update({"hx": sc.lat.hx, "hy": sc.lat.hy, "hs": sc.lat.hs, "n_unknowns": sc.lat.n})
        meta["one_channel_range"] = sc.one_channel_range
        meta["_geometry"] = geom
    elif mode == "integrated-conductance":
        geom, disc = cfg.geometry(), cfg.disc()
        w = cfg.get("slide_w").values()
        result = integrated_conductance(
            geom, disc, w, cfg.bands(), rel_tol=cfg.get("rel_tol", 0.01), threads=threads
        )
        meta.update(result.meta)
        meta["evaluations"] = np.asarray(result.evaluations).tolist()
    else:  # pragma: no cover - validate() rejects other modes
        raise ValueError(mode)
    return RunOutput(mode, result, meta, {"total_s": time.perf_counter() - t0}, crossings)
