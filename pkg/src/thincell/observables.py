"""Velocity-averaged signals: DROP, FDROP, fluorescence and populations."""

from __future__ import annotations

import csv
import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields, is_dataclass, replace

import numpy as np

from . import __version__
from .atomic_model import (
    N_LEVELS, TWO_PI_MHZ, FieldConfig, LevelScheme, RelaxationMode, build_family,
    doppler_detunings, im_index,
)
from .confinement import TAU_4D52, CellConfig, boltzmann_grid, max_transit_velocity, wall_rate
from .errors import InvalidGrid, PointFailure
from .solver import (
    PIVOT_TOL, DensityMatrix, constrained_parts, steady_state, steady_state_batch,
    velocity_average,
)

log = logging.getLogger(__name__)

FLUORESCENCE_LEVELS = (5, 6, 7)
FDROP_LEVELS = (3, 4, 5)
EXCITED_LEVELS = (3, 4, 5, 6, 7)


class FilterMode(str, enum.Enum):
    RATE = "rate"
    CUTOFF = "cutoff"


@dataclass(frozen=True)
class SweepConfig:
    """Everything that defines a spectrum.

    ``delta_c_range`` is ``(min, max, n)`` in rad/s. ``velocity_grid`` is
    ``(n_points, span_in_thermal_speeds)`` and ``quadrature`` its rule
    (see ``boltzmann_grid``). ``include_wall`` switches the
    wall-collision channel off entirely (used for textbook limits).
    ``degenerate_reference`` selects the stationary state when the null space
    is not one-dimensional; without it such points are failures.
    """

    scheme: LevelScheme
    fields: FieldConfig
    cell: CellConfig
    delta_c_range: tuple = (-300 * TWO_PI_MHZ, 150 * TWO_PI_MHZ, 801)
    velocity_grid: tuple = (2001, 4.0)
    quadrature: str = "gauss"
    filter_mode: FilterMode = FilterMode.RATE
    mode: RelaxationMode = RelaxationMode.TRACE_CONSERVING
    fdrop_levels: tuple = FDROP_LEVELS
    fluorescence_levels: tuple = FLUORESCENCE_LEVELS
    include_wall: bool = True
    degenerate_reference: DensityMatrix | None = field(default=None, compare=False)

    def __post_init__(self):
        lo, hi, n = self.delta_c_range
        if int(n) != n or n < 2:
            raise InvalidGrid(f"detuning grid needs n >= 2 points, got {n}")
        if not lo < hi:
            raise InvalidGrid(f"detuning range needs min < max, got ({lo}, {hi})")
        object.__setattr__(self, "delta_c_range", (float(lo), float(hi), int(n)))
        npts, span = self.velocity_grid
        object.__setattr__(self, "velocity_grid", (int(npts), float(span)))
        object.__setattr__(self, "filter_mode", FilterMode(self.filter_mode))
        object.__setattr__(self, "mode", RelaxationMode(self.mode))
        for name in ("fdrop_levels", "fluorescence_levels"):
            levels = tuple(int(i) for i in getattr(self, name))
            if not levels or any(not 1 <= i <= N_LEVELS for i in levels):
                raise ValueError(f"{name} must list levels between 1 and {N_LEVELS}")
            object.__setattr__(self, name, levels)

    @property
    def delta_c_axis(self) -> np.ndarray:
        lo, hi, n = self.delta_c_range
        return np.linspace(lo, hi, n)

    def replace(self, **changes) -> "SweepConfig":
        return replace(self, **changes)


class _Context:
    """Per-configuration quantities shared by every detuning point."""

    def __init__(self, config: SweepConfig, grid=None):
        self.config = config
        self.grid = grid if grid is not None else boltzmann_grid(
            config.cell, *config.velocity_grid, rule=config.quadrature)
        v = np.asarray(self.grid.points)
        self.velocities = v
        self.weights = np.array(self.grid.weights)
        if config.filter_mode is FilterMode.CUTOFF:
            vmax = max_transit_velocity(config.cell.thickness, TAU_4D52)
            self.weights[np.abs(v) > vmax] = 0.0
        self.active = np.flatnonzero(self.weights > 0)
        self.gamma_L = wall_rate(config.cell, v) if config.include_wall else np.zeros_like(v)
        self.family = build_family(config.scheme, config.fields, config.mode)
        self.parts = constrained_parts(self.family)
        # Doppler shifts at zero laser detuning; the scanned detuning adds on top
        self.dp_eff, self.dc_shift = doppler_detunings(
            config.fields.replace(delta_c=0.0), v)

    def states(self, delta_c: float) -> np.ndarray:
        """Steady states (n_v, DIM) for one coupling detuning; inactive classes are zero."""
        idx = self.active
        out = np.zeros((self.velocities.size, self.parts.shape[1]))
        res = steady_state_batch(self.family, self.dp_eff[idx], delta_c + self.dc_shift[idx],
                                 self.gamma_L[idx], parts=self.parts, strict=False)
        bad = np.flatnonzero(~(res.pivot_ratios >= PIVOT_TOL))
        x = res.states
        for b in bad:
            v = float(self.velocities[idx[b]])
            ref = self.config.degenerate_reference
            if ref is None:
                raise PointFailure(
                    f"degenerate steady state at delta_c = {delta_c / TWO_PI_MHZ:.6g} MHz, "
                    f"v = {v:.6g} m/s", delta_c, v)
            L = self.family.at(self.dp_eff[idx[b]], delta_c + self.dc_shift[idx[b]],
                               self.gamma_L[idx[b]])
            rho, _ = steady_state(L, strict=False, reference=ref)
            x[b] = rho.to_vector()
        out[idx] = x
        self.max_residual = max(getattr(self, "max_residual", 0.0),
                                float(np.max(res.residuals, initial=0.0)))
        return out


def _population_sum(states, levels):
    return states[:, [i - 1 for i in levels]].sum(axis=1)


def _signals(ctx: _Context, delta_c: float):
    x = ctx.states(delta_c)
    Lz = ctx.config.cell.thickness
    grid = ctx.weights
    drop = Lz * velocity_average(x[:, im_index(1, 3)], grid)
    fdrop = Lz * velocity_average(_population_sum(x, ctx.config.fdrop_levels), grid)
    fluo = Lz * velocity_average(_population_sum(x, ctx.config.fluorescence_levels), grid)
    return drop, fdrop, fluo


def velocity_resolved(config: SweepConfig, delta_c: float, grid=None):
    """Per-velocity steady states at one coupling detuning.

    Returns ``(velocities, weights, states)`` with ``states`` of shape
    ``(n_v, 50)`` in the real parametrisation.
    """
    ctx = _Context(config, grid)
    return ctx.velocities, ctx.weights, ctx.states(delta_c)


def drop_signal(config: SweepConfig, delta_c: float) -> float:
    """Probe absorption: L_z * sum_v W(v) Im rho_24(v)."""
    return float(_signals(_Context(config), delta_c)[0])


def fdrop_signal(config: SweepConfig, delta_c: float) -> float:
    """Probe-induced fluorescence: L_z * sum_v W(v) sum_{i in fdrop_levels} rho_ii(v)."""
    return float(_signals(_Context(config), delta_c)[1])


def fluorescence_signal(config: SweepConfig, delta_c: float) -> float:
    """Upper-manifold fluorescence: L_z * sum_v W(v) (rho_55 + rho_66 + rho_77)."""
    return float(_signals(_Context(config), delta_c)[2])


@dataclass(frozen=True)
class Spectrum:
    delta_c: np.ndarray
    drop: np.ndarray
    fdrop: np.ndarray
    fluorescence: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.delta_c)
        if not len(self.drop) == len(self.fdrop) == len(self.fluorescence) == n:
            raise ValueError("spectrum columns must have equal length")

    def normalized(self, how: str = "peak") -> "Spectrum":
        """Copy with every signal divided by its largest magnitude (``how='peak'``)."""
        if how == "none":
            return self

        def peak(a):
            m = np.max(np.abs(a))
            return a / m if m > 0 else a.copy()

        if how != "peak":
            raise ValueError(f"unknown normalisation {how!r}")
        meta = dict(self.metadata, normalize="peak")
        return Spectrum(self.delta_c, peak(self.drop), peak(self.fdrop),
                        peak(self.fluorescence), meta)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["delta_c_mhz", "drop", "fdrop", "fluorescence"])
            for row in zip(self.delta_c / TWO_PI_MHZ, self.drop, self.fdrop, self.fluorescence):
                w.writerow([repr(float(x)) for x in row])


def _echo(obj):
    """Plain-data snapshot of a configuration (SI units, enums by value)."""
    if is_dataclass(obj):
        return {f.name: _echo(getattr(obj, f.name)) for f in dc_fields(obj)
                if f.name != "degenerate_reference"}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (tuple, list, np.ndarray)):
        return [_echo(o) for o in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _chunks(n, k):
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def sweep(config: SweepConfig, threads: int | None = None) -> Spectrum:
    """Evaluate DROP, FDROP and fluorescence over the coupling-detuning grid.

    Detuning points are split into contiguous chunks, one per worker thread.
    Every point is reduced over velocity in fixed grid order and written to
    its own slot, so the result does not depend on the thread count.
    """
    axis = config.delta_c_axis
    n = axis.size
    out = np.zeros((3, n))
    threads = max(1, min(threads or os.cpu_count() or 1, n))
    contexts = []

    def work(indices):
        ctx = _Context(config)
        contexts.append(ctx)
        for i in indices:
            out[:, i] = _signals(ctx, axis[i])

    if threads == 1:
        work(range(n))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(work, c) for c in _chunks(n, threads)]:
                fut.result()

    drop, fdrop, fluo = out
    if np.any(drop < 0):
        log.warning("Im rho_24 average is negative at %d detunings", int(np.sum(drop < 0)))
    meta = {
        "version": __version__,
        "config": _echo(config),
        "velocity_points": len(contexts[0].grid),
        "max_residual": max(getattr(c, "max_residual", 0.0) for c in contexts),
        "normalize": "none",
    }
    return Spectrum(axis, drop, fdrop, fluo, meta)


@dataclass(frozen=True)
class PopulationRecord:
    thickness: float
    populations: np.ndarray   # rho_11 .. rho_77
    loss: float
    dominant_level: int       # 1-based, over the excited levels 3..7

    @property
    def total(self) -> float:
        return float(self.populations.sum() + self.loss)


def reconstruct_populations(config: SweepConfig, cells, delta_c: float = 0.0):
    """Velocity-averaged populations at the cycling resonance for several cells.

    ``cells`` holds thicknesses in metres (the temperature of ``config.cell``
    is kept) or full ``CellConfig`` objects. Averages are normalised by the
    total weight of the contributing velocity classes, so each record is a
    probability distribution.
    """
    records = []
    for c in cells:
        cell = c if isinstance(c, CellConfig) else config.cell.replace(thickness=float(c))
        ctx = _Context(config.replace(cell=cell))
        x = ctx.states(delta_c)
        mean = velocity_average(x, ctx.weights) / math.fsum(ctx.weights)
        pops = mean[:N_LEVELS].copy()
        loss = float(mean[-1])
        excited = [pops[i - 1] for i in EXCITED_LEVELS]
        dominant = EXCITED_LEVELS[int(np.argmax(excited))]
        records.append(PopulationRecord(cell.thickness, pops, loss, dominant))
    return records


def write_populations_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["thickness_um"] + [f"p{i}" for i in range(1, N_LEVELS + 1)]
                   + ["loss", "dominant"])
        for r in records:
            # 12 significant digits undo the metre/micrometre round trip
            w.writerow([repr(float(f"{r.thickness * 1e6:.12g}"))] + [repr(float(p)) for p in r.populations]
                       + [repr(r.loss), r.dominant_level])
