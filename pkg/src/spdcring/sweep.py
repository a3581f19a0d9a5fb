"""Parameter sweeps of the signal flux ratio and numerical optimum location."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import (
    integrate_amplitudes,
    quasi_steady_ratio,
    simulation_grid,
)
from .errors import ValidationError
from .flux import optimal_g, optimal_kappa, steady_flux_ratio
from .model import PhysicalParams, gaussian_wavepacket

RAW_NAMES = ("kappa", "kappa_1", "kappa_2", "gamma_1", "gamma_2", "mu_d", "g", "delta_12")
NORMALIZED_NAMES = ("g/g_max", "kappa/kappa_max")
MODES = ("closed_form", "ode")

INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    num: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in RAW_NAMES + NORMALIZED_NAMES:
            raise ValidationError(
                f"unknown sweep parameter {self.name!r}; choose from "
                f"{', '.join(RAW_NAMES + NORMALIZED_NAMES)}"
            )
        if self.num < 2:
            raise ValidationError(f"axis {self.name!r} needs at least 2 points")
        if self.scale not in ("linear", "log"):
            raise ValidationError(f"scale must be 'linear' or 'log', got {self.scale!r}")
        if not (self.start >= 0 and self.stop > self.start):
            raise ValidationError(f"axis {self.name!r} needs 0 <= start < stop")
        if self.scale == "log" and self.start == 0:
            raise ValidationError(f"log axis {self.name!r} needs start > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)

    def to_internal(self, x):
        return np.log(x) if self.scale == "log" else x

    def from_internal(self, u):
        return np.exp(u) if self.scale == "log" else u


@dataclass(frozen=True)
class OdeSettings:
    """Narrowband pulse used when a sweep point is evaluated dynamically."""

    bandwidth_fraction: float = 1 / 50
    reservoir: float = 5.0
    v_g: float = 7.5e7
    rtol: float = 1e-8
    frame: str = "common"


@dataclass(frozen=True)
class SweepSpec:
    base: PhysicalParams
    axis1: SweepAxis
    axis2: Optional[SweepAxis] = None
    mode: str = "closed_form"
    symmetric: bool = True
    refine: bool = True
    ode: OdeSettings = field(default_factory=OdeSettings)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.axis2 is not None and self.axis2.name == self.axis1.name:
            raise ValidationError("sweep axes must differ")

    @property
    def axes(self):
        return (self.axis1,) if self.axis2 is None else (self.axis1, self.axis2)


@dataclass
class SweepResult:
    names: tuple
    coords: tuple  # one array per axis
    ratio_1: np.ndarray  # shape (n1,) or (n1, n2)
    ratio_2: np.ndarray
    argmax: dict
    argmax_value: float
    method: str
    mode: str
    base: PhysicalParams
    quality: Optional[np.ndarray] = None  # ODE mode: relative spread in the steady window

    def rows(self):
        if len(self.names) == 1:
            for i, x in enumerate(self.coords[0]):
                yield (x,), self.ratio_1[i], self.ratio_2[i]
        else:
            for i, x in enumerate(self.coords[0]):
                for j, y in enumerate(self.coords[1]):
                    yield (x, y), self.ratio_1[i, j], self.ratio_2[i, j]


def apply_point(base: PhysicalParams, point: dict, symmetric: bool = True) -> PhysicalParams:
    """Set swept parameters; normalized aliases are resolved after raw ones."""
    raw = {k: float(v) for k, v in point.items() if k in RAW_NAMES}
    if symmetric:
        if "kappa_1" in raw:
            raw.setdefault("kappa_2", raw["kappa_1"])
        if "gamma_1" in raw:
            raw.setdefault("gamma_2", raw["gamma_1"])
    params = base.replace(**raw) if raw else base
    if "g/g_max" in point:
        params = params.replace(g=float(point["g/g_max"]) * optimal_g(params))
    if "kappa/kappa_max" in point:
        params = params.replace(kappa=float(point["kappa/kappa_max"]) * optimal_kappa(params))
    return params


def closed_form_ratio(params: PhysicalParams):
    return steady_flux_ratio(params)


def ode_ratio(params: PhysicalParams, settings: OdeSettings = OdeSettings()):
    """Quasi-steady ratios from the amplitude equations with a narrowband pulse.

    Returns ``(ratio_1, ratio_2, relative_spread)``.
    """
    scale = min(params.kappa_sigma, params.g) if params.g > 0 else params.kappa_sigma
    if not scale > 0:
        return 0.0, 0.0, 0.0
    delta_omega = settings.bandwidth_fraction * scale
    grid = simulation_grid(params, delta_omega, v_g=settings.v_g, reservoir=settings.reservoir)
    packet = gaussian_wavepacket(grid, delta_omega)
    t_half = 0.4769362762044699 / delta_omega
    fastest = params.kappa_sigma + params.pair_decay + params.g
    dt = min(t_half / 400, 0.5 / fastest)
    traj = integrate_amplitudes(params, grid, packet, 1.05 * t_half, dt,
                                rtol=settings.rtol, frame=settings.frame, keep_modes=False)
    res = quasi_steady_ratio(traj, params, grid, packet)
    return res.ratio_1, res.ratio_2, res.spread


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       xtol_rel: float = 1e-6, xtol_abs: float = 1e-300):
    """Maximize a unimodal ``f`` on ``[a, b]``. Returns ``(x, f(x))``."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > max(xtol_rel * max(abs(a), abs(b)), xtol_abs):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _bracket(values, i):
    lo = values[max(i - 1, 0)]
    hi = values[min(i + 1, len(values) - 1)]
    return lo, hi


def _evaluator(spec: SweepSpec):
    if spec.mode == "closed_form":
        return lambda p: (*closed_form_ratio(p), 0.0)
    return lambda p: ode_ratio(p, spec.ode)


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate ``Pi_1/Pi_wg`` on the sweep grid and refine the best point."""
    axes = spec.axes
    grids = [ax.values() for ax in axes]
    names = tuple(ax.name for ax in axes)
    shape = tuple(len(g) for g in grids)
    points = [dict(zip(names, combo)) for combo in _product(grids)]
    evaluate = _evaluator(spec)

    def work(point):
        return evaluate(apply_point(spec.base, point, spec.symmetric))

    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(pt) for pt in points]
    arr = np.array(results, dtype=float).reshape(shape + (3,))
    r1, r2, quality = arr[..., 0], arr[..., 1], arr[..., 2]

    best = np.unravel_index(int(np.argmax(r1)), shape)
    best_point = {n: float(grids[k][best[k]]) for k, n in enumerate(names)}
    best_value = float(r1[best])
    method = "grid"
    if spec.refine:
        objective = lambda pt: evaluate(apply_point(spec.base, pt, spec.symmetric))[0]  # noqa: E731
        brackets = [_bracket(grids[k], best[k]) for k in range(len(axes))]
        point, value = _refine(objective, axes, best_point, brackets)
        method = "golden-section" if len(axes) == 1 else "coordinate-golden-section"
        if value >= best_value:
            best_point, best_value = point, value
    if spec.mode == "ode" and np.any(quality > 0.05):
        warnings.warn(
            f"ODE sweep: quasi-steady window spread up to {quality.max():.3g}; "
            "use a narrower pulse", RuntimeWarning, stacklevel=2)
    return SweepResult(
        names=names,
        coords=tuple(grids),
        ratio_1=r1,
        ratio_2=r2,
        argmax=best_point,
        argmax_value=best_value,
        method=method,
        mode=spec.mode,
        base=spec.base,
        quality=quality if spec.mode == "ode" else None,
    )


def _product(grids):
    if len(grids) == 1:
        return [(x,) for x in grids[0]]
    return [(x, y) for x in grids[0] for y in grids[1]]


def _refine(objective, axes, start: dict, brackets, xtol_rel=1e-6, max_cycles=2000):
    """Golden-section along each axis in turn until no coordinate moves by more than xtol_rel."""
    point = dict(start)
    value = objective(point)
    widths = [ax.to_internal(hi) - ax.to_internal(lo) for ax, (lo, hi) in zip(axes, brackets)]
    for _ in range(max_cycles if len(axes) > 1 else 1):
        moved = 0.0
        for k, ax in enumerate(axes):
            u0 = ax.to_internal(point[ax.name])
            lo, hi = u0 - widths[k] / 2, u0 + widths[k] / 2
            if ax.scale == "linear":
                lo = max(lo, 0.0)

            def along(u, k=k, ax=ax):
                trial = dict(point)
                trial[ax.name] = float(ax.from_internal(u))
                return objective(trial)

            u, fu = golden_section_max(along, lo, hi, xtol_rel=xtol_rel * 1e-2,
                                       xtol_abs=abs(u0) * 1e-12 + 1e-15)
            if fu >= value:
                new_x = float(ax.from_internal(u))
                moved = max(moved, abs(new_x - point[ax.name]) / max(abs(new_x), 1e-300))
                point[ax.name], value = new_x, fu
                # an optimum on the bracket edge means the bracket was too tight
                if min(u - lo, hi - u) < 1e-3 * (hi - lo):
                    widths[k] *= 2
                else:
                    widths[k] = max(widths[k] / 2, 1e-9 * max(abs(u), 1.0))
        if moved < xtol_rel:
            break
    return point, value


@dataclass
class NumericOptimum:
    coords: dict
    value: float


@dataclass
class RidgeOptimum:
    """Flat maximum along ``x*y = product`` for two free couplings."""

    names: tuple
    product: float
    value: float
    samples: list  # [(x, y, ratio), ...]


def locate_optimum_numeric(params: PhysicalParams, free_vars, symmetric: bool = True,
                           objective: Optional[Callable[[PhysicalParams], float]] = None):
    """Numerical argmax of the closed-form signal ratio over 1 or 2 parameters.

    Two free variables whose product alone fixes the ratio (the lossless
    coupling landscape) give a :class:`RidgeOptimum` instead of a point.
    """
    free_vars = tuple(free_vars)
    if not 1 <= len(free_vars) <= 2:
        raise ValidationError("locate_optimum_numeric needs 1 or 2 free variables")
    for name in free_vars:
        if name not in RAW_NAMES or name == "delta_12":
            raise ValidationError(f"cannot optimize over {name!r}")
    if objective is None:
        objective = lambda p: steady_flux_ratio(p)[0]  # noqa: E731

    def f(values):
        return objective(apply_point(params, dict(zip(free_vars, values)), symmetric))

    scale = max(params.kappa_sigma, params.pair_decay, params.g, 1e-300)
    logs = np.linspace(math.log(scale) - 9, math.log(scale) + 9, 73)

    if len(free_vars) == 1:
        vals = [f((math.exp(u),)) for u in logs]
        i = int(np.argmax(vals))
        lo, hi = logs[max(i - 1, 0)], logs[min(i + 1, len(logs) - 1)]
        u, fu = golden_section_max(lambda u: f((math.exp(u),)), lo, hi, xtol_rel=1e-12,
                                   xtol_abs=1e-12)
        return NumericOptimum({free_vars[0]: math.exp(u)}, fu)

    if _is_product_ridge(f, scale):
        def along(u):
            x = math.exp(u / 2)
            return f((x, x))

        vals = [along(2 * u) for u in logs]
        i = int(np.argmax(vals))
        lo, hi = 2 * logs[max(i - 1, 0)], 2 * logs[min(i + 1, len(logs) - 1)]
        u, fu = golden_section_max(along, lo, hi, xtol_rel=1e-12, xtol_abs=1e-12)
        product = math.exp(u)
        samples = []
        for s in (0.25, 0.5, 1.0, 2.0, 4.0):
            x = math.sqrt(product) * s
            y = product / x
            samples.append((x, y, f((x, y))))
        return RidgeOptimum(free_vars, product, fu, samples)

    coarse = logs[::4]
    table = np.array([[f((math.exp(a), math.exp(b))) for b in coarse] for a in coarse])
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    axes = tuple(SweepAxis(n, 1e-300, 1.0, 2, "log") for n in free_vars)
    start = {free_vars[0]: math.exp(coarse[i]), free_vars[1]: math.exp(coarse[j])}
    brackets = [(math.exp(coarse[max(i - 1, 0)]), math.exp(coarse[min(i + 1, len(coarse) - 1)])),
                (math.exp(coarse[max(j - 1, 0)]), math.exp(coarse[min(j + 1, len(coarse) - 1)]))]
    point, value = _refine(lambda pt: f((pt[free_vars[0]], pt[free_vars[1]])), axes, start,
                           brackets, xtol_rel=1e-10)
    return NumericOptimum(point, value)


def _is_product_ridge(f, scale, rel=1e-12):
    ref_point = (0.7 * scale, 1.3 * scale)
    ref = f(ref_point)
    for s in (0.5, 2.0, 3.0):
        val = f((ref_point[0] * s, ref_point[1] / s))
        if abs(val - ref) > rel * max(abs(ref), 1e-300):
            return False
    return ref > 0
