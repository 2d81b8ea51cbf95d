"""Grid propagators for ``exp(itL)``, ``exp(itH)`` and the Mehler semigroup.

Three independent routes are provided:

* the transform path: chirp, trapezoid Fourier sum at the scaled targets
  ``x / (4 pi sin t)``, chirp, prefactor;
* the kernel path: direct quadrature of the oscillatory kernel against the
  samples of ``phi``;
* the real-time Mehler kernel (positive, mass one).

All kernels factorize over coordinates, so multi-dimensional sums are applied
one axis at a time on the tensor grid.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field_grid import (
    Field,
    Grid,
    apply_axis_matrices,
    dft_at,
    dft_lattice,
    make_grid,
    sample,
)
from .gauss_calc import EPS_SING, Branch, EvolutionTime, covariance_q

__all__ = [
    "PropagatorConfig",
    "SingularTimeError",
    "evaluate_ho_direct",
    "evaluate_ou_transform",
    "propagate",
    "propagate_ho",
    "propagate_mehler",
    "propagate_ou_kernel",
    "propagate_ou_transform",
    "propagate_ou_transform_gauged",
]

INPUT_TRUNCATION = 1e-6
LIFT_THRESHOLD = 1e-3
SPLIT_STEP = 0.3


class SingularTimeError(ValueError):
    """Raised when a formula is evaluated at (or too near) ``t in pi Z``."""


@dataclass(frozen=True)
class PropagatorConfig:
    eps_sing: float = EPS_SING
    min_abs_sin: float = 0.05
    quadrature_n: Optional[int] = None
    quadrature_r: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.eps_sing < self.min_abs_sin):
            raise ValueError("need 0 < eps_sing < min_abs_sin")
        if self.quadrature_n is not None and self.quadrature_n <= 0:
            raise ValueError("quadrature_n must be positive")
        if self.quadrature_r is not None and self.quadrature_r <= 0:
            raise ValueError("quadrature_r must be positive")


DEFAULT_CONFIG = PropagatorConfig()


def _time(t, cfg: PropagatorConfig) -> EvolutionTime:
    if isinstance(t, EvolutionTime):
        t = t.t
    return covariance_q(t, cfg.eps_sing)


def _require_regular(et: EvolutionTime) -> None:
    if et.singular:
        raise SingularTimeError(
            f"singular time t={et.t!r}: t mod pi = {math.remainder(et.t, math.pi):.3g}")


def _boundary_ratio(values: np.ndarray, grid: Grid) -> float:
    mod = np.abs(values)
    peak = float(np.max(mod))
    if peak == 0:
        return 0.0
    return float(np.max(mod[grid.boundary_mask()])) / peak


def _meta(et: EvolutionTime, path: str, **extra) -> dict:
    return {"t": et.t, "t_reduced": et.t_reduced, "branch": et.branch.value,
            "path": path, **extra}


# -- transform path -------------------------------------------------------------


def _chirped_psi(x_field: Field, et: EvolutionTime, lift: bool) -> Field:
    r2 = x_field.grid.radius2()
    expo = 0.25j * et.cot_t * r2
    if lift:
        expo = expo - 0.25 * r2
    return x_field.with_values(np.exp(expo) * x_field.values)


def _transform_flags(h: Field) -> tuple:
    return ("input-truncated",) if _boundary_ratio(h.values, h.grid) > INPUT_TRUNCATION else ()


def evaluate_ou_transform(phi: Field, t, points, cfg: PropagatorConfig = DEFAULT_CONFIG,
                          gauged: bool = False) -> np.ndarray:
    """``f(x, t)`` (or ``exp(-|x|^2/4) f`` when ``gauged``) at arbitrary points."""
    et = _time(t, cfg)
    _require_regular(et)
    m = phi.grid.m
    pts = np.asarray(points, dtype=float).reshape(-1, m)
    h = _chirped_psi(phi, et, lift=True)
    r2 = np.sum(pts ** 2, axis=-1)
    vals = dft_at(h, pts / (4.0 * math.pi * et.sin_t))
    out = np.exp(et.log_rho(m) + 0.25j * et.cot_t * r2) * vals
    return out if gauged else np.exp(0.25 * r2) * out


def _split_times(et: EvolutionTime, cfg: PropagatorConfig):
    """Two well-conditioned steps summing to ``t`` when ``|sin t|`` is below the guard.

    Near ``k pi`` the chirp ``exp(i cot t |x|^2 / 4)`` oscillates faster than
    the grid resolves.  A short first step keeps the intermediate state
    narrow (a step near ``pi/2`` would spread it to a full Fourier transform);
    the remainder then sits at least ``SPLIT_STEP - min_abs_sin`` from ``k pi``.
    """
    if abs(et.sin_t) >= cfg.min_abs_sin:
        return None
    return SPLIT_STEP, et.t - SPLIT_STEP


def propagate_ou_transform_gauged(psi: Field, t, cfg: PropagatorConfig = DEFAULT_CONFIG) -> Field:
    """``exp(-|x|^2/4) exp(itL) phi`` computed from ``psi = exp(-|x|^2/4) phi``.

    Same expression on both branches, with signed ``sin t`` and ``cot t`` and
    the branch prefactor ``rho_m(t)``.  Times with ``|sin t| < min_abs_sin``
    are composed from two regular steps.
    """
    et = _time(t, cfg)
    _require_regular(et)
    split = _split_times(et, cfg)
    if split is not None:
        first = propagate_ou_transform_gauged(psi, split[0], cfg)
        out = propagate_ou_transform_gauged(first, split[1], cfg)
        return Field(psi.grid, out.values, first.flags + out.flags,
                     _meta(et, "transform", gauged=True, split=list(split)))
    grid = psi.grid
    h = _chirped_psi(psi, et, lift=False)
    targets = grid.axis() / (4.0 * math.pi * et.sin_t)
    vals = dft_lattice(h, [targets] * grid.m)
    out = np.exp(et.log_rho(grid.m) + 0.25j * et.cot_t * grid.radius2()) * vals
    return Field(grid, out, _transform_flags(h), _meta(et, "transform", gauged=True))


def propagate_ou_transform(phi: Field, t, cfg: PropagatorConfig = DEFAULT_CONFIG) -> Field:
    """``exp(itL) phi`` via the chirp / Fourier / chirp sandwich."""
    et = _time(t, cfg)
    _require_regular(et)
    r2 = phi.grid.radius2()
    psi = Field(phi.grid, np.exp(-0.25 * r2) * phi.values)
    out = propagate_ou_transform_gauged(psi, et, cfg)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(0.25 * r2) * out.values
    if not np.all(np.isfinite(vals)):
        raise OverflowError("exp(|x|^2/4) lift of the evolved field overflowed")
    meta = _meta(et, "transform")
    if "split" in out.meta:
        meta["split"] = out.meta["split"]
    return Field(phi.grid, vals, out.flags, meta)


# -- kernel path ------------------------------------------------------------------


def _kernel_prefactor(et: EvolutionTime, m: int) -> complex:
    """Per-branch prefactor of the oscillatory kernel, read off term by term."""
    s = et.sin_t
    tr = et.t_reduced
    if et.branch is Branch.J_PLUS:
        phase = cmath.exp(1j * m * tr / 2) / cmath.exp(1j * math.pi * m / 4)
    else:
        phase = cmath.exp(1j * m * tr / 2) / cmath.exp(3j * math.pi * m / 4)
    return (4.0 * math.pi) ** (-m / 2) * phase / abs(s) ** (m / 2)


def _ou_kernel_matrix(x: np.ndarray, y: np.ndarray, et: EvolutionTime) -> np.ndarray:
    # i |e^{it/2} y - e^{-it/2} x|^2 / (4 sin t); on J^- this is the same as
    # -i |...|^2 / (4 |sin t|).
    tr = et.t_reduced
    z = np.exp(0.5j * tr) * y[None, :] - np.exp(-0.5j * tr) * x[:, None]
    return np.exp(1j * z * z / (4.0 * et.sin_t))


def _kernel_source(phi: Field, cfg: PropagatorConfig, source) -> Field:
    if cfg.quadrature_n is None and cfg.quadrature_r is None:
        return phi
    if source is None:
        raise ValueError("quadrature grid overrides need an evaluable source for phi")
    g = phi.grid
    qgrid = make_grid(g.m, cfg.quadrature_n or g.n, cfg.quadrature_r or g.r, g.budget)
    return sample(source, qgrid)


def propagate_ou_kernel(phi: Field, t, cfg: PropagatorConfig = DEFAULT_CONFIG,
                        source=None) -> Field:
    """``exp(itL) phi`` by direct quadrature of the oscillatory kernel.

    ``source`` (a Gaussian or callable) is only needed when the config
    overrides the quadrature grid; results are always on ``phi.grid``.
    """
    et = _time(t, cfg)
    _require_regular(et)
    if abs(et.sin_t) < cfg.min_abs_sin:
        raise SingularTimeError(
            f"near singular time t={et.t!r} (t mod pi = {math.remainder(et.t, math.pi):.3g}): "
            f"|sin t| = {abs(et.sin_t):.3g} below kernel guard {cfg.min_abs_sin}; "
            "use the transform path")
    src = _kernel_source(phi, cfg, source)
    sg = src.grid
    x = phi.grid.axis()
    mat = _ou_kernel_matrix(x, sg.axis(), et) * sg.spacing
    vals = apply_axis_matrices(src.nd(), [mat] * sg.m).ravel()
    vals = _kernel_prefactor(et, sg.m) * vals
    flags = ("input-truncated",) if _boundary_ratio(
        np.exp(-0.25 * sg.radius2()) * src.values, sg) > INPUT_TRUNCATION else ()
    return Field(phi.grid, vals, flags, _meta(et, "kernel"))


# -- harmonic oscillator ----------------------------------------------------------


def evaluate_ho_direct(u0: Field, t, points, cfg: PropagatorConfig = DEFAULT_CONFIG):
    """``exp(itH) u0`` at arbitrary points via the direct transform formula."""
    et = _time(t, cfg)
    _require_regular(et)
    m = u0.grid.m
    pts = np.asarray(points, dtype=float).reshape(-1, m)
    h = _chirped_psi(u0, et, lift=False)
    r2 = np.sum(pts ** 2, axis=-1)
    vals = dft_at(h, pts / (4.0 * math.pi * et.sin_t))
    return np.exp(_ho_log_pref(et, m) + 0.25j * et.cot_t * r2) * vals


def _ho_log_pref(et: EvolutionTime, m: int) -> complex:
    # rho_m(t) without exp(im t_red/2); exp(-im t/2) restored for t outside [0, 2 pi)
    return et.log_rho(m) - 0.5j * m * et.t


def propagate_ho(u0: Field, t, cfg: PropagatorConfig = DEFAULT_CONFIG,
                 path: str = "direct") -> Field:
    """``exp(itH) u0``, ``H = Delta - |x|^2/4``.

    ``direct`` transforms ``u0`` directly (composing two regular steps when
    ``|sin t| < min_abs_sin``).  ``gauge`` lifts to
    ``phi = exp(|x|^2/4) u0``, runs the OU kernel path (transform path below
    the kernel guard) and multiplies by ``exp(-|x|^2/4 - imt/2)``; its result
    is flagged when the lift does not decay toward the grid edge.
    """
    et = _time(t, cfg)
    _require_regular(et)
    grid = u0.grid
    m = grid.m
    r2 = grid.radius2()
    if path == "direct":
        split = _split_times(et, cfg)
        if split is not None:
            first = propagate_ho(u0, split[0], cfg, "direct")
            out = propagate_ho(first, split[1], cfg, "direct")
            return Field(grid, out.values, first.flags + out.flags,
                         _meta(et, "direct", split=list(split)))
        h = _chirped_psi(u0, et, lift=False)
        targets = grid.axis() / (4.0 * math.pi * et.sin_t)
        vals = dft_lattice(h, [targets] * m)
        out = np.exp(_ho_log_pref(et, m) + 0.25j * et.cot_t * r2) * vals
        return Field(grid, out, _transform_flags(h), _meta(et, "direct"))
    if path == "gauge":
        with np.errstate(over="ignore"):
            lifted = np.exp(0.25 * r2) * u0.values
        if not np.all(np.isfinite(lifted)):
            raise OverflowError("exp(|x|^2/4) u0 overflowed on this grid")
        flags = ("lift-not-decaying",) if _boundary_ratio(lifted, grid) > LIFT_THRESHOLD else ()
        phi = Field(grid, lifted)
        if abs(et.sin_t) >= cfg.min_abs_sin:
            f = propagate_ou_kernel(phi, et, cfg)
        else:
            f = propagate_ou_transform(phi, et, cfg)
        out = np.exp(-0.25 * r2 - 0.5j * m * et.t) * f.values
        return Field(grid, out, flags + f.flags, _meta(et, "gauge", ou_path=f.meta["path"]))
    raise ValueError(f"unknown path {path!r}")


# -- real-time Mehler semigroup -----------------------------------------------------


def propagate_mehler(phi: Field, t: float, omega: float,
                     cfg: PropagatorConfig = DEFAULT_CONFIG) -> Field:
    """Quadrature of the Mehler kernel for ``u_t = Delta u - 2 sqrt(omega) <x, grad u>``."""
    t = float(t)
    if not t > 0:
        raise ValueError(f"Mehler time must be positive, got {t!r}")
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    grid = phi.grid
    k = math.sqrt(omega)
    sh = math.sinh(2.0 * t * k)
    kappa = k / (2.0 * sh)
    x = grid.axis()
    z = math.exp(t * k) * x[None, :] - math.exp(-t * k) * x[:, None]
    pref = (4.0 * math.pi) ** -0.5 * math.exp(t * k) * math.sqrt(2.0 * k / sh)
    mat = (pref * grid.spacing) * np.exp(-kappa * z * z)
    vals = apply_axis_matrices(phi.nd(), [mat.astype(complex)] * grid.m).ravel()
    # rows whose kernel mass leaks past the box edge miss the data out there
    missing = grid.m * float(np.max(np.abs(mat.sum(axis=1) - 1.0)))
    leak = missing * _boundary_ratio(phi.values, grid)
    flags = ("kernel-truncated",) if leak > INPUT_TRUNCATION else ()
    return Field(grid, vals, flags, {"t": t, "omega": omega, "path": "mehler",
                                     "kernel_mass_deficit": missing})


def propagate(op: str, field: Field, t, cfg: PropagatorConfig = DEFAULT_CONFIG,
              path: Optional[str] = None, omega: float = 0.25) -> Field:
    """Dispatch on ``op`` in ``{"ou", "ho", "mehler"}``."""
    if op == "ou":
        if path in (None, "transform"):
            return propagate_ou_transform(field, t, cfg)
        if path == "kernel":
            return propagate_ou_kernel(field, t, cfg)
        raise ValueError(f"unknown OU path {path!r}")
    if op == "ho":
        return propagate_ho(field, t, cfg, path or "direct")
    if op == "mehler":
        return propagate_mehler(field, t, omega, cfg)
    raise ValueError(f"unknown operator {op!r}")
