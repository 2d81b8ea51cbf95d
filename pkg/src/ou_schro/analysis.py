"""Numerical probes of the uncertainty, dispersive and gauge statements.

Threshold quantities (decay rates, products) come from the closed-form
Gaussian coefficients; grid quadrature is used only to confirm them.  PDE
residuals use a centered second-order difference in time and fourth-order
differences in space, measured on the inner half of the box.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, NamedTuple, Sequence, Union

import numpy as np

from . import gauss_calc as gc
from .field_grid import (
    Field,
    Grid,
    dft_lattice,
    lp_norm,
    weighted_l2_gamma_norm,
)
from .gauss_calc import EvolutionTime, GaussianExponential, RiccatiSpec
from .propagator import (
    DEFAULT_CONFIG,
    PropagatorConfig,
    SingularTimeError,
    evaluate_ho_direct,
    evaluate_ou_transform,
    propagate_ou_kernel,
    propagate_ou_transform_gauged,
)

__all__ = [
    "default_chirps",
    "DEFAULT_DECAYS",
    "DEFAULT_TIMES",
    "DispersiveProbeResult",
    "HardyProbe",
    "InconsistentRiccatiSpec",
    "RiccatiCheckResult",
    "UNCERTAINTY_THRESHOLD",
    "UncertaintyProbeResult",
    "WeightedIdentityResult",
    "convergence_order",
    "default_uncertainty_family",
    "dispersive_probe",
    "hardy_probe",
    "pde_residual",
    "riccati_gauge_check",
    "sharp_constant",
    "uncertainty_probe_l2",
    "uncertainty_probe_linf",
    "weighted_norm_identity_check",
]

UNCERTAINTY_THRESHOLD = 1.0 / 16.0
HARDY_THRESHOLD = math.pi ** 2
CANCELLATION_TOL = 1e-12

DEFAULT_DECAYS = (0.5, 1.0, 2.0)
DEFAULT_TIMES = (math.pi / 6, math.pi / 4, math.pi / 2, 2.2, 4.0)


def default_chirps(s: float) -> tuple:
    q = math.cos(s) / math.sin(s) / 4.0
    return (0.0, q, -q, 1.0, -1.0)


def _regular_time(s) -> EvolutionTime:
    et = s if isinstance(s, EvolutionTime) else gc.covariance_q(s)
    if et.singular:
        raise SingularTimeError(f"singular time s={et.t!r}")
    return et


def _evolved_gauged(psi_state: GaussianExponential, et: EvolutionTime) -> GaussianExponential:
    phi = gc.multiply_quadratic(psi_state, 0.25)
    return gc.multiply_quadratic(gc.ou_evolve(phi, et, path="transform"), -0.25)


# -- uncertainty -------------------------------------------------------------------


@dataclass(frozen=True)
class UncertaintyProbeResult:
    kind: str
    s: float
    a_max: float
    b_max: float
    product: float
    attained: bool
    C: float
    threshold: float = UNCERTAINTY_THRESHOLD
    chirp_cancelled: bool = False

    @property
    def at_endpoint(self) -> bool:
        return abs(self.product - self.threshold) < CANCELLATION_TOL

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["at_endpoint"] = self.at_endpoint
        return rec


def _rates(psi_state: GaussianExponential, s):
    if not psi_state.integrable:
        raise ValueError("psi state must decay (Re a > 0)")
    et = _regular_time(s)
    evolved = _evolved_gauged(psi_state, et)
    a_max = gc.decay_rate(psi_state)
    b_max = gc.decay_rate(evolved)
    product = a_max * b_max * et.sin_t ** 2
    cancelled = abs((psi_state.a - 0.25j * et.cot_t).imag) <= CANCELLATION_TOL
    return et, evolved, a_max, b_max, product, cancelled


def uncertainty_probe_l2(psi_state: GaussianExponential, s) -> UncertaintyProbeResult:
    """Weighted-``L^2`` rates at times 0 and ``s``.

    Admissible weights form the open intervals ``a < a_max``, ``b < b_max``,
    so the product is a supremum that is never attained.
    """
    et, _, a_max, b_max, product, cancelled = _rates(psi_state, s)
    return UncertaintyProbeResult("l2", et.t, a_max, b_max, product, False, math.nan,
                                  chirp_cancelled=cancelled)


def _pointwise_constant(g: GaussianExponential):
    """Smallest ``C`` with ``|g(x)| <= C exp(-Re a |x|^2)``, or ``None`` if unbounded."""
    if np.any(g.b_vec.real != 0):
        return None
    return math.exp(g.c.real)


def uncertainty_probe_linf(psi_state: GaussianExponential, s) -> UncertaintyProbeResult:
    """Pointwise Gaussian bounds at times 0 and ``s``, attained at the rates themselves."""
    et, evolved, a_max, b_max, product, cancelled = _rates(psi_state, s)
    c0 = _pointwise_constant(psi_state)
    c1 = _pointwise_constant(evolved)
    attained = c0 is not None and c1 is not None
    C = max(1.0, c0, c1) if attained else math.inf
    return UncertaintyProbeResult("linf", et.t, a_max, b_max, product, attained, C,
                                  chirp_cancelled=cancelled)


def default_uncertainty_family(decays: Sequence[float] = DEFAULT_DECAYS,
                               times: Sequence[float] = DEFAULT_TIMES,
                               chirps: Callable[[float], Iterable[float]] = default_chirps):
    """Yield ``(c, theta, s, psi_state)`` for ``psi = exp(-(c + i theta)|x|^2)``, m=1."""
    for s in times:
        for c in decays:
            for theta in chirps(s):
                yield c, theta, s, GaussianExponential.radial(1, complex(c, theta))


class HardyProbe(NamedTuple):
    a_rate: float
    b_rate: float
    product: float


def hardy_probe(g: GaussianExponential) -> HardyProbe:
    """Decay rates of ``g`` and of its Fourier transform."""
    if not g.integrable:
        raise ValueError("Hardy probe needs Re a > 0")
    a_rate = gc.decay_rate(g)
    b_rate = gc.decay_rate(gc.fourier_gaussian(g))
    product = a_rate * b_rate
    assert product <= HARDY_THRESHOLD * (1 + 1e-12), "Gaussian beats the Hardy threshold"
    return HardyProbe(a_rate, b_rate, product)


# -- dispersive estimate -----------------------------------------------------------


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def sharp_constant(p: float, m: int, t) -> float:
    """``(p^{1/p} / p'^{1/p'})^{m/2} (4 pi |sin t|)^{-m(1/2 - 1/p')}``."""
    et = _regular_time(t)
    pp = conjugate_exponent(p)
    inv_pp = 0.0 if math.isinf(pp) else 1.0 / pp
    babenko = p ** (1.0 / p) / (1.0 if math.isinf(pp) else pp ** inv_pp)
    return babenko ** (m / 2.0) * (4.0 * math.pi * abs(et.sin_t)) ** (-m * (0.5 - inv_pp))


@dataclass(frozen=True)
class DispersiveProbeResult:
    p: float
    p_prime: float
    t: float
    lhs: float
    rhs: float
    ratio: float
    constant: float
    in_theorem: bool

    def to_record(self) -> dict:
        return asdict(self)


def dispersive_probe(psi: Union[Field, GaussianExponential], t, p: float,
                     cfg: PropagatorConfig = DEFAULT_CONFIG) -> DispersiveProbeResult:
    """Compare both sides of the ``L^p -> L^{p'}`` bound for the evolved state.

    ``psi`` is the gauged datum ``exp(-|x|^2/4) phi``.  Gaussians use closed
    forms, fields use the transform-path propagator and grid norms.  ``p``
    outside ``[1, 2]`` is evaluated but tagged ``in_theorem=False``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    et = _regular_time(t)
    pp = conjugate_exponent(p)
    if isinstance(psi, GaussianExponential):
        m = psi.m
        lhs = gc.lp_norm(_evolved_gauged(psi, et), pp)
        norm_in = gc.lp_norm(psi, p)
    else:
        m = psi.grid.m
        lhs = lp_norm(propagate_ou_transform_gauged(psi, et, cfg), pp)
        norm_in = lp_norm(psi, p)
    const = sharp_constant(p, m, et)
    rhs = const * norm_in
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return DispersiveProbeResult(p, pp, et.t, lhs, rhs, ratio, const, 1.0 <= p <= 2.0)


# -- finite differences ----------------------------------------------------------------


def _fd_space(fn: Callable, pts: np.ndarray, t: float, h: float):
    """Fourth-order Laplacian and gradient of ``fn(., t)`` at ``pts``."""
    n, m = pts.shape
    center = fn(pts, t)
    lap = -30.0 * m * center
    grad = np.empty((n, m), dtype=complex)
    for k in range(m):
        e = np.zeros(m)
        e[k] = h
        fp1, fm1 = fn(pts + e, t), fn(pts - e, t)
        fp2, fm2 = fn(pts + 2 * e, t), fn(pts - 2 * e, t)
        lap = lap + 16.0 * (fp1 + fm1) - (fp2 + fm2)
        grad[:, k] = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h)
    return center, lap / (12.0 * h * h), grad


def _fd_time(fn: Callable, pts: np.ndarray, t: float, delta: float) -> np.ndarray:
    return (fn(pts, t + delta) - fn(pts, t - delta)) / (2.0 * delta)


def _rel(num: np.ndarray, den: np.ndarray) -> float:
    d = math.sqrt(float(np.sum(np.abs(den) ** 2)))
    n = math.sqrt(float(np.sum(np.abs(num) ** 2)))
    return n / d if d > 0 else n


def _inner_points(grid: Grid) -> np.ndarray:
    return grid.points()[grid.inner_mask(0.5)]


def pde_residual(op: str, initial: Union[Field, GaussianExponential], t: float,
                 grid: Grid = None, h: float = 0.1, delta: float = 1e-4,
                 cfg: PropagatorConfig = DEFAULT_CONFIG) -> float:
    """Relative inner-box residual of ``d_t f - i L f`` (``op="ou"``) or
    ``d_t u - i H u`` (``op="ho"``).

    A :class:`Field` is evolved by the grid transform formulas, evaluated at
    the shifted stencil points; a Gaussian is evolved in closed form.
    """
    if isinstance(initial, Field):
        grid = initial.grid
        if op == "ou":
            def fn(x, s):
                return evaluate_ou_transform(initial, s, x, cfg)
        elif op == "ho":
            def fn(x, s):
                return evaluate_ho_direct(initial, s, x, cfg)
        else:
            raise ValueError(f"unknown operator {op!r}")
    else:
        if grid is None:
            raise ValueError("closed-form residuals need a grid for evaluation points")
        evolve = {"ou": lambda s: gc.ou_evolve(initial, s, "symbol"),
                  "ho": lambda s: gc.ho_evolve(initial, s, "gauge")}[op]

        def fn(x, s):
            return evolve(s).evaluate(x)

    pts = _inner_points(grid)
    f, lap, grad = _fd_space(fn, pts, t, h)
    ft = _fd_time(fn, pts, t, delta)
    if op == "ou":
        rhs = 1j * (lap - np.sum(pts * grad, axis=-1))
    else:
        rhs = 1j * (lap - 0.25 * np.sum(pts ** 2, axis=-1) * f)
    return _rel(ft - rhs, ft)


def convergence_order(residual: Callable[[float], float], h0: float,
                      refinements: int = 2) -> tuple:
    """Observed order ``log2(res(h) / res(h/2))`` for successive halvings.

    Returns ``(orders, residuals, steps)``.
    """
    steps = [h0 / 2 ** k for k in range(refinements + 1)]
    res = [residual(h) for h in steps]
    orders = [math.log2(res[k] / res[k + 1]) for k in range(refinements)]
    return orders, res, steps


# -- Riccati gauge ----------------------------------------------------------------------


class InconsistentRiccatiSpec(ValueError):
    """The gauge ``h`` does not generate the requested potential."""


@dataclass(frozen=True)
class RiccatiCheckResult:
    residual: float
    residual_u: float
    residual_f: float
    q0: complex
    k0: complex


def _check_spec(spec: RiccatiSpec, m: int, tol: float = 1e-12):
    q0, k0 = gc.riccati_potential(spec, m)
    if abs(k0) > tol or abs(q0 - complex(spec.phi_quad)) > tol:
        raise InconsistentRiccatiSpec(
            f"gauge (A={spec.A!r}, B={spec.B!r}) gives Phi = {k0!r} + {q0!r}|x|^2, "
            f"expected {spec.phi_quad!r}|x|^2")
    return q0, k0


def _drifted_evolution(spec: RiccatiSpec, data: GaussianExponential) -> Callable:
    """Solution map of ``f_t = i(Delta f - 4A <x, grad f>)`` for real ``A >= 0``."""
    A = complex(spec.A)
    if A.imag != 0 or A.real < 0:
        raise NotImplementedError("drifted evolution implemented for real A >= 0 only")
    A = A.real
    if A == 0:
        return lambda s: gc.free_evolve(data, s)
    # x -> c x with c^2 = 4A maps the drift onto the OU operator at time 4A t
    c = 2.0 * math.sqrt(A)
    scaled = gc.scale_argument(data, 1.0 / c)
    return lambda s: gc.scale_argument(gc.ou_evolve(scaled, 4.0 * A * s, "symbol"), c)


def riccati_gauge_check(spec: RiccatiSpec, data: GaussianExponential, t_sample: float,
                        grid: Grid, h: float = 0.05, delta: float = 1e-4) -> RiccatiCheckResult:
    """Residuals of both sides of the exponential gauge for ``u = exp(-h) f``.

    ``data`` is the initial datum of the drifted equation for ``f``.
    """
    q0, k0 = _check_spec(spec, data.m)
    evolve = _drifted_evolution(spec, data)

    def f_fn(x, s):
        return evolve(s).evaluate(x)

    def u_fn(x, s):
        return np.exp(-spec.h(x, s)) * f_fn(x, s)

    pts = _inner_points(grid)
    r2 = np.sum(pts ** 2, axis=-1)
    u, lap_u, _ = _fd_space(u_fn, pts, t_sample, h)
    ut = _fd_time(u_fn, pts, t_sample, delta)
    res_u = _rel(1j * (lap_u + (q0 * r2 + k0) * u) - ut, ut)

    f, lap_f, grad_f = _fd_space(f_fn, pts, t_sample, h)
    ft = _fd_time(f_fn, pts, t_sample, delta)
    grad_h = 2.0 * complex(spec.A) * pts
    res_f = _rel(1j * (lap_f - 2.0 * np.sum(grad_h * grad_f, axis=-1)) - ft, ft)
    return RiccatiCheckResult(max(res_u, res_f), res_u, res_f, q0, k0)


# -- weighted norm bookkeeping ------------------------------------------------------------


@dataclass(frozen=True)
class WeightedIdentityResult:
    discrepancy: float
    transform_side: float
    gamma_side: float
    truncation_unsafe: bool


def weighted_norm_identity_check(psi: Field, t, b: float,
                                 cfg: PropagatorConfig = DEFAULT_CONFIG) -> WeightedIdentityResult:
    """Compare ``||exp(b|x|^2) hhat_t(x / (4 pi sin t))||`` with the weighted
    gamma-norm of the evolved field scaled by ``(4 pi |sin t|)^{m/2}``.

    The evolved field comes from the kernel path (transform path below the
    kernel guard), so the two sides are computed by different quadratures.
    """
    et = _regular_time(t)
    grid = psi.grid
    m = grid.m
    r2 = grid.radius2()
    h = np.exp(0.25j * et.cot_t * r2) * psi.values
    hhat = dft_lattice(Field(grid, h), [grid.axis() / (4.0 * math.pi * et.sin_t)] * m)
    integrand = np.exp(2.0 * b * r2) * np.abs(hhat) ** 2
    transform_side = math.sqrt(float(np.sum(integrand)) * grid.cell_volume)

    phi = Field(grid, np.exp(0.25 * r2) * psi.values)
    if abs(et.sin_t) >= cfg.min_abs_sin:
        f = propagate_ou_kernel(phi, et, cfg)
    else:
        f = Field(grid, np.exp(0.25 * r2) * propagate_ou_transform_gauged(psi, et, cfg).values)
    wn = weighted_l2_gamma_norm(f, b)
    gamma_side = (4.0 * math.pi * abs(et.sin_t)) ** (m / 2.0) * wn.value
    disc = abs(transform_side - gamma_side) / max(abs(gamma_side), 1e-300)
    return WeightedIdentityResult(disc, transform_side, gamma_side, wn.truncation_unsafe)
