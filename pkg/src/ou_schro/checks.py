"""Invariant checks run by ``ou-schro validate``.

Each check returns a :class:`CheckRecord` holding the measured quantities
together with the tolerance they were compared against.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import gauss_calc as gc
from .analysis import (
    InconsistentRiccatiSpec,
    convergence_order,
    pde_residual,
    riccati_gauge_check,
    weighted_norm_identity_check,
)
from .field_grid import (
    make_grid,
    relative_gamma_error,
    relative_l2_error,
    sample,
    weighted_l2_gamma_norm,
)
from .gauss_calc import GaussianExponential, RiccatiSpec
from .propagator import (
    propagate_ho,
    propagate_mehler,
    propagate_ou_kernel,
    propagate_ou_transform,
)

ORACLE_TIMES = (0.3, math.pi / 2, 2.2, 4.0)

DEFAULT_TOLERANCES = {
    "two_path": 1e-6,
    "unitarity": 1e-6,
    "group_law": 1e-5,
    "periodicity": 1e-12,
    "gauge_equivalence": 1e-6,
    "eigenstate": 1e-7,
    "pde_residual": 1e-3,
    "convergence_order": 1.8,
    "riccati": 1e-3,
    "riccati_exact": 1e-15,
    "weighted_identity": 1e-6,
    "weighted_identity_b0": 1e-8,
    "wick": 1e-12,
    "mehler_mass": 1e-8,
}


@dataclass
class CheckRecord:
    name: str
    passed: bool
    measurements: List[dict] = field(default_factory=list)

    def add(self, label: str, value: float, tolerance: float, ok: bool, **extra) -> None:
        self.measurements.append({"label": label, "value": float(value),
                                  "tolerance": float(tolerance), "passed": bool(ok), **extra})
        self.passed = self.passed and bool(ok)

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ValidateConfig:
    m: int = 1
    n: int = 512
    r: float = 12.0
    psi_a: complex = 1.0 + 0j
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def grid(self):
        return make_grid(self.m, self.n, self.r)

    def phi_state(self) -> GaussianExponential:
        return GaussianExponential.radial(self.m, self.psi_a - 0.25)


def _below(value: float, tol: float) -> bool:
    return bool(value < tol)


def check_two_path(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("two_path", True)
    grid = cfg.grid()
    phi = cfg.phi_state()
    F = sample(phi, grid)
    tol = cfg.tol("two_path")
    for t in ORACLE_TIMES:
        ref = sample(gc.ou_evolve(phi, t, "symbol"), grid)
        tr = propagate_ou_transform(F, t)
        kr = propagate_ou_kernel(F, t)
        for label, out in (("transform_vs_oracle", tr), ("kernel_vs_oracle", kr)):
            err = relative_gamma_error(out, ref)
            rec.add(label, err, tol, _below(err, tol), t=t, branch=out.meta["branch"])
        err = relative_gamma_error(tr, kr)
        rec.add("transform_vs_kernel", err, tol, _below(err, tol), t=t)
    return rec


def check_unitarity(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("unitarity", True)
    grid = cfg.grid()
    F = sample(cfg.phi_state(), grid)
    n0 = weighted_l2_gamma_norm(F, 0.0).value
    exact = gc.gamma_l2_norm(cfg.phi_state())
    tol = cfg.tol("unitarity")
    for t in ORACLE_TIMES:
        n1 = weighted_l2_gamma_norm(propagate_ou_transform(F, t), 0.0).value
        drift = abs(n1 - n0) / n0
        rec.add("gamma_norm_drift", drift, tol, _below(drift, tol), t=t)
        closed = abs(gc.gamma_l2_norm(gc.ou_evolve(cfg.phi_state(), t)) - exact) / exact
        rec.add("closed_form_drift", closed, tol, _below(closed, tol), t=t)
    return rec


GROUP_PAIRS = ((0.3, 0.5), (2.2, 2.0), (0.5, 4.0), (4.0, 0.7))


def check_group_law(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("group_law", True)
    grid = cfg.grid()
    phi = cfg.phi_state()
    F = sample(phi, grid)
    tol = cfg.tol("group_law")
    ctol = cfg.tol("periodicity")
    for s, t in GROUP_PAIRS:
        two = propagate_ou_transform(propagate_ou_transform(F, s), t)
        one = propagate_ou_transform(F, s + t)
        err = relative_gamma_error(two, one)
        rec.add("grid_composition", err, tol, _below(err, tol), s=s, t=t)
        cs = gc.ou_evolve(gc.ou_evolve(phi, s, "symbol"), t, "symbol")
        cerr = cs.coefficient_error(gc.ou_evolve(phi, s + t, "symbol"))
        rec.add("symbol_composition", cerr, ctol, _below(cerr, ctol), s=s, t=t)
    return rec


def check_periodicity(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("periodicity", True)
    tol = cfg.tol("periodicity")
    phi = GaussianExponential(cfg.m, cfg.psi_a - 0.25 - 0.3j, [0.4 - 0.2j] * cfg.m, 0.1 + 0.2j)
    at_pi = gc.ou_evolve(phi, math.pi, "symbol")
    err = at_pi.coefficient_error(gc.scale_argument(phi, -1.0))
    rec.add("t=pi_parity", err, tol, _below(err, tol))
    at_2pi = gc.ou_evolve(phi, 2 * math.pi, "symbol")
    err = at_2pi.coefficient_error(phi)
    rec.add("t=2pi_identity", err, tol, _below(err, tol))
    return rec


def check_gauge_equivalence(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("gauge_equivalence", True)
    tol = cfg.tol("gauge_equivalence")
    grid = cfg.grid()
    u0 = GaussianExponential.radial(cfg.m, 0.5)
    U = sample(u0, grid)
    for t in ORACLE_TIMES:
        d = propagate_ho(U, t, path="direct")
        g = propagate_ho(U, t, path="gauge")
        err = relative_l2_error(d, g)
        rec.add("direct_vs_gauge", err, tol, _below(err, tol), t=t)
        cerr = gc.ho_evolve(u0, t, "direct").coefficient_error(gc.ho_evolve(u0, t, "gauge"))
        rec.add("closed_form_direct_vs_gauge", cerr, cfg.tol("periodicity"),
                _below(cerr, cfg.tol("periodicity")), t=t)
    etol = cfg.tol("eigenstate")
    for m, n, r in ((1, cfg.n if cfg.m == 1 else 512, 12.0), (2, 128, 10.0)):
        g2 = make_grid(m, n, r)
        ground = sample(GaussianExponential.radial(m, 0.25), g2)
        for path in ("direct", "gauge"):
            t = 1.0
            out = propagate_ho(ground, t, path=path)
            expected = np.exp(-0.5j * m * t) * ground.values
            err = float(np.max(np.abs(out.values - expected)))
            rec.add(f"eigenstate_{path}", err, etol, _below(err, etol), m=m, t=t)
    return rec


PDE_TIMES = (0.7, 2.2, 4.0)
PDE_STEP = 0.05
PDE_ORDER_STEPS = (0.4, 0.2, 0.1)


def check_pde_residual(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("pde_residual", True)
    grid = cfg.grid()
    tol = cfg.tol("pde_residual")
    otol = cfg.tol("convergence_order")
    data = {"ou": sample(cfg.phi_state(), grid),
            "ho": sample(GaussianExponential.radial(cfg.m, 0.5), grid)}
    for op, init in data.items():
        for t in PDE_TIMES:
            res = pde_residual(op, init, t, h=PDE_STEP)
            rec.add(f"{op}_residual", res, tol, _below(res, tol), t=t, h=PDE_STEP, delta=1e-4)
            orders, _, _ = convergence_order(
                lambda h: pde_residual(op, init, t, h=h), PDE_ORDER_STEPS[0],
                len(PDE_ORDER_STEPS) - 1)
            rec.add(f"{op}_order", min(orders), otol, bool(min(orders) >= otol), t=t)
    return rec


def check_riccati(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("riccati", True)
    grid = cfg.grid()
    m = cfg.m
    spec = RiccatiSpec.harmonic(m)
    q0, k0 = gc.riccati_potential(spec, m)
    exact = max(abs(q0 + 0.25), abs(k0))
    rec.add("potential_exact", exact, cfg.tol("riccati_exact"),
            exact <= cfg.tol("riccati_exact"))
    tol = cfg.tol("riccati")
    res = riccati_gauge_check(spec, cfg.phi_state(), 0.7, grid, h=PDE_STEP)
    rec.add("gauge_residual_u", res.residual_u, tol, _below(res.residual_u, tol))
    rec.add("gauge_residual_f", res.residual_f, tol, _below(res.residual_f, tol))
    orders, _, _ = convergence_order(
        lambda h: riccati_gauge_check(spec, cfg.phi_state(), 0.7, grid, h=h).residual,
        PDE_ORDER_STEPS[0], len(PDE_ORDER_STEPS) - 1)
    otol = cfg.tol("convergence_order")
    rec.add("gauge_order", min(orders), otol, bool(min(orders) >= otol))
    bad = RiccatiSpec(spec.A, spec.B + 0.1, spec.phi_quad)
    try:
        riccati_gauge_check(bad, cfg.phi_state(), 0.7, grid)
        rejected = False
    except InconsistentRiccatiSpec:
        rejected = True
    rec.add("perturbed_rejected", float(rejected), 1.0, rejected)
    return rec


def check_weighted_identity(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("weighted_identity", True)
    grid = make_grid(cfg.m, cfg.n, max(cfg.r, 20.0)) if cfg.m == 1 else cfg.grid()
    psi = sample(GaussianExponential.radial(cfg.m, cfg.psi_a), grid)
    for b, key in ((0.0, "weighted_identity_b0"), (1.0 / 32.0, "weighted_identity")):
        tol = cfg.tol(key)
        for t in (math.pi / 2, 2.2):
            res = weighted_norm_identity_check(psi, t, b)
            ok = _below(res.discrepancy, tol) and not res.truncation_unsafe
            rec.add("discrepancy", res.discrepancy, tol, ok, b=b, t=t,
                    truncation_unsafe=res.truncation_unsafe)
    return rec


def check_wick(cfg: ValidateConfig) -> CheckRecord:
    rec = CheckRecord("wick", True)
    tol = cfg.tol("wick")
    phi = GaussianExponential(cfg.m, 0.75 - 0.2j, [0.3 + 0.1j] * cfg.m, 0.05j)
    for t in (0.3, 1.0, math.pi / 2, 2.2, 3.0):
        cont = gc.mehler_coefficient_map(phi, 1j * t, 0.25)
        err = cont.coefficient_error(gc.ou_evolve(phi, t, "transform"))
        rec.add("continued_coefficients", err, tol, _below(err, tol), t=t)
    grid = cfg.grid()
    one = sample(GaussianExponential.radial(cfg.m, 0.0), grid)
    mtol = cfg.tol("mehler_mass")
    for t in (0.5, 1.0):
        out = gc.mehler_evolve(GaussianExponential.radial(cfg.m, 0.0), t, 0.25)
        err = max(abs(out.a), abs(cmath.exp(out.c) - 1))
        rec.add("mass_one_closed_form", err, mtol, _below(err, mtol), t=t)
        u = propagate_mehler(one, t, 0.25)
        inner = grid.inner_mask(0.5)
        err = float(np.max(np.abs(u.values[inner] - 1)))
        rec.add("mass_one_grid", err, mtol, _below(err, mtol), t=t)
    return rec


CHECKS: Dict[str, Callable[[ValidateConfig], CheckRecord]] = {
    "two_path": check_two_path,
    "unitarity": check_unitarity,
    "group_law": check_group_law,
    "periodicity": check_periodicity,
    "gauge_equivalence": check_gauge_equivalence,
    "pde_residual": check_pde_residual,
    "riccati": check_riccati,
    "weighted_identity": check_weighted_identity,
    "wick": check_wick,
}


def run_checks(cfg: ValidateConfig, only: Optional[List[str]] = None) -> List[CheckRecord]:
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check(s) {unknown}; choose from {sorted(CHECKS)}")
    return [CHECKS[n](cfg) for n in names]
