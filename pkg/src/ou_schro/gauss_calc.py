"""Closed-form calculus on complex Gaussian exponentials.

Every state handled here has the form ``g(x) = exp(-a|x|^2 + <b,x> + c)`` on
``R^m`` with complex ``a``, ``b`` and ``c``.  This family is closed under the
Fourier transform (convention ``exp(-2 pi i <xi,x>)``), under the imaginary
Ornstein-Uhlenbeck group ``exp(itL)``, the harmonic oscillator group
``exp(itH)`` and the real-time Mehler semigroup, so all of them reduce to
coefficient maps.  These maps are the ground truth the grid propagators are
checked against.

Bilinear (not Hermitian) products are used throughout: ``<z,z> = sum z_k^2``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "EPS_SING",
    "Branch",
    "EvolutionTime",
    "GaussianExponential",
    "RiccatiSpec",
    "covariance_q",
    "decay_rate",
    "fourier_gaussian",
    "free_evolve",
    "gamma_l2_norm",
    "heat_flow",
    "ho_evolve",
    "l2_norm",
    "lp_norm",
    "mehler_coefficient_map",
    "mehler_evolve",
    "multiply_quadratic",
    "ou_evolve",
    "riccati_potential",
    "scale_argument",
    "translate",
]

EPS_SING = 1e-9
TWO_PI = 2.0 * math.pi


def _bdot(u: Sequence[complex], v: Sequence[complex]) -> complex:
    return complex(sum(x * y for x, y in zip(u, v)))


@dataclass(frozen=True)
class GaussianExponential:
    """``g(x) = exp(-a|x|^2 + <b,x> + c)`` on ``R^m``.

    ``b`` is stored as a tuple of complex numbers so instances stay hashable
    and immutable; ``b=None`` at construction means the zero vector.
    """

    m: int
    a: complex
    b: tuple = None
    c: complex = 0j

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"dimension must be an integer >= 1, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "c", complex(self.c))
        if self.b is None:
            b = (0j,) * self.m
        else:
            b = tuple(complex(v) for v in np.atleast_1d(np.asarray(self.b, dtype=complex)))
        if len(b) != self.m:
            raise ValueError(f"b has length {len(b)}, expected m={self.m}")
        object.__setattr__(self, "b", b)

    @classmethod
    def radial(cls, m: int, a: complex, c: complex = 0j) -> "GaussianExponential":
        return cls(m, a, None, c)

    @property
    def b_vec(self) -> np.ndarray:
        return np.array(self.b, dtype=complex)

    @property
    def integrable(self) -> bool:
        return self.a.real > 0

    def evaluate(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape ``(..., m)`` (or ``(...,)`` if m=1)."""
        x = np.asarray(x)
        if self.m == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        r2 = np.sum(x * x, axis=-1)
        lin = x @ self.b_vec
        return np.exp(-self.a * r2 + lin + self.c)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def to_record(self) -> dict:
        return {
            "m": self.m,
            "re_a": self.a.real,
            "im_a": self.a.imag,
            "re_b": [v.real for v in self.b],
            "im_b": [v.imag for v in self.b],
            "re_c": self.c.real,
            "im_c": self.c.imag,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GaussianExponential":
        b = [complex(re, im) for re, im in zip(rec["re_b"], rec["im_b"])]
        return cls(rec["m"], complex(rec["re_a"], rec["im_a"]), b,
                   complex(rec["re_c"], rec["im_c"]))

    def coefficient_error(self, other: "GaussianExponential") -> float:
        """Largest coefficient discrepancy, relative to coefficient size.

        The imaginary part of ``c`` is compared modulo ``2 pi`` since it only
        enters through ``exp(c)``.
        """
        if self.m != other.m:
            raise ValueError("dimension mismatch")
        errs = [abs(self.a - other.a) / max(1.0, abs(self.a))]
        for u, v in zip(self.b, other.b):
            errs.append(abs(u - v) / max(1.0, abs(u)))
        dc = self.c - other.c
        dphase = math.remainder(dc.imag, TWO_PI)
        errs.append(abs(complex(dc.real, dphase)) / max(1.0, abs(self.c.real)))
        return max(errs)


class Branch(enum.Enum):
    J_PLUS = "JPlus"
    J_MINUS = "JMinus"
    SINGULAR_ZERO = "SingularZero"
    SINGULAR_PI = "SingularPi"

    @property
    def singular(self) -> bool:
        return self in (Branch.SINGULAR_ZERO, Branch.SINGULAR_PI)


@dataclass(frozen=True)
class EvolutionTime:
    """A flow time with its branch data.

    ``sin_t``, ``cot_t`` and ``q`` are computed from ``t_reduced``; ``cot_t``
    is ``nan`` on singular times.
    """

    t: float
    t_reduced: float
    branch: Branch
    sin_t: float
    cot_t: float
    q: complex
    eps_sing: float = EPS_SING

    @property
    def singular(self) -> bool:
        return self.branch.singular

    def log_rho(self, m: int) -> complex:
        """Log of the kernel prefactor ``rho_m`` (principal branches)."""
        if self.singular:
            raise ValueError(f"singular time t={self.t!r} (t mod pi = "
                             f"{math.remainder(self.t, math.pi):.3g})")
        tr = self.t_reduced
        base = -0.5 * m * math.log(4.0 * math.pi) + 1j * m * tr / 2.0
        base -= 0.5 * m * math.log(abs(self.sin_t))
        if self.branch is Branch.J_PLUS:
            return base - 1j * math.pi * m / 4.0
        return base - 3j * math.pi * m / 4.0

    def rho(self, m: int) -> complex:
        return cmath.exp(self.log_rho(m))

    def to_record(self) -> dict:
        return {"t": self.t, "t_reduced": self.t_reduced, "branch": self.branch.value}


def covariance_q(t: float, eps_sing: float = EPS_SING) -> EvolutionTime:
    """Classify ``t`` and compute ``Q(t) = exp(-it) sin t`` on ``t mod 2 pi``."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t!r}")
    tr = t % TWO_PI
    if tr >= TWO_PI:
        tr = 0.0
    s = math.sin(tr)
    q = cmath.exp(-1j * tr) * s
    if abs(s) <= eps_sing:
        branch = Branch.SINGULAR_PI if abs(tr - math.pi) < 1.0 else Branch.SINGULAR_ZERO
        cot = math.nan
    else:
        branch = Branch.J_PLUS if tr < math.pi else Branch.J_MINUS
        cot = math.cos(tr) / s
    return EvolutionTime(t, tr, branch, s, cot, q, eps_sing)


def _as_time(t) -> EvolutionTime:
    return t if isinstance(t, EvolutionTime) else covariance_q(t)


# -- elementary maps ---------------------------------------------------------


def fourier_gaussian(g: GaussianExponential) -> GaussianExponential:
    """Exact Fourier transform ``int exp(-2 pi i <xi,x>) g(x) dx``.

    Completing the square with ``beta = b - 2 pi i xi`` gives
    ``(pi/a)^{m/2} exp(<beta,beta>/(4a) + c)``; the square root is principal,
    which is the correct branch for ``Re a >= 0``.
    """
    a = g.a
    if a.real < 0:
        raise ValueError(f"Fourier transform needs Re a >= 0, got a={a!r}")
    if a == 0:
        raise ValueError("Fourier transform of a pure exponential (a=0) is not a function")
    b = g.b_vec
    a_new = math.pi ** 2 / a
    b_new = -1j * math.pi * b / a
    c_new = g.c + 0.5 * g.m * cmath.log(math.pi / a) + _bdot(b, b) / (4.0 * a)
    return GaussianExponential(g.m, a_new, b_new, c_new)


def multiply_quadratic(g: GaussianExponential, q: complex = 0j, l=None,
                       k: complex = 0j) -> GaussianExponential:
    """Multiply by ``exp(q|x|^2 + <l,x> + k)``."""
    b = g.b_vec
    if l is not None:
        b = b + np.broadcast_to(np.asarray(l, dtype=complex), (g.m,))
    return GaussianExponential(g.m, g.a - q, b, g.c + k)


def scale_argument(g: GaussianExponential, lam: complex) -> GaussianExponential:
    """Return ``x -> g(lam x)``."""
    lam = complex(lam)
    if lam == 0:
        raise ValueError("scale factor must be nonzero")
    return GaussianExponential(g.m, g.a * lam * lam, lam * g.b_vec, g.c)


def translate(g: GaussianExponential, z) -> GaussianExponential:
    """Return ``x -> g(x + z)`` for a (possibly complex) shift ``z``."""
    z = np.broadcast_to(np.asarray(z, dtype=complex), (g.m,))
    b = g.b_vec
    return GaussianExponential(g.m, g.a, b - 2.0 * g.a * z,
                               g.c - g.a * _bdot(z, z) + _bdot(b, z))


def heat_flow(g: GaussianExponential, s: complex) -> GaussianExponential:
    """Apply ``exp(s Delta)`` for complex ``s`` with ``Re s >= 0``.

    Fourier multiplier ``exp(-4 pi^2 s |xi|^2)``.  With ``w = 1 + 4as`` the
    result is ``w^{-m/2} exp((-a|x|^2 + <b,x> + s<b,b>)/w + c)``.  The
    principal log of ``w`` is continuous along the flows used here (see
    ``ou_evolve``).
    """
    s = complex(s)
    w = 1.0 + 4.0 * g.a * s
    if w == 0:
        raise ValueError("heat flow hits a singular Gaussian (1 + 4as = 0)")
    b = g.b_vec
    c_new = g.c + s * _bdot(b, b) / w - 0.5 * g.m * cmath.log(w)
    return GaussianExponential(g.m, g.a / w, b / w, c_new)


def free_evolve(g: GaussianExponential, t: float) -> GaussianExponential:
    """Free Schrodinger group ``exp(it Delta)``."""
    return heat_flow(g, 1j * t)


# -- groups -------------------------------------------------------------------


def _ou_symbol(g_phi: GaussianExponential, et: EvolutionTime) -> GaussianExponential:
    # v = exp(iQ(t) Delta) phi, then f(x) = v(e^{-it} x).  w(t) = 1 + 4a iQ(t)
    # runs over a circle through 1 that stays off (-inf, 0] whenever
    # Re a > -1/4, so the principal log is the continuous branch.
    v = heat_flow(g_phi, 1j * et.q)
    return scale_argument(v, cmath.exp(-1j * et.t_reduced))


def _ou_transform(g_phi: GaussianExponential, et: EvolutionTime) -> GaussianExponential:
    if et.singular:
        raise ValueError(f"transform path undefined at singular time t={et.t!r} "
                         f"(t mod pi = {math.remainder(et.t, math.pi):.3g})")
    chirp = 0.25j * et.cot_t
    psi = multiply_quadratic(g_phi, -0.25)
    h = multiply_quadratic(psi, chirp)
    hhat = fourier_gaussian(h)
    out = scale_argument(hhat, 1.0 / (4.0 * math.pi * et.sin_t))
    out = multiply_quadratic(out, chirp, k=et.log_rho(g_phi.m))
    return multiply_quadratic(out, 0.25)


def ou_evolve(g_phi: GaussianExponential, t, path: str = "transform") -> GaussianExponential:
    """Evolve the phi-side state by ``exp(itL)``.

    ``path="transform"`` is the chirp / Fourier / chirp sandwich acting on
    ``psi = exp(-|x|^2/4) phi``; it is undefined at ``t in pi Z``.
    ``path="symbol"`` solves in Fourier space after the drift substitution
    and is continuous through the singular times.
    """
    et = _as_time(t)
    if (g_phi.a.real + 0.25) <= 0:
        raise ValueError("psi-side state is not integrable (Re a_phi <= -1/4)")
    if path == "transform":
        return _ou_transform(g_phi, et)
    if path == "symbol":
        return _ou_symbol(g_phi, et)
    raise ValueError(f"unknown path {path!r}")


def ho_evolve(g_u0: GaussianExponential, t, path: str = "direct") -> GaussianExponential:
    """Evolve by ``exp(itH)``, ``H = Delta - |x|^2/4``.

    ``direct`` applies the chirp / Fourier / chirp formula to ``u0`` itself;
    ``gauge`` lifts to the OU group (symbol path) and conjugates back.
    """
    et = _as_time(t)
    m = g_u0.m
    if path == "direct":
        if et.singular:
            raise ValueError(f"direct path undefined at singular time t={et.t!r}")
        if g_u0.a.real <= 0:
            raise ValueError("u0 is not integrable")
        chirp = 0.25j * et.cot_t
        h = multiply_quadratic(g_u0, chirp)
        out = scale_argument(fourier_gaussian(h), 1.0 / (4.0 * math.pi * et.sin_t))
        # log_rho carries exp(im t_red / 2); exp(itH) needs exp(-im t / 2) on top.
        k = et.log_rho(m) - 0.5j * m * et.t_reduced - 0.5j * m * (et.t - et.t_reduced)
        return multiply_quadratic(out, chirp, k=k)
    if path == "gauge":
        phi = multiply_quadratic(g_u0, 0.25)
        f = ou_evolve(phi, et, path="symbol")
        return multiply_quadratic(f, -0.25, k=-0.5j * m * et.t)
    raise ValueError(f"unknown path {path!r}")


def mehler_coefficient_map(g_phi: GaussianExponential, t: complex,
                           omega: float) -> GaussianExponential:
    """Mehler kernel acting on a Gaussian, for real or complex ``t``.

    Solves ``u_t = Delta u - 2 sqrt(omega) <x, grad u>``.  With
    ``k = sqrt(omega)`` and ``kappa = k / (2 sinh(2kt))`` the kernel exponent is
    ``-kappa |e^{kt} y - e^{-kt} x|^2``; the ``y`` integral converges iff
    ``Re(a + kappa e^{2kt}) > 0``.  Complex ``t`` gives the analytic
    continuation.
    """
    t = complex(t)
    k = math.sqrt(omega)
    m = g_phi.m
    sh = cmath.sinh(2.0 * k * t)
    if sh == 0:
        raise ValueError("Mehler kernel is singular at this time")
    kappa = k / (2.0 * sh)
    e2 = cmath.exp(2.0 * k * t)
    alpha = g_phi.a + kappa * e2
    if alpha.real <= 0:
        raise ValueError(
            f"divergent Gaussian integral: need Re a > -Re(k e^(2kt) / (2 sinh 2kt)) "
            f"= {(-kappa * e2).real!r}, got Re a = {g_phi.a.real!r}")
    b = g_phi.b_vec
    log_pref = (-0.5 * m * math.log(4.0 * math.pi) + m * t * k
                + 0.5 * m * cmath.log(2.0 * k / sh))
    a_new = kappa / e2 - kappa * kappa / alpha
    b_new = kappa * b / alpha
    c_new = (g_phi.c + log_pref + 0.5 * m * cmath.log(math.pi / alpha)
             + _bdot(b, b) / (4.0 * alpha))
    return GaussianExponential(m, a_new, b_new, c_new)


def mehler_evolve(g_phi: GaussianExponential, t: float, omega: float) -> GaussianExponential:
    """Real-time Ornstein-Uhlenbeck semigroup applied to a Gaussian."""
    t = float(t)
    if not t > 0:
        raise ValueError(f"Mehler time must be positive, got {t!r}")
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    return mehler_coefficient_map(g_phi, t, omega)


# -- norms and rates ----------------------------------------------------------


def _modulus_sq_gaussian(g: GaussianExponential, extra_decay: float = 0.0):
    # |g|^2 exp(-extra |x|^2) = exp(-alpha|x|^2 + <beta,x> + gamma), all real
    alpha = 2.0 * g.a.real + extra_decay
    beta = 2.0 * g.b_vec.real
    gamma = 2.0 * g.c.real
    return alpha, beta, gamma


def _real_gaussian_integral(m, alpha, beta, gamma) -> float:
    if alpha <= 0:
        return math.inf
    return (math.pi / alpha) ** (0.5 * m) * math.exp(float(beta @ beta) / (4 * alpha) + gamma)


def gamma_l2_norm(g: GaussianExponential) -> float:
    """Norm in ``L^2(exp(-|x|^2/2) dx)``; ``inf`` when the integral diverges."""
    alpha, beta, gamma = _modulus_sq_gaussian(g, 0.5)
    return math.sqrt(_real_gaussian_integral(g.m, alpha, beta, gamma))


def l2_norm(g: GaussianExponential) -> float:
    return lp_norm(g, 2.0)


def lp_norm(g: GaussianExponential, p: float) -> float:
    """Flat ``L^p`` norm, ``p`` in ``[1, inf]``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    ra = g.a.real
    rb = g.b_vec.real
    if ra <= 0:
        return math.inf
    if math.isinf(p):
        return math.exp(g.c.real + float(rb @ rb) / (4 * ra))
    integral = _real_gaussian_integral(g.m, p * ra, p * rb, p * g.c.real)
    return integral ** (1.0 / p)


def decay_rate(g: GaussianExponential) -> float:
    """Exact Gaussian decay rate of ``|g|``, i.e. ``Re a``."""
    return g.a.real


# -- Riccati gauge ------------------------------------------------------------


@dataclass(frozen=True)
class RiccatiSpec:
    """Gauge ``h(x,t) = A|x|^2 + B t`` and target potential ``Phi = phi_quad |x|^2``."""

    A: complex
    B: complex
    phi_quad: complex = -0.25

    @classmethod
    def harmonic(cls, m: int) -> "RiccatiSpec":
        return cls(0.25, 0.5j * m, -0.25)

    def h(self, x, t):
        x = np.asarray(x)
        return self.A * np.sum(x * x, axis=-1) + self.B * t


def riccati_potential(spec: RiccatiSpec, m: int) -> tuple[complex, complex]:
    """Potential ``Phi = k0 + q0|x|^2`` produced by ``i h_t + Delta h - |grad h|^2``.

    Returns ``(q0, k0)``.
    """
    A = complex(spec.A)
    B = complex(spec.B)
    return -4.0 * A * A, 1j * B + 2.0 * m * A
