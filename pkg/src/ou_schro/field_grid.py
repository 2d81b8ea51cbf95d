"""Complex fields sampled on uniform centered grids.

A :class:`Grid` covers ``[-r, r)^m`` with ``n`` nodes per axis; nodes are
stored in row-major order (last axis fastest).  Quadrature is the trapezoid
rule on the truncated box, which is spectrally accurate for the smooth,
Gaussian-dominated integrands used throughout the package.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence, Union

import numpy as np

from ._parallel import CHUNK_ELEMENTS, map_chunks
from .gauss_calc import GaussianExponential

__all__ = [
    "DEFAULT_BUDGET",
    "Field",
    "Grid",
    "NormResult",
    "apply_axis_matrices",
    "dft_at",
    "dft_lattice",
    "gauge_phi_of_psi",
    "gauge_psi_of_phi",
    "lp_norm",
    "make_grid",
    "plain_l2_norm",
    "read_csv",
    "relative_gamma_error",
    "relative_l2_error",
    "sample",
    "weighted_l2_gamma_norm",
    "write_csv",
]

DEFAULT_BUDGET = 1 << 24
TRUNCATION_RATIO = 1e-6


@dataclass(frozen=True)
class Grid:
    m: int
    n: int
    r: float
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if int(self.m) != self.m or not 1 <= self.m <= 3:
            raise ValueError(f"dimension m must be 1, 2 or 3, got {self.m!r}")
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 16, got {self.n!r}")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"half-extent r must be positive, got {self.r!r}")
        if self.n ** self.m > self.budget:
            raise ValueError(f"grid has {self.n ** self.m} points, budget is {self.budget}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", float(self.r))

    @property
    def spacing(self) -> float:
        return 2.0 * self.r / self.n

    @property
    def size(self) -> int:
        return self.n ** self.m

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.m

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.m

    def axis(self) -> np.ndarray:
        return -self.r + self.spacing * np.arange(self.n)

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(n^m, m)``."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.m), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def radius2(self) -> np.ndarray:
        return np.sum(self.points() ** 2, axis=-1)

    def boundary_mask(self) -> np.ndarray:
        idx = np.indices(self.shape).reshape(self.m, -1)
        return np.any((idx == 0) | (idx == self.n - 1), axis=0)

    def inner_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Nodes inside the centered box of half-extent ``fraction * r``."""
        return np.all(np.abs(self.points()) <= fraction * self.r, axis=-1)


def make_grid(m: int, n: int, r: float, budget: int = DEFAULT_BUDGET) -> Grid:
    return Grid(m, n, r, budget)


@dataclass(frozen=True)
class Field:
    """Complex samples on a grid.  ``flags`` records truncation/overflow notes."""

    grid: Grid
    values: np.ndarray
    flags: tuple = ()
    meta: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).ravel()
        if vals.size != self.grid.size:
            raise ValueError(f"field has {vals.size} values, grid has {self.grid.size}")
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "flags", tuple(self.flags))

    def with_values(self, values, flags=(), **meta) -> "Field":
        return Field(self.grid, values, tuple(self.flags) + tuple(flags), {**self.meta, **meta})

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __rmul__(self, scalar) -> "Field":
        return Field(self.grid, complex(scalar) * self.values)

    def nd(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


Evaluable = Union[GaussianExponential, Callable[[np.ndarray], np.ndarray]]


def sample(g: Evaluable, grid: Grid) -> Field:
    """Sample a Gaussian or a callable ``f(points) -> values`` at the nodes."""
    pts = grid.points()
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(g(pts), dtype=complex)
    vals = np.broadcast_to(vals, (grid.size,))
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite value encountered while sampling")
    return Field(grid, vals)


def gauge_psi_of_phi(f: Field) -> Field:
    """``psi = exp(-|x|^2/4) phi``."""
    return f.with_values(np.exp(-0.25 * f.grid.radius2()) * f.values)


def gauge_phi_of_psi(f: Field) -> Field:
    """``phi = exp(|x|^2/4) psi``; raises ``OverflowError`` rather than saturating."""
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(0.25 * f.grid.radius2()) * f.values
    if not np.all(np.isfinite(vals)):
        raise OverflowError("exp(|x|^2/4) lift overflowed on this grid")
    return f.with_values(vals)


# -- transforms -----------------------------------------------------------------


def _row_sums(mat_fn, n_rows: int, n_cols: int, vec: np.ndarray) -> np.ndarray:
    """``sum_j mat[i, j] * vec[j]`` with numpy's pairwise reduction."""
    chunk = max(1, CHUNK_ELEMENTS // max(1, n_cols))

    def work(lo, hi):
        return np.sum(mat_fn(lo, hi) * vec[None, :], axis=-1)

    parts = map_chunks(work, n_rows, chunk)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def apply_axis_matrices(values: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``mats[k]`` (``(T_k, n)``) along axis ``k`` of an ``n^m`` array."""
    out = np.asarray(values, dtype=complex)
    for k, mat in enumerate(mats):
        moved = np.moveaxis(out, k, -1)
        lead = moved.shape[:-1]
        flat = np.ascontiguousarray(moved.reshape(-1, moved.shape[-1]))
        n_rows, n = flat.shape
        t_k = mat.shape[0]
        chunk = max(1, CHUNK_ELEMENTS // max(1, t_k * n))

        def work(lo, hi, flat=flat, mat=mat):
            return np.sum(flat[lo:hi, None, :] * mat[None, :, :], axis=-1)

        res = np.concatenate(map_chunks(work, n_rows, chunk), axis=0)
        out = np.moveaxis(res.reshape(lead + (t_k,)), -1, k)
    return np.ascontiguousarray(out)


def dft_at(f: Field, targets) -> np.ndarray:
    """Trapezoid transform ``sum_j f(x_j) exp(-2 pi i <xi, x_j>) dx^m`` at ``targets``."""
    grid = f.grid
    targets = np.asarray(targets, dtype=float)
    if grid.m == 1 and (targets.ndim == 1):
        targets = targets[:, None]
    targets = targets.reshape(-1, grid.m)
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    pts = grid.points()

    def mat(lo, hi):
        return np.exp(-2j * np.pi * (targets[lo:hi] @ pts.T))

    return _row_sums(mat, targets.shape[0], pts.shape[0], f.values) * grid.cell_volume


def dft_lattice(f: Field, target_axes: Sequence[np.ndarray]) -> np.ndarray:
    """Same sum as :func:`dft_at` on the tensor lattice of ``target_axes``.

    Returned flattened in row-major order.  The exponential factorizes over
    axes, so the sum is applied one axis at a time.
    """
    grid = f.grid
    if len(target_axes) != grid.m:
        raise ValueError("need one target axis per dimension")
    ax = grid.axis()
    mats = [np.exp(-2j * np.pi * np.outer(np.asarray(t, dtype=float), ax)) for t in target_axes]
    return apply_axis_matrices(f.nd(), mats).ravel() * grid.cell_volume


# -- norms ------------------------------------------------------------------------


@dataclass(frozen=True)
class NormResult:
    value: float
    truncation_unsafe: bool = False

    def __float__(self) -> float:
        return self.value


def weighted_l2_gamma_norm(f: Field, w: float) -> NormResult:
    """``(int exp(2w|x|^2) |f|^2 exp(-|x|^2/2) dx)^(1/2)`` by trapezoid rule.

    The result is flagged truncation-unsafe when the integrand on the
    outermost node shell exceeds ``1e-6`` of the integral.
    """
    grid = f.grid
    with np.errstate(over="ignore"):
        integrand = np.exp((2.0 * w - 0.5) * grid.radius2()) * np.abs(f.values) ** 2
    total = float(np.sum(integrand)) * grid.cell_volume
    if not math.isfinite(total):
        return NormResult(math.inf, True)
    shell = float(np.max(integrand[grid.boundary_mask()]))
    unsafe = shell > TRUNCATION_RATIO * total
    return NormResult(math.sqrt(total), unsafe)


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    mod = np.abs(f.values)
    if math.isinf(p):
        return float(np.max(mod))
    return float(np.sum(mod ** p) * f.grid.cell_volume) ** (1.0 / p)


def plain_l2_norm(f: Field) -> float:
    return lp_norm(f, 2.0)


def relative_l2_error(f: Field, ref, mask=None) -> float:
    """``||f - ref|| / ||ref||`` over the grid (or the masked nodes)."""
    ref_vals = ref.values if isinstance(ref, Field) else np.asarray(ref, dtype=complex)
    diff = f.values - ref_vals
    if mask is not None:
        diff, ref_vals = diff[mask], ref_vals[mask]
    den = math.sqrt(float(np.sum(np.abs(ref_vals) ** 2)))
    num = math.sqrt(float(np.sum(np.abs(diff) ** 2)))
    return num / den if den > 0 else num


def relative_gamma_error(f: Field, ref, mask=None) -> float:
    """Relative error in ``L^2(exp(-|x|^2/2) dx)``, the Hilbert space of ``exp(itL)``."""
    ref_vals = ref.values if isinstance(ref, Field) else np.asarray(ref, dtype=complex)
    weight = np.exp(-0.25 * f.grid.radius2())
    return relative_l2_error(Field(f.grid, weight * f.values), weight * ref_vals, mask)


# -- CSV snapshots ----------------------------------------------------------------


def write_csv(f: Field, path) -> None:
    pts = f.grid.points()
    header = [f"x{k + 1}" for k in range(f.grid.m)] + ["re", "im"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, v in zip(pts, f.values):
            w.writerow([f"{c:.17g}" for c in x] + [f"{v.real:.17g}", f"{v.imag:.17g}"])


def read_csv(path, grid: Grid) -> Field:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[-2:] != ["re", "im"] or len(header) != grid.m + 2:
        raise ValueError(f"unexpected CSV header {header!r}")
    vals = np.array([complex(float(r[-2]), float(r[-1])) for r in body])
    return Field(grid, vals)
