"""Screened-Poisson solver for the chemical field: (mu*I - Lap) v = nu*u.

The operator uses the mesh module's Neumann closure, so it is symmetric
positive definite for any mu > 0 (no null space, unlike a pure Neumann
Poisson problem).  1D solves go through a direct banded factorization; 2D
uses Jacobi-preconditioned conjugate gradients with an optional warm start.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack

from .errors import ParameterError, SolverFailureError
from .mesh import Grid, ScalarField, require_finite


@dataclass(frozen=True)
class EllipticConfig:
    rel_tolerance: float = 1e-10
    max_iterations: int = 0        # 0 means 10 * number of cells
    method: str = "auto"           # auto | direct | cg

    def __post_init__(self):
        if not (0.0 < self.rel_tolerance <= 1e-4):
            raise ParameterError(f"rel_tolerance must lie in (0, 1e-4], got {self.rel_tolerance}")
        if self.max_iterations < 0:
            raise ParameterError("max_iterations must be >= 0 (0 selects the default)")
        if self.method not in ("auto", "direct", "cg"):
            raise ParameterError(f"unknown elliptic method {self.method!r}")

    def iterations_for(self, grid: Grid) -> int:
        return self.max_iterations if self.max_iterations > 0 else 10 * grid.num_cells


DEFAULT_ELLIPTIC = EllipticConfig()


def apply_operator(grid: Grid, mu: float, v: np.ndarray) -> np.ndarray:
    """(mu*I - Lap_h) v with mirror-ghost Neumann closure."""
    out = mu * v
    for ax in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        g = (v[hi] - v[lo]) / grid.spacing[ax] ** 2  # interior face gradients / h
        out[lo] -= g
        out[hi] += g
    return out


def _operator_diagonal(grid: Grid, mu: float) -> np.ndarray:
    diag = np.full(grid.shape, mu)
    for ax in range(grid.dim):
        h2 = grid.spacing[ax] ** 2
        face_count = np.full(grid.shape, 2.0)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, 1)
        hi[ax] = slice(-1, None)
        face_count[tuple(lo)] = 1.0
        face_count[tuple(hi)] = 1.0
        diag += face_count / h2
    return diag


@lru_cache(maxsize=32)
def _tridiag_factors(grid: Grid, mu: float):
    """LU factorization of the 1D operator, reused across timesteps.

    The LAPACK gttrf wrapper rejects n=2, so tiny grids fall back to a dense
    factorization (still cached)."""
    n = grid.cells[0]
    h2 = grid.spacing[0] ** 2
    diag = np.full(n, mu + 2.0 / h2)
    diag[0] = diag[-1] = mu + 1.0 / h2
    off = np.full(n - 1, -1.0 / h2)
    if n < 3:
        dense = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        return ("dense", np.linalg.inv(dense))
    dl, d, du, du2, ipiv, info = lapack.dgttrf(off, diag, off)
    if info != 0:
        raise SolverFailureError(f"tridiagonal factorization failed (info={info})")
    return ("gt", (dl, d, du, du2, ipiv))


def _solve_direct_1d(grid: Grid, mu: float, b: np.ndarray) -> np.ndarray:
    kind, factors = _tridiag_factors(grid, mu)
    if kind == "dense":
        return factors @ b
    dl, d, du, du2, ipiv = factors
    x, info = lapack.dgttrs(dl, d, du, du2, ipiv, b)
    if info != 0:
        raise SolverFailureError(f"tridiagonal back-substitution failed (info={info})")
    return x


def _norm2(x: np.ndarray) -> float:
    flat = x.ravel()
    return float(np.sqrt(flat @ flat))


def _solve_cg(grid: Grid, mu: float, b: np.ndarray, x0: np.ndarray,
              rel_tol: float, max_iter: int) -> tuple[np.ndarray, float, int]:
    """Jacobi-preconditioned CG; returns (x, final residual norm, iterations)."""
    inv_diag = 1.0 / _operator_diagonal(grid, mu)
    b_norm = _norm2(b)
    target = rel_tol * b_norm
    x = x0.copy()
    r = b - apply_operator(grid, mu, x)
    res = _norm2(r)
    if res <= target:
        return x, res, 0
    z = inv_diag * r
    p = z.copy()
    rz = float((r * z).sum())
    for it in range(1, max_iter + 1):
        ap = apply_operator(grid, mu, p)
        alpha = rz / float((p * ap).sum())
        x += alpha * p
        r -= alpha * ap
        res = _norm2(r)
        if res <= target:
            # guard against accumulated recurrence drift
            res = _norm2(b - apply_operator(grid, mu, x))
            if res <= target:
                return x, res, it
            r = b - apply_operator(grid, mu, x)
        z = inv_diag * r
        rz_new = float((r * z).sum())
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, res, max_iter


def solve_chemical(u: ScalarField, mu: float, nu: float,
                   cfg: EllipticConfig = DEFAULT_ELLIPTIC,
                   warm_start: ScalarField | None = None) -> ScalarField:
    """Solve (mu*I - Lap_h) v = nu*u on the grid of ``u``.

    For nonnegative u with positive mass the discrete maximum principle of
    the M-matrix operator makes the returned v strictly positive.  That
    precondition is the caller's obligation; manufactured-solution tests
    legitimately pass sign-changing u.

    Raises SolverFailureError when the residual target
    ||b - A v||_2 <= rel_tolerance * ||b||_2 is not met.
    """
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if nu <= 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    require_finite(u, "chemical source")
    grid = u.grid
    b = nu * u.values

    method = cfg.method
    if method == "auto":
        method = "direct" if grid.dim == 1 else "cg"
    if method == "direct" and grid.dim != 1:
        raise ParameterError("direct solve is only available in 1D")

    if method == "direct":
        v = _solve_direct_1d(grid, mu, b)
        res = _norm2(b - apply_operator(grid, mu, v))
        if res > cfg.rel_tolerance * _norm2(b):
            raise SolverFailureError(
                f"direct solve residual {res:.3e} above tolerance", residual=res)
        return ScalarField(grid, v)

    x0 = warm_start.values if warm_start is not None else b / mu
    if x0.shape != grid.shape:
        raise ParameterError("warm start shape does not match the grid")
    v, res, iters = _solve_cg(grid, mu, b, x0, cfg.rel_tolerance, cfg.iterations_for(grid))
    if res > cfg.rel_tolerance * _norm2(b):
        raise SolverFailureError(
            f"conjugate gradient stalled after {iters} iterations, residual {res:.3e}",
            residual=res, iterations=iters)
    return ScalarField(grid, v)
