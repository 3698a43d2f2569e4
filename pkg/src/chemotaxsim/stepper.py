"""Explicit conservative step for the cell-density equation.

One step does, in order: solve the chemical field from the current density,
build the singular drift velocity w = chi * grad(v)/v on faces, propose a
stable dt, then apply a flux-form forward Euler update with central
diffusion, donor-cell (upwind) advection and an explicit logistic reaction.
Flux form plus zero Neumann boundary faces makes the discrete mass identity

    int u_new = int u_old + dt * int u_old*(a - b*u_old)

hold to roundoff, which is the backbone of the mass-bound monitors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elliptic import DEFAULT_ELLIPTIC, EllipticConfig, solve_chemical
from .errors import (DegeneracyError, FieldOverflowError, ParameterError,
                     TimestepCollapseError)
from .mesh import Grid, ScalarField, divergence, face_gradient

# negatives no larger than this fraction of max u are roundoff, not physics
CLAMP_FRACTION = 1e-14
MAX_HALVINGS = 40


@dataclass(frozen=True)
class CoefficientSpec:
    """Positive coefficient a(x, t) or b(x, t) with known global bounds.

    Families:
      constant   -- a(x, t) = base
      separable  -- a(x, t) = base * (1 + eps_x*cos(k*pi*x/L)) * (1 + eps_t*sin(omega*t))
                    with |eps_x| + |eps_t| < 1 so the product stays positive.

    ``inf``/``sup`` are bounds over the whole domain and all times, used by
    the a-priori mass ceiling and the reaction timestep guard.
    """

    base: float
    family: str = "constant"
    eps_x: float = 0.0
    mode_k: float = 1.0
    eps_t: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.family not in ("constant", "separable"):
            raise ParameterError(f"unknown coefficient family {self.family!r}")
        if not (self.base >= 0 and math.isfinite(self.base)):
            # base 0 is admitted for the pure-transport / heat-stencil test
            # modes; the positive-bounds model regime uses base > 0
            raise ParameterError(f"coefficient base must be >= 0, got {self.base}")
        if self.family == "separable" and abs(self.eps_x) + abs(self.eps_t) >= 1.0:
            raise ParameterError("separable coefficient needs |eps_x| + |eps_t| < 1")

    @classmethod
    def constant(cls, value: float) -> "CoefficientSpec":
        return cls(base=value)

    @classmethod
    def separable(cls, base: float, eps_x: float = 0.0, mode_k: float = 1.0,
                  eps_t: float = 0.0, omega: float = 0.0) -> "CoefficientSpec":
        return cls(base=base, family="separable", eps_x=eps_x, mode_k=mode_k,
                   eps_t=eps_t, omega=omega)

    def _cos_range(self) -> tuple[float, float]:
        # cos(k*pi*x/L) over x in [0, L]: max 1 at x=0; min -1 once k >= 1
        if self.mode_k >= 1.0:
            return -1.0, 1.0
        return math.cos(self.mode_k * math.pi), 1.0

    def _x_factor_range(self) -> tuple[float, float]:
        if self.family == "constant":
            return 1.0, 1.0
        c_lo, c_hi = self._cos_range()
        vals = (1.0 + self.eps_x * c_lo, 1.0 + self.eps_x * c_hi)
        return min(vals), max(vals)

    def _t_factor_range(self) -> tuple[float, float]:
        if self.family == "constant" or self.omega == 0.0:
            return 1.0, 1.0
        return 1.0 - abs(self.eps_t), 1.0 + abs(self.eps_t)

    @property
    def inf(self) -> float:
        return self.base * self._x_factor_range()[0] * self._t_factor_range()[0]

    @property
    def sup(self) -> float:
        return self.base * self._x_factor_range()[1] * self._t_factor_range()[1]

    def evaluate(self, grid: Grid, t: float) -> np.ndarray:
        """Coefficient values at cell centers for time t."""
        profile = _x_profile(self, grid)
        if self.family == "separable" and self.omega != 0.0:
            return profile * (1.0 + self.eps_t * math.sin(self.omega * t))
        return profile

    def scaled(self, factor: float) -> "CoefficientSpec":
        return CoefficientSpec(base=self.base * factor, family=self.family,
                               eps_x=self.eps_x, mode_k=self.mode_k,
                               eps_t=self.eps_t, omega=self.omega)


@lru_cache(maxsize=64)
def _x_profile(spec: CoefficientSpec, grid: Grid) -> np.ndarray:
    # callers must treat the cached array as read-only
    if spec.family == "constant":
        return np.full(grid.shape, spec.base)
    x = grid.centers(0)
    fx = spec.base * (1.0 + spec.eps_x * np.cos(spec.mode_k * np.pi * x / grid.extents[0]))
    if grid.dim == 2:
        return np.repeat(fx[:, None], grid.cells[1], axis=1)
    return fx


@dataclass(frozen=True)
class ModelParams:
    """chi, mu, nu and the two logistic coefficients of the model."""

    chi: float
    mu: float
    nu: float
    coeff_a: CoefficientSpec
    coeff_b: CoefficientSpec

    def __post_init__(self):
        if self.chi < 0 or not math.isfinite(self.chi):
            raise ParameterError(f"chi must be >= 0, got {self.chi}")
        if self.mu <= 0 or self.nu <= 0:
            raise ParameterError("mu and nu must be positive")

    @property
    def a_inf(self) -> float:
        return self.coeff_a.inf

    @property
    def a_sup(self) -> float:
        return self.coeff_a.sup

    @property
    def b_inf(self) -> float:
        return self.coeff_b.inf

    @property
    def b_sup(self) -> float:
        return self.coeff_b.sup


@dataclass(frozen=True)
class StepperConfig:
    cfl_safety: float = 0.4
    dt_min: float = 1e-12
    u_ceiling: float = 1e8
    v_floor: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ParameterError("cfl_safety must lie in (0, 1]")
        if min(self.dt_min, self.u_ceiling, self.v_floor) <= 0:
            raise ParameterError("dt_min, u_ceiling and v_floor must be positive")


DEFAULT_STEPPER = StepperConfig()


@dataclass
class SimState:
    """Mutable simulation state; one owner per state, never shared."""

    t: float
    step: int
    u: ScalarField
    v: ScalarField
    dt_last: float = 0.0


def initial_state(u0: ScalarField, params: ModelParams,
                  elliptic_cfg: EllipticConfig = DEFAULT_ELLIPTIC) -> SimState:
    v0 = solve_chemical(u0, params.mu, params.nu, elliptic_cfg)
    return SimState(t=0.0, step=0, u=u0.copy(), v=v0)


def chemotactic_velocity(v: ScalarField, chi: float,
                         v_floor: float = 0.0) -> list[np.ndarray]:
    """Face drift velocity w = chi * (face gradient of v) / (face-average v).

    The face average is arithmetic; boundary faces are zero.  Any cell at or
    below v_floor means the singular sensitivity is no longer evaluable and
    raises DegeneracyError.
    """
    min_v = v.min()
    if min_v < v_floor or min_v <= 0.0:
        raise DegeneracyError(
            f"chemical field at {min_v:.3e} dropped below floor {v_floor:.3e}", min_v=min_v)
    grid = v.grid
    if chi == 0.0:
        return [np.zeros(grid.face_shape(ax)) for ax in range(grid.dim)]
    out = []
    for ax, g in enumerate(face_gradient(v)):
        w = np.zeros_like(g)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        inner = [slice(None)] * grid.dim
        inner[ax] = slice(1, -1)
        v_avg = 0.5 * (v.values[tuple(lo)] + v.values[tuple(hi)])
        w[tuple(inner)] = chi * g[tuple(inner)] / v_avg
        out.append(w)
    return out


def _dt_from_guards(grid: Grid, w_max: float, u_max: float,
                    params: ModelParams, cfg: StepperConfig) -> float:
    """sigma * min(diffusion, advection, reaction guards); zero-denominator
    guards are skipped."""
    h_min = grid.min_spacing
    guards = [h_min * h_min / (2.0 * grid.dim)]
    if w_max > 0.0:
        guards.append(h_min / w_max)
    reaction_rate = params.a_sup + 2.0 * params.b_sup * u_max
    if reaction_rate > 0.0:
        guards.append(1.0 / reaction_rate)
    return cfg.cfl_safety * min(guards)


def propose_dt(state: SimState, params: ModelParams,
               cfg: StepperConfig = DEFAULT_STEPPER) -> float:
    """Stable timestep for the current state; raises on collapse below dt_min."""
    w = chemotactic_velocity(state.v, params.chi, cfg.v_floor)
    w_max = max(float(np.abs(wa).max()) for wa in w)
    dt = _dt_from_guards(state.u.grid, w_max, state.u.max(), params, cfg)
    if dt < cfg.dt_min:
        raise TimestepCollapseError(f"proposed dt {dt:.3e} below dt_min {cfg.dt_min:.3e}", dt=dt)
    return dt


def _explicit_rhs(u: np.ndarray, grid: Grid, w: list[np.ndarray],
                  a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """div(grad u - u_upwind * w) + u*(a - b*u), all in flux form."""
    fluxes = []
    for ax, w_ax in enumerate(w):
        flux = np.zeros_like(w_ax)
        inner = [slice(None)] * grid.dim
        inner[ax] = slice(1, -1)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        u_lo, u_hi = u[tuple(lo)], u[tuple(hi)]
        grad_u = (u_hi - u_lo) / grid.spacing[ax]
        w_in = w_ax[tuple(inner)]
        donor = np.where(w_in > 0.0, u_lo, u_hi)
        flux[tuple(inner)] = grad_u - donor * w_in
        fluxes.append(flux)
    return divergence(grid, fluxes) + u * (a - b * u)


def advance(state: SimState, params: ModelParams,
            cfg: StepperConfig = DEFAULT_STEPPER,
            elliptic_cfg: EllipticConfig = DEFAULT_ELLIPTIC,
            dt_cap: float = math.inf) -> SimState:
    """Advance the state by one accepted step (mutates and returns it).

    Order of operations: fresh elliptic solve from the current density,
    drift velocity from that solve, dt proposal, then the explicit update.
    A step producing genuine negatives is rejected and retried at dt/2 (up
    to MAX_HALVINGS); negatives within CLAMP_FRACTION*max(u) of zero are
    roundoff and get zeroed instead of burning retries.

    Failure modes map to distinct exceptions: DegeneracyError (v_floor),
    FieldOverflowError (u_ceiling), TimestepCollapseError (dt_min or retry
    budget), SolverFailureError (elliptic).
    """
    grid = state.u.grid
    v_new = solve_chemical(state.u, params.mu, params.nu, elliptic_cfg,
                           warm_start=state.v)
    w = chemotactic_velocity(v_new, params.chi, cfg.v_floor)
    w_max = max(float(np.abs(wa).max()) for wa in w)

    u_old = state.u.values
    a = params.coeff_a.evaluate(grid, state.t)
    b = params.coeff_b.evaluate(grid, state.t)

    dt = _dt_from_guards(grid, w_max, float(u_old.max()), params, cfg)
    if dt < cfg.dt_min:
        raise TimestepCollapseError(f"proposed dt {dt:.3e} below dt_min {cfg.dt_min:.3e}", dt=dt)
    dt = min(dt, dt_cap)

    rhs = _explicit_rhs(u_old, grid, w, a, b)
    for _ in range(MAX_HALVINGS + 1):
        u_new = u_old + dt * rhs
        lowest = float(u_new.min())
        if lowest >= 0.0:
            break
        if abs(lowest) <= CLAMP_FRACTION * float(u_new.max()):
            np.clip(u_new, 0.0, None, out=u_new)
            break
        dt *= 0.5
        if dt < cfg.dt_min:
            raise TimestepCollapseError(
                f"dt collapsed to {dt:.3e} while restoring positivity", dt=dt)
    else:
        raise TimestepCollapseError(
            f"positivity not restored after {MAX_HALVINGS} halvings", dt=dt)

    u_peak = float(u_new.max())
    if not math.isfinite(u_peak) or u_peak > cfg.u_ceiling:
        raise FieldOverflowError(
            f"max u = {u_peak:.3e} exceeded ceiling {cfg.u_ceiling:.3e}", max_u=u_peak)

    state.u = ScalarField(grid, u_new)
    state.v = v_new
    state.t += dt
    state.step += 1
    state.dt_last = dt
    return state
