"""Functionals monitored along a run and the inequality checks on them.

Every check is an inequality with an explicit tolerance.  Analytic slack is
zero; discretization slack is grid dependent and stated where it applies
(the Rayleigh bound uses 5% at 256 cells).  Cells below DEGENERACY_FLOOR
are treated as degeneracy evidence: the log/negative-power functionals then
return -inf/+inf flags instead of raising, unless strict mode is on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, ParameterError
from .mesh import ScalarField, cell_gradient_sq, integrate, require_finite

DEGENERACY_FLOOR = 1e-300
MASS_BOUND_SLACK = 1e-8
HOLDER_SLACK = 1e-12


def lp_norm(f: ScalarField, p: float) -> float:
    """(int f^p)^(1/p); p >= 1, possibly non-integer, f >= 0."""
    if p < 1.0:
        raise ParameterError(f"lp_norm needs p >= 1, got {p}")
    require_finite(f)
    if f.min() < 0.0:
        raise ParameterError("lp_norm needs a nonnegative field")
    if p == 1.0:
        return integrate(f)
    return float((f.values ** p).sum() * f.grid.cell_volume) ** (1.0 / p)


def weighted_integral(u: ScalarField, v: ScalarField, q: float, s: float) -> float:
    """int u^q / v^s by midpoint quadrature."""
    require_finite(u)
    require_finite(v)
    if u.min() < 0.0:
        raise ParameterError("weighted_integral needs u >= 0")
    if s != 0.0 and v.min() <= 0.0:
        raise DegeneracyError("weighted_integral hit a nonpositive chemical cell",
                              min_v=v.min())
    vals = u.values ** q if q != 1.0 else u.values
    if s != 0.0:
        vals = vals / v.values ** s
    return float(vals.sum() * u.grid.cell_volume)


def grad_weighted_integral(v: ScalarField, q: float, s: float) -> float:
    """int |grad v|^q / v^s; q=s=2 is the Rayleigh-type monitor."""
    if q < 0.0:
        raise ParameterError(f"need q >= 0, got {q}")
    if s != 0.0 and v.min() <= 0.0:
        raise DegeneracyError("grad_weighted_integral hit a nonpositive chemical cell",
                              min_v=v.min())
    gsq = cell_gradient_sq(v).values
    vals = gsq if q == 2.0 else gsq ** (q / 2.0)
    if s != 0.0:
        vals = vals / v.values ** s
    return float(vals.sum() * v.grid.cell_volume)


def log_mass(u: ScalarField, strict: bool = False) -> float:
    """int ln(u); returns -inf as a degeneracy flag when a cell underflows."""
    require_finite(u)
    if u.min() < DEGENERACY_FLOOR:
        if strict:
            raise DegeneracyError("log_mass hit a vanishing cell", min_v=u.min())
        return -math.inf
    return float(np.log(u.values).sum() * u.grid.cell_volume)


def neg_power(u: ScalarField, p: float, strict: bool = False) -> float:
    """int u^(-p); returns +inf as a degeneracy flag when a cell underflows.

    Large p on small densities can saturate double range; the value then
    honestly reports inf rather than warning.
    """
    if p <= 0.0:
        raise ParameterError(f"neg_power needs p > 0, got {p}")
    require_finite(u)
    if u.min() < DEGENERACY_FLOOR:
        if strict:
            raise DegeneracyError("neg_power hit a vanishing cell", min_v=u.min())
        return math.inf
    with np.errstate(over="ignore"):
        return float((u.values ** -p).sum() * u.grid.cell_volume)


def grad_ratio(u: ScalarField, v: ScalarField, p: float) -> float:
    """||grad v||_{L^q} / ||u||_{L^p} with q = n*p/(n-p), defined for p < dim."""
    dim = u.grid.dim
    if not (1.0 < p < dim):
        raise ParameterError(f"grad_ratio needs 1 < p < dim={dim}, got {p}")
    q = dim * p / (dim - p)
    grad_mag = ScalarField(v.grid, np.sqrt(cell_gradient_sq(v).values))
    return lp_norm(grad_mag, q) / lp_norm(u, p)


def m_star(u0_mass: float, a_sup: float, b_inf: float, measure: float) -> float:
    """A-priori ceiling for the total mass: max of the initial mass and the
    logistic equilibrium mass (a_sup/b_inf)*|Omega|.

    Degenerate coefficients: with a_sup = b_inf = 0 transport conserves mass
    exactly, so the ceiling is the initial mass; growth without damping has
    no a-priori ceiling.
    """
    if b_inf > 0.0:
        return max(u0_mass, a_sup / b_inf * measure)
    return u0_mass if a_sup == 0.0 else math.inf


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    min_u: float
    max_u: float
    min_v: float
    max_v: float
    rayleigh: float
    log_mass: float
    v_ratio: float
    lp_norms: dict[float, float] = field(default_factory=dict)
    neg_powers: dict[float, float] = field(default_factory=dict)
    grad_ratio: float | None = None


def compute_record(u: ScalarField, v: ScalarField, t: float,
                   p_list: tuple[float, ...] = (),
                   neg_p_list: tuple[float, ...] = (),
                   grad_p: float | None = None) -> DiagnosticsRecord:
    mass = integrate(u)
    return DiagnosticsRecord(
        t=t,
        mass=mass,
        min_u=u.min(),
        max_u=u.max(),
        min_v=v.min(),
        max_v=v.max(),
        rayleigh=grad_weighted_integral(v, 2.0, 2.0),
        log_mass=log_mass(u),
        v_ratio=v.min() / mass if mass > 0 else math.inf,
        lp_norms={p: lp_norm(u, p) for p in p_list},
        neg_powers={p: neg_power(u, p) for p in neg_p_list},
        grad_ratio=grad_ratio(u, v, grad_p) if grad_p is not None else None,
    )


def csv_header(p_list: tuple[float, ...] = (), neg_p_list: tuple[float, ...] = (),
               grad_p: float | None = None) -> str:
    cols = ["t", "mass", "min_u", "max_u", "min_v", "max_v", "rayleigh",
            "log_mass", "v_ratio"]
    cols += [f"lp_{p:g}" for p in p_list]
    cols += [f"negpow_{p:g}" for p in neg_p_list]
    if grad_p is not None:
        cols.append(f"grad_ratio_{grad_p:g}")
    return ",".join(cols)


def csv_row(rec: DiagnosticsRecord, p_list: tuple[float, ...] = (),
            neg_p_list: tuple[float, ...] = (), grad_p: float | None = None) -> str:
    vals = [rec.t, rec.mass, rec.min_u, rec.max_u, rec.min_v, rec.max_v,
            rec.rayleigh, rec.log_mass, rec.v_ratio]
    vals += [rec.lp_norms[p] for p in p_list]
    vals += [rec.neg_powers[p] for p in neg_p_list]
    if grad_p is not None:
        vals.append(rec.grad_ratio if rec.grad_ratio is not None else math.nan)
    return ",".join(f"{v:.17g}" for v in vals)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    passed: bool
    value: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.value


def check_mass_bound(rec: DiagnosticsRecord, m_star_value: float) -> BoundCheck:
    bound = m_star_value * (1.0 + MASS_BOUND_SLACK)
    return BoundCheck("mass_bound", rec.mass <= bound, rec.mass, bound)


@dataclass(frozen=True)
class PersistenceCheck:
    passed: bool
    min_mass: float
    min_min_v: float
    mass_floor: float
    v_floor: float


def check_persistence(series: list[DiagnosticsRecord], mass_floor: float,
                      v_floor: float) -> PersistenceCheck:
    """Mass and chemical minimum stay above strictly positive floors."""
    if mass_floor <= 0 or v_floor <= 0:
        raise ParameterError("persistence floors must be positive")
    min_mass = min(r.mass for r in series)
    min_min_v = min(r.min_v for r in series)
    ok = min_mass >= mass_floor and min_min_v >= v_floor
    return PersistenceCheck(ok, min_mass, min_min_v, mass_floor, v_floor)


def trend_floors(series: list[DiagnosticsRecord]) -> tuple[float, float]:
    """Self-referential persistence floors: half the minima over the first
    half of the series, to be enforced on the second half."""
    half = max(1, len(series) // 2)
    head = series[:half]
    return (0.5 * min(r.mass for r in head), 0.5 * min(r.min_v for r in head))


@dataclass(frozen=True)
class HolderCheck:
    lhs: float
    rhs: float
    passed: bool


def reverse_holder_check(f: ScalarField, g: ScalarField, p: float) -> HolderCheck:
    """Reverse Hoelder inequality int(fg) >= (int f^(1/p))^p * (int g^(-1/(p-1)))^(-(p-1)).

    Holds exactly for the discrete quadrature measure, so the only slack
    allowed is roundoff (HOLDER_SLACK, relative).
    """
    if p <= 1.0:
        raise ParameterError(f"reverse Hoelder needs p > 1, got {p}")
    require_finite(f)
    require_finite(g)
    if f.min() < 0.0:
        raise ParameterError("reverse Hoelder needs f >= 0")
    if g.min() <= 0.0:
        raise ParameterError("reverse Hoelder needs g > 0 componentwise")
    vol = f.grid.cell_volume
    lhs = float((f.values * g.values).sum() * vol)
    f_piece = float((f.values ** (1.0 / p)).sum() * vol) ** p
    g_piece = float((g.values ** (-1.0 / (p - 1.0))).sum() * vol) ** (-(p - 1.0))
    rhs = f_piece * g_piece
    return HolderCheck(lhs, rhs, lhs >= rhs * (1.0 - HOLDER_SLACK))
