"""Internet and ICN scenarios, caching-factor sweeps, and the best caching factor.

On the Internet the CP pays the ISP (``p_s >= 0``) and nothing is cached.
In an ICN the ISP pays the CP (``p_s <= 0``) and caches a fraction
``kappa`` of content.  Caching cuts the side payment to ``(1 - kappa) p_s``,
lowers the demand curvature to ``a = (1 - kappa) / (B - lam)`` and costs
the ISP ``c(kappa)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .caching import CachingCostModel, cost_of_kappa
from .demand import DemandParams
from .equilibrium import Equilibrium, GameSpec, nash_concave_closed, nash_numeric_foc
from .errors import DomainError, NotUnimodalWarning, SidePaymentTooLarge
from .numerics import Bracket, Tolerance, maximize_1d

SWEEP_FIELDS = (
    "kappa", "a", "p1", "p2", "p_total", "demand", "u1", "u2", "cache_cost", "valid_interior",
)


class Regime(str, enum.Enum):
    INTERNET = "internet"
    ICN = "icn"


def default_kappa_grid(n: int = 101) -> tuple[float, ...]:
    return tuple(np.linspace(0.0, 1.0, n).tolist())


@dataclass(frozen=True)
class ScenarioConfig:
    regime: Regime
    demand: DemandParams
    p_s: float
    cost_model: CachingCostModel | None = None
    kappa_grid: tuple[float, ...] = field(default_factory=default_kappa_grid)

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        object.__setattr__(self, "kappa_grid", tuple(float(k) for k in self.kappa_grid))
        if self.regime is Regime.INTERNET and self.p_s < 0:
            raise DomainError(f"Internet regime needs p_s >= 0 (CP pays ISP), got {self.p_s}")
        if self.regime is Regime.ICN and self.p_s > 0:
            raise DomainError(f"ICN regime needs p_s <= 0 (ISP pays CP), got {self.p_s}")
        grid = self.kappa_grid
        if any(not 0.0 <= k <= 1.0 for k in grid):
            raise DomainError("kappa_grid values must lie in [0, 1]")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise DomainError("kappa_grid must be sorted ascending")


@dataclass(frozen=True)
class SweepRecord:
    kappa: float
    a: float
    p1: float
    p2: float
    p_total: float
    demand: float
    u1: float
    u2: float
    cache_cost: float
    valid_interior: bool

    def as_dict(self) -> dict:
        return asdict(self)


def game_for(config: ScenarioConfig, kappa: float) -> GameSpec:
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"kappa={kappa!r} outside [0, 1]")
    if config.regime is Regime.INTERNET:
        return GameSpec(config.demand.with_kappa(0.0), config.p_s, 1.0, 0.0)
    cost = 0.0 if config.cost_model is None else cost_of_kappa(kappa, config.cost_model)
    return GameSpec(config.demand.with_kappa(kappa), config.p_s, 1.0 - kappa, cost)


def _equilibrium(spec: GameSpec, strict: bool) -> Equilibrium:
    if spec.demand.has_closed_form:
        return nash_concave_closed(spec, strict)
    return nash_numeric_foc(spec, strict=strict)


def _solve(config: ScenarioConfig, kappa: float, strict: bool) -> SweepRecord:
    if config.regime is Regime.INTERNET:
        kappa = 0.0
    spec = game_for(config, kappa)
    try:
        eq = _equilibrium(spec, strict)
    except SidePaymentTooLarge as exc:
        raise SidePaymentTooLarge(exc.effective_ps, exc.bound, kappa) from None
    return SweepRecord(
        kappa, spec.demand.a, eq.p1, eq.p2, eq.p_total, eq.demand_at_eq,
        eq.u1, eq.u2, spec.fixed_cost_isp, eq.valid_interior,
    )


def solve_scenario(config: ScenarioConfig, kappa: float) -> SweepRecord:
    """Interior equilibrium at caching factor ``kappa``.

    Raises ``SidePaymentTooLarge`` (carrying ``kappa``) when the effective
    side payment breaks the interior bound.
    """
    return _solve(config, kappa, strict=True)


def kappa_sweep(config: ScenarioConfig) -> list[SweepRecord]:
    """One record per grid point; invalid points are kept and flagged."""
    return [_solve(config, k, strict=False) for k in config.kappa_grid]


@dataclass(frozen=True)
class OptimalKappa:
    kappa_star: float
    record: SweepRecord
    n_local_maxima: int


def _isp_value(config: ScenarioConfig, kappa: float) -> float:
    rec = _solve(config, kappa, strict=False)
    return rec.u1 if rec.valid_interior else -math.inf


def optimal_kappa(config: ScenarioConfig, refine_tol: float = 1e-4, n_coarse: int = 101) -> OptimalKappa:
    """Caching factor maximizing the ISP's equilibrium utility.

    No shape is assumed for ``U1*(kappa)``.  Every local maximum of a coarse
    scan is refined by golden section over its neighbouring grid cells and
    the best refined point wins; more than one local maximum triggers a
    ``NotUnimodalWarning``.
    """
    if config.regime is not Regime.ICN:
        raise DomainError("optimal_kappa needs the ICN regime")
    if n_coarse < 3:
        raise ValueError(f"n_coarse must be >= 3, got {n_coarse}")
    grid = np.linspace(0.0, 1.0, n_coarse)
    vals = np.array([_isp_value(config, float(k)) for k in grid])
    if not np.any(np.isfinite(vals)):
        raise SidePaymentTooLarge(config.p_s, math.nan)

    peaks = []
    for i, v in enumerate(vals):
        left = vals[i - 1] if i > 0 else -math.inf
        right = vals[i + 1] if i < n_coarse - 1 else -math.inf
        if np.isfinite(v) and v >= left and v >= right and (v > left or v > right):
            peaks.append(i)
    if not peaks:  # flat curve
        peaks = [int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))]
    if len(peaks) > 1:
        warnings.warn(
            f"U1*(kappa) has {len(peaks)} local maxima on the coarse grid; refining each",
            NotUnimodalWarning,
            stacklevel=2,
        )

    tol = Tolerance(abs_tol=refine_tol / 10.0, rel_tol=0.0, max_iter=200)
    best_k, best_v = None, -math.inf
    for i in peaks:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, n_coarse - 1)]
        res = maximize_1d(lambda k: _isp_value(config, k), Bracket(float(lo), float(hi)), tol)
        if res.value > best_v:
            best_k, best_v = res.argmax, res.value
    return OptimalKappa(best_k, _solve(config, best_k, strict=False), len(peaks))
