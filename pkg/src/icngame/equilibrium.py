"""Interior Nash equilibria of the ISP (player 1) / CP (player 2) pricing game.

Utilities for a fixed side payment ``ps`` scaled by ``s`` (1 on the
Internet, ``1 - kappa`` in an ICN) and an ISP fixed cost ``c``::

    U1 = (p1 + s ps) D(p1 + p2) - c
    U2 = (p2 - s ps) D(p1 + p2)

At an interior equilibrium both margins equal half the total price ``p*``,
which solves ``D(p) + D'(p) p / 2 = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from . import kernels
from .demand import DemandParams, demand, demand_derivative
from .errors import PriceOutOfRange, SidePaymentTooLarge, UnsupportedModel
from .numerics import Bracket, Tolerance, find_root, maximize_1d

LATTICE_POINTS = 1000
FOC_TOL = Tolerance(abs_tol=1e-15, rel_tol=1e-15, max_iter=400)
BR_TOL = Tolerance(abs_tol=1e-12, rel_tol=0.0, max_iter=200)


class Method(str, enum.Enum):
    CLOSED_FORM_LINEAR = "ClosedFormLinear"
    CLOSED_FORM_CONCAVE = "ClosedFormConcave"
    NUMERIC_FOC = "NumericFOC"
    BEST_RESPONSE_ITERATION = "BestResponseIteration"


@dataclass(frozen=True)
class GameSpec:
    demand: DemandParams
    side_payment: float = 0.0
    side_payment_scale: float = 1.0
    fixed_cost_isp: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.side_payment_scale <= 1.0:
            raise ValueError(f"side_payment_scale must be in [0, 1], got {self.side_payment_scale}")
        if not self.fixed_cost_isp >= 0:
            raise ValueError(f"fixed_cost_isp must be >= 0, got {self.fixed_cost_isp}")

    @property
    def effective_ps(self) -> float:
        return self.side_payment_scale * self.side_payment


@dataclass(frozen=True)
class Equilibrium:
    p1: float
    p2: float
    p_total: float
    demand_at_eq: float
    u1: float
    u2: float
    method: Method
    foc_residual: float
    valid_interior: bool

    def as_dict(self) -> dict:
        return {
            "p1": self.p1,
            "p2": self.p2,
            "p_total": self.p_total,
            "demand_at_eq": self.demand_at_eq,
            "u1": self.u1,
            "u2": self.u2,
            "method": self.method.value,
            "foc_residual": self.foc_residual,
            "valid_interior": self.valid_interior,
        }


def utility_isp(p1: float, p2: float, spec: GameSpec) -> float:
    if p1 < 0 or p2 < 0:
        raise PriceOutOfRange(f"prices must be >= 0, got p1={p1}, p2={p2}")
    return (p1 + spec.effective_ps) * demand(p1 + p2, spec.demand) - spec.fixed_cost_isp


def utility_cp(p1: float, p2: float, spec: GameSpec) -> float:
    if p1 < 0 or p2 < 0:
        raise PriceOutOfRange(f"prices must be >= 0, got p1={p1}, p2={p2}")
    return (p2 - spec.effective_ps) * demand(p1 + p2, spec.demand)


def foc_residual(p: float, params: DemandParams) -> float:
    """``D(p) + D'(p) p / 2``; zero at the equilibrium total price."""
    return demand(p, params) + 0.5 * p * demand_derivative(p, params)


def total_price_closed(d_max: float, d_sens: float, a: float) -> float:
    """Equilibrium total price for demand ``(1/(d_max - d_sens p) + a)^-1``.

    Rationalized form of ``(4 a d_max + 3 - sqrt(8 a d_max + 9)) / (4 a d_sens)``:
    with ``s = sqrt(9 + 8 a d_max)`` it equals ``d_max (1 + s) / (d_sens (3 + s))``,
    which has no cancellation as ``a -> 0`` and gives ``2 d_max / (3 d_sens)`` there.
    """
    s = math.sqrt(9.0 + 8.0 * a * d_max)
    return d_max * (1.0 + s) / (d_sens * (3.0 + s))


def _split(p_total: float, spec: GameSpec, method: Method, residual: float, strict: bool) -> Equilibrium:
    eff = spec.effective_ps
    valid = abs(eff) < 0.5 * p_total
    if strict and not valid:
        raise SidePaymentTooLarge(eff, 0.5 * p_total)
    p1 = 0.5 * p_total - eff
    p2 = 0.5 * p_total + eff
    d = demand(p_total, spec.demand)
    # margins are p_total / 2 by construction
    u1 = 0.5 * p_total * d - spec.fixed_cost_isp
    u2 = 0.5 * p_total * d
    return Equilibrium(p1, p2, p1 + p2, d, u1, u2, method, residual, valid)


def nash_linear(spec: GameSpec, strict: bool = True) -> Equilibrium:
    """Closed-form equilibrium for linear demand ``d_max - d_sens p``."""
    params = spec.demand
    if params.a != 0.0:
        raise UnsupportedModel(f"nash_linear needs linear demand (a = 0), got a={params.a:.6g}")
    third = params.d_max / (3.0 * params.d_sens)
    eff = spec.effective_ps
    valid = abs(eff) < third
    if strict and not valid:
        raise SidePaymentTooLarge(eff, third)
    p1 = third - eff
    p2 = third + eff
    u = params.d_max**2 / (9.0 * params.d_sens)
    resid = abs(foc_residual(2.0 * third, params))
    return Equilibrium(
        p1, p2, p1 + p2, params.d_max / 3.0, u - spec.fixed_cost_isp, u,
        Method.CLOSED_FORM_LINEAR, resid, valid,
    )


def nash_concave_closed(spec: GameSpec, strict: bool = True) -> Equilibrium:
    """Closed-form equilibrium for linear-congestion (concave) demand.

    With ``a = 0`` this is the linear game and defers to ``nash_linear``.
    """
    params = spec.demand
    if not params.has_closed_form:
        raise UnsupportedModel("no closed-form equilibrium for the M/M/1 congestion factor")
    if params.a == 0.0:
        return nash_linear(spec, strict)
    p_total = total_price_closed(params.d_max, params.d_sens, params.a)
    resid = abs(foc_residual(p_total, params))
    return _split(p_total, spec, Method.CLOSED_FORM_CONCAVE, resid, strict)


def default_foc_bracket(params: DemandParams) -> Bracket:
    return Bracket(1e-6 * params.p_max, (1.0 - 1e-6) * params.p_max)


def nash_numeric_foc(
    spec: GameSpec, bracket: Bracket | None = None, strict: bool = True
) -> Equilibrium:
    """Equilibrium from a root of the first-order condition; any ``g_kind``."""
    params = spec.demand
    br = default_foc_bracket(params) if bracket is None else bracket
    p_total = find_root(lambda p: foc_residual(p, params), br, FOC_TOL)
    resid = abs(foc_residual(p_total, params))
    return _split(p_total, spec, Method.NUMERIC_FOC, resid, strict)


class BestResponse(NamedTuple):
    price: float
    utility: float
    degenerate: bool


def best_response(player: int, p_other: float, spec: GameSpec) -> BestResponse:
    """Utility-maximizing own price against ``p_other``.

    The own price ranges over ``[max(0, -/+ s ps), p_max - p_other]`` so the
    player's margin is never negative.  Closed-form demands use a
    1000-interval lattice scan refined by golden section (compiled kernel);
    M/M/1 demand uses golden section directly, relying on concavity.
    ``utility`` is net of the ISP fixed cost.
    """
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player}")
    params = spec.demand
    if not 0.0 <= p_other <= params.p_max:
        raise PriceOutOfRange(f"p_other={p_other:.12g} outside [0, {params.p_max:.12g}]")
    is_isp = player == 1
    cost = spec.fixed_cost_isp if is_isp else 0.0
    eff = spec.effective_ps
    if params.has_closed_form:
        x, u, degenerate = kernels.best_response(
            is_isp, p_other, params.d_max, params.d_sens, params.a, eff,
            LATTICE_POINTS, BR_TOL.abs_tol, BR_TOL.max_iter,
        )
        return BestResponse(x, u - cost, degenerate)

    lo, hi = kernels.own_price_range(is_isp, p_other, params.d_max, params.d_sens, eff)
    if hi <= lo:
        u = utility_isp(lo, p_other, spec) if is_isp else utility_cp(p_other, lo, spec)
        return BestResponse(lo, u, True)
    if is_isp:
        f = lambda x: utility_isp(x, p_other, spec)  # noqa: E731
    else:
        f = lambda x: utility_cp(p_other, x, spec)  # noqa: E731
    best = maximize_1d(f, Bracket(lo, hi), BR_TOL)
    return BestResponse(best.argmax, best.value, best.degenerate)


@dataclass(frozen=True)
class Trajectory:
    points: tuple[tuple[float, float], ...]
    converged: bool
    sequential: bool = False

    @property
    def rounds(self) -> int:
        return len(self.points) - 1

    @property
    def final(self) -> tuple[float, float]:
        return self.points[-1]


def best_response_dynamics(
    spec: GameSpec,
    init: tuple[float, float],
    rounds: int,
    tol: float = 1e-9,
    sequential: bool = False,
) -> Trajectory:
    """Iterated best responses starting from ``init``.

    Both players update from the previous round's prices (Jacobi) unless
    ``sequential`` is set, in which case the CP answers the ISP's new price
    within the same round.  Iteration stops early once a round moves
    neither price by ``tol`` or more.  ``points[0]`` is ``init``.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    p1, p2 = init
    pm = spec.demand.p_max
    if not (0 <= p1 <= pm and 0 <= p2 <= pm):
        raise PriceOutOfRange(f"initial prices {init} outside [0, {pm:.12g}]")
    points = [(float(p1), float(p2))]
    converged = False
    for _ in range(rounds):
        q1 = best_response(1, p2, spec).price
        q2 = best_response(2, q1 if sequential else p1, spec).price
        converged = abs(q1 - p1) < tol and abs(q2 - p2) < tol
        p1, p2 = q1, q2
        points.append((p1, p2))
        if converged:
            break
    return Trajectory(tuple(points), converged, sequential)


@dataclass(frozen=True)
class PlayerCheck:
    max_gain: float
    best_deviation: float
    br_price: float
    br_gain: float


@dataclass(frozen=True)
class NashReport:
    passed: bool
    isp: PlayerCheck
    cp: PlayerCheck
    n_deviations: int
    gain_tol: float
    near_boundary: bool = False
    notes: list[str] = field(default_factory=list)


def verify_nash(
    eq: Equilibrium,
    spec: GameSpec,
    n_deviations: int = 1000,
    gain_tol: float = 1e-9,
    boundary_margin: float = 0.01,
) -> NashReport:
    """Check that no unilateral price deviation pays by more than ``gain_tol``.

    Each player is tested on ``n_deviations`` evenly spaced own prices over
    the feasible interval plus the computed best response.  The report
    flags ``near_boundary`` when the effective side payment is within
    ``boundary_margin`` (relative) of the validity limit ``p*/2``.
    """
    if not eq.valid_interior:
        raise ValueError("verify_nash needs an interior equilibrium")
    params = spec.demand
    eff = spec.effective_ps
    checks = []
    for player, own, other in ((1, eq.p1, eq.p2), (2, eq.p2, eq.p1)):
        is_isp = player == 1
        if params.has_closed_form:
            gain, x = kernels.max_deviation_gain(
                is_isp, own, other, params.d_max, params.d_sens, params.a, eff, n_deviations
            )
            u0 = kernels.utility(is_isp, own, other, params.d_max, params.d_sens, params.a, eff)
        else:
            gain, x, u0 = _deviation_scan(is_isp, own, other, spec, n_deviations)
        br = best_response(player, other, spec)
        br_gain = br.utility + (spec.fixed_cost_isp if is_isp else 0.0) - u0
        checks.append(PlayerCheck(gain, x, br.price, br_gain))

    notes = []
    for name, chk in zip(("ISP", "CP"), checks):
        worst = max(chk.max_gain, chk.br_gain)
        if worst > gain_tol:
            dev = chk.best_deviation if chk.max_gain >= chk.br_gain else chk.br_price
            notes.append(f"{name} gains {worst:.6g} by deviating to {dev:.12g}")
    passed = not notes
    limit = 0.5 * eq.p_total
    near = abs(eff) >= (1.0 - boundary_margin) * limit
    if near:
        notes.append(f"|effective side payment| {abs(eff):.6g} is near the limit {limit:.6g}")
    return NashReport(passed, checks[0], checks[1], n_deviations, gain_tol, near, notes)


def _deviation_scan(is_isp, own, other, spec, n):
    params = spec.demand
    eff = spec.effective_ps
    lo, hi = kernels.own_price_range(is_isp, other, params.d_max, params.d_sens, eff)

    def u(x):
        return (x + eff if is_isp else x - eff) * demand(x + other, params)

    u0 = u(own)
    if hi <= lo or n < 2:
        return 0.0, own, u0
    step = (hi - lo) / (n - 1)
    best_gain, best_x = -math.inf, own
    for k in range(n):
        x = lo + k * step
        g = u(x) - u0
        if g > best_gain:
            best_gain, best_x = g, x
    return best_gain, best_x, u0
