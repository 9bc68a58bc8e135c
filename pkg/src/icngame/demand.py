"""Demand response to the total usage price ``p = p1 + p2``.

Price-only demand is linear, ``D~(p) = d_max - d_sens * p``.  Realized
demand solves ``D = [g((1 - kappa) D) D~(p)]+`` where ``g`` is a congestion
factor: linear ``(B - lam - L) / (B - lam)`` or the M/M/1-delay form
``(1 - lam / (B - L)) / (1 - lam / B)``, evaluated at the load ``L`` that
still crosses the CP link after caching a fraction ``kappa``.

For the linear factor the fixed point has the closed form
``D = (1 / D~ + a)^-1`` with ``a = (1 - kappa) / (B - lam)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from . import kernels
from .errors import CapacityExceeded, DomainError, PriceOutOfRange, UnsupportedModel
from .numerics import Tolerance


class GKind(str, enum.Enum):
    LINEAR = "linear"
    MM1 = "mm1"
    NONE = "none"


_KERNEL_KIND = {GKind.NONE: kernels.G_NONE, GKind.LINEAR: kernels.G_LINEAR, GKind.MM1: kernels.G_MM1}

# slack for prices assembled from sums like p1 + p2
_PRICE_SLACK = 1e-9

FIXED_POINT_TOL = Tolerance(abs_tol=1e-13, rel_tol=0.0, max_iter=200)


@dataclass(frozen=True)
class DemandParams:
    """Parameters of one demand-response curve.

    ``bandwidth_b`` may be ``inf`` (no congestion).  ``lambda_`` is the
    congestion offset, so ``bandwidth_b - lambda_`` is the usable headroom.
    """

    d_max: float
    d_sens: float
    bandwidth_b: float = math.inf
    lambda_: float = 0.0
    kappa: float = 0.0
    g_kind: GKind = GKind.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "g_kind", GKind(self.g_kind))
        if not self.d_max > 0:
            raise DomainError(f"d_max must be > 0, got {self.d_max}")
        if not self.d_sens > 0:
            raise DomainError(f"d_sens must be > 0, got {self.d_sens}")
        if not self.lambda_ >= 0:
            raise DomainError(f"lambda must be >= 0, got {self.lambda_}")
        if not self.bandwidth_b > self.lambda_:
            raise DomainError(
                f"bandwidth B={self.bandwidth_b} must exceed lambda={self.lambda_}"
            )
        if not 0.0 <= self.kappa <= 1.0:
            raise DomainError(f"kappa must be in [0, 1], got {self.kappa}")

    @classmethod
    def from_a(cls, d_max: float, d_sens: float, a: float, kappa: float = 0.0) -> DemandParams:
        """Linear-congestion demand with ``(1 - kappa) / (B - lam) = a``."""
        if not a >= 0:
            raise DomainError(f"a must be >= 0, got {a}")
        if a == 0:
            return cls(d_max, d_sens, kappa=kappa, g_kind=GKind.NONE)
        if kappa >= 1.0:
            raise DomainError("a > 0 is impossible with kappa = 1")
        return cls(d_max, d_sens, bandwidth_b=(1.0 - kappa) / a, kappa=kappa)

    @property
    def p_max(self) -> float:
        return self.d_max / self.d_sens

    @property
    def headroom(self) -> float:
        return self.bandwidth_b - self.lambda_

    @property
    def congested(self) -> bool:
        return self.g_kind is not GKind.NONE and math.isfinite(self.bandwidth_b)

    @property
    def a(self) -> float:
        if not self.congested:
            return 0.0
        # computed before any reciprocal so kappa = 1 gives exactly 0
        return (1.0 - self.kappa) / self.headroom

    @property
    def has_closed_form(self) -> bool:
        return self.g_kind is not GKind.MM1 or not self.congested

    @property
    def kernel_kind(self) -> int:
        return _KERNEL_KIND[self.g_kind] if self.congested else kernels.G_NONE

    def with_kappa(self, kappa: float) -> DemandParams:
        return replace(self, kappa=kappa)


@dataclass(frozen=True)
class DemandValue:
    value: float
    clamped: bool = False

    def __float__(self) -> float:
        return self.value


def _check_price(p: float, params: DemandParams) -> float:
    pm = params.p_max
    if p < 0 or p > pm * (1.0 + _PRICE_SLACK):
        raise PriceOutOfRange(f"price {p:.12g} outside [0, p_max={pm:.12g}]")
    return min(p, pm)


def tilde_demand(p: float, params: DemandParams) -> float:
    p = _check_price(p, params)
    return max(params.d_max - p * params.d_sens, 0.0)


def congestion_factor(dval: float, params: DemandParams) -> float:
    """``g_kappa(dval) = g((1 - kappa) dval)``, clipped to [0, 1]."""
    if dval < 0:
        raise DomainError(f"demand must be >= 0, got {dval}")
    if not params.congested:
        return 1.0
    load = (1.0 - params.kappa) * dval
    if load >= params.bandwidth_b:
        raise CapacityExceeded(f"load {load:.12g} >= capacity B={params.bandwidth_b:.12g}")
    return kernels.congestion_g(load, params.bandwidth_b, params.lambda_, params.kernel_kind)


def demand_fixed_point(
    p: float, params: DemandParams, tol: Tolerance = FIXED_POINT_TOL, omega: float = 0.5
) -> DemandValue:
    """Solve the congestion fixed point numerically (any ``g_kind``)."""
    dt = tilde_demand(p, params)
    if dt == 0.0:
        return DemandValue(0.0)
    d = kernels.congestion_fixed_point(
        dt,
        params.bandwidth_b,
        params.lambda_,
        params.kappa,
        params.kernel_kind,
        omega,
        tol.abs_tol,
        tol.max_iter,
    )
    # with g clipped at 0 only D = 0 can be the clamped branch
    return DemandValue(d, clamped=d <= 0.0)


def demand_closed_form(p: float, params: DemandParams) -> DemandValue:
    if not params.has_closed_form:
        raise UnsupportedModel("the M/M/1 congestion factor has no closed-form demand")
    dt = tilde_demand(p, params)
    if dt == 0.0:
        return DemandValue(0.0)
    # (1/D~ + a)^-1 without forming 1/D~
    return DemandValue(dt / (1.0 + params.a * dt))


def demand(p: float, params: DemandParams) -> float:
    """Realized demand, closed form when one exists."""
    if params.has_closed_form:
        return demand_closed_form(p, params).value
    return demand_fixed_point(p, params).value


def _mm1_slope(load: float, params: DemandParams) -> float:
    b, lam = params.bandwidth_b, params.lambda_
    if load >= b - lam:
        return 0.0
    return -(lam / (b - load) ** 2) / (1.0 - lam / b)


def demand_derivative(p: float, params: DemandParams) -> float:
    """dD/dp.

    Closed form ``-d_sens / (1 + a D~)^2`` for the linear factor; for M/M/1
    the implicit derivative of the fixed point,
    ``-d_sens g / (1 - D~ (1 - kappa) g'(L))``.
    """
    dt = tilde_demand(p, params)
    if params.has_closed_form:
        return -params.d_sens / (1.0 + params.a * dt) ** 2
    d = demand_fixed_point(p, params).value
    share = 1.0 - params.kappa
    load = share * d
    g = kernels.congestion_g(load, params.bandwidth_b, params.lambda_, params.kernel_kind)
    dg = share * _mm1_slope(load, params)
    return -params.d_sens * g / (1.0 - dt * dg)
