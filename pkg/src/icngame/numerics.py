"""Scalar numerical kernel: root finding, 1-D maximization, fixed points,
finite differences.

Everything here works on plain Python callables ``float -> float`` and is
free of shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import DomainError, MaxIterExceeded, NoSignChange

Func = Callable[[float], float]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not self.rel_tol >= 0:
            raise ValueError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")

    def width(self, x: float) -> float:
        return self.abs_tol + self.rel_tol * abs(x)


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


class Maximum(NamedTuple):
    argmax: float
    value: float
    degenerate: bool = False


def find_root(f: Func, bracket: Bracket, tol: Tolerance = DEFAULT_TOL) -> float:
    """Root of ``f`` inside ``bracket`` by safeguarded bisection.

    Every iteration first tries a secant step through the current bracket
    ends (kept only if it lands strictly inside), then bisects, so the
    bracket at least halves per iteration.
    """
    lo, hi = bracket.lo, bracket.hi
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(
            f"f({lo:.6g})={flo:.6g} and f({hi:.6g})={fhi:.6g} have the same sign"
        )

    for _ in range(tol.max_iter):
        # secant acceleration
        x = hi - fhi * (hi - lo) / (fhi - flo)
        if lo < x < hi:
            fx = f(x)
            if abs(fx) <= tol.abs_tol:
                return x
            if (fx < 0) == (flo < 0):
                lo, flo = x, fx
            else:
                hi, fhi = x, fx

        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # bracket is down to adjacent floats
            return lo if abs(flo) <= abs(fhi) else hi
        fm = f(mid)
        if abs(fm) <= tol.abs_tol:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo <= tol.width(mid):
            return lo if abs(flo) <= abs(fhi) else hi

    raise MaxIterExceeded(f"find_root: no convergence in {tol.max_iter} iterations")


def maximize_1d(f: Func, bracket: Bracket, tol: Tolerance = DEFAULT_TOL) -> Maximum:
    """Golden-section maximization of a unimodal ``f`` over ``bracket``.

    The bracket endpoints are evaluated too, so a maximum sitting on the
    boundary is returned exactly.  ``degenerate`` is set when every sampled
    value is the same (a flat function has no meaningful argmax).
    """
    a, b = bracket.lo, bracket.hi
    fa, fb = f(a), f(b)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    seen_lo = min(fa, fb, f1, f2)
    seen_hi = max(fa, fb, f1, f2)

    lo, hi = a, b
    for _ in range(tol.max_iter):
        if hi - lo <= tol.width(0.5 * (lo + hi)):
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
            seen_lo, seen_hi = min(seen_lo, f1), max(seen_hi, f1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
            seen_lo, seen_hi = min(seen_lo, f2), max(seen_hi, f2)
    else:
        raise MaxIterExceeded(
            f"maximize_1d: bracket still {hi - lo:.3g} wide after {tol.max_iter} iterations"
        )

    xm = 0.5 * (lo + hi)
    best = Maximum(xm, f(xm))
    for x, fx in ((a, fa), (b, fb), (x1, f1), (x2, f2)):
        if fx > best.value:
            best = Maximum(x, fx)
    flat = seen_hi - seen_lo <= tol.abs_tol * max(1.0, abs(seen_hi))
    return best._replace(degenerate=flat)


def fixed_point(
    h: Func,
    init: float,
    bracket: Bracket,
    tol: Tolerance = DEFAULT_TOL,
    omega: float = 0.5,
) -> float:
    """Solve ``x = max(h(x), 0)`` by damped iteration ``x <- (1-w)x + w h(x)``.

    Iterates are kept inside ``bracket``.  If the iteration stops
    contracting (oscillation or a slope too steep for the damping) the
    solve switches to ``find_root`` on ``x - h(x)`` over the bracket.
    """
    if not 0.0 < omega <= 1.0:
        raise ValueError(f"omega must be in (0, 1], got {omega}")

    def hp(x: float) -> float:
        return max(h(x), 0.0)

    x = min(max(init, bracket.lo), bracket.hi)
    resid = abs(x - hp(x))
    stalls = 0
    for _ in range(tol.max_iter):
        if resid <= tol.abs_tol:
            return x
        x_new = (1.0 - omega) * x + omega * hp(x)
        x_new = min(max(x_new, bracket.lo), bracket.hi)
        r_new = abs(x_new - hp(x_new))
        stalls = stalls + 1 if r_new > 0.9 * resid else 0
        x, resid = x_new, r_new
        if stalls >= 3:
            break
    if resid <= tol.abs_tol:
        return x

    def g(y: float) -> float:
        return y - hp(y)

    root_tol = Tolerance(tol.abs_tol / 10.0, 0.0, max(tol.max_iter, 400))
    root = find_root(g, bracket, root_tol)
    if abs(g(root)) > 10.0 * tol.abs_tol and bracket.width > tol.abs_tol:
        raise MaxIterExceeded(f"fixed_point: residual {abs(g(root)):.3g} at {root:.12g}")
    return root


def fd_step(x: float) -> float:
    return max(1e-5, 1e-5 * abs(x))


def fd_derivative(f: Func, x: float, order: int = 1, step: float | None = None) -> float:
    """Central finite difference of first or second order."""
    h = fd_step(x) if step is None else step
    if not h > 0:
        raise ValueError(f"step must be > 0, got {h}")
    try:
        if order == 1:
            return (f(x + h) - f(x - h)) / (2.0 * h)
        if order == 2:
            return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"f undefined on stencil around x={x:.12g}: {exc}") from exc
    raise ValueError(f"order must be 1 or 2, got {order}")
