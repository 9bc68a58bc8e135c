"""Pure-Python implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function; ``icngame.kernels`` picks
whichever is importable.  Demand here is always the closed form
``D~ / (1 + a D~)`` with ``D~ = d_max - d_sens * p`` clipped at zero, so the
utility kernels cover the linear (a = 0) and linear-congestion cases.
"""

import math

from .numerics import INV_PHI, Bracket, Tolerance, fixed_point

G_NONE = 0
G_LINEAR = 1
G_MM1 = 2

POLISH_STEP = 1e-5


def closed_demand(p, d_max, d_sens, a):
    dt = d_max - p * d_sens
    if dt <= 0.0:
        return 0.0
    return dt / (1.0 + a * dt)


def congestion_g(load, b, lam, kind):
    """Congestion factor at carried load, clipped to [0, 1]."""
    if kind == G_NONE or load <= 0.0:
        return 1.0
    if load >= b - lam:
        return 0.0
    if kind == G_LINEAR:
        g = (b - lam - load) / (b - lam)
    else:
        g = (1.0 - lam / (b - load)) / (1.0 - lam / b)
    return min(max(g, 0.0), 1.0)


def congestion_fixed_point(dtilde, b, lam, kappa, kind, omega, abs_tol, max_iter):
    """Solve D = g((1 - kappa) D) * dtilde for D in [0, dtilde]."""
    if dtilde <= 0.0:
        return 0.0
    if kind == G_NONE or kappa >= 1.0:
        return dtilde
    share = 1.0 - kappa

    def h(x):
        return dtilde * congestion_g(share * x, b, lam, kind)

    return fixed_point(
        h, 0.0, Bracket(0.0, dtilde), Tolerance(abs_tol, 0.0, max_iter), omega
    )


def utility(is_isp, p_own, p_other, d_max, d_sens, a, eff_ps):
    margin = p_own + eff_ps if is_isp else p_own - eff_ps
    return margin * closed_demand(p_own + p_other, d_max, d_sens, a)


def own_price_range(is_isp, p_other, d_max, d_sens, eff_ps):
    lo = max(0.0, -eff_ps if is_isp else eff_ps)
    hi = d_max / d_sens - p_other
    return lo, hi


def _golden(is_isp, p_other, d_max, d_sens, a, eff_ps, lo, hi, abs_tol, max_iter):
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1 = utility(is_isp, x1, p_other, d_max, d_sens, a, eff_ps)
    f2 = utility(is_isp, x2, p_other, d_max, d_sens, a, eff_ps)
    for _ in range(max_iter):
        if hi - lo <= abs_tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = utility(is_isp, x1, p_other, d_max, d_sens, a, eff_ps)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = utility(is_isp, x2, p_other, d_max, d_sens, a, eff_ps)
    xm = 0.5 * (lo + hi)
    fm = utility(is_isp, xm, p_other, d_max, d_sens, a, eff_ps)
    if f1 > fm and f1 >= f2:
        return x1, f1
    if f2 > fm:
        return x2, f2
    return xm, fm


def _polish(is_isp, p_other, d_max, d_sens, a, eff_ps, x, lo, hi):
    """One central-difference Newton step from a golden-section argmax.

    Golden section resolves the argmax only to ~sqrt(eps) relative; a
    parabola through points ``h`` apart is exact for quadratic utilities.
    """
    h = POLISH_STEP * (d_max / d_sens)
    if x - h < lo or x + h > hi:
        return x
    fm = utility(is_isp, x - h, p_other, d_max, d_sens, a, eff_ps)
    f0 = utility(is_isp, x, p_other, d_max, d_sens, a, eff_ps)
    fp = utility(is_isp, x + h, p_other, d_max, d_sens, a, eff_ps)
    curv = fp - 2.0 * f0 + fm
    if not curv < 0.0:
        return x
    x_new = x - 0.5 * h * (fp - fm) / curv
    if abs(x_new - x) > h or not lo <= x_new <= hi:
        return x
    return x_new


def best_response(is_isp, p_other, d_max, d_sens, a, eff_ps, n_lattice, abs_tol, max_iter):
    """Lattice scan over the own-price range, then golden refinement.

    Returns ``(price, gross_utility, degenerate)``; degenerate means the
    feasible own-price interval is empty or demand is zero throughout.
    """
    lo, hi = own_price_range(is_isp, p_other, d_max, d_sens, eff_ps)
    if hi <= lo:
        return lo, utility(is_isp, lo, p_other, d_max, d_sens, a, eff_ps), True
    step = (hi - lo) / n_lattice
    best_k = 0
    best_u = utility(is_isp, lo, p_other, d_max, d_sens, a, eff_ps)
    worst_u = best_u
    for k in range(1, n_lattice + 1):
        u = utility(is_isp, lo + k * step, p_other, d_max, d_sens, a, eff_ps)
        if u > best_u:
            best_k, best_u = k, u
        worst_u = min(worst_u, u)
    if best_u == worst_u:
        return lo, best_u, True
    x_best = lo + best_k * step
    left = max(lo, x_best - step)
    right = min(hi, x_best + step)
    x, u = _golden(is_isp, p_other, d_max, d_sens, a, eff_ps, left, right, abs_tol, max_iter)
    if u < best_u:
        x, u = x_best, best_u
    x = _polish(is_isp, p_other, d_max, d_sens, a, eff_ps, x, lo, hi)
    return x, utility(is_isp, x, p_other, d_max, d_sens, a, eff_ps), False


def brute_force_nash(d_max, d_sens, a, eff_ps, p1, p2, n_lattice, max_rounds, tol):
    """Simultaneous best-response iteration with lattice+golden responses.

    Returns ``(p1, p2, rounds, converged)``.
    """
    for r in range(1, max_rounds + 1):
        q1 = best_response(True, p2, d_max, d_sens, a, eff_ps, n_lattice, 1e-12, 200)[0]
        q2 = best_response(False, p1, d_max, d_sens, a, eff_ps, n_lattice, 1e-12, 200)[0]
        done = abs(q1 - p1) < tol and abs(q2 - p2) < tol
        p1, p2 = q1, q2
        if done:
            return p1, p2, r, True
    return p1, p2, max_rounds, False


def max_deviation_gain(is_isp, p_own, p_other, d_max, d_sens, a, eff_ps, n):
    """Largest utility gain over ``n`` uniform own-price deviations.

    Returns ``(gain, price)`` for the most profitable deviation.
    """
    lo, hi = own_price_range(is_isp, p_other, d_max, d_sens, eff_ps)
    u0 = utility(is_isp, p_own, p_other, d_max, d_sens, a, eff_ps)
    best_gain = -math.inf
    best_x = p_own
    if hi <= lo or n < 2:
        return 0.0, p_own
    step = (hi - lo) / (n - 1)
    for k in range(n):
        x = lo + k * step
        g = utility(is_isp, x, p_other, d_max, d_sens, a, eff_ps) - u0
        if g > best_gain:
            best_gain, best_x = g, x
    return best_gain, best_x
