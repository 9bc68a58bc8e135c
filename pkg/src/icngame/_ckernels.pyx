# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same API and results as ``_kernels_py``."""

from libc.math cimport fabs, sqrt, INFINITY

from icngame.errors import MaxIterExceeded

cdef double INV_PHI = (sqrt(5.0) - 1.0) / 2.0
cdef double POLISH_STEP = 1e-5

G_NONE = 0
G_LINEAR = 1
G_MM1 = 2


cdef inline double _demand(double p, double d_max, double d_sens, double a) nogil:
    cdef double dt = d_max - p * d_sens
    if dt <= 0.0:
        return 0.0
    return dt / (1.0 + a * dt)


cdef inline double _g(double load, double b, double lam, int kind) nogil:
    cdef double g
    if kind == 0 or load <= 0.0:
        return 1.0
    if load >= b - lam:
        return 0.0
    if kind == 1:
        g = (b - lam - load) / (b - lam)
    else:
        g = (1.0 - lam / (b - load)) / (1.0 - lam / b)
    if g < 0.0:
        return 0.0
    if g > 1.0:
        return 1.0
    return g


cdef inline double _utility(bint is_isp, double p_own, double p_other, double d_max,
                            double d_sens, double a, double eff_ps) nogil:
    cdef double margin = p_own + eff_ps if is_isp else p_own - eff_ps
    return margin * _demand(p_own + p_other, d_max, d_sens, a)


def closed_demand(double p, double d_max, double d_sens, double a):
    return _demand(p, d_max, d_sens, a)


def congestion_g(double load, double b, double lam, int kind):
    """Congestion factor at carried load, clipped to [0, 1]."""
    return _g(load, b, lam, kind)


cdef double _hp(double x, double dtilde, double share, double b, double lam, int kind) nogil:
    return dtilde * _g(share * x, b, lam, kind)


def congestion_fixed_point(double dtilde, double b, double lam, double kappa, int kind,
                           double omega, double abs_tol, int max_iter):
    """Solve D = g((1 - kappa) D) * dtilde for D in [0, dtilde]."""
    cdef double share, x, x_new, resid, r_new, lo, hi, flo, fhi, mid, fm, xs, fs
    cdef int it, stalls = 0
    if dtilde <= 0.0:
        return 0.0
    if kind == 0 or kappa >= 1.0:
        return dtilde
    if not (0.0 < omega <= 1.0):
        raise ValueError(f"omega must be in (0, 1], got {omega}")
    share = 1.0 - kappa
    x = 0.0
    resid = fabs(x - _hp(x, dtilde, share, b, lam, kind))
    for it in range(max_iter):
        if resid <= abs_tol:
            return x
        x_new = (1.0 - omega) * x + omega * _hp(x, dtilde, share, b, lam, kind)
        if x_new < 0.0:
            x_new = 0.0
        elif x_new > dtilde:
            x_new = dtilde
        r_new = fabs(x_new - _hp(x_new, dtilde, share, b, lam, kind))
        if r_new > 0.9 * resid:
            stalls += 1
        else:
            stalls = 0
        x = x_new
        resid = r_new
        if stalls >= 3:
            break
    if resid <= abs_tol:
        return x

    # safeguarded bisection on x - h(x), which is increasing
    lo = 0.0
    hi = dtilde
    flo = lo - _hp(lo, dtilde, share, b, lam, kind)
    fhi = hi - _hp(hi, dtilde, share, b, lam, kind)
    if fhi == 0.0:
        return hi
    for it in range(max(max_iter, 400)):
        xs = hi - fhi * (hi - lo) / (fhi - flo)
        if lo < xs < hi:
            fs = xs - _hp(xs, dtilde, share, b, lam, kind)
            if fabs(fs) <= abs_tol / 10.0:
                return xs
            if (fs < 0) == (flo < 0):
                lo = xs
                flo = fs
            else:
                hi = xs
                fhi = fs
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = mid - _hp(mid, dtilde, share, b, lam, kind)
        if fabs(fm) <= abs_tol / 10.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo = mid
            flo = fm
        else:
            hi = mid
            fhi = fm
        if hi - lo <= abs_tol / 10.0:
            break
    if fabs(flo) <= fabs(fhi):
        xs, fs = lo, flo
    else:
        xs, fs = hi, fhi
    # a jump in g (M/M/1 with lam = 0) can leave no fixed point at all
    if fabs(fs) > 10.0 * abs_tol and dtilde > abs_tol:
        raise MaxIterExceeded(f"fixed_point: residual {fabs(fs):.3g} at {xs:.12g}")
    return xs


def utility(bint is_isp, double p_own, double p_other, double d_max, double d_sens,
            double a, double eff_ps):
    return _utility(is_isp, p_own, p_other, d_max, d_sens, a, eff_ps)


def own_price_range(bint is_isp, double p_other, double d_max, double d_sens, double eff_ps):
    cdef double lo = -eff_ps if is_isp else eff_ps
    if lo < 0.0:
        lo = 0.0
    return lo, d_max / d_sens - p_other


cdef void _golden(bint is_isp, double p_other, double d_max, double d_sens, double a,
                  double eff_ps, double lo, double hi, double abs_tol, int max_iter,
                  double* x_out, double* f_out) nogil:
    cdef double x1 = hi - INV_PHI * (hi - lo)
    cdef double x2 = lo + INV_PHI * (hi - lo)
    cdef double f1 = _utility(is_isp, x1, p_other, d_max, d_sens, a, eff_ps)
    cdef double f2 = _utility(is_isp, x2, p_other, d_max, d_sens, a, eff_ps)
    cdef double xm, fm
    cdef int it
    for it in range(max_iter):
        if hi - lo <= abs_tol:
            break
        if f1 >= f2:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = _utility(is_isp, x1, p_other, d_max, d_sens, a, eff_ps)
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = _utility(is_isp, x2, p_other, d_max, d_sens, a, eff_ps)
    xm = 0.5 * (lo + hi)
    fm = _utility(is_isp, xm, p_other, d_max, d_sens, a, eff_ps)
    if f1 > fm and f1 >= f2:
        x_out[0] = x1
        f_out[0] = f1
    elif f2 > fm:
        x_out[0] = x2
        f_out[0] = f2
    else:
        x_out[0] = xm
        f_out[0] = fm


cdef double _polish(bint is_isp, double p_other, double d_max, double d_sens, double a,
                    double eff_ps, double x, double lo, double hi) nogil:
    cdef double h = POLISH_STEP * (d_max / d_sens)
    cdef double fm, f0, fp, curv, x_new
    if x - h < lo or x + h > hi:
        return x
    fm = _utility(is_isp, x - h, p_other, d_max, d_sens, a, eff_ps)
    f0 = _utility(is_isp, x, p_other, d_max, d_sens, a, eff_ps)
    fp = _utility(is_isp, x + h, p_other, d_max, d_sens, a, eff_ps)
    curv = fp - 2.0 * f0 + fm
    if not curv < 0.0:
        return x
    x_new = x - 0.5 * h * (fp - fm) / curv
    if fabs(x_new - x) > h or not (lo <= x_new <= hi):
        return x
    return x_new


cdef int _best_response(bint is_isp, double p_other, double d_max, double d_sens, double a,
                        double eff_ps, int n_lattice, double abs_tol, int max_iter,
                        double* x_out, double* f_out) nogil:
    """Returns 1 when degenerate."""
    cdef double lo = -eff_ps if is_isp else eff_ps
    cdef double hi = d_max / d_sens - p_other
    cdef double step, u, best_u, worst_u, x_best, left, right, x, fx
    cdef int k, best_k = 0
    if lo < 0.0:
        lo = 0.0
    if hi <= lo:
        x_out[0] = lo
        f_out[0] = _utility(is_isp, lo, p_other, d_max, d_sens, a, eff_ps)
        return 1
    step = (hi - lo) / n_lattice
    best_u = _utility(is_isp, lo, p_other, d_max, d_sens, a, eff_ps)
    worst_u = best_u
    for k in range(1, n_lattice + 1):
        u = _utility(is_isp, lo + k * step, p_other, d_max, d_sens, a, eff_ps)
        if u > best_u:
            best_k = k
            best_u = u
        if u < worst_u:
            worst_u = u
    if best_u == worst_u:
        x_out[0] = lo
        f_out[0] = best_u
        return 1
    x_best = lo + best_k * step
    left = x_best - step
    if left < lo:
        left = lo
    right = x_best + step
    if right > hi:
        right = hi
    _golden(is_isp, p_other, d_max, d_sens, a, eff_ps, left, right, abs_tol, max_iter, &x, &fx)
    if fx < best_u:
        x = x_best
    x = _polish(is_isp, p_other, d_max, d_sens, a, eff_ps, x, lo, hi)
    x_out[0] = x
    f_out[0] = _utility(is_isp, x, p_other, d_max, d_sens, a, eff_ps)
    return 0


def best_response(bint is_isp, double p_other, double d_max, double d_sens, double a,
                  double eff_ps, int n_lattice, double abs_tol, int max_iter):
    """Lattice scan over the own-price range, then golden refinement.

    Returns ``(price, gross_utility, degenerate)``.
    """
    cdef double x, fx
    cdef int degenerate = _best_response(is_isp, p_other, d_max, d_sens, a, eff_ps,
                                         n_lattice, abs_tol, max_iter, &x, &fx)
    return x, fx, bool(degenerate)


def brute_force_nash(double d_max, double d_sens, double a, double eff_ps, double p1,
                     double p2, int n_lattice, int max_rounds, double tol):
    """Simultaneous best-response iteration; returns (p1, p2, rounds, converged)."""
    cdef double q1, q2, f
    cdef int r
    cdef bint done
    for r in range(1, max_rounds + 1):
        _best_response(True, p2, d_max, d_sens, a, eff_ps, n_lattice, 1e-12, 200, &q1, &f)
        _best_response(False, p1, d_max, d_sens, a, eff_ps, n_lattice, 1e-12, 200, &q2, &f)
        done = fabs(q1 - p1) < tol and fabs(q2 - p2) < tol
        p1 = q1
        p2 = q2
        if done:
            return p1, p2, r, True
    return p1, p2, max_rounds, False


def max_deviation_gain(bint is_isp, double p_own, double p_other, double d_max,
                       double d_sens, double a, double eff_ps, int n):
    """Largest utility gain over ``n`` uniform own-price deviations."""
    cdef double lo = -eff_ps if is_isp else eff_ps
    cdef double hi = d_max / d_sens - p_other
    cdef double u0, step, x, g, best_gain = -INFINITY, best_x = p_own
    cdef int k
    if lo < 0.0:
        lo = 0.0
    if hi <= lo or n < 2:
        return 0.0, p_own
    u0 = _utility(is_isp, p_own, p_other, d_max, d_sens, a, eff_ps)
    step = (hi - lo) / (n - 1)
    for k in range(n):
        x = lo + k * step
        g = _utility(is_isp, x, p_other, d_max, d_sens, a, eff_ps) - u0
        if g > best_gain:
            best_gain = g
            best_x = x
    return best_gain, best_x
