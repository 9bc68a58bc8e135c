"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import csv
import io
import math
import random
import sys
import warnings

import numpy as np
import pytest

from icngame import kernels
from icngame.caching import CachingCostModel, PopularityDistribution, check_convexity, cost_of_kappa
from icngame.cli import main as cli_main
from icngame.cli import render
from icngame.demand import DemandParams, GKind, demand_closed_form, demand_fixed_point, tilde_demand
from icngame.equilibrium import GameSpec, nash_concave_closed, nash_linear, nash_numeric_foc, verify_nash
from icngame.market import Regime, ScenarioConfig, optimal_kappa, solve_scenario

# tolerances, as pinned by the acceptance criteria
C1_PRICE_TOL = 1e-5
C1_UTIL_RTOL = 1e-6
C2_P_TOL = 1e-8
C2_DEVIATIONS = 1000
C3_TOL = 1e-4
C4_SECOND_DIFF = 1e-8
C4_AGREE = 1e-8
C5_LINEAR_TOL = 1e-10
C6_UNIFORM_TOL = 1e-9
C7_REFINE_TOL = 1e-4
C7_GRID_TOL = 1e-3
C8_TOL = 1e-9
C9_TOL = 1e-12


def _line(number, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"


def criterion_1():
    rng = random.Random(20240101)
    worst_p = worst_u = 0.0
    for _ in range(50):
        d_max = rng.uniform(1, 100)
        d = rng.uniform(0.1, 5)
        bound = d_max / (3 * d)
        ps = rng.uniform(-1, 1) * bound * 0.999
        # lattice step 1e-3 * p_max, golden refinement inside the kernel
        p1, p2, _, converged = kernels.brute_force_nash(d_max, d, 0.0, ps, 0.0, 0.0, 1000, 500, 1e-10)
        ref = nash_linear(GameSpec(DemandParams(d_max, d, g_kind=GKind.NONE), ps))
        u_ref = d_max ** 2 / (9 * d)
        dem = max(d_max - d * (p1 + p2), 0.0)
        u1, u2 = (p1 + ps) * dem, (p2 - ps) * dem
        if not converged:
            worst_p = math.inf
        worst_p = max(worst_p, abs(p1 - ref.p1), abs(p2 - ref.p2))
        worst_u = max(worst_u, abs(u1 - u_ref) / u_ref, abs(u2 - u_ref) / u_ref)
    ok = worst_p <= C1_PRICE_TOL and worst_u <= C1_UTIL_RTOL
    return ok, f"50 cases, max |dp|={worst_p:.2e}, max rel dU={worst_u:.2e}"


def criterion_2():
    worst = 0.0
    failures = 0
    for a in (1e-6, 0.01, 0.1, 1, 10):
        for d_max in (1, 12, 100):
            for d in (0.5, 1, 2):
                spec = GameSpec(DemandParams.from_a(d_max, d, a))
                closed = nash_concave_closed(spec)
                numeric = nash_numeric_foc(spec)
                worst = max(worst, abs(closed.p_total - numeric.p_total))
                if not verify_nash(closed, spec, C2_DEVIATIONS).passed:
                    failures += 1
    ok = worst <= C2_P_TOL and failures == 0
    return ok, f"45 cases, max |dp*|={worst:.2e}, verify_nash failures={failures}"


def criterion_3():
    eq = nash_numeric_foc(GameSpec(DemandParams.from_a(12, 1, 1e-8)))
    err = abs(eq.p_total - 8.0)
    return err <= C3_TOL, f"p*={eq.p_total:.10f}, |p*-8|={err:.2e}"


def criterion_4():
    base = DemandParams(12, 1, 10, 4)
    prices = np.linspace(0, base.p_max, 20)
    worst_d2 = worst_r2 = -math.inf
    worst_d1 = -math.inf
    worst_agree = 0.0
    for kappa in (0.0, 0.25, 0.5, 0.75, 1.0):
        params = base.with_kappa(kappa)
        dem = np.array([demand_closed_form(float(p), params).value for p in prices])
        fp = np.array([demand_fixed_point(float(p), params).value for p in prices])
        worst_d1 = max(worst_d1, np.diff(dem).max())
        worst_d2 = max(worst_d2, np.diff(dem, 2).max())
        worst_r2 = max(worst_r2, np.diff(prices * dem, 2).max())
        worst_agree = max(worst_agree, np.abs(fp - dem).max())
    ok = (worst_d2 <= C4_SECOND_DIFF and worst_r2 <= C4_SECOND_DIFF
          and worst_d1 < 0 and worst_agree <= C4_AGREE)
    return ok, (f"max d2 D={worst_d2:.2e}, max d2 pD={worst_r2:.2e}, "
                f"max d1 D={worst_d1:.3f}, fixed point vs closed={worst_agree:.2e}")


def criterion_5():
    kappas = np.linspace(0, 1, 11)
    worst_drop = 0.0
    worst_linear = 0.0
    for kind in (GKind.LINEAR, GKind.MM1):
        base = DemandParams(12, 1, 10, 4, g_kind=kind)
        for p in np.linspace(0, base.p_max, 10):
            vals = [demand_fixed_point(float(p), base.with_kappa(float(k))).value for k in kappas]
            worst_drop = max(worst_drop, max(a - b for a, b in zip(vals, vals[1:])))
            worst_linear = max(worst_linear, abs(vals[-1] - tilde_demand(float(p), base)))
    ok = worst_drop <= 0 and worst_linear <= C5_LINEAR_TOL
    return ok, f"largest drop in kappa={worst_drop:.2e}, |D(kappa=1)-D~|={worst_linear:.2e}"


def criterion_6():
    dists = [PopularityDistribution.uniform(100)]
    dists += [PopularityDistribution.truncated_zipf(n, s) for s in (0.8, 1.0, 1.5) for n in (100, 1000)]
    failed = [repr(d) for d in dists if not check_convexity(CachingCostModel(d)).passed]
    model = CachingCostModel(dists[0])
    worst = max(abs(cost_of_kappa(float(k), model) - (1 - math.sqrt(1 - k)))
                for k in np.linspace(0, 1, 100))
    ok = not failed and worst <= C6_UNIFORM_TOL
    return ok, f"{len(dists)} distributions, convexity failures={failed or 0}, uniform max err={worst:.2e}"


def _brute_kappa(config, n=10_001):
    ks = np.linspace(0, 1, n)
    u = [solve_scenario(config, float(k)).u1 for k in ks]
    return float(ks[int(np.argmax(u))])


def criterion_7():
    demand = DemandParams(12, 1, 10, 4)
    uniform = PopularityDistribution.uniform(100)

    def icn(gamma, dist=uniform, params=demand):
        return ScenarioConfig(Regime.ICN, params, -1.0, CachingCostModel(dist, gamma))

    free = icn(0.0)
    u_lo, u_hi = solve_scenario(free, 0.0).u1, solve_scenario(free, 1.0).u1
    expensive = optimal_kappa(icn(demand.d_max ** 2 / (9 * demand.d_sens))).kappa_star

    cases = [icn(0.0), icn(6.0), icn(16.0),
             icn(8.0, PopularityDistribution.truncated_zipf(100, 1.0), DemandParams(12, 1, 6, 4))]
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for cfg in cases:
            star = optimal_kappa(cfg, C7_REFINE_TOL).kappa_star
            worst = max(worst, abs(star - _brute_kappa(cfg)))
    ok = u_hi >= u_lo and abs(expensive) <= C7_REFINE_TOL and worst <= C7_GRID_TOL
    return ok, (f"U1(1)={u_hi:.6f} >= U1(0)={u_lo:.6f}, kappa*(gamma=16)={expensive:.2e}, "
                f"max |kappa*-grid|={worst:.2e} over {len(cases)} configs")


def criterion_8():
    worst = 0.0
    demand = DemandParams(12, 1, 10, 4)
    cost = CachingCostModel(PopularityDistribution.uniform(100), 2.0)
    for kappa in (0.0, 0.3, 0.7, 1.0):
        ref = solve_scenario(ScenarioConfig(Regime.ICN, demand, 0.0, cost), kappa)
        bound = ref.p_total / 2
        for ps in np.linspace(-0.99 * bound, 0.0, 10):
            rec = solve_scenario(ScenarioConfig(Regime.ICN, demand, float(ps), cost), kappa)
            worst = max(worst, abs(rec.p_total - ref.p_total), abs(rec.demand - ref.demand),
                        abs((rec.u1 + rec.cache_cost) - (ref.u1 + ref.cache_cost)))
    return worst <= C8_TOL, f"4 kappas x 10 side payments, max change={worst:.2e}"


def _cli(argv):
    buf = io.StringIO()
    saved, sys.stdout = sys.stdout, buf
    try:
        code = cli_main(argv)
    finally:
        sys.stdout = saved
    return code, buf.getvalue()


def criterion_9():
    runs = [
        ["sweep", "--dmax", "12", "--d", "1", "--b", "10", "--lambda", "4", "--ps", "-1",
         "--gamma", "6", "--kgrid", "51", "--optimal"],
        ["nash", "--method", "closed", "--a", "1", "--dmax", "12", "--d", "1", "--ps", "0.5"],
        ["demand", "--dmax", "12", "--d", "1", "--b", "20", "--lambda", "2", "--g", "mm1", "--grid", "25"],
        ["br-dynamics", "--dmax", "12", "--d", "1", "--a", "1", "--init", "1,1"],
        ["caching-cost", "--popularity", "zipf", "--n-users", "1000", "--grid", "33"],
    ]
    identical = True
    worst = 0.0
    for argv in runs:
        (c1, out1), (c2, out2) = _cli(argv), _cli(argv)
        identical &= c1 == c2 == 0 and out1 == out2
        body = [ln for ln in out1.splitlines() if not ln.startswith("#")]
        reader = csv.DictReader(io.StringIO("\n".join(body)))
        rows = list(reader)
        parsed = [{k: _number(v) for k, v in r.items()} for r in rows]
        for got, raw in zip(parsed, rows):
            for k, v in got.items():
                if isinstance(v, float) and math.isfinite(v):
                    emitted = float(raw[k])
                    worst = max(worst, abs(v - emitted) / max(1.0, abs(emitted)))
        trailer = [ln[2:] for ln in out1.splitlines() if ln.startswith("# ")]
        identical &= render(parsed, reader.fieldnames, "csv", trailer) == out1
    ok = identical and worst <= C9_TOL
    return ok, f"{len(runs)} commands, byte-identical reruns and re-render={identical}, max parse err={worst:.1e}"


def _number(text):
    if text in ("true", "false"):
        return text == "true"
    try:
        return float(text)
    except ValueError:
        return text


CRITERIA = [
    (1, "linear equilibrium recovered by brute-force best responses", criterion_1),
    (2, "closed-form and numeric FOC agree; deviation check passes", criterion_2),
    (3, "small-curvature limit of the total price", criterion_3),
    (4, "demand and revenue concavity", criterion_4),
    (5, "demand nondecreasing in the caching factor", criterion_5),
    (6, "caching cost monotone and convex", criterion_6),
    (7, "ICN sweep sanity and optimal caching factor", criterion_7),
    (8, "side payment leaves totals unchanged", criterion_8),
    (9, "CLI determinism and CSV round trip", criterion_9),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print()
        print(_line(number, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for number, title, check in CRITERIA:
        ok, detail = check()
        print(_line(number, title, ok, detail))
        results.append(ok)
    sys.exit(0 if all(results) else 1)
