"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (or execute this
file).  Worker count for the simulation studies comes from
``LOCALMOTIF_THREADS`` (default: all CPUs).
"""

import itertools
import math
import os
import random
import time

import numpy as np
import pytest

from localmotif import bounds
from localmotif.bounds import BoundInputs
from localmotif.census import enumerate_subgraphs, theme_orders
from localmotif.detector import FILTERED, MOTIF, detect, is_redundant
from localmotif.graph import Pattern
from localmotif.nullmodel import BlockModel, er_model, expected_count, generate, lambda_u
from localmotif.simulate import (
    SimStudy,
    conditional_theme_moments,
    default_deleted_vertex,
    empirical_tail,
    mc_expected_count,
    preset_model,
)

import oracles
from graphs import FILTER_LEFT, FILTER_RIGHT, coreg_themes, theme_example_graph, planted_coregulation, random_graph

# tolerances, fixed up front
REPLICATES = 50_000
MIN_EXCEEDANCES = 100
RATIO_BAND = (0.02, 0.5)
N_CENSUS_GRAPHS = 50
MC_SIGMA = 3.0
LAMBDA_REPLICATES = 100_000
COUNT_REPLICATES = 10_000
REL_TOL = 1e-6
ROUND_TRIP_TOL = 1e-8
CONTINUITY_TOL = 1e-9
BRANCH_GRID = 1000
FP_GRAPHS = 100
FP_ALPHA = 1e-3

# mpmath values (see oracles.py)
DERIVED = {
    "poisson_tail(2,5)": (lambda: math.exp(bounds.poisson_upper_tail_log(2, 5)), 0.052653017343711157),
    "poisson_tail(1,1)": (lambda: math.exp(bounds.poisson_upper_tail_log(1, 1)), 0.63212055882855768),
    "chen_stein(1,3)": (lambda: bounds.chen_stein_bound(1, 3), 0.16060279414278839),
    "t_lambda(1)": (lambda: bounds.t_lambda(1), 1.6493515146204254),
    "h(1,3)": (lambda: bounds.h(1, 3), 0.39894228040143268),
    "local_bound(1,1)": (lambda: bounds.local_bound(BoundInputs(1, 1)), 0.67957045711476131),
    "local_bound(1,3)": (lambda: bounds.local_bound(BoundInputs(1, 3)), 0.031300663684467437),
    "g(1,3)": (lambda: bounds.g(1, 3), 3.4641159776842352),
    "g(0.05,e-1)": (lambda: bounds.g(0.05, math.e - 1), 0.05),
    "invert_g(0.05,0.05)": (lambda: bounds.invert_g(0.05, 0.05), math.e - 1),
    "global_pvalue(1.5,ln150)": (lambda: bounds.global_pvalue(1.5, math.log(150)), 0.01),
    "prop1(1,0.001,2)": (lambda: bounds.lower_bound_diag(BoundInputs(1, 2, lam2=0.001)), 0.27195555555555556),
    "tv(0.5,0.03125)": (lambda: bounds.tv_distance_bound(0.5, 0.03125), 0.03125),
    "tv(2,0.1)": (lambda: bounds.tv_distance_bound(2, 0.1), 0.05),
}

FFL = Pattern.parse("ffl")
BIFAN = Pattern.parse("bifan")


def workers():
    return int(os.environ.get("LOCALMOTIF_THREADS", os.cpu_count() or 1))


def sink(p):
    return p.class_of(default_deleted_vertex(p))


def class_key(pattern, vertex):
    canon = Pattern.from_code(pattern.code)
    return pattern.code, canon.vertex_class[pattern.to_canon[vertex]]


@pytest.fixture(scope="module")
def reference_studies():
    model = preset_model("reference")
    out = {}
    for seed, (name, p) in enumerate([("ffl", FFL), ("bifan", BIFAN)], start=1):
        start = time.perf_counter()
        out[name] = empirical_tail(SimStudy(model, p, sink(p), REPLICATES, master_seed=seed), workers=workers())
        out[name].elapsed = time.perf_counter() - start
    return out


def test_criterion_1_bound_validity(reference_studies, acceptance):
    parts, ok = [], True
    for name, res in reference_studies.items():
        bad = [r for r in res.rows if r.ci_lo > r.bound]
        raw = sum(r.empirical > r.bound for r in res.rows)
        ok &= not bad
        parts.append(f"{name}: {len(bad)} grid points with Wilson lower CI above the bound "
                     f"({raw} raw empirical > bound), {res.elapsed:.0f}s")
    assert acceptance(1, ok, f"{REPLICATES} replicates; " + "; ".join(parts))


def test_criterion_2_tightness_band(reference_studies, acceptance):
    lo, hi = RATIO_BAND
    parts, ok = [], True
    for name, res in reference_studies.items():
        rows = [r for r in res.rows if r.exceedances >= MIN_EXCEEDANCES]
        ratios = [r.ratio for r in rows]
        outside = [(round(r.t, 3), round(r.ratio, 3)) for r in rows if not lo <= r.ratio <= hi]
        ok &= bool(rows) and not outside
        all_ratios = [r.ratio for r in res.rows if r.exceedances > 0]
        parts.append(
            f"{name}: {len(rows)} points with >= {MIN_EXCEEDANCES} exceedances, ratio range "
            f"[{min(ratios, default=math.nan):.3f}, {max(ratios, default=math.nan):.3f}], "
            f"outside band {outside}; min ratio over all resolved points "
            f"{min(all_ratios, default=math.nan):.3f}"
        )
    assert acceptance(2, ok, f"band [{lo}, {hi}]; " + "; ".join(parts))


def test_criterion_3_census_oracle(acceptance):
    rng = random.Random(2024)
    checked = mismatches = 0
    for _ in range(N_CENSUS_GRAPHS):
        n = rng.randint(5, 12)
        g = random_graph(rng, n, rng.uniform(0.05, 0.4))
        for k in (3, 4, 5):
            checked += 1
            if enumerate_subgraphs(g, k) != oracles.brute_census(n, set(g.edges), k):
                mismatches += 1
    assert acceptance(3, mismatches == 0,
                      f"{N_CENSUS_GRAPHS} graphs x k in (3,4,5): {mismatches}/{checked} mismatches")


def _exact_model(rng, n, Q):
    from fractions import Fraction
    Z = list(range(Q)) + [rng.randrange(Q) for _ in range(n - Q)]
    rng.shuffle(Z)
    Pi = np.array([[Fraction(rng.randint(0, 20), 20) for _ in range(Q)] for _ in range(Q)], dtype=object)
    return BlockModel(np.array(Z), Pi)


def test_criterion_4_expectation_oracle(acceptance):
    rng = random.Random(7)
    exact_checks = exact_fail = 0
    for trial in range(12):
        k = 3 if trial % 2 == 0 else 4
        n = rng.randint(k + 1, 12 if k == 3 else 9)
        model = _exact_model(rng, n, rng.randint(1, 3))
        pats = [FFL, Pattern.parse("3cycle"), Pattern.parse("coreg")] if k == 3 else [
            BIFAN, Pattern.parse("4;0->1,1->2,2->3,3->0"), Pattern.parse("4;0->1,0->2,0->3,1->2")]
        Z, Pi = model.Z.tolist(), model.Pi.tolist()
        for p in pats:
            exact_checks += 1
            exact_fail += expected_count(model, p) != oracles.naive_expected_count(Z, Pi, k, p.edges)
            for cls in p.deletion_classes:
                emb = rng.sample(range(n), k - 1)
                exact_checks += 1
                got = lambda_u(model, emb, cls)
                ref = oracles.naive_lambda(Z, Pi, k, p.edges, cls.members, cls.subpattern.edges, emb)
                exact_fail += tuple(got) != ref
    ref_model = preset_model("reference")
    mc, mc_ok = [], True
    for seed, p in enumerate((FFL, BIFAN)):
        est = conditional_theme_moments(ref_model, p, sink(p), LAMBDA_REPLICATES, seed=seed)
        z = (est.mean - est.lam) / est.se
        mc_ok &= abs(z) <= MC_SIGMA
        mc.append(f"lambda_U[{p.literal}] analytic {est.lam:.5f} vs MC {est.mean:.5f} (z={z:+.2f})")
        sub = sink(p).subpattern
        mean, se = mc_expected_count(sub, ref_model, COUNT_REPLICATES, seed=10 + seed)
        analytic = float(expected_count(ref_model, sub))
        z = (mean - analytic) / se
        mc_ok &= abs(z) <= MC_SIGMA
        mc.append(f"E[N({sub.literal})] analytic {analytic:.3f} vs MC {mean:.3f} (z={z:+.2f})")
    ok = exact_fail == 0 and mc_ok
    assert acceptance(4, ok, f"exact: {exact_checks - exact_fail}/{exact_checks} equal; " + "; ".join(mc))


def test_criterion_5_structure_facts(acceptance):
    facts = {}
    facts["ffl classes = 3 singletons"] = [c.members for c in FFL.deletion_classes] == [(0,), (1,), (2,)]
    facts["bifan classes = {a,b},{c,d}"] = [c.members for c in BIFAN.deletion_classes] == [(0, 1), (2, 3)]
    g = theme_example_graph()
    coreg = Pattern.parse("coreg")
    occ3, occ4 = enumerate_subgraphs(g, 3), enumerate_subgraphs(g, 4)
    orders = {r.position.sets: r.order for r in theme_orders(g, coreg, coreg.class_of(2), occ3)}
    facts["example order 6"] = orders.get(((0, 1),)) == 6
    orders = {r.position.sets: r.order for r in theme_orders(g, BIFAN, BIFAN.class_of(2), occ4)}
    facts["example order 5"] = orders.get(((0, 1), (2,))) == 5
    tg = coreg_themes((38, 32, 18))
    recs = theme_orders(tg, coreg, coreg.class_of(2), enumerate_subgraphs(tg, 3))
    implied = sum(math.comb(r.order, 2) for r in recs)
    counted = len(enumerate_subgraphs(tg, 4).get(BIFAN.code, []))
    facts["1352 identity"] = (sorted((r.order for r in recs), reverse=True) == [38, 32, 18]
                              and implied == counted == 1352)
    failed = [k for k, v in facts.items() if not v]
    assert acceptance(5, not failed, f"{len(facts) - len(failed)}/{len(facts)} facts hold; failed {failed}")


def test_criterion_6_bound_battery(acceptance):
    problems = []
    for name, (fn, ref) in DERIVED.items():
        got = fn()
        if abs(got - ref) > REL_TOL * abs(ref):
            problems.append(f"{name}={got!r} vs {ref!r}")
    for lam in (0.01, 1, 100):
        for t in (0.1, 1, 10):
            back = bounds.invert_g(lam, bounds.g(lam, t))
            if abs(back - t) > ROUND_TRIP_TOL * t:
                problems.append(f"round trip ({lam},{t}) -> {back!r}")
    worst_jump = worst_branch = 0.0
    for lam in np.logspace(-3, 3, BRANCH_GRID):
        tl = bounds.t_lambda(lam)
        above, below = math.nextafter(tl, math.inf), math.nextafter(tl, 0)
        worst_jump = max(worst_jump, abs(bounds.g(lam, above) - bounds.g(lam, below)))
        for t in tl * np.array([1 + 1e-9, 1.001, 1.1, 2, 5, 50, 1e3]):
            diff = bounds.chen_stein_branch_log(lam, t) - bounds.concentration_bound_log(lam, t)
            worst_branch = max(worst_branch, diff)
    if worst_jump > CONTINUITY_TOL:
        problems.append(f"g jump {worst_jump:.2e} at t_lambda")
    if worst_branch > 0:
        problems.append(f"Chen-Stein branch above concentration branch by {worst_branch:.2e}")
    assert acceptance(6, not problems,
                      f"{len(DERIVED)} closed forms, 9 round trips, {BRANCH_GRID}-point branch grid; "
                      f"max jump {worst_jump:.1e}; problems {problems}")


def test_criterion_7_filtering(acceptance):
    ffl_sink = class_key(FFL, 2)
    left = is_redundant(FILTER_LEFT, FILTER_LEFT.class_of(0), {ffl_sink: MOTIF})
    right = is_redundant(FILTER_RIGHT, FILTER_RIGHT.class_of(0), {ffl_sink: MOTIF})
    left_ok = bool(left) and left[0].removed == (1,)
    right_ok = not right
    g = planted_coregulation()
    res = {r.key: r for r in detect(g, er_model(g), 4, 0.05)}
    coreg_sink = class_key(Pattern.parse("coreg"), 2)
    bifan_sink = res[class_key(BIFAN, 2)]
    pipeline_ok = (res[coreg_sink].status == MOTIF and bifan_sink.status == FILTERED
                   and (bifan_sink.witness.smaller_code, bifan_sink.witness.smaller_class) == coreg_sink)
    ok = left_ok and right_ok and pipeline_ok
    assert acceptance(7, ok, f"left pair filtered by A={{b}}: {left_ok}; right pair kept: {right_ok}; "
                             f"bifan filtered by co-regulation in pipeline: {pipeline_ok} "
                             f"(bifan p={bifan_sink.p_bound:.2e}, status {bifan_sink.status})")


def test_criterion_8_false_positive_audit(acceptance):
    n, p = 60, 0.05
    base = BlockModel(np.zeros(n, dtype=int), np.array([[p]]))
    pairs = declared = 0
    for seed in range(FP_GRAPHS):
        g = generate(base, seed)
        results = detect(g, er_model(g), 4, FP_ALPHA)
        pairs += len(results)
        declared += sum(r.status == MOTIF for r in results)
    budget = pairs * FP_ALPHA
    assert acceptance(8, declared <= budget,
                      f"{FP_GRAPHS} ER(n={n}, p={p}) graphs, {pairs} tested pairs, "
                      f"{declared} motif declarations vs budget {budget:.2f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
