"""Acceptance gate: seven exact checks, one PASS/FAIL line each.

The lines are printed live under ``-s`` and collected in the terminal summary.
"""

import math
import random
from dataclasses import replace
from fractions import Fraction as Q
from itertools import product

import pytest

from cdclab.converse import (
    assemble,
    census,
    counting_bound,
    exhaustive_verify,
    file_configs,
    lemma3_check,
    lemma3_sweep,
    proof_identities,
    random_scheme,
    random_verify,
)
from cdclab.d3c import build_scheme, d3c_loads, encode_shuffle, reduce_phase, share_schemes, simulate
from cdclab.model import JobSpec, generate_files, run_map_phase
from cdclab.tradeoff import corner_points, optimal_load, rational_grid, storage_grid

pytestmark = pytest.mark.acceptance

CORNER_KS = (3, 4, 5, 6)


@pytest.fixture
def report(record_property):
    def emit(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
        print("\n" + line)
        record_property("acceptance", line)
        assert ok, detail

    return emit


def corner_instances():
    for K in CORNER_KS:
        for r in range(1, K):
            for g in range(1, r + 1):
                yield K, r, g


@pytest.fixture(scope="module")
def corner_runs():
    runs = {}
    for K, r, g in corner_instances():
        T = 8 * math.lcm(*range(1, r + 1))
        scheme = build_scheme(K, r, g)
        runs[K, r, g] = (scheme, simulate(scheme, T=T, strict=False))
    return runs


def test_corner_points_exact(corner_runs, report):
    bad = []
    for (K, r, g), (_, res) in corner_runs.items():
        expected = (Q(r), Q(r, K) + (1 - Q(r, K)) * g, Q(K - r, g * K))
        if res.measured.as_tuple() != expected or res.outputs != res.oracle or res.mismatches:
            bad.append((K, r, g))
    report(1, "corner loads and outputs exact", not bad, f"{len(corner_runs)} corners, failures {bad}")


def test_surface_k10(report):
    K = 10
    pts = [(p.c, p.L) for p in corner_points(2, K)]
    values = pts == [(1, Q(4, 5)), (Q(9, 5), Q(2, 5))]
    values &= all(optimal_load(5, c, K) == Q(1, 10) for c in rational_grid(Q(3), Q(5), Q(1, 10)))
    grid = Q(1, 10)
    convex = monotone = True
    for r in storage_grid(K, grid):
        cs = rational_grid(Q(1), Q(r), grid)
        loads = [optimal_load(r, c, K) for c in cs]
        monotone &= all(a >= b for a, b in zip(loads, loads[1:]))
        # equal spacing, so midpoint convexity is second differences >= 0
        convex &= all(a - 2 * b + c >= 0 for a, b, c in zip(loads, loads[1:], loads[2:]))
    for c in rational_grid(Q(1), Q(K - 1), grid):
        loads = [optimal_load(r, c, K) for r in storage_grid(K, grid) if r >= c]
        monotone &= all(a >= b for a, b in zip(loads, loads[1:]))
    ok = values and convex and monotone
    report(2, "K=10 surface values, convexity, monotonicity", ok, f"values={values} convex={convex} monotone={monotone}")


def test_sharing_attains_envelope(report):
    alphas = (Q(1, 4), Q(1, 3), Q(1, 2), Q(2, 3), Q(3, 4))
    cases = []
    for K in (4, 10):
        for r in range(2, min(K, 4)):
            for g in range(1, r):
                cases += [(K, (r, g, a), (r, g + 1, 1 - a)) for a in alphas]
        # across storage: the optimum-computation and optimum-communication mixes
        for r in range(1, min(K - 1, 4)):
            cases.append((K, (r, 1, Q(1, 2)), (r + 1, 1, Q(1, 2))))
            cases.append((K, (r, r, Q(1, 2)), (r + 1, r + 1, Q(1, 2))))
    bad = []
    for K, a, b in cases:
        sh = share_schemes(K, a, b)
        T = 8 * math.lcm(*range(1, max(a[0], b[0]) + 1))
        res = simulate(sh, T=T, strict=False)
        m = res.measured
        if not res.ok or m != sh.analytic_loads() or m.L != optimal_load(m.r, m.c, K):
            bad.append((K, a, b))
    sample = share_schemes(10, (2, 1, Q(1, 2)), (2, 2, Q(1, 2)))
    example = simulate(sample, T=16).measured.as_tuple() == (2, Q(7, 5), Q(3, 5))
    report(3, "sharing lands on the envelope", not bad and example, f"{len(cases)} mixes, failures {bad}")


def test_lemma3_properties(report):
    swept = violations = 0
    for N in (1, 2, 3):
        checked, v = lemma3_sweep(3, N)
        swept += checked
        violations += v
    # direct census of every assignment at K=3, N<=2, without the signature shortcut
    configs = list(file_configs(3))
    raw = raw_bad = 0
    for N in (1, 2):
        for combo in product(configs, repeat=N):
            p, a = assemble(3, combo)
            cen = census(p, a, N)
            r = Q(sum(len(m) for m in p.stored.values()), N)
            c = Q(sum(len(a.ivas_at(k)) for k in a.computed), N * 3)
            raw += 1
            if not lemma3_check(cen, r, c).ok or not all(proof_identities(cen, p, a).values()):
                raw_bad += 1
    rng = random.Random(20240601)
    samples, rand_bad = 10_000, 0
    for _ in range(samples):
        p, a = random_scheme(4, 2, rng)
        cen = census(p, a, 2)
        r = Q(sum(len(m) for m in p.stored.values()), 2)
        c = Q(sum(len(a.ivas_at(k)) for k in a.computed), 8)
        if not lemma3_check(cen, r, c).ok or not all(proof_identities(cen, p, a).values()):
            rand_bad += 1
    budgeted = random_verify(4, 2, 2, Q(3, 2), samples=samples, seed=1)
    ok = violations == raw_bad == rand_bad == 0 and budgeted.passed
    detail = (
        f"K=3 sweep {swept} censuses/{violations} bad, K=3 raw {raw}/{raw_bad} bad, "
        f"K=4 N=2 random {samples}/{rand_bad} bad, budgeted {budgeted.checked}/{budgeted.lemma3_violations} bad"
    )
    report(4, "storage and computation inequalities, partition identity", ok, detail)


def test_converse_chain_k3(report):
    parts, ok = [], True
    for r, c, g in [(1, Q(1), 1), (2, Q(4, 3), 2)]:
        rep = exhaustive_verify(3, 3, r, c)
        target = optimal_load(r, c, 3)
        d3c = build_scheme(3, r, g)
        assert d3c.N == 3
        tight = counting_bound(census(d3c.placement, d3c.assignment, d3c.N))
        within = d3c.analytic_loads().r <= r and d3c.analytic_loads().c <= c
        ok &= rep.passed and rep.analytic == target and rep.min_bound == target == tight and within
        parts.append(f"(r={r}, c={c}): min {rep.min_bound} over {rep.checked} vs {target}, D3C {tight}")
    report(5, "exhaustive converse at K=3, N=3", ok, "; ".join(parts))


def test_converse_meets_achievability(corner_runs, report):
    bad = []
    for key, (scheme, res) in corner_runs.items():
        bound = counting_bound(census(scheme.placement, scheme.assignment, scheme.N))
        if bound != res.measured.L or bound != d3c_loads(*key).L:
            bad.append(key)
    report(6, "counting bound of D3C equals measured L", not bad, f"{len(corner_runs)} corners, failures {bad}")


def test_fault_sensitivity(report):
    flips = missed = 0
    for r, g in [(2, 1), (3, 2)]:
        scheme = build_scheme(4, r, g)
        spec = JobSpec(K=4, N=scheme.N, F=32, T=4 * g, B=32, seed=3)
        local = run_map_phase(spec, generate_files(spec), scheme.placement, scheme.assignment)
        signals = encode_shuffle(scheme.plan, local)
        clean, _ = reduce_phase(scheme, spec, local, signals)
        for i, sig in enumerate(signals):
            for bit in range(len(sig.payload)):
                bad = list(signals)
                bad[i] = replace(sig, payload=sig.payload.flip(bit))
                dirty, _ = reduce_phase(scheme, spec, local, bad)
                flips += 1
                missed += dirty == clean
    report(7, "every single-bit flip changes an output", missed == 0, f"{flips} flips, {missed} unnoticed")
