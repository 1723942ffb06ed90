"""Counting side of the converse: censuses, the storage and computation inequalities, the bound line, searches.

A census classifies every IVA ``v_{k,n}`` by who computes it: node ``k``
itself (``A_k``) or exactly ``j`` other nodes (``B_j``). The communication
load of any scheme is at least ``sum_j b_j / (N K j)``; combined with the
storage and computation budgets this yields the line ``lambda c + mu``.
"""

from __future__ import annotations

import math
import random
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from itertools import chain, combinations, product
from typing import Iterable, Sequence

from .model import ComputationAssignment, IvaId, Placement
from .tradeoff import Rational, c_at, c_star, corner_load

MAX_K = 4
MAX_N = 4
MAX_STATES = 2_000_000


class InfeasibleAssignment(ValueError):
    pass


class SearchTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AssignmentCensus:
    K: int
    N: int
    subset: tuple[int, ...]
    a: dict[int, int]
    b_fine: dict[tuple[int, int], int]
    b: dict[int, int]

    @property
    def is_global(self) -> bool:
        return self.subset == tuple(range(1, self.K + 1))

    @property
    def a_total(self) -> int:
        return sum(self.a.values())

    @property
    def b_total(self) -> int:
        return sum(self.b.values())


def census(p: Placement, a: ComputationAssignment, N: int, S: Iterable[int] | None = None) -> AssignmentCensus:
    """Count ``a_k`` and ``b_{S,j}^k`` for ``k`` in ``S`` (default: all nodes).

    ``b_{S,j}^k`` counts ``v_{k,n}`` computed by exactly ``j`` nodes, all of
    them in ``S - {k}``.
    """
    K = p.K
    p.validate(N)
    a.validate(p, N)
    missing = a.missing(K, N)
    if missing:
        raise InfeasibleAssignment(f"{len(missing)} IVAs are never computed, e.g. v_{{{missing[0].target},{missing[0].file}}}")
    subset = tuple(sorted(set(S))) if S is not None else tuple(range(1, K + 1))
    if not subset or not set(subset) <= set(range(1, K + 1)):
        raise ValueError(f"subset {subset} must be a nonempty subset of 1..{K}")
    members = frozenset(subset)
    who = a.computers()
    a_counts = {k: 0 for k in subset}
    b_fine = {(k, j): 0 for k in subset for j in range(1, len(subset))}
    for k in subset:
        for n in range(1, N + 1):
            nodes = who[IvaId(k, n)]
            if k in nodes:
                a_counts[k] += 1
            elif nodes <= members:
                b_fine[(k, len(nodes))] += 1
    b = {j: sum(b_fine[(k, j)] for k in subset) for j in range(1, len(subset))}
    return AssignmentCensus(K, N, subset, a_counts, b_fine, b)


def _require_global(c: AssignmentCensus) -> None:
    if not c.is_global:
        raise ValueError(f"need a census over all {c.K} nodes, got subset {c.subset}")


def counting_bound(c: AssignmentCensus) -> Fraction:
    """``sum_j b_j / (N K j)``, a lower bound on the communication load."""
    _require_global(c)
    return sum((Fraction(bj, c.N * c.K * j) for j, bj in c.b.items()), Fraction(0))


@dataclass(frozen=True)
class Lemma3Result:
    storage_slack: Fraction
    compute_slack: Fraction
    partition_ok: bool

    @property
    def ok(self) -> bool:
        return self.storage_slack >= 0 and self.compute_slack >= 0 and self.partition_ok


def _lemma3(N: int, K: int, a_total: int, b: dict[int, int], r_budget: Rational, c_budget: Rational) -> Lemma3Result:
    storage_slack = sum(b.values()) - N * (K - Fraction(r_budget))
    compute_slack = (Fraction(c_budget) - 1) * N * K - sum((j - 1) * bj for j, bj in b.items())
    return Lemma3Result(storage_slack, compute_slack, a_total + sum(b.values()) == N * K)


def lemma3_check(c: AssignmentCensus, r_budget: Rational, c_budget: Rational) -> Lemma3Result:
    """Slacks of ``sum b_j >= N(K - r)`` and ``sum (j-1) b_j <= (c - 1) N K``."""
    _require_global(c)
    return _lemma3(c.N, c.K, c.a_total, c.b, r_budget, c_budget)


def proof_identities(c: AssignmentCensus, p: Placement, a: ComputationAssignment) -> dict[str, bool]:
    """The three counting facts behind the storage and computation inequalities."""
    _require_global(c)
    stored = sum(len(m) for m in p.stored.values())
    computed = sum(len(a.ivas_at(k)) for k in a.computed)
    return {
        "partition": c.a_total + c.b_total == c.N * c.K,
        "storage": c.a_total <= stored,
        "compute": c.a_total + sum(j * bj for j, bj in c.b.items()) <= computed,
    }


@dataclass(frozen=True)
class BoundLine:
    g: Fraction
    g1: int
    g2: int
    c1: Fraction
    c2: Fraction
    lam: Fraction
    mu: Fraction

    def at(self, c: Rational) -> Fraction:
        return self.lam * Fraction(c) + self.mu


def bound_line(r: Rational, c: Rational, K: int) -> tuple[BoundLine, Fraction]:
    """Line through the two corner loads bracketing ``c``; returns it and its value at ``c``.

    When ``c`` sits exactly on a corner the bracket is that corner and the
    next one up, so the two anchor abscissas stay distinct.
    """
    r, c = Fraction(r), Fraction(c)
    top = c_star(r, K)
    if not 1 <= c <= top:
        raise ValueError(f"c={c} outside [1, c*(r)={top}]")
    g = (c - r / K) / (1 - r / K)
    g1 = math.floor(g)
    g2 = g1 + 1
    c1, c2 = c_at(r, g1, K), c_at(r, g2, K)
    L1, L2 = corner_load(r, c1, K), corner_load(r, c2, K)
    lam = (L2 - L1) / (c2 - c1)
    mu = L1 - lam * c1
    if lam != Fraction(1, g2) - Fraction(1, g1) or mu != c2 / g1 - c1 / g2:
        raise AssertionError(f"bound line at r={r}, c={c} disagrees with the closed form")
    if not lam < 0 < lam + mu:
        raise AssertionError(f"bound line at r={r}, c={c} violates lambda < 0 < lambda + mu")
    line = BoundLine(g, g1, g2, c1, c2, lam, mu)
    return line, line.at(c)


# -- searches ---------------------------------------------------------------

FileConfig = tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]


def _nonempty_subsets(items: Sequence[int]) -> list[tuple[int, ...]]:
    return list(chain.from_iterable(combinations(items, size) for size in range(1, len(items) + 1)))


def file_configs(K: int) -> Iterable[FileConfig]:
    """Every (holders, computers per target) choice for a single file.

    ``holders`` is the set of nodes storing the file; entry ``q - 1`` of the
    second tuple is the nonempty set of holders that compute ``v_{q,n}``.
    """
    for holders in _nonempty_subsets(range(1, K + 1)):
        options = _nonempty_subsets(holders)
        for computers in product(options, repeat=K):
            yield holders, computers


def config_signature(K: int, cfg: FileConfig) -> tuple[int, ...]:
    """Permutation-invariant census contribution of one file.

    Layout: ``(stored copies, computed IVAs, sum a, b_1, ..., b_{K-1})``.
    """
    holders, computers = cfg
    b = [0] * (K - 1)
    own = 0
    for q, nodes in enumerate(computers, start=1):
        if q in nodes:
            own += 1
        else:
            b[len(nodes) - 1] += 1
    return (len(holders), sum(len(nodes) for nodes in computers), own, *b)


def assemble(K: int, configs: Sequence[FileConfig]) -> tuple[Placement, ComputationAssignment]:
    """Turn per-file configurations (file ``i + 1`` gets ``configs[i]``) into model objects."""
    stored: dict[int, set[int]] = {k: set() for k in range(1, K + 1)}
    computed: dict[int, dict[int, set[int]]] = {k: {} for k in range(1, K + 1)}
    for n, (holders, computers) in enumerate(configs, start=1):
        for k in holders:
            stored[k].add(n)
            computed[k][n] = {q for q, nodes in enumerate(computers, start=1) if k in nodes}
    return Placement.from_lists(stored), ComputationAssignment.from_lists(computed)




@lru_cache(maxsize=None)
def signature_table(K: int) -> dict[tuple[int, ...], tuple[int, FileConfig]]:
    """Distinct single-file signatures with their multiplicity and a representative."""
    table: dict[tuple[int, ...], tuple[int, FileConfig]] = {}
    for cfg in file_configs(K):
        sig = config_signature(K, cfg)
        count, rep = table.get(sig, (0, cfg))
        table[sig] = (count + 1, rep)
    return table


@dataclass
class CensusSpace:
    """Every census reachable with ``N`` files, as aggregated signatures.

    ``layers[i]`` maps the signature of a prefix of ``i`` files to the number
    of (placement, assignment) choices producing it and one back pointer.
    Signatures forget node and file labels, which is exact here: every
    quantity checked depends only on them.
    """

    K: int
    N: int
    layers: list[dict[tuple[int, ...], tuple[int, tuple[tuple[int, ...], tuple[int, ...]] | None]]]

    @property
    def final(self) -> dict[tuple[int, ...], tuple[int, tuple | None]]:
        return self.layers[-1]

    @property
    def assignments_covered(self) -> int:
        return sum(count for count, _ in self.final.values())

    def witness(self, sig: tuple[int, ...]) -> tuple[Placement, ComputationAssignment]:
        table = signature_table(self.K)
        configs: list[FileConfig] = []
        for depth in range(self.N, 0, -1):
            prev, file_sig = self.layers[depth][sig][1]
            configs.append(table[file_sig][1])
            sig = prev
        configs.reverse()
        return assemble(self.K, configs)


def _check_search_size(K: int, N: int) -> None:
    if not 2 <= K <= MAX_K or not 1 <= N <= MAX_N:
        raise SearchTooLarge(f"exhaustive search is capped at K <= {MAX_K}, N <= {MAX_N}; got K={K}, N={N}")


def census_space(K: int, N: int, storage_cap: int | None = None, compute_cap: int | None = None) -> CensusSpace:
    """Sweep all feasible (placement, assignment) pairs file by file.

    ``storage_cap`` bounds total stored copies, ``compute_cap`` the total
    number of computed IVAs; both are pruned on prefixes since every file
    adds a non-negative amount.
    """
    _check_search_size(K, N)
    table = signature_table(K)
    zero = (0,) * (K + 2)
    layers = [{zero: (1, None)}]
    for _ in range(N):
        layer: dict = {}
        for prev, (count, _) in layers[-1].items():
            for file_sig, (mult, _) in table.items():
                sig = tuple(x + y for x, y in zip(prev, file_sig))
                if storage_cap is not None and sig[0] > storage_cap:
                    continue
                if compute_cap is not None and sig[1] > compute_cap:
                    continue
                if sig in layer:
                    layer[sig] = (layer[sig][0] + count * mult, layer[sig][1])
                else:
                    layer[sig] = (count * mult, (prev, file_sig))
        if len(layer) > MAX_STATES:
            raise SearchTooLarge(f"{len(layer)} census states exceed the cap of {MAX_STATES}")
        layers.append(layer)
    return CensusSpace(K, N, layers)


def signature_bound(K: int, N: int, sig: Sequence[int]) -> Fraction:
    return sum((Fraction(bj, N * K * j) for j, bj in enumerate(sig[3:], start=1)), Fraction(0))


def signature_lemma3(K: int, N: int, sig: Sequence[int], r_budget: Rational, c_budget: Rational) -> Lemma3Result:
    b = {j: bj for j, bj in enumerate(sig[3:], start=1)}
    return _lemma3(N, K, sig[2], b, r_budget, c_budget)


def analytic_bound(r: Rational, c: Rational, K: int) -> Fraction | None:
    """``lambda c + mu`` when the converse line applies (``c <= c*(r)``), else ``None``."""
    r, c = Fraction(r), Fraction(c)
    if not 1 <= r < K or not 1 <= c <= c_star(r, K):
        return None
    return bound_line(r, c, K)[1]


@dataclass
class VerifyReport:
    K: int
    N: int
    r_budget: Fraction
    c_budget: Fraction
    mode: str
    checked: int
    min_bound: Fraction | None
    argmin: tuple[Placement, ComputationAssignment] | None
    analytic: Fraction | None
    lemma3_violations: int = 0
    identity_violations: int = 0
    chain_violations: int = 0

    @property
    def slack(self) -> Fraction | None:
        if self.min_bound is None or self.analytic is None:
            return None
        return self.min_bound - self.analytic

    @property
    def passed(self) -> bool:
        if self.lemma3_violations or self.identity_violations or self.chain_violations:
            return False
        return self.slack is None or self.slack >= 0


def exhaustive_verify(K: int, N: int, r_budget: Rational, c_budget: Rational) -> VerifyReport:
    """Minimum counting bound over all feasible schemes within ``(r, c)`` budgets."""
    r_budget, c_budget = Fraction(r_budget), Fraction(c_budget)
    space = census_space(K, N, math.floor(r_budget * N), math.floor(c_budget * N * K))
    analytic = analytic_bound(r_budget, c_budget, K)
    best_sig, best = None, None
    lemma3_violations = chain_violations = 0
    for sig in space.final:
        bound = signature_bound(K, N, sig)
        if not signature_lemma3(K, N, sig, r_budget, c_budget).ok:
            lemma3_violations += 1
        if analytic is not None and bound < analytic:
            chain_violations += 1
        if best is None or bound < best or (bound == best and sig < best_sig):
            best_sig, best = sig, bound
    return VerifyReport(
        K=K,
        N=N,
        r_budget=r_budget,
        c_budget=c_budget,
        mode="exhaustive",
        checked=space.assignments_covered,
        min_bound=best,
        argmin=space.witness(best_sig) if best_sig is not None else None,
        analytic=analytic,
        lemma3_violations=lemma3_violations,
        chain_violations=chain_violations,
    )


def lemma3_sweep(K: int, N: int) -> tuple[int, int]:
    """Check both counting inequalities for every reachable census at its own tight budgets.

    Returns ``(censuses checked, violations)``.
    """
    space = census_space(K, N)
    violations = 0
    for sig in space.final:
        r = Fraction(sig[0], N)
        c = Fraction(sig[1], N * K)
        if not signature_lemma3(K, N, sig, r, c).ok:
            violations += 1
    return len(space.final), violations


def random_scheme(
    K: int,
    N: int,
    rng: random.Random,
    storage_cap: int | None = None,
    compute_cap: int | None = None,
    max_tries: int = 100_000,
) -> tuple[Placement, ComputationAssignment]:
    """Uniform per-file draws, rejected until both caps hold."""
    subsets = _nonempty_subsets(range(1, K + 1))
    for _ in range(max_tries):
        configs = []
        for _ in range(N):
            holders = rng.choice(subsets)
            options = _nonempty_subsets(holders)
            configs.append((holders, tuple(rng.choice(options) for _ in range(K))))
        stored = sum(len(h) for h, _ in configs)
        computed = sum(len(nodes) for _, comp in configs for nodes in comp)
        if storage_cap is not None and stored > storage_cap:
            continue
        if compute_cap is not None and computed > compute_cap:
            continue
        return assemble(K, configs)
    raise ValueError(f"no scheme within caps after {max_tries} draws")


def random_verify(
    K: int, N: int, r_budget: Rational, c_budget: Rational, samples: int = 10_000, seed: int = 0
) -> VerifyReport:
    """Census, counting inequalities, proof identities and bound chain on random feasible schemes."""
    r_budget, c_budget = Fraction(r_budget), Fraction(c_budget)
    rng = random.Random(seed)
    analytic = analytic_bound(r_budget, c_budget, K)
    storage_cap, compute_cap = math.floor(r_budget * N), math.floor(c_budget * N * K)
    best, argmin = None, None
    lemma3_violations = identity_violations = chain_violations = 0
    for _ in range(samples):
        p, a = random_scheme(K, N, rng, storage_cap, compute_cap)
        cen = census(p, a, N)
        if not lemma3_check(cen, r_budget, c_budget).ok:
            lemma3_violations += 1
        if not all(proof_identities(cen, p, a).values()):
            identity_violations += 1
        bound = counting_bound(cen)
        if analytic is not None and bound < analytic:
            chain_violations += 1
        if best is None or bound < best:
            best, argmin = bound, (p, a)
    return VerifyReport(
        K=K,
        N=N,
        r_budget=r_budget,
        c_budget=c_budget,
        mode="random",
        checked=samples,
        min_bound=best,
        argmin=argmin,
        analytic=analytic,
        lemma3_violations=lemma3_violations,
        identity_violations=identity_violations,
        chain_violations=chain_violations,
    )
