"""System model: jobs, files, toy map/reduce functions, placements and loads.

Node and file indices are 1-based throughout. Every load is returned as a
:class:`fractions.Fraction`; no floating point enters a load computation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

from .bits import Bits

SEED_LIMIT = 1 << 64


class IvaId(NamedTuple):
    """Identity of the intermediate value ``v_{target,file}``."""

    target: int
    file: int


@dataclass(frozen=True)
class JobSpec:
    K: int
    N: int
    F: int
    T: int
    B: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError(f"need at least 2 nodes, got K={self.K}")
        for name in ("N", "F", "T", "B"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


def _prf(tag: bytes, seed: int, fields: Iterable[int], data: bytes, nbits: int) -> Bits:
    h = hashlib.shake_256()
    h.update(tag)
    h.update(seed.to_bytes(8, "big"))
    for value in fields:
        h.update(value.to_bytes(8, "big"))
    h.update(len(data).to_bytes(8, "big"))
    h.update(data)
    return Bits.from_bytes(h.digest((nbits + 7) // 8), nbits)


def generate_files(spec: JobSpec) -> list[Bits]:
    """Deterministic pseudorandom corpus ``w_1..w_N`` of ``F`` bits each."""
    return [_prf(b"cdclab/file", spec.seed, (spec.F, n), b"", spec.F) for n in range(1, spec.N + 1)]


def _check_node(spec: JobSpec, k: int) -> None:
    if not 1 <= k <= spec.K:
        raise ValueError(f"node {k} outside 1..{spec.K}")


def map_iva(spec: JobSpec, k: int, n: int, w_n: Bits) -> Bits:
    """Toy map function ``g_{k,n}``: a keyed PRF of the file, cut to ``T`` bits."""
    _check_node(spec, k)
    if not 1 <= n <= spec.N:
        raise ValueError(f"file {n} outside 1..{spec.N}")
    if len(w_n) != spec.F:
        raise ValueError(f"file {n} has {len(w_n)} bits, expected F={spec.F}")
    return _prf(b"cdclab/map", spec.seed, (k, n, spec.F), w_n.to_bytes(), spec.T)


def reduce_output(spec: JobSpec, k: int, ivas: list[Bits]) -> Bits:
    """Toy reduce function ``h_k``: keyed hash of the ordered IVAs, ``B`` bits long."""
    _check_node(spec, k)
    if len(ivas) != spec.N:
        raise ValueError(f"reduce at node {k} needs {spec.N} IVAs, got {len(ivas)}")
    for n, v in enumerate(ivas, start=1):
        if len(v) != spec.T:
            raise ValueError(f"IVA ({k},{n}) has {len(v)} bits, expected T={spec.T}")
    return _prf(b"cdclab/reduce", spec.seed, (k, spec.T), Bits.concat(ivas).to_bytes(), spec.B)


def centralized_outputs(spec: JobSpec, files: list[Bits]) -> dict[int, Bits]:
    """Single-machine evaluation of every output ``u_k``; the correctness oracle."""
    return {
        k: reduce_output(spec, k, [map_iva(spec, k, n, w) for n, w in enumerate(files, start=1)])
        for k in range(1, spec.K + 1)
    }


@dataclass(frozen=True)
class Placement:
    """Files stored at each node: ``stored[k]`` is ``M_k``."""

    stored: Mapping[int, frozenset[int]]

    @classmethod
    def from_lists(cls, stored: Mapping[int, Iterable[int]]) -> Placement:
        return cls({k: frozenset(files) for k, files in stored.items()})

    @property
    def K(self) -> int:
        return len(self.stored)

    def validate(self, N: int) -> None:
        if sorted(self.stored) != list(range(1, self.K + 1)):
            raise ValueError(f"placement nodes must be 1..K, got {sorted(self.stored)}")
        for k, files in self.stored.items():
            bad = [n for n in files if not 1 <= n <= N]
            if bad:
                raise ValueError(f"node {k} stores unknown files {sorted(bad)}")

    def holders(self, n: int) -> frozenset[int]:
        return frozenset(k for k, files in self.stored.items() if n in files)


@dataclass(frozen=True)
class ComputationAssignment:
    """``computed[k][n]`` is ``Lambda_{k,n}``, the targets node ``k`` maps from file ``n``.

    ``partial`` marks assignments that may leave IVAs uncomputed; these are
    allowed to exist (enumerations filter them) but never count as feasible.
    """

    computed: Mapping[int, Mapping[int, frozenset[int]]]
    partial: bool = False

    @classmethod
    def from_lists(
        cls, computed: Mapping[int, Mapping[int, Iterable[int]]], partial: bool = False
    ) -> ComputationAssignment:
        return cls({k: {n: frozenset(q) for n, q in per.items()} for k, per in computed.items()}, partial)

    def ivas_at(self, k: int) -> frozenset[IvaId]:
        """``C_k``: the distinct IVAs node ``k`` computes."""
        per = self.computed.get(k, {})
        return frozenset(IvaId(q, n) for n, targets in per.items() for q in targets)

    def computers(self) -> dict[IvaId, frozenset[int]]:
        """Map each computed IVA to the set of nodes computing it."""
        who: dict[IvaId, set[int]] = {}
        for k in self.computed:
            for iva in self.ivas_at(k):
                who.setdefault(iva, set()).add(k)
        return {iva: frozenset(nodes) for iva, nodes in who.items()}

    def missing(self, K: int, N: int) -> list[IvaId]:
        who = self.computers()
        return [IvaId(q, n) for q in range(1, K + 1) for n in range(1, N + 1) if IvaId(q, n) not in who]

    def is_feasible(self, K: int, N: int) -> bool:
        return not self.missing(K, N)

    def validate(self, placement: Placement, N: int) -> None:
        K = placement.K
        for k, per in self.computed.items():
            if not 1 <= k <= K:
                raise ValueError(f"assignment mentions node {k} outside 1..{K}")
            for n, targets in per.items():
                if n not in placement.stored[k]:
                    raise ValueError(f"node {k} maps file {n} without storing it")
                bad = [q for q in targets if not 1 <= q <= K]
                if bad:
                    raise ValueError(f"node {k} file {n}: targets {sorted(bad)} outside 1..{K}")
        if not self.partial:
            missing = self.missing(K, N)
            if missing:
                raise ValueError(f"infeasible assignment: {len(missing)} IVAs never computed, e.g. {missing[0]}")


@dataclass(frozen=True)
class LoadTriple:
    r: Fraction
    c: Fraction
    L: Fraction

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.r, self.c, self.L)


def storage_space(p: Placement, N: int) -> Fraction:
    return Fraction(sum(len(files) for files in p.stored.values()), N)


def computation_load(a: ComputationAssignment, N: int, K: int) -> Fraction:
    return Fraction(sum(len(a.ivas_at(k)) for k in a.computed), N * K)


def communication_load(total_bits: int, N: int, K: int, T: int) -> Fraction:
    if total_bits < 0:
        raise ValueError(f"negative bit count {total_bits}")
    return Fraction(total_bits, N * K * T)


def run_map_phase(
    spec: JobSpec, files: list[Bits], placement: Placement, assignment: ComputationAssignment
) -> dict[int, dict[IvaId, Bits]]:
    """Evaluate ``C_k`` at every node using only locally stored files."""
    out: dict[int, dict[IvaId, Bits]] = {k: {} for k in range(1, spec.K + 1)}
    for k, per in assignment.computed.items():
        for n, targets in per.items():
            if n not in placement.stored[k]:
                raise ValueError(f"node {k} maps file {n} without storing it")
            for q in targets:
                out[k][IvaId(q, n)] = map_iva(spec, q, n, files[n - 1])
    return out
