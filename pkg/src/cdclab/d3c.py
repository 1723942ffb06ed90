"""D3C scheme (M-CDC when ``g == r``): placement, assignment, coded shuffle.

Files are grouped into batches indexed by nested node sets ``T <= S`` with
``|S| = r`` and ``|T| = g``. Every node of ``S`` stores the batch and maps
its own IVAs from it; only nodes of ``T`` map the IVAs wanted by nodes
outside ``S``. In the shuffle, each multicast group ``J <= I`` with
``|I| = r + 1`` and ``|J| = g + 1`` exchanges one XOR-coded signal per
member of ``J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .bits import Bits
from .model import (
    ComputationAssignment,
    IvaId,
    JobSpec,
    LoadTriple,
    Placement,
    centralized_outputs,
    communication_load,
    computation_load,
    generate_files,
    map_iva,
    reduce_output,
    run_map_phase,
    storage_space,
)
from .tradeoff import c_at


class SchemeError(ValueError):
    pass


class DecodeError(RuntimeError):
    pass


class DecodeMismatch(RuntimeError):
    def __init__(self, iva: IvaId):
        super().__init__(f"node {iva.target} decoded a wrong value for IVA v_{{{iva.target},{iva.file}}}")
        self.iva = iva


class BatchId(NamedTuple):
    S: tuple[int, ...]
    T: tuple[int, ...]


class MulticastGroup(NamedTuple):
    I: tuple[int, ...]
    J: tuple[int, ...]


class Segment(NamedTuple):
    """Piece ``index`` of ``count`` of the block ``v_{target,n}`` for ``n`` in ``files``."""

    target: int
    files: tuple[int, ...]
    index: int
    count: int

    def bit_length(self, T: int) -> int:
        return len(self.files) * T // self.count

    def ivas(self) -> list[IvaId]:
        return [IvaId(self.target, n) for n in self.files]


@dataclass(frozen=True)
class ShuffleSignal:
    sender: int
    group: MulticastGroup
    constituents: tuple[Segment, ...]
    payload: Bits | None = None

    def bit_length(self, T: int) -> int:
        return self.constituents[0].bit_length(T)


def _check_params(K: int, r: int, g: int, eta: int) -> None:
    if any(not isinstance(x, int) for x in (K, r, g, eta)):
        raise SchemeError("K, r, g and eta must be integers")
    if not 1 <= g <= r < K:
        raise SchemeError(f"need 1 <= g <= r < K, got K={K}, r={r}, g={g}")
    if eta < 1:
        raise SchemeError(f"eta must be positive, got {eta}")


def batch_count(K: int, r: int, g: int) -> int:
    return math.comb(K, r) * math.comb(r, g)


@dataclass(frozen=True)
class SchemeInstance:
    K: int
    r: int
    g: int
    eta: int
    batch_files: Mapping[BatchId, tuple[int, ...]]
    placement: Placement
    assignment: ComputationAssignment

    @property
    def batches(self) -> list[BatchId]:
        return list(self.batch_files)

    @property
    def files(self) -> list[int]:
        return sorted(n for files in self.batch_files.values() for n in files)

    @property
    def N(self) -> int:
        return self.eta * len(self.batch_files)

    @cached_property
    def plan(self) -> list[ShuffleSignal]:
        return build_shuffle_plan(self)

    def analytic_loads(self) -> LoadTriple:
        return d3c_loads(self.K, self.r, self.g)


def d3c_loads(K: int, r: int, g: int) -> LoadTriple:
    """Corner-point loads ``(r, r/K + (1 - r/K) g, (K - r) / (g K))``."""
    return LoadTriple(Fraction(r), c_at(r, g, K), Fraction(K - r, g * K))


def build_scheme(K: int, r: int, g: int, eta: int = 1, first_file: int = 1) -> SchemeInstance:
    _check_params(K, r, g, eta)
    nodes = range(1, K + 1)
    batches = [BatchId(S, T) for S in combinations(nodes, r) for T in combinations(S, g)]
    batch_files = {
        b: tuple(range(first_file + i * eta, first_file + (i + 1) * eta)) for i, b in enumerate(batches)
    }
    stored: dict[int, set[int]] = {k: set() for k in nodes}
    computed: dict[int, dict[int, set[int]]] = {k: {} for k in nodes}
    for (S, T), files in batch_files.items():
        outside = [q for q in nodes if q not in S]
        for k in S:
            for n in files:
                stored[k].add(n)
                targets = computed[k].setdefault(n, set())
                targets.add(k)
                if k in T:
                    targets.update(outside)
    return SchemeInstance(
        K=K,
        r=r,
        g=g,
        eta=eta,
        batch_files=batch_files,
        placement=Placement.from_lists(stored),
        assignment=ComputationAssignment.from_lists(computed),
    )


def multicast_groups(K: int, r: int, g: int) -> list[MulticastGroup]:
    return [
        MulticastGroup(I, J) for I in combinations(range(1, K + 1), r + 1) for J in combinations(I, g + 1)
    ]


def build_shuffle_plan(scheme: SchemeInstance | SharedScheme) -> list[ShuffleSignal]:
    """Signals of the coded shuffle, without payloads.

    For node ``k`` of ``J`` the block it lacks from batch ``(I - {k}, J - {k})``
    is cut into ``g`` segments handed to ``J - {k}`` in ascending order; node
    ``j`` of ``J`` sends the XOR of the segments it was handed.
    """
    if isinstance(scheme, SharedScheme):
        return [sig for _, part in scheme.parts for sig in part.plan]
    signals = []
    for group in multicast_groups(scheme.K, scheme.r, scheme.g):
        assigned: dict[int, list[Segment]] = {j: [] for j in group.J}
        for k in group.J:
            rest = tuple(j for j in group.J if j != k)
            batch = BatchId(tuple(i for i in group.I if i != k), rest)
            files = scheme.batch_files[batch]
            for index, j in enumerate(rest):
                assigned[j].append(Segment(k, files, index, scheme.g))
        signals.extend(ShuffleSignal(j, group, tuple(assigned[j])) for j in group.J)
    return signals


def plan_bits(plan: Iterable[ShuffleSignal], T: int) -> int:
    return sum(sig.bit_length(T) for sig in plan)


def segment_bits(seg: Segment, known: Mapping[IvaId, Bits]) -> Bits:
    block = Bits.concat(known[iva] for iva in seg.ivas())
    return block.split(seg.count)[seg.index]


def encode_shuffle(
    plan: Sequence[ShuffleSignal], map_outputs: Mapping[int, Mapping[IvaId, Bits]]
) -> list[ShuffleSignal]:
    """Fill in payloads; each sender uses only the IVAs it computed itself."""
    out = []
    for sig in plan:
        known = map_outputs[sig.sender]
        try:
            parts = [segment_bits(seg, known) for seg in sig.constituents]
        except KeyError as exc:
            raise SchemeError(f"node {sig.sender} lacks IVA {exc.args[0]} for its signal") from None
        payload = parts[0]
        for part in parts[1:]:
            payload ^= part
        out.append(replace(sig, payload=payload))
    return out


def decode_shuffle(
    scheme: SchemeInstance | SharedScheme,
    k: int,
    received: Iterable[ShuffleSignal],
    local: Mapping[IvaId, Bits],
) -> dict[int, Bits]:
    """Restore ``V_k`` (file index -> ``v_{k,n}``) at node ``k``."""
    pieces: dict[tuple[tuple[int, ...], int], dict[int, Bits]] = {}
    for sig in received:
        if sig.sender == k:
            continue
        wanted = [seg for seg in sig.constituents if seg.target == k]
        if not wanted:
            continue
        if len(wanted) > 1:
            raise DecodeError(f"signal from node {sig.sender} carries {len(wanted)} unknowns for node {k}")
        if sig.payload is None:
            raise DecodeError(f"signal from node {sig.sender} in group {sig.group} has no payload")
        acc = sig.payload
        for seg in sig.constituents:
            if seg.target == k:
                continue
            try:
                acc ^= segment_bits(seg, local)
            except KeyError as exc:
                raise DecodeError(f"node {k} cannot cancel {exc.args[0]} in a signal from {sig.sender}") from None
        seg = wanted[0]
        pieces.setdefault((seg.files, seg.count), {})[seg.index] = acc

    restored: dict[int, Bits] = {}
    for (files, count), got in pieces.items():
        if len(got) != count:
            continue
        ivas = Bits.concat(got[i] for i in range(count)).split(len(files))
        restored.update(zip(files, ivas))

    out = {}
    for n in scheme.files:
        iva = IvaId(k, n)
        if iva in local:
            out[n] = local[iva]
        elif n in restored:
            out[n] = restored[n]
        else:
            raise DecodeError(f"node {k} cannot restore IVA v_{{{k},{n}}}")
    return out


@dataclass(frozen=True)
class SharedScheme:
    """Disjoint file ranges each served by its own D3C instance."""

    K: int
    parts: tuple[tuple[Fraction, SchemeInstance], ...]
    placement: Placement = field(init=False)
    assignment: ComputationAssignment = field(init=False)

    def __post_init__(self) -> None:
        stored: dict[int, set[int]] = {k: set() for k in range(1, self.K + 1)}
        computed: dict[int, dict[int, frozenset[int]]] = {k: {} for k in range(1, self.K + 1)}
        for _, part in self.parts:
            for k in stored:
                stored[k] |= part.placement.stored[k]
                computed[k].update(part.assignment.computed[k])
        object.__setattr__(self, "placement", Placement.from_lists(stored))
        object.__setattr__(self, "assignment", ComputationAssignment(computed))

    @property
    def N(self) -> int:
        return sum(part.N for _, part in self.parts)

    @property
    def files(self) -> list[int]:
        return list(range(1, self.N + 1))

    @cached_property
    def plan(self) -> list[ShuffleSignal]:
        return build_shuffle_plan(self)

    def analytic_loads(self) -> LoadTriple:
        """Alpha-weighted mean of the parts' corner loads."""
        loads = [(alpha, part.analytic_loads()) for alpha, part in self.parts]
        return LoadTriple(
            sum((a * t.r for a, t in loads), Fraction(0)),
            sum((a * t.c for a, t in loads), Fraction(0)),
            sum((a * t.L for a, t in loads), Fraction(0)),
        )


SharePoint = tuple[int, int, Union[Fraction, int, str]]


def share_schemes(K: int, *points: SharePoint) -> SharedScheme:
    """Time/memory sharing of D3C corners ``(r, g, alpha)``; alphas must sum to 1.

    Uses the smallest file count for which every part gets a whole number of
    batch rounds, so measured loads meet the weighted means exactly.
    """
    if not points:
        raise SchemeError("need at least one scheme to share")
    alphas = [Fraction(alpha) for _, _, alpha in points]
    if any(a < 0 for a in alphas) or sum(alphas) != 1:
        raise SchemeError(f"sharing weights must be non-negative and sum to 1, got {alphas}")
    for r, g, _ in points:
        _check_params(K, r, g, 1)
    q = math.lcm(*(a.denominator for a in alphas))
    rounds = 1
    for (r, g, _), a in zip(points, alphas):
        if a:
            share = a.numerator * (q // a.denominator)
            base = batch_count(K, r, g)
            rounds = math.lcm(rounds, base // math.gcd(share, base))
    N = q * rounds
    parts = []
    first = 1
    for (r, g, _), a in zip(points, alphas):
        if not a:
            continue
        files = a * N
        eta = files / batch_count(K, r, g)
        if eta.denominator != 1:
            raise SchemeError(f"part (r={r}, g={g}) cannot hold {files} files")
        part = build_scheme(K, r, g, int(eta), first_file=first)
        parts.append((a, part))
        first += part.N
    return SharedScheme(K, tuple(parts))


@dataclass
class SimulationResult:
    spec: JobSpec
    measured: LoadTriple
    total_bits: int
    signals: list[ShuffleSignal]
    outputs: dict[int, Bits]
    oracle: dict[int, Bits]
    mismatches: list[IvaId]

    @property
    def ok(self) -> bool:
        return not self.mismatches and self.outputs == self.oracle


def measured_loads(scheme: SchemeInstance | SharedScheme, total_bits: int, T: int) -> LoadTriple:
    return LoadTriple(
        storage_space(scheme.placement, scheme.N),
        computation_load(scheme.assignment, scheme.N, scheme.K),
        communication_load(total_bits, scheme.N, scheme.K, T),
    )


def reduce_phase(
    scheme: SchemeInstance | SharedScheme,
    spec: JobSpec,
    map_outputs: Mapping[int, Mapping[IvaId, Bits]],
    signals: Sequence[ShuffleSignal],
) -> tuple[dict[int, Bits], dict[int, dict[int, Bits]]]:
    """Decode at every node and reduce; returns outputs and the restored ``V_k``."""
    outputs, restored = {}, {}
    for k in range(1, scheme.K + 1):
        received = [sig for sig in signals if sig.sender != k]
        restored[k] = decode_shuffle(scheme, k, received, map_outputs[k])
        outputs[k] = reduce_output(spec, k, [restored[k][n] for n in range(1, spec.N + 1)])
    return outputs, restored


def simulate(
    scheme: SchemeInstance | SharedScheme,
    T: int,
    F: int = 64,
    B: int = 64,
    seed: int = 0,
    strict: bool = True,
) -> SimulationResult:
    """Run map, shuffle and reduce on generated files and check against the oracle.

    With ``strict`` a wrong restored IVA raises :class:`DecodeMismatch`.
    """
    g_values = [scheme.g] if isinstance(scheme, SchemeInstance) else [p.g for _, p in scheme.parts]
    for g in g_values:
        if T % g:
            raise SchemeError(f"T={T} is not divisible by g={g}")
    spec = JobSpec(K=scheme.K, N=scheme.N, F=F, T=T, B=B, seed=seed)
    files = generate_files(spec)
    map_outputs = run_map_phase(spec, files, scheme.placement, scheme.assignment)
    signals = encode_shuffle(scheme.plan, map_outputs)
    total_bits = sum(len(sig.payload) for sig in signals)
    outputs, restored = reduce_phase(scheme, spec, map_outputs, signals)

    mismatches = []
    for k, values in restored.items():
        for n, v in values.items():
            if v != map_iva(spec, k, n, files[n - 1]):
                mismatches.append(IvaId(k, n))
    if strict and mismatches:
        raise DecodeMismatch(mismatches[0])
    return SimulationResult(
        spec=spec,
        measured=measured_loads(scheme, total_bits, T),
        total_bits=total_bits,
        signals=signals,
        outputs=outputs,
        oracle=centralized_outputs(spec, files),
        mismatches=mismatches,
    )


def _segment_json(seg: Segment) -> dict:
    return {"target": seg.target, "files": list(seg.files), "segment": seg.index + 1, "of": seg.count}


def scheme_to_json(scheme: SchemeInstance, T: int | None = None) -> dict:
    """Golden-file layout; all indices 1-based, segments numbered from 1."""
    doc = {
        "K": scheme.K,
        "r": scheme.r,
        "g": scheme.g,
        "eta": scheme.eta,
        "N": scheme.N,
        "batches": [
            {"S": list(b.S), "T": list(b.T), "files": list(files)} for b, files in scheme.batch_files.items()
        ],
        "stored": {str(k): sorted(files) for k, files in sorted(scheme.placement.stored.items())},
        "computed": {
            str(k): sorted([iva.target, iva.file] for iva in scheme.assignment.ivas_at(k))
            for k in sorted(scheme.assignment.computed)
        },
        "signals": [],
    }
    for sig in scheme.plan:
        entry = {
            "sender": sig.sender,
            "I": list(sig.group.I),
            "J": list(sig.group.J),
            "constituents": [_segment_json(seg) for seg in sig.constituents],
        }
        if T is not None:
            entry["bits"] = sig.bit_length(T)
        doc["signals"].append(entry)
    return doc
