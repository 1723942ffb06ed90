"""Experiment configs, runners and CSV/JSON reporting behind the CLI."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Any, Iterable

from . import converse, d3c, tradeoff
from .model import LoadTriple

CSV_COLUMNS = ["K", "r", "c", "L", "kind", "region"]
FLOAT_COLUMNS = ["r_float", "c_float", "L_float"]
KIND_ORDER = {"surface": 0, "ocp": 1, "ocm": 2, "corner": 3, "measured": 4}


class ConfigError(ValueError):
    pass


def fmt(x: Fraction | int) -> str:
    """Reduced ``p/q``; the denominator is written even when it is 1."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(value: Any, name: str) -> Fraction:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a rational, got {value!r}")
    if isinstance(value, float):
        raise ConfigError(f"{name}: give rationals as 'p/q' strings, not floats ({value!r})")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: cannot parse {value!r} as a rational") from None


def parse_int(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    try:
        x = Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: expected an integer, got {value!r}") from None
    if x.denominator != 1:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return int(x)


def default_T(*gs: int) -> int:
    return 8 * math.lcm(*gs)


def loads_json(t: LoadTriple) -> dict[str, str]:
    return {"r": fmt(t.r), "c": fmt(t.c), "L": fmt(t.L)}


def slack_json(measured: LoadTriple, analytic: LoadTriple) -> dict[str, str]:
    return {
        "r": fmt(measured.r - analytic.r),
        "c": fmt(measured.c - analytic.c),
        "L": fmt(measured.L - analytic.L),
    }


# -- configs ----------------------------------------------------------------


def _build(cls, data: dict[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class SurfaceConfig:
    K: int = 10
    r_step: Fraction = Fraction(1, 10)
    c_step: Fraction = Fraction(1, 10)
    float_columns: bool = False

    def __post_init__(self) -> None:
        self.K = parse_int(self.K, "K")
        self.r_step = parse_rational(self.r_step, "r_step")
        self.c_step = parse_rational(self.c_step, "c_step")
        if self.K < 2:
            raise ConfigError(f"K must be at least 2, got {self.K}")
        if self.r_step <= 0 or self.c_step <= 0:
            raise ConfigError("grid steps must be positive")


@dataclass
class SimulateConfig:
    K: int
    r: int
    g: int
    eta: int = 1
    T: int | None = None
    F: int = 64
    B: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("K", "r", "g", "eta", "F", "B", "seed"):
            setattr(self, name, parse_int(getattr(self, name), name))
        if not 1 <= self.g <= self.r < self.K:
            raise ConfigError(f"need 1 <= g <= r < K, got K={self.K}, r={self.r}, g={self.g}")
        if self.eta < 1 or self.F < 1 or self.B < 1:
            raise ConfigError("eta, F and B must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must fit in 64 bits")
        self.T = default_T(*range(1, self.r + 1)) if self.T is None else parse_int(self.T, "T")
        if self.T < 1 or self.T % self.g:
            raise ConfigError(f"T={self.T} must be a positive multiple of g={self.g}")


@dataclass
class ShareConfig:
    K: int
    a: tuple[int, int]
    b: tuple[int, int]
    alpha: Fraction
    T: int | None = None
    F: int = 64
    B: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("K", "F", "B", "seed"):
            setattr(self, name, parse_int(getattr(self, name), name))
        self.a = self._corner(self.a, "a")
        self.b = self._corner(self.b, "b")
        self.alpha = parse_rational(self.alpha, "alpha")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.F < 1 or self.B < 1 or not 0 <= self.seed < 1 << 64:
            raise ConfigError("F and B must be positive and seed must fit in 64 bits")
        if self.T is None:
            self.T = default_T(*range(1, max(self.a[0], self.b[0]) + 1))
        self.T = parse_int(self.T, "T")
        if self.T < 1 or self.T % self.a[1] or self.T % self.b[1]:
            raise ConfigError(f"T={self.T} must be a positive multiple of both g values")

    def _corner(self, value: Any, name: str) -> tuple[int, int]:
        if isinstance(value, str):
            value = value.split(",")
        if isinstance(value, dict):
            value = (value.get("r"), value.get("g"))
        try:
            r, g = (parse_int(x, f"{name}.r/g") for x in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected 'r,g', got {value!r}") from None
        if not 1 <= g <= r < self.K:
            raise ConfigError(f"{name}: need 1 <= g <= r < K, got r={r}, g={g}")
        return r, g


@dataclass
class VerifyConfig:
    K: int
    N: int
    r: Fraction
    c: Fraction
    mode: str = "exhaustive"
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("K", "N", "samples", "seed"):
            setattr(self, name, parse_int(getattr(self, name), name))
        self.r = parse_rational(self.r, "r")
        self.c = parse_rational(self.c, "c")
        if self.mode not in ("exhaustive", "random"):
            raise ConfigError(f"mode must be 'exhaustive' or 'random', got {self.mode!r}")
        if self.K < 2 or self.N < 1 or self.samples < 1:
            raise ConfigError("need K >= 2, N >= 1 and samples >= 1")
        if not 1 <= self.c <= self.r < self.K:
            raise ConfigError(f"budgets must satisfy 1 <= c <= r < K, got r={self.r}, c={self.c}")
        if self.mode == "exhaustive" and (self.K > converse.MAX_K or self.N > converse.MAX_N):
            raise ConfigError(
                f"exhaustive search is capped at K <= {converse.MAX_K}, N <= {converse.MAX_N}"
            )


@dataclass
class ReportConfig:
    Ks: tuple[int, ...] = (3, 4, 5, 6)
    F: int = 64
    B: int = 64
    seed: int = 0
    float_columns: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.Ks, (int, str)):
            self.Ks = (self.Ks,)
        self.Ks = tuple(parse_int(k, "Ks") for k in self.Ks)
        if not self.Ks or min(self.Ks) < 2:
            raise ConfigError("Ks must list node counts >= 2")


CONFIGS = {
    "surface": SurfaceConfig,
    "simulate": SimulateConfig,
    "share": ShareConfig,
    "verify": VerifyConfig,
    "report": ReportConfig,
}


def make_config(command: str, data: dict[str, Any]):
    return _build(CONFIGS[command], data)


def config_json(cfg) -> dict[str, Any]:
    out = {}
    for key, value in asdict(cfg).items():
        if isinstance(value, Fraction):
            value = fmt(value)
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


# -- CSV ----------------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    K: int
    r: Fraction
    c: Fraction
    L: Fraction
    kind: str

    def region(self) -> str:
        return tradeoff.region(self.r, self.c, self.K)

    def sort_key(self) -> tuple:
        return (self.K, KIND_ORDER[self.kind], self.r, self.c, self.L)


def surface_rows(cfg: SurfaceConfig) -> list[Row]:
    K = cfg.K
    rows = [Row(K, p.r, p.c, p.L, "surface") for p in tradeoff.surface(K, cfg.r_step, cfg.c_step)]
    rows += [Row(K, p.r, p.c, p.L, "ocp") for p in tradeoff.ocp_curve(K, cfg.r_step)]
    rows += [Row(K, p.r, p.c, p.L, "ocm") for p in tradeoff.ocm_curve(K, cfg.r_step)]
    for r in tradeoff.storage_grid(K, cfg.r_step):
        rows += [Row(K, r, cp.c, cp.L, "corner") for cp in tradeoff.corner_points(r, K)]
    return sorted(set(rows), key=Row.sort_key)


def write_csv(rows: Iterable[Row], float_columns: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + (FLOAT_COLUMNS if float_columns else []))
    for row in sorted(rows, key=Row.sort_key):
        line = [row.K, fmt(row.r), fmt(row.c), fmt(row.L), row.kind, row.region()]
        if float_columns:
            line += [f"{float(x):.6g}" for x in (row.r, row.c, row.L)]
        writer.writerow(line)
    return buf.getvalue()


def read_csv(text: str) -> list[Row]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(Row(int(rec["K"]), Fraction(rec["r"]), Fraction(rec["c"]), Fraction(rec["L"]), rec["kind"]))
    return rows


# -- runners ------------------------------------------------------------------


def _timed(report: dict[str, Any], start: float, timing: bool) -> dict[str, Any]:
    if timing:
        report["wall_clock_s"] = round(time.perf_counter() - start, 6)
    return report


def _sim_report(result: d3c.SimulationResult, analytic: LoadTriple) -> dict[str, Any]:
    measured = result.measured
    return {
        "N": result.spec.N,
        "T": result.spec.T,
        "total_bits": result.total_bits,
        "signals": len(result.signals),
        "measured": loads_json(measured),
        "analytic": loads_json(analytic),
        "slack": slack_json(measured, analytic),
        "pass": {
            "loads": measured == analytic,
            "outputs": result.outputs == result.oracle,
        },
        "mismatches": [list(iva) for iva in result.mismatches],
    }


def run_simulate(cfg: SimulateConfig, timing: bool = False) -> dict[str, Any]:
    start = time.perf_counter()
    scheme = d3c.build_scheme(cfg.K, cfg.r, cfg.g, cfg.eta)
    result = d3c.simulate(scheme, T=cfg.T, F=cfg.F, B=cfg.B, seed=cfg.seed, strict=False)
    report = {"command": "simulate", "config": config_json(cfg)}
    report.update(_sim_report(result, scheme.analytic_loads()))
    report["optimal_L"] = fmt(tradeoff.optimal_load(result.measured.r, result.measured.c, cfg.K))
    report["passed"] = all(report["pass"].values())
    return _timed(report, start, timing)


def run_share(cfg: ShareConfig, timing: bool = False) -> dict[str, Any]:
    start = time.perf_counter()
    scheme = d3c.share_schemes(cfg.K, (*cfg.a, cfg.alpha), (*cfg.b, 1 - cfg.alpha))
    result = d3c.simulate(scheme, T=cfg.T, F=cfg.F, B=cfg.B, seed=cfg.seed, strict=False)
    report = {"command": "share", "config": config_json(cfg)}
    report.update(_sim_report(result, scheme.analytic_loads()))
    m = result.measured
    optimum = tradeoff.optimal_load(m.r, m.c, cfg.K)
    report["optimal_L"] = fmt(optimum)
    report["on_surface"] = m.L == optimum
    report["pass"]["not_below_optimum"] = m.L >= optimum
    report["passed"] = all(report["pass"].values())
    return _timed(report, start, timing)


def _scheme_json(pair) -> dict[str, Any] | None:
    if pair is None:
        return None
    p, a = pair
    return {
        "stored": {str(k): sorted(files) for k, files in sorted(p.stored.items())},
        "computed": {
            str(k): sorted([iva.target, iva.file] for iva in a.ivas_at(k)) for k in sorted(a.computed)
        },
    }


def run_verify(cfg: VerifyConfig, timing: bool = False) -> dict[str, Any]:
    start = time.perf_counter()
    if cfg.mode == "exhaustive":
        rep = converse.exhaustive_verify(cfg.K, cfg.N, cfg.r, cfg.c)
    else:
        rep = converse.random_verify(cfg.K, cfg.N, cfg.r, cfg.c, cfg.samples, cfg.seed)
    maybe = lambda x: None if x is None else fmt(x)  # noqa: E731
    report = {
        "command": "verify",
        "config": config_json(cfg),
        "budgets": {"r": fmt(cfg.r), "c": fmt(cfg.c)},
        "checked": rep.checked,
        "min_bound": maybe(rep.min_bound),
        "argmin": _scheme_json(rep.argmin),
        "analytic": maybe(rep.analytic),
        "optimal_L": fmt(tradeoff.optimal_load(cfg.r, cfg.c, cfg.K)),
        "slack": maybe(rep.slack),
        "lemma3_violations": rep.lemma3_violations,
        "identity_violations": rep.identity_violations,
        "chain_violations": rep.chain_violations,
        "passed": rep.passed,
    }
    return _timed(report, start, timing)


def run_report(cfg: ReportConfig) -> tuple[list[Row], bool]:
    """Simulate every corner ``1 <= g <= r < K`` for each K and pair it with the analytic row."""
    rows, ok = [], True
    for K in cfg.Ks:
        for r in range(1, K):
            T = default_T(*range(1, r + 1))
            for g in range(1, r + 1):
                scheme = d3c.build_scheme(K, r, g)
                result = d3c.simulate(scheme, T=T, F=cfg.F, B=cfg.B, seed=cfg.seed, strict=False)
                analytic = scheme.analytic_loads()
                m = result.measured
                ok = ok and result.ok and m == analytic
                rows.append(Row(K, analytic.r, analytic.c, analytic.L, "corner"))
                rows.append(Row(K, m.r, m.c, m.L, "measured"))
    return rows, ok
