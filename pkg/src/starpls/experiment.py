"""Sweep orchestration, result persistence and the oracle suite behind ``validate``.

All CSV files share one dialect: comma separated, LF line endings, floats
written with 17 significant digits. Provenance (config hash, seeds, creation
time) lives in ``#`` comment lines above the header, so everything below the
comments is byte-identical for identical inputs.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .channel import RngStream, generate_channels
from .config import ConfigError, SystemConfig, config_from_dict
from .optimizer import SCHEMES, OptResult, check_feasible, optimize

log = logging.getLogger(__name__)

AXES = {"M": "M", "N_t": "N_t", "P_tmax_dBm": "P_tmax_dBm", "lambda_bits": "lambda_bits", "P1": "p1"}
U64_MAX = 2**64 - 1
THREADS_ENV = "STAR_PLS_THREADS"

# stream ids: channels and optimizer draws must not overlap
_CHANNEL_STREAM = 0
_OPTIMIZER_STREAM = 1


@dataclass(frozen=True)
class SweepSpec:
    """One swept axis, the schemes to compare and the seeds to average over."""

    axis: str
    values: tuple
    schemes: tuple[str, ...] = ("proposed",)
    seeds: tuple[int, ...] = (0,)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {sorted(AXES)}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("values must be nonempty")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if not self.schemes:
            raise ConfigError("schemes must be nonempty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; expected a subset of {list(SCHEMES)}")
        for s in self.seeds:
            _check_seed(s)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepSpec":
        if not isinstance(data, dict):
            raise ConfigError("sweep spec must be a JSON object")
        unknown = set(data) - {"axis", "values", "schemes", "seeds"}
        if unknown:
            raise ConfigError(f"unknown sweep spec keys {sorted(unknown)}")
        try:
            return cls(axis=data["axis"], values=data["values"],
                       schemes=data.get("schemes", ("proposed",)), seeds=data.get("seeds", (0,)))
        except KeyError as exc:
            raise ConfigError(f"sweep spec missing key {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ConfigError(f"sweep spec: {exc}") from None

    def config_for(self, cfg: SystemConfig, value) -> SystemConfig:
        """``cfg`` with the swept parameter set to ``value``."""
        return config_from_dict({AXES[self.axis]: value}, base=cfg)


def load_sweep_spec(path: str | Path) -> SweepSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return SweepSpec.from_dict(data)


def _check_seed(seed: int) -> None:
    if not 0 <= seed <= U64_MAX:
        raise ConfigError(f"seed {seed} is not a 64-bit unsigned integer")


@dataclass(frozen=True)
class ResultRecord:
    scheme: str
    value: Any
    seed: int
    objective: float
    r_b_sec: float
    r_c: float
    outer_iterations: int
    wall_time_ms: float
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class RunOutput:
    record: ResultRecord
    trajectory: tuple[float, ...] = ()
    feasible: bool = False
    solution: dict[str, Any] = field(default_factory=dict)


def run_point(cfg: SystemConfig, scheme: str, seed: int, value: Any = None) -> RunOutput:
    """Fresh channels for ``seed``, one optimizer run, failures captured as a record."""
    t0 = time.perf_counter()
    try:
        ch = generate_channels(cfg, RngStream(seed, _CHANNEL_STREAM))
        res = optimize(ch, cfg, RngStream(seed, _OPTIMIZER_STREAM), scheme=scheme)
    except Exception as exc:  # a failed point must not abort the sweep
        ms = (time.perf_counter() - t0) * 1e3
        log.warning("run %s value=%s seed=%d failed: %s", scheme, value, seed, exc)
        rec = ResultRecord(scheme, value, seed, float("nan"), float("nan"), float("nan"), 0, ms,
                           status="failed", message=f"{type(exc).__name__}: {exc}")
        return RunOutput(rec)
    ms = (time.perf_counter() - t0) * 1e3
    rec = ResultRecord(scheme, value, seed, res.objective, res.rates.r_b_sec_asymptotic, res.rates.r_c,
                       res.outer_iterations, ms)
    return RunOutput(rec, tuple(res.trajectory), check_feasible(res.bf, res.coeffs, cfg), solution_dict(res))


def solution_dict(res: OptResult) -> dict[str, Any]:
    """JSON-friendly dump of precoders and surface coefficients."""
    c = res.coeffs
    return {
        "scheme": res.scheme,
        "objective": res.objective,
        "r_b": res.rates.r_b,
        "r_c": res.rates.r_c,
        "r_b_sec": res.rates.r_b_sec_asymptotic,
        "converged": res.converged,
        "outer_iterations": res.outer_iterations,
        "w_b": {"re": res.bf.w_b.real.tolist(), "im": res.bf.w_b.imag.tolist()},
        "w_c": {"re": res.bf.w_c.real.tolist(), "im": res.bf.w_c.imag.tolist()},
        "beta_r": c.beta_r.tolist(),
        "phase_idx_r": c.phase_idx_r.tolist(),
        "phase_idx_t": c.phase_idx_t.tolist(),
        "q": c.q,
    }


def _point_job(args):
    cfg, scheme, seed, value = args
    return run_point(cfg, scheme, seed, value)


def resolve_threads(threads: int | None) -> int:
    """``None`` falls back to ``$STAR_PLS_THREADS``; ``0`` means one worker per CPU."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads < 0:
        raise ConfigError("thread count must be nonnegative")
    return threads or (os.cpu_count() or 1)


def _map(jobs: list, threads: int) -> list[RunOutput]:
    if threads <= 1 or len(jobs) <= 1:
        return [_point_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(_point_job, jobs))


def _sort_key(rec: ResultRecord):
    return rec.scheme, rec.value, rec.seed


# -- CSV/JSON sinks -------------------------------------------------------

def fmt(x) -> str:
    """Round-trip exact text for floats; plain ``str`` otherwise."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], provenance: dict[str, Any]) -> None:
    buf = io.StringIO()
    for k, v in provenance.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def csv_body(path: str | Path) -> bytes:
    """File contents without the ``#`` provenance lines."""
    lines = Path(path).read_bytes().split(b"\n")
    return b"\n".join(ln for ln in lines if not ln.startswith(b"#"))


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


RESULT_HEADER = ("scheme", "value", "seed", "objective", "r_b_sec", "r_c", "outer_iterations", "status")


def write_records(path: Path, records: Sequence[ResultRecord], provenance: dict[str, Any]) -> None:
    rows = [(r.scheme, r.value, r.seed, r.objective, r.r_b_sec, r.r_c, r.outer_iterations, r.status)
            for r in records]
    write_csv(path, RESULT_HEADER, rows, provenance)


def write_timings(path: Path, records: Sequence[ResultRecord], provenance: dict[str, Any]) -> None:
    rows = [(r.scheme, r.value, r.seed, r.wall_time_ms) for r in records]
    write_csv(path, ("scheme", "value", "seed", "wall_time_ms"), rows, provenance)


def write_trajectory(path: Path, trajectory: Sequence[float], provenance: dict[str, Any]) -> None:
    write_csv(path, ("iteration", "objective"), enumerate(trajectory), provenance)


# -- summary --------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    value: Any
    n: int
    n_failed: int
    objective_mean: float
    objective_std: float
    r_b_sec_mean: float
    r_b_sec_std: float
    r_c_mean: float
    r_c_std: float


def emit_summary(records: Sequence[ResultRecord], out_dir: str | Path | None = None,
                 provenance: dict[str, Any] | None = None) -> list[SummaryRow]:
    """Mean and population std per (scheme, value) over successful runs.

    When ``out_dir`` is given, ``summary.csv`` and ``summary.json`` are written
    there.
    """
    if not records:
        raise ValueError("records must be nonempty")
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in sorted(records, key=_sort_key):
        groups.setdefault((r.scheme, r.value), []).append(r)
    rows = []
    for (scheme, value), grp in groups.items():
        ok = [r for r in grp if r.ok]
        stats = []
        for name in ("objective", "r_b_sec", "r_c"):
            x = np.array([getattr(r, name) for r in ok], dtype=float)
            stats += [float(x.mean()), float(x.std())] if x.size else [float("nan")] * 2
        rows.append(SummaryRow(scheme, value, len(ok), len(grp) - len(ok), *stats))
    if out_dir is not None:
        out = Path(out_dir)
        prov = provenance or {}
        header = tuple(SummaryRow.__dataclass_fields__)
        write_csv(out / "summary.csv", header, (tuple(asdict(r).values()) for r in rows), prov)
        _write_json(out / "summary.json", {"provenance": prov, "rows": [asdict(r) for r in rows]})
    return rows


# -- drivers --------------------------------------------------------------

def run_sweep(spec: SweepSpec, cfg: SystemConfig, out_dir: str | Path,
              threads: int | None = 1) -> list[ResultRecord]:
    """Run every (scheme, value, seed) point and persist records, trajectories and summary.

    Output files in ``out_dir``: ``results.csv``, ``timings.csv``,
    ``summary.csv``, ``summary.json`` and ``trajectories/<scheme>_<value>_<seed>.csv``.
    Records are ordered by (scheme, value, seed) regardless of completion order.
    """
    out = Path(out_dir)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    point_cfgs = {v: spec.config_for(cfg, v) for v in spec.values}
    jobs = [(point_cfgs[v], s, seed, v) for s in spec.schemes for v in spec.values for seed in spec.seeds]
    outputs = sorted(_map(jobs, resolve_threads(threads)), key=lambda o: _sort_key(o.record))
    records = [o.record for o in outputs]

    base = {"config_hash": cfg.digest(), "axis": spec.axis,
            "seeds": " ".join(str(s) for s in spec.seeds), "created": _timestamp()}
    write_records(out / "results.csv", records, base)
    write_timings(out / "timings.csv", records, base)
    for o in outputs:
        r = o.record
        if r.ok:
            prov = {"config_hash": point_cfgs[r.value].digest(), "base_config_hash": cfg.digest(),
                    "seed": r.seed, "scheme": r.scheme, "created": base["created"]}
            write_trajectory(out / "trajectories" / f"{r.scheme}_{r.value}_{r.seed}.csv", o.trajectory, prov)
    emit_summary(records, out, base)
    return records


def run_single(cfg: SystemConfig, seed: int, out_dir: str | Path,
               schemes: Sequence[str] = SCHEMES, threads: int | None = 1) -> list[RunOutput]:
    """All requested schemes on one channel realization; writes results, trajectories and solutions."""
    _check_seed(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, s, seed, None) for s in sorted(schemes)]
    outputs = _map(jobs, resolve_threads(threads))
    prov = {"config_hash": cfg.digest(), "seed": seed, "created": _timestamp()}
    write_records(out / "results.csv", [o.record for o in outputs], prov)
    write_timings(out / "timings.csv", [o.record for o in outputs], prov)
    for o in outputs:
        if o.record.ok:
            write_trajectory(out / f"trajectory_{o.record.scheme}.csv", o.trajectory, prov)
            _write_json(out / f"solution_{o.record.scheme}.json",
                        {"provenance": prov, "feasible": o.feasible, **o.solution})
    _write_json(out / "config.json", {"provenance": prov, "config": cfg.to_dict()})
    return outputs


# -- oracle suite ---------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool


def oracle_suite(cfg: SystemConfig, seed: int = 0, n_instances: int = 10) -> list[CheckResult]:
    """Quick independent checks of the solver building blocks on ``cfg``.

    Covers stationarity of the closed-form precoders, tightness of the MMSE
    bounds, the elite refit, and the large-system Eve rate against Monte Carlo.
    """
    from .active import log_terms, optimal_beamformers, surrogate_terms, update_auxiliaries
    from .ceo import Candidate, update_tilting
    from .rates import eve_penalty, random_coefficients
    from .validation import empirical_avg_eaves_rate, random_instance, stationarity_residual

    stat, tight, refit, mc = [], [], [], []
    for i in range(n_instances):
        s = seed + i
        ch, coeffs, bf = random_instance(cfg, s)
        aux = update_auxiliaries(ch, coeffs, bf, cfg)
        w = optimal_beamformers(ch, coeffs, aux, 1.0, cfg)
        stat.append(stationarity_residual(ch, coeffs, aux, w, 1.0, cfg))

        exact = log_terms(ch, coeffs, bf, cfg)
        bound = surrogate_terms(ch, coeffs, aux, bf, cfg)
        tight.append(max(abs(exact[k] - bound[k]) / max(1.0, abs(exact[k])) for k in exact))

        gen = RngStream(s, 5).generator()
        cands = [Candidate(random_coefficients(cfg.m, cfg.q, gen), 0.0) for _ in range(8)]
        p = update_tilting(cands)
        beta = np.array([c.coeffs.beta_r for c in cands])
        refit.append(float(max(abs(p.mu - beta.mean(0)).max(), abs(p.sigma - beta.std(0)).max())))

        est = empirical_avg_eaves_rate(ch, coeffs, bf, cfg, 2000, RngStream(s, 3).generator())
        ref = eve_penalty(ch, coeffs, bf, cfg)
        mc.append(abs(est.mean - ref) / max(ref, 1e-300))
    checks = [("stationarity_rel_grad", max(stat), 1e-6), ("mmse_tightness_rel", max(tight), 1e-10),
              ("ml_refit_abs", max(refit), 1e-12), ("large_system_median_rel", float(np.median(mc)), 0.25)]
    return [CheckResult(n, float(v), t, bool(v < t)) for n, v, t in checks]


def run_validation(cfg: SystemConfig, out_dir: str | Path, seed: int = 0) -> list[CheckResult]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = oracle_suite(cfg, seed)
    prov = {"config_hash": cfg.digest(), "seed": seed, "created": _timestamp()}
    write_csv(out / "validation.csv", ("check", "value", "tolerance", "passed"),
              ((r.name, r.value, r.tolerance, r.passed) for r in results), prov)
    return results
