"""Repeated seeded runs, error/time/hit aggregation and report rendering."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .acs import AcsParams, LocalSearch, run
from .instance import GtspInstance, relative_error
from .registry import BestKnownRegistry, published_reference
from .tsplib import load

log = logging.getLogger(__name__)

FORMATS = ("csv", "markdown")


@dataclass
class RunRecord:
    seed: int
    weight: float
    error: float | None
    time: float
    cpu_time: float
    iterations: int
    hit: bool
    new_best: bool
    capped: bool


@dataclass
class RunReport:
    instance: str
    best: int | None
    runs: list[RunRecord]
    config: dict = field(default_factory=dict)

    @property
    def has_reference(self) -> bool:
        return self.best is not None

    @property
    def mean_error(self) -> float | None:
        if not self.has_reference:
            return None
        return statistics.fmean(r.error for r in self.runs)

    @property
    def mean_time(self) -> float:
        return statistics.fmean(r.time for r in self.runs)

    @property
    def optimal_pct(self) -> float | None:
        if not self.has_reference:
            return None
        return 100.0 * sum(r.hit for r in self.runs) / len(self.runs)

    @property
    def best_weight(self) -> float:
        return min(r.weight for r in self.runs)


def _one_run(instance: GtspInstance, params: AcsParams, trace_path: str | None):
    cpu0 = time.thread_time()
    if trace_path:
        with open(trace_path, "w") as fh:
            result = run(instance, params, trace_file=fh)
    else:
        result = run(instance, params)
    return result.weight, result.elapsed, time.thread_time() - cpu0, result.iterations, result.terminated_by_cap


def _record(seed, weight, elapsed, cpu, iterations, capped, best: int | None) -> RunRecord:
    if best is None:
        return RunRecord(seed, weight, None, elapsed, cpu, iterations, False, False, capped)
    err = relative_error(weight, best)
    return RunRecord(seed, weight, err, elapsed, cpu, iterations, weight == best, weight < best, capped)


def run_experiment(
    instances: list[GtspInstance],
    params: AcsParams,
    repeats: int = 10,
    registry: BestKnownRegistry | None = None,
    workers: int = 1,
    trace_dir: str | Path | None = None,
) -> list[RunReport]:
    """Run every instance ``repeats`` times with seeds ``params.seed + r``."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    registry = registry if registry is not None else BestKnownRegistry.default()
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

    jobs = []
    for inst in instances:
        for r in range(repeats):
            p = replace(params, seed=params.seed + r)
            trace = None
            if trace_dir is not None:
                trace = str(Path(trace_dir) / f"{inst.name}_{p.local_search.value}_seed{p.seed}.jsonl")
            jobs.append((inst, p, trace))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one_run, *zip(*jobs)))
    else:
        outcomes = [_one_run(*job) for job in jobs]

    reports = []
    for k, inst in enumerate(instances):
        best = registry.get(inst.name)
        if best is None:
            log.warning("%s: no reference value, errors are not computed", inst.name)
        records = []
        for r in range(repeats):
            inst_, p, _ = jobs[k * repeats + r]
            weight, elapsed, cpu, iterations, capped = outcomes[k * repeats + r]
            rec = _record(p.seed, weight, elapsed, cpu, iterations, capped, best)
            if rec.new_best:
                log.warning("%s seed %d: weight %s improves the reference %s", inst.name, p.seed, weight, best)
            records.append(rec)
        reports.append(RunReport(inst.name, best, records, params.to_dict()))
    return reports


def ablation(
    instances: list[GtspInstance],
    params: AcsParams,
    repeats: int = 10,
    registry: BestKnownRegistry | None = None,
    workers: int = 1,
    trace_dir: str | Path | None = None,
) -> list[tuple[RunReport, RunReport]]:
    """Composite local search versus 3-opt only, with identical seeds."""
    full = run_experiment(
        instances, replace(params, local_search=LocalSearch.COMPOSITE), repeats, registry, workers, trace_dir
    )
    reduced = run_experiment(
        instances, replace(params, local_search=LocalSearch.THREE_OPT), repeats, registry, workers, trace_dir
    )
    return list(zip(full, reduced))


# --- rendering -------------------------------------------------------------


def _fmt(x: float | None, digits: int) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return statistics.fmean(values) if values else None


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _markdown(rows: list[list[str]]) -> str:
    header, body = rows[0], rows[1:]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---:" if i else ":---" for i in range(len(header))) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines) + "\n"


_REF_COLUMNS = (("sg_error", "SG Error % (published)"), ("baf_error", "BAF Error % (published)"), ("ppc_error", "PPC Error % (published)"))


def render_report(reports: list[RunReport], fmt: str = "markdown", with_reference: bool = False) -> str:
    """Table with one row per instance and an averages row.

    CSV carries six decimals; Markdown rounds errors and times to two and
    hit rates to whole percent.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {', '.join(FORMATS)}")
    if not reports:
        raise ValueError("no reports to render")
    ref = published_reference() if with_reference else {}
    header = ["Instance", "Best", "Error %", "Time s", "Optimal %"]
    if with_reference:
        header += [label for _, label in _REF_COLUMNS]
    digits = (6, 6, 6) if fmt == "csv" else (2, 2, 0)

    rows = [header]
    for rep in reports:
        row = [
            rep.instance,
            "" if rep.best is None else str(rep.best),
            _fmt(rep.mean_error, digits[0]) if rep.has_reference else "no reference",
            _fmt(rep.mean_time, digits[1]),
            _fmt(rep.optimal_pct, digits[2]),
        ]
        if with_reference:
            pub = ref.get(rep.instance.lower(), {})
            row += [_fmt(pub.get(key), 2) for key, _ in _REF_COLUMNS]
        rows.append(row)
    avg = [
        "Average",
        "",
        _fmt(_mean(r.mean_error for r in reports), digits[0]),
        _fmt(_mean(r.mean_time for r in reports), digits[1]),
        _fmt(_mean(r.optimal_pct for r in reports), digits[2]),
    ]
    if with_reference:
        avg += [_fmt(_mean(ref.get(r.instance.lower(), {}).get(key) for r in reports), 2) for key, _ in _REF_COLUMNS]
    rows.append(avg)
    return _csv(rows) if fmt == "csv" else _markdown(rows)


def render_runs(reports: list[RunReport]) -> str:
    """Per-run records as CSV."""
    rows = [["instance", "local_search", "seed", "weight", "error", "time", "cpu_time", "iterations", "hit", "new_best", "capped"]]
    for rep in reports:
        for r in rep.runs:
            rows.append([
                rep.instance, rep.config.get("local_search", ""), r.seed, r.weight,
                "" if r.error is None else f"{r.error:.6f}", f"{r.time:.6f}", f"{r.cpu_time:.6f}",
                r.iterations, int(r.hit), int(r.new_best), int(r.capped),
            ])
    return _csv(rows)


def _underline(values: list[float | None], texts: list[str], lower_is_better: bool) -> list[str]:
    present = [v for v in values if v is not None]
    if not present:
        return texts
    target = min(present) if lower_is_better else max(present)
    return [f"<u>{t}</u>" if v is not None and v == target else t for v, t in zip(values, texts)]


def render_ablation(pairs: list[tuple[RunReport, RunReport]], fmt: str = "markdown") -> str:
    """Paired HACS / HACS0 table; in Markdown the better value of each pair is underlined."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {', '.join(FORMATS)}")
    if not pairs:
        raise ValueError("no reports to render")
    header = ["Instance", "Best", "Error % HACS", "Error % HACS0", "Time s HACS", "Time s HACS0", "Optimal % HACS", "Optimal % HACS0"]
    digits = (6, 6, 6) if fmt == "csv" else (2, 2, 0)

    def cells(a, b, d, lower):
        texts = [_fmt(a, d), _fmt(b, d)]
        if fmt == "markdown":
            # compare the rounded values, as displayed
            ra = None if a is None else round(a, d)
            rb = None if b is None else round(b, d)
            texts = _underline([ra, rb], texts, lower)
        return texts

    rows = [header]
    for full, reduced in pairs:
        row = [full.instance, "" if full.best is None else str(full.best)]
        row += cells(full.mean_error, reduced.mean_error, digits[0], True)
        row += cells(full.mean_time, reduced.mean_time, digits[1], True)
        row += cells(full.optimal_pct, reduced.optimal_pct, digits[2], False)
        rows.append(row)
    avg = ["Average", ""]
    avg += cells(_mean(f.mean_error for f, _ in pairs), _mean(r.mean_error for _, r in pairs), digits[0], True)
    avg += cells(_mean(f.mean_time for f, _ in pairs), _mean(r.mean_time for _, r in pairs), digits[1], True)
    avg += cells(_mean(f.optimal_pct for f, _ in pairs), _mean(r.optimal_pct for _, r in pairs), digits[2], False)
    rows.append(avg)
    return _csv(rows) if fmt == "csv" else _markdown(rows)


# --- configuration ---------------------------------------------------------


@dataclass
class ExperimentConfig:
    instances: list[Path]
    params: AcsParams = AcsParams()
    repeats: int = 10
    workers: int = 1
    output_dir: Path | None = None
    best_known: Path | None = None
    trace: bool = False

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        """Read a JSON config; relative paths resolve against the config's directory."""
        path = Path(path)
        raw = json.loads(path.read_text())
        base = path.parent
        known = {"instances", "params", "repeats", "workers", "output_dir", "best_known", "trace"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        if not raw.get("instances"):
            raise ValueError(f"{path}: 'instances' must list at least one file")
        cfg = cls(instances=[base / p for p in raw["instances"]])
        if "params" in raw:
            cfg.params = AcsParams(**raw["params"])
        cfg.repeats = int(raw.get("repeats", cfg.repeats))
        cfg.workers = max(1, int(raw.get("workers", cfg.workers)))
        if "output_dir" in raw:
            cfg.output_dir = base / raw["output_dir"]
        if raw.get("best_known"):
            cfg.best_known = base / raw["best_known"]
        cfg.trace = bool(raw.get("trace", False))
        return cfg

    def registry(self) -> BestKnownRegistry:
        if self.best_known is None:
            return BestKnownRegistry.default()
        return BestKnownRegistry.from_csv(self.best_known)

    def load_instances(self) -> list[GtspInstance]:
        return [load(p) for p in self.instances]


def write_outputs(reports: list[RunReport], out_dir: str | Path, with_reference: bool = False) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(render_report(reports, "csv", with_reference))
    (out / "results.md").write_text(render_report(reports, "markdown", with_reference))
    (out / "runs.csv").write_text(render_runs(reports))


def write_ablation_outputs(pairs: list[tuple[RunReport, RunReport]], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(render_ablation(pairs, "csv"))
    (out / "results.md").write_text(render_ablation(pairs, "markdown"))
    (out / "runs.csv").write_text(render_runs([r for pair in pairs for r in pair]))
