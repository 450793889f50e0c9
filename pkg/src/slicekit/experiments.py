"""Experiment harness: configs, deterministic result emission, and the four
runnable studies (landscapes, approx-error, interpolate, style-transfer).

Determinism contract: rerunning with the same resolved config produces a
byte-identical results.csv. Per-sub-run generators are derived from
(seed, method, experiment id) alone, rows are buffered and written in sorted
order, and wall-clock numbers go to separate files (timings.csv and the
per-run trace CSVs) so the main table stays reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import sys
import time
import traceback
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__ as PKG_VERSION
from . import landscapes as lsc
from .dataio import load_image, load_point_cloud, save_image
from .flows import FlowConfig, euler_flow, style_transfer
from .gp import AcquisitionKind
from .ot1d import slice_costs, sw_estimate
from .qsw import QswKind, make_qsw
from .selectors import METHODS, SelectorConfig, SliceOracle, bosw, config_for_budget
from .sphere import sample_uniform

EXPERIMENTS = ("landscapes", "approx-error", "interpolate", "style-transfer")
WORKERS_ENV = "SLICEKIT_WORKERS"

_DEFAULT_METHODS = {
    "landscapes": ["mc", "eqsw", "gqsw", "sqsw", "dqsw", "cqsw", "bosw"],
    "approx-error": ["mc", "eqsw", "gqsw", "sqsw", "dqsw", "cqsw"],
    "interpolate": ["mc", "cqsw", "rcqsw", "arbosw"],
    "style-transfer": ["mc", "rcqsw", "arbosw"],
}
_DEFAULT_BUDGETS = {
    "landscapes": [5, 10, 15, 20],
    "approx-error": [10, 100, 1000],
}


@dataclass(frozen=True)
class ResultRow:
    """One deterministic measurement: metric at an axis point (L or step)."""

    experiment: str
    method: str
    seed: int
    axis: int
    metric: float

    def __post_init__(self):
        if self.metric < 0:
            raise ValueError(f"metric must be >= 0, got {self.metric}")


@dataclass
class RunConfig:
    """Fully resolved settings for one experiment run."""

    experiment: str
    methods: list[str] = field(default_factory=list)
    budgets: list[int] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    inputs: list[str] = field(default_factory=list)
    out: str = "runs/out"
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    landscape_kinds: list[str] = field(default_factory=lambda: list(lsc.LANDSCAPE_KINDS))
    fixture_seed: int = 73_901
    fixture_points: int = 512
    ref_slices: int = 100_000
    ref_seed: int = 424_242

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.methods:
            self.methods = list(_DEFAULT_METHODS[self.experiment])
        if not self.budgets:
            self.budgets = list(_DEFAULT_BUDGETS.get(self.experiment, []))
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")
        for p in self.inputs:
            if not Path(p).is_file():
                raise ValueError(f"input file does not exist: {p}")


def _enum_value(v):
    return v.value if hasattr(v, "value") else v


def selector_to_dict(cfg: SelectorConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["seed_kind"] = _enum_value(cfg.seed_kind)
    d["acquisition"] = _enum_value(cfg.acquisition)
    return d


def selector_from_dict(d: dict) -> SelectorConfig:
    d = dict(d)
    if "seed_kind" in d:
        d["seed_kind"] = QswKind(d["seed_kind"])
    if "acquisition" in d:
        d["acquisition"] = AcquisitionKind(d["acquisition"])
    return SelectorConfig(**d)


def flow_to_dict(cfg: FlowConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["checkpoints"] = list(cfg.checkpoints)
    return d


def flow_from_dict(d: dict) -> FlowConfig:
    d = dict(d)
    if d.get("checkpoints") is not None:
        d["checkpoints"] = tuple(d["checkpoints"])
    return FlowConfig(**d)


def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "experiment": cfg.experiment,
        "methods": list(cfg.methods),
        "budgets": list(cfg.budgets),
        "seeds": list(cfg.seeds),
        "inputs": list(cfg.inputs),
        "out": cfg.out,
        "selector": selector_to_dict(cfg.selector),
        "flow": flow_to_dict(cfg.flow),
        "landscape_kinds": list(cfg.landscape_kinds),
        "fixture_seed": cfg.fixture_seed,
        "fixture_points": cfg.fixture_points,
        "ref_slices": cfg.ref_slices,
        "ref_seed": cfg.ref_seed,
    }


def config_from_dict(d: dict) -> RunConfig:
    d = dict(d)
    d.pop("landscape_constants", None)
    d.pop("input_sha256", None)
    d.pop("slicekit_version", None)
    if "selector" in d:
        d["selector"] = selector_from_dict(d["selector"])
    if "flow" in d:
        d["flow"] = flow_from_dict(d["flow"])
    return RunConfig(**d)


def _subrun_rng(seed: int, *labels: str) -> np.random.Generator:
    """Generator keyed by seed plus stable label hashes; order-independent."""
    entropy = [int(seed)] + [zlib.crc32(lab.encode("utf-8")) for lab in labels]
    return np.random.default_rng(entropy)


def gaussian_cloud_pair(fixture_seed: int, n: int, d: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Built-in synthetic pair: a seeded Gaussian cloud and an affine image of
    it (per-axis rescale plus a unit mean shift).

    The correlated construction keeps the optimal assignment near monotone,
    so gradient flows with fixed direction sets can actually converge;
    independent draws of this size park in assignment traps one to two
    orders of magnitude higher.
    """
    fr = np.random.default_rng([int(fixture_seed)])
    X = 0.35 * fr.standard_normal((n, d))
    scales = np.resize(np.array([1.0, 1.25, 0.8]), d)
    Y = X * scales[None, :]
    Y[:, 0] += 1.0
    return X, Y


def content_hash(*arrays: np.ndarray, extra: str = "") -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    h.update(extra.encode())
    return h.hexdigest()


def reference_sw(
    X: np.ndarray,
    Y: np.ndarray,
    cache_dir: Path,
    ref_slices: int,
    ref_seed: int,
    p: float = 2.0,
) -> float:
    """High-budget seeded MC estimate of SW_p^p, cached by content hash.

    Directions are drawn in chunks so the projection matrices stay small;
    the mean is taken once over the full cost vector, in draw order.
    """
    key = content_hash(X, Y, extra=f"p={p};L={ref_slices};seed={ref_seed}")
    cache_file = cache_dir / f"{key}.json"
    if cache_file.is_file():
        return float(json.loads(cache_file.read_text())["value"])
    rng = np.random.default_rng([int(ref_seed)])
    chunks = []
    remaining = ref_slices
    while remaining > 0:
        take = min(10_000, remaining)
        dirs = sample_uniform(rng, X.shape[1], take)
        chunks.append(slice_costs(X, Y, dirs, p))
        remaining -= take
    value = float(np.mean(np.concatenate(chunks)))
    cache_dir.mkdir(parents=True, exist_ok=True)
    cache_file.write_text(json.dumps({"value": value, "slices": ref_slices, "seed": ref_seed}))
    return value


def _estimate_with_method(
    method: str,
    X: np.ndarray,
    Y: np.ndarray,
    budget: int,
    scfg: SelectorConfig,
    rng: np.random.Generator,
) -> float:
    """SW_2^2 estimate using a method's own direction set at the given budget."""
    spec = METHODS[method]
    if spec.family == "mc":
        dirs = sample_uniform(rng, X.shape[1], budget)
    elif spec.family == "qsw":
        dirs = make_qsw(spec.qsw_kind, budget, spec.randomize, rng, d=X.shape[1])
    elif method == "bosw":
        oracle = SliceOracle.for_clouds(X, Y)
        dirs = bosw(oracle, config_for_budget(scfg, budget), rng)
    else:
        raise ValueError(f"{method} is not defined for one-off estimation; use bosw or a sampling method")
    return sw_estimate(X, Y, dirs, p=2.0).value


@dataclass
class _SubRunOutput:
    rows: list[ResultRow] = field(default_factory=list)
    timings: list[tuple[str, str, int, int, float]] = field(default_factory=list)


def _run_landscapes(cfg: RunConfig, method: str, seed: int) -> _SubRunOutput:
    out = _SubRunOutput()
    all_landscapes = lsc.standard_landscapes()
    for kind in cfg.landscape_kinds:
        exp_id = f"landscapes:{kind}"
        for budget in cfg.budgets:
            rng = _subrun_rng(seed, method, exp_id, f"L={budget}")
            t0 = time.perf_counter()
            best = lsc.budgeted_search(method, all_landscapes[kind], budget, rng, cfg=cfg.selector)
            out.timings.append((exp_id, method, seed, budget, time.perf_counter() - t0))
            out.rows.append(ResultRow(exp_id, method, seed, budget, best))
    return out


def _load_cloud_pairs(cfg: RunConfig) -> list[tuple[str, np.ndarray, np.ndarray]]:
    if cfg.inputs:
        if len(cfg.inputs) % 2:
            raise ValueError("cloud inputs must come in (source, target) pairs")
        pairs = []
        for i in range(0, len(cfg.inputs), 2):
            X = load_point_cloud(cfg.inputs[i])
            Y = load_point_cloud(cfg.inputs[i + 1])
            pairs.append((f"pair{i // 2}", X, Y))
        return pairs
    X, Y = gaussian_cloud_pair(cfg.fixture_seed, cfg.fixture_points)
    return [("pair0", X, Y)]


def _run_approx_error(cfg: RunConfig, method: str, seed: int, outdir: Path) -> _SubRunOutput:
    out = _SubRunOutput()
    for pair_id, X, Y in _load_cloud_pairs(cfg):
        exp_id = f"approx-error:{pair_id}"
        ref = reference_sw(X, Y, outdir / "refcache", cfg.ref_slices, cfg.ref_seed)
        for budget in cfg.budgets:
            rng = _subrun_rng(seed, method, exp_id, f"L={budget}")
            t0 = time.perf_counter()
            est = _estimate_with_method(method, X, Y, budget, cfg.selector, rng)
            out.timings.append((exp_id, method, seed, budget, time.perf_counter() - t0))
            out.rows.append(ResultRow(exp_id, method, seed, budget, abs(est - ref)))
    return out


def _write_trace(path: Path, trace) -> None:
    lines = ["step,metric,seconds,evals"]
    for rec in trace.records:
        lines.append(f"{rec.step},{rec.metric!r},{rec.seconds!r},{rec.evals}")
    path.write_text("\n".join(lines) + "\n")


def _run_interpolate(cfg: RunConfig, method: str, seed: int, outdir: Path) -> _SubRunOutput:
    out = _SubRunOutput()
    for pair_id, X, Y in _load_cloud_pairs(cfg):
        exp_id = f"interpolate:{pair_id}"
        rng = _subrun_rng(seed, method, exp_id)
        trace = euler_flow(X, Y, method, cfg.selector, cfg.flow, rng)
        tdir = outdir / "traces"
        tdir.mkdir(parents=True, exist_ok=True)
        _write_trace(tdir / f"{exp_id.replace(':', '_')}__{method}__seed{seed}.csv", trace)
        for rec in trace.records:
            out.rows.append(ResultRow(exp_id, method, seed, rec.step, rec.metric))
            out.timings.append((exp_id, method, seed, rec.step, rec.seconds))
    return out


def _style_fixture(fixture_seed: int) -> tuple[tuple[int, int, np.ndarray], tuple[int, int, np.ndarray]]:
    """Built-in 64x64 pair: a grayscale ramp source and a two-color target."""
    side = 64
    ramp = np.repeat(np.linspace(40.0, 215.0, side)[None, :], side, axis=0).ravel()
    src = np.column_stack([ramp, ramp, ramp])
    rng = np.random.default_rng([int(fixture_seed), 0x57F1E])
    mask = rng.random(side * side) < 0.5
    tgt = np.where(mask[:, None], np.array([200.0, 60.0, 40.0]), np.array([30.0, 90.0, 180.0]))
    return (side, side, src), (side, side, tgt)


def _run_style(cfg: RunConfig, method: str, seed: int, outdir: Path) -> _SubRunOutput:
    out = _SubRunOutput()
    if cfg.inputs:
        if len(cfg.inputs) != 2:
            raise ValueError("style-transfer needs exactly two inputs: source.ppm target.ppm")
        sw, sh, src = load_image(cfg.inputs[0])
        _, _, tgt = load_image(cfg.inputs[1])
    else:
        (sw, sh, src), (_, _, tgt) = _style_fixture(cfg.fixture_seed)
    exp_id = "style-transfer"
    rng = _subrun_rng(seed, method, exp_id)
    fcfg = cfg.flow
    if fcfg == FlowConfig():  # untouched defaults: use the transfer setting
        fcfg = None
    result, trace = style_transfer(src, tgt, method, cfg.selector, fcfg, rng)
    idir = outdir / "images"
    idir.mkdir(parents=True, exist_ok=True)
    save_image(idir / f"{method}__seed{seed}.ppm", sw, sh, result.astype(np.float64))
    tdir = outdir / "traces"
    tdir.mkdir(parents=True, exist_ok=True)
    _write_trace(tdir / f"{exp_id}__{method}__seed{seed}.csv", trace)
    for rec in trace.records:
        out.rows.append(ResultRow(exp_id, method, seed, rec.step, rec.metric))
        out.timings.append((exp_id, method, seed, rec.step, rec.seconds))
    return out


def _write_csv(path: Path, header: str, lines: list[str]) -> None:
    path.write_text("\n".join([header] + lines) + "\n")


def _emit_plots(cfg: RunConfig, rows: list[ResultRow], outdir: Path) -> None:
    from .svg import line_plot

    by_exp: dict[str, list[ResultRow]] = {}
    for row in rows:
        by_exp.setdefault(row.experiment, []).append(row)
    for exp_id, exp_rows in sorted(by_exp.items()):
        series: dict[str, tuple[list[float], list[float]]] = {}
        methods = sorted({r.method for r in exp_rows}, key=cfg.methods.index)
        for method in methods:
            pts: dict[int, list[float]] = {}
            for r in exp_rows:
                if r.method == method:
                    pts.setdefault(r.axis, []).append(r.metric)
            xs = sorted(pts)
            series[method] = (list(map(float, xs)), [float(np.mean(pts[x])) for x in xs])
        if cfg.experiment == "approx-error":
            kwargs = dict(xlabel="slices", ylabel="abs error", logx=True, logy=True)
        elif cfg.experiment == "landscapes":
            kwargs = dict(xlabel="evaluation budget", ylabel="best fitness", logx=False, logy=False)
        else:
            kwargs = dict(xlabel="step", ylabel="W2", logx=False, logy=True)
        fname = exp_id.replace(":", "_") + ".svg"
        line_plot(outdir / fname, series, title=exp_id, **kwargs)


def write_config_lock(cfg: RunConfig, outdir: Path) -> None:
    lock = config_to_dict(cfg)
    lock["slicekit_version"] = PKG_VERSION
    lock["landscape_constants"] = lsc._frozen_params()
    hashes = {}
    for p in cfg.inputs:
        hashes[p] = hashlib.sha256(Path(p).read_bytes()).hexdigest()
    lock["input_sha256"] = hashes
    (outdir / "config.lock").write_text(json.dumps(lock, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: RunConfig) -> int:
    """Execute every (method, seed) sub-run; emit results.csv, timings.csv,
    config.lock, per-run traces, and SVG plots. Returns a process exit code;
    failed sub-runs are reported and the rest still land on disk."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_config_lock(cfg, outdir)

    runner = {
        "landscapes": lambda m, s: _run_landscapes(cfg, m, s),
        "approx-error": lambda m, s: _run_approx_error(cfg, m, s, outdir),
        "interpolate": lambda m, s: _run_interpolate(cfg, m, s, outdir),
        "style-transfer": lambda m, s: _run_style(cfg, m, s, outdir),
    }[cfg.experiment]

    tasks = [(m, s) for m in cfg.methods for s in cfg.seeds]
    workers = max(1, int(os.environ.get(WORKERS_ENV, "1")))
    failures = 0
    outputs: list[_SubRunOutput] = []

    if cfg.experiment == "approx-error":
        # Warm the reference cache serially so workers never race on it.
        for pair_id, X, Y in _load_cloud_pairs(cfg):
            reference_sw(X, Y, outdir / "refcache", cfg.ref_slices, cfg.ref_seed)

    def guarded(task):
        method, seed = task
        try:
            return runner(method, seed)
        except Exception:
            sys.stderr.write(f"sub-run failed: method={method} seed={seed}\n{traceback.format_exc()}\n")
            return None

    if workers == 1:
        results = [guarded(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(guarded, tasks))
    for res in results:
        if res is None:
            failures += 1
        else:
            outputs.append(res)

    rows = sorted(
        (r for o in outputs for r in o.rows),
        key=lambda r: (r.experiment, r.method, r.seed, r.axis),
    )
    timings = sorted((t for o in outputs for t in o.timings))
    _write_csv(
        outdir / "results.csv",
        "experiment,method,seed,axis,metric",
        [f"{r.experiment},{r.method},{r.seed},{r.axis},{r.metric!r}" for r in rows],
    )
    _write_csv(
        outdir / "timings.csv",
        "experiment,method,seed,axis,seconds",
        [f"{e},{m},{s},{a},{sec!r}" for e, m, s, a, sec in timings],
    )
    if rows:
        _emit_plots(cfg, rows, outdir)
    return 1 if failures else 0
