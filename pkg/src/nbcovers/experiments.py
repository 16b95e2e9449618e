"""Seeded Monte Carlo experiments on random covers, and result emission.

Every experiment samples covers trial by trial from streams keyed by
(seed, experiment code, n, trial, edge), splits the trials into fixed
chunks and concatenates the per-trial values in trial order.  The output
therefore does not depend on the number of worker processes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .covers import Cover, PermutationAssignment, sample_sigma
from .errors import GraphError, InputError, ResourceLimitError
from .graph import Graph, bouquet, complete_graph, format_graph, is_gamma_spreader, parse_graph
from .spectra import (adjacency_spectrum, count_new_adjacency_beyond, kotani_sunada_check,
                      spreader_separation_check)

EXPERIMENTS = ("trace", "loop", "alon", "tangle", "spreading")
_CODES = {name: i + 1 for i, name in enumerate(EXPERIMENTS)}
CSV_HEADER = ("experiment", "n", "k", "statistic", "value", "stderr", "trials", "seed")
SPREADING_MAX_VERTICES = 20
SLOPE_TOLERANCE = 0.35
EXACT_MEAN_MAX_WALKS = 5000


# config -----------------------------------------------------------------------

def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def resolve_base(spec: str, root: Path | None = None) -> Graph:
    """A graph file path, or one of the built-ins ``bouquet:m`` / ``complete:n``."""
    if spec.startswith("bouquet:"):
        return bouquet(int(spec.split(":", 1)[1]))
    if spec.startswith("complete:"):
        return complete_graph(int(spec.split(":", 1)[1]))
    path = Path(spec)
    if root is not None and not path.is_absolute():
        path = root / path
    return parse_graph(path.read_text())


@dataclass
class ExperimentConfig:
    experiment: str
    base: Graph
    base_spec: str = ""
    n_grid: tuple = ()
    k_grid: tuple = ()
    r: Fraction = Fraction(2)
    eps: float = 0.2
    gamma: float = 0.1
    trials: int = 1000
    seed: int = 0
    workers: int = 1
    out: str | None = None
    format: str = "csv"
    batch: int = 500
    model: str = "random"       # "identity" forces the trivial assignment

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        if self.workers < 1:
            raise InputError("workers must be at least 1")
        if self.batch < 1:
            raise InputError("batch must be at least 1")
        if self.format not in ("csv", "json"):
            raise InputError("format must be csv or json")
        if self.model not in ("random", "identity"):
            raise InputError("model must be random or identity")
        if not self.n_grid or min(self.n_grid) < 1:
            raise InputError("n_grid must list positive cover degrees")
        if self.experiment in ("trace", "loop"):
            if not self.k_grid or min(self.k_grid) < 1:
                raise InputError("k_grid must list positive walk lengths")
            if 2 * max(self.k_grid) > min(self.n_grid):
                raise InputError("need n >= 2k for every (n, k) on the grid")
        if self.experiment == "loop" and self.base.order < 1:
            raise InputError("loop counts need a base of order at least 1")
        if self.experiment == "spreading":
            if self.base.vertex_count * max(self.n_grid) > SPREADING_MAX_VERTICES:
                raise InputError(f"spreading checks are exhaustive; need |V_G| <= {SPREADING_MAX_VERTICES}")
        if not self.base.is_connected():
            raise InputError("base graph must be connected")

    def canonical(self) -> dict:
        """Everything that determines the output (workers excluded)."""
        return {"experiment": self.experiment, "base": format_graph(self.base),
                "n_grid": list(self.n_grid), "k_grid": list(self.k_grid), "r": str(self.r),
                "eps": repr(self.eps), "gamma": repr(self.gamma), "trials": self.trials,
                "seed": self.seed, "batch": self.batch, "model": self.model}

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


_KEYS = {"experiment", "base", "n_grid", "k_grid", "r", "eps", "gamma", "trials", "seed",
         "workers", "out", "format", "batch", "model"}


def parse_config(text: str, root: Path | None = None, **overrides) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in _KEYS:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        raw[key] = value
    raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    for need in ("experiment", "base", "n_grid"):
        if need not in raw:
            raise InputError(f"config is missing {need!r}")
    try:
        base = resolve_base(raw["base"], root)
    except (OSError, GraphError, ValueError) as exc:
        raise InputError(f"cannot load base graph {raw['base']!r}: {exc}") from None
    try:
        kw = dict(experiment=raw["experiment"], base=base, base_spec=raw["base"],
                  n_grid=_int_list(raw["n_grid"]), k_grid=_int_list(raw.get("k_grid", "")),
                  r=Fraction(raw.get("r", "2")), eps=float(raw.get("eps", 0.2)),
                  gamma=float(raw.get("gamma", 0.1)), trials=int(raw.get("trials", 1000)),
                  seed=int(raw.get("seed", 0)), workers=int(raw.get("workers", 1)),
                  out=raw.get("out"), format=raw.get("format", "csv"),
                  batch=int(raw.get("batch", 500)), model=raw.get("model", "random"))
    except ValueError as exc:
        raise InputError(f"bad config value: {exc}") from None
    return ExperimentConfig(**kw)


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, root=path.parent, **overrides)


# results ------------------------------------------------------------------------

@dataclass
class Row:
    n: int | None
    k: int | None
    statistic: str
    value: float
    stderr: float | None = None


@dataclass
class ExperimentResult:
    experiment: str
    seed: int
    trials: int
    config_hash: str
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def add(self, n, k, statistic, value, stderr=None):
        self.rows.append(Row(n, k, statistic, float(value), None if stderr is None else float(stderr)))

    def value(self, statistic, n=None, k=None) -> float:
        for row in self.rows:
            if row.statistic == statistic and row.n == n and row.k == k:
                return row.value
        raise KeyError((statistic, n, k))

    def series(self, statistic, k=None) -> list[tuple[int, float, float | None]]:
        return [(row.n, row.value, row.stderr) for row in self.rows
                if row.statistic == statistic and row.k == k and row.n is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        fmt = lambda x: "" if x is None else repr(x)
        for row in self.rows:
            w.writerow([self.experiment, "" if row.n is None else row.n, "" if row.k is None else row.k,
                        row.statistic, fmt(row.value), fmt(row.stderr), self.trials, self.seed])
        for name, ok in self.checks.items():
            w.writerow([self.experiment, "", "", "check:" + name,
                        "" if ok is None else repr(float(ok)), "", self.trials, self.seed])
        return buf.getvalue()

    def to_json(self) -> str:
        clean = lambda x: None if x is None or (isinstance(x, float) and math.isnan(x)) else x
        doc = {"experiment": self.experiment, "seed": self.seed, "trials": self.trials,
               "config_hash": self.config_hash,
               "rows": [{"n": r.n, "k": r.k, "statistic": r.statistic, "value": clean(r.value),
                         "stderr": clean(r.stderr)} for r in self.rows],
               "checks": self.checks}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def render(self, fmt: str = "csv") -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


# trial workers (top level so they pickle) --------------------------------------

_worker_cache: dict = {}


def _cached(key, build):
    if key not in _worker_cache:
        _worker_cache[key] = build()
    return _worker_cache[key]


def _sigmas(base: Graph, n: int, task) -> np.ndarray:
    if task["model"] == "identity":
        return np.tile(np.arange(n), (task["stop"] - task["start"], base.num_directed_edges, 1))
    stream = (_CODES[task["experiment"]], n)
    return np.stack([sample_sigma(base, n, task["seed"], t, stream)
                     for t in range(task["start"], task["stop"])])


def _loop_counts(base: Graph, plan, sig: np.ndarray) -> np.ndarray:
    """Closed SNBC walks whose traced graph has order 0 (cycles, possibly wound)."""
    T, _, n = sig.shape
    out = np.zeros(T, dtype=np.int64)
    tails, inv = base.tails, base.inv
    for rep, mult, stack in plan.lifts(sig):
        t_idx, i_idx = np.nonzero(stack[-1] == stack[0])
        if len(t_idx) == 0:
            continue
        pos = np.stack([p[t_idx, i_idx] for p in stack])        # (k + 1, F)
        rep = np.asarray(rep)
        verts = np.sort(tails[rep][:, None] * n + pos[:-1], axis=0)
        nv = 1 + (np.diff(verts, axis=0) != 0).sum(axis=0)
        fwd = rep[:, None] * n + pos[:-1]
        bwd = inv[rep][:, None] * n + pos[1:]
        key = np.minimum(fwd, bwd)
        weight = np.where(fwd == bwd, 1, 2)
        order = np.argsort(key, axis=0, kind="stable")
        key = np.take_along_axis(key, order, axis=0)
        weight = np.take_along_axis(weight, order, axis=0)
        first = np.vstack([np.ones((1, key.shape[1]), bool), np.diff(key, axis=0) != 0])
        edir = (weight * first).sum(axis=0)
        cyc = edir == 2 * nv
        np.add.at(out, t_idx[cyc], mult)
    return out


def _run_chunk(task) -> np.ndarray:
    base = _cached(("base", task["base"]), lambda: parse_graph(task["base"]))
    n = task["n"]
    sig = _sigmas(base, n, task)
    kind = task["experiment"]
    if kind in ("trace", "loop"):
        from .traces import TracePlan
        cols = []
        for k in task["k_grid"]:
            plan = _cached(("plan", task["base"], k), lambda: TracePlan(base, k))
            cols.append(plan.traces(sig) if kind == "trace" else _loop_counts(base, plan, sig))
        return np.stack(cols, axis=1).astype(float)
    if kind == "tangle":
        from .tangles import tangle_indicator
        plans = task["plans"]
        if not plans:
            return np.zeros((len(sig), 1))
        return tangle_indicator(plans, sig).astype(float)[:, None]
    if kind == "alon":
        t = task["threshold"]
        vals = [count_new_adjacency_beyond(Cover(PermutationAssignment(base, n, s)), t) > 0
                for s in sig]
        return np.array(vals, dtype=float)[:, None]
    if kind == "spreading":
        return np.array([_spreading_trial(base, n, s, task) for s in sig], dtype=float)
    raise InputError(f"unknown experiment {kind!r}")


def _spreading_trial(base: Graph, n: int, s: np.ndarray, task) -> list:
    """[no small component, large nontrivial eigenvalue, joint, KS pass,
    is spreader, separation holds (nan unless spreader)]."""
    g = Cover(PermutationAssignment(base, n, s)).graph
    _, labels = g.component_labels()
    sizes = np.bincount(labels)
    no_small = bool(sizes.min() >= task["r_vertices"])
    d = int(g.degrees().max())
    lam = np.sort(adjacency_spectrum(g).values)[::-1]
    inner = lam[1:-1] if task["bipartite"] else lam[1:]
    large = bool(np.any(np.abs(inner) >= d - task["eps"]))
    ks, _ = kotani_sunada_check(g)
    spreader = g.is_regular() and is_gamma_spreader(g, task["gamma"])
    sep = float(spreader_separation_check(g, task["gamma"])) if spreader else float("nan")
    return [no_small, large, no_small and large, ks, spreader, sep]


def _collect(cfg: ExperimentConfig, n: int, extra: dict) -> np.ndarray:
    """Per-trial values at cover degree n, in trial order."""
    text = format_graph(cfg.base)
    tasks = []
    for start in range(0, cfg.trials, cfg.batch):
        task = {"experiment": cfg.experiment, "base": text, "n": n, "seed": cfg.seed,
                "start": start, "stop": min(cfg.trials, start + cfg.batch),
                "k_grid": tuple(cfg.k_grid), "model": cfg.model}
        task.update(extra)
        tasks.append(task)
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(tasks))) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    return np.concatenate(parts, axis=0)


# statistics -----------------------------------------------------------------------

def _mean_se(x: np.ndarray) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=float)
    var = float(x.var(ddof=1)) if len(x) > 1 else 0.0
    return float(x.mean()), var, math.sqrt(var / len(x))


def loglog_slope(ns, fractions) -> float:
    """OLS slope of log(fraction) against log(n); nan if a fraction is 0 or
    fewer than three grid points."""
    ns, fr = np.asarray(ns, float), np.asarray(fractions, float)
    if len(ns) < 3 or np.any(fr <= 0):
        return float("nan")
    return float(np.polyfit(np.log(ns), np.log(fr), 1)[0])


def decreasing_within_band(values, stderrs, sigmas: float = 3.0) -> bool:
    """Each step down the grid does not rise by more than the combined band."""
    for (a, sa), (b, sb) in zip(zip(values, stderrs), zip(values[1:], stderrs[1:])):
        if b > a + sigmas * math.hypot(sa, sb):
            return False
    return True


def strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _new_result(cfg: ExperimentConfig) -> ExperimentResult:
    return ExperimentResult(cfg.experiment, cfg.seed, cfg.trials, cfg.config_hash())


# runners ---------------------------------------------------------------------------

def _run_walk_counts(cfg: ExperimentConfig, exact: bool) -> ExperimentResult:
    from .traces import expected_hashimoto_trace_exact, hashimoto_trace, snbc_walks
    res = _new_result(cfg)
    ns = sorted(cfg.n_grid)
    gaps = {k: [] for k in cfg.k_grid}
    for n in ns:
        vals = _collect(cfg, n, {})
        for j, k in enumerate(cfg.k_grid):
            base_tr = hashimoto_trace(cfg.base, k)
            mean, var, se = _mean_se(vals[:, j])
            res.add(n, k, "mean", mean, se)
            res.add(n, k, "variance", var)
            res.add(n, k, "base_trace", base_tr)
            gap = abs(mean - base_tr) / base_tr if base_tr else float("nan")
            gse = se / base_tr if base_tr else float("nan")
            res.add(n, k, "normalized_gap", gap, gse)
            gaps[k].append((gap, gse))
            if exact and len(snbc_walks(cfg.base, k)) <= EXACT_MEAN_MAX_WALKS:
                try:
                    ex = expected_hashimoto_trace_exact(cfg.base, k, n)
                except ResourceLimitError:
                    continue
                res.add(n, k, "exact_mean", float(ex))
                res.add(n, k, "z_score", (mean - float(ex)) / se if se else 0.0)
    for k, g in gaps.items():
        vals, ses = [x for x, _ in g], [s for _, s in g]
        res.checks[f"gap_decreasing_k{k}"] = strictly_decreasing(vals)
        res.checks[f"gap_decreasing_band_k{k}"] = decreasing_within_band(vals, ses)
    return res


def run_trace_expansion(cfg: ExperimentConfig) -> ExperimentResult:
    """E Tr(H_G^k) for random covers, against Tr(H_B^k)."""
    return _run_walk_counts(cfg, exact=True)


def run_loop_count(cfg: ExperimentConfig) -> ExperimentResult:
    """Closed SNBC walks of length k whose traced graph is a cycle."""
    return _run_walk_counts(cfg, exact=False)


def _fraction_rows(res, cfg, stat, ns, extras):
    frs, ses = [], []
    for n in ns:
        vals = _collect(cfg, n, extras)[:, 0]
        p = float(vals.mean())
        se = math.sqrt(p * (1 - p) / len(vals))
        res.add(n, None, stat, p, se)
        res.add(n, None, "hits", float(vals.sum()))
        frs.append(p)
        ses.append(se)
    return frs, ses


def run_alon_fraction(cfg: ExperimentConfig) -> ExperimentResult:
    """Fraction of covers with a new adjacency eigenvalue beyond 2 sqrt(d-1) + eps."""
    res = _new_result(cfg)
    d = int(cfg.base.degrees().max())
    t = 2 * math.sqrt(d - 1) + cfg.eps
    ns = sorted(cfg.n_grid)
    frs, ses = _fraction_rows(res, cfg, "fraction", ns, {"threshold": t})
    res.add(None, None, "threshold", t)
    slope = loglog_slope(ns, frs)
    res.add(None, None, "slope", slope)
    res.checks["nonincreasing"] = all(b <= a for a, b in zip(frs, frs[1:]))
    res.checks["nonincreasing_band"] = decreasing_within_band(frs, ses)
    res.checks["vacuous_threshold"] = t >= d
    return res


def run_tangle_scaling(cfg: ExperimentConfig) -> ExperimentResult:
    """P[G contains a strict tangle of order < r], and its decay exponent."""
    from .bgraphs import LiftPlan
    from .tangles import fundamental_order, minimal_tangles
    res = _new_result(cfg)
    tangles = minimal_tangles(cfg.base, cfg.r, strict=True)
    plans = [LiftPlan(t) for t in tangles]
    ns = sorted(cfg.n_grid)
    frs, _ = _fraction_rows(res, cfg, "fraction", ns, {"plans": plans})
    eta = fundamental_order(cfg.base)
    slope = loglog_slope(ns, frs)
    res.add(None, None, "minimal_tangles", len(tangles))
    res.add(None, None, "fundamental_order", float(eta))
    res.add(None, None, "slope", slope)
    res.checks["slope_matches"] = None if math.isnan(slope) else \
        abs(slope + float(eta)) <= SLOPE_TOLERANCE
    return res


def run_spreading(cfg: ExperimentConfig) -> ExperimentResult:
    """Small covers: no small component together with a large nontrivial eigenvalue."""
    res = _new_result(cfg)
    bip = cfg.base.is_bipartite()
    extras = {"r_vertices": int(math.ceil(cfg.r)), "bipartite": bip,
              "eps": cfg.eps, "gamma": cfg.gamma}
    ns = sorted(cfg.n_grid)
    joint, joint_se, ks_all, sep_all = [], [], True, True
    names = ["no_small_component", "large_eigenvalue", "joint", "kotani_sunada", "spreader"]
    for n in ns:
        vals = _collect(cfg, n, extras)
        for j, name in enumerate(names):
            p, _, se = _mean_se(vals[:, j])
            res.add(n, None, name, p, se)
        sep = vals[:, 5][~np.isnan(vals[:, 5])]
        res.add(n, None, "separation_holds", float(sep.mean()) if len(sep) else float("nan"))
        p, _, se = _mean_se(vals[:, 2])
        joint.append(p)
        joint_se.append(se)
        ks_all &= bool(vals[:, 3].min() == 1.0)
        sep_all &= bool(np.all(sep == 1.0))
    res.add(None, None, "bipartite_rule", float(bip))
    res.checks["joint_decreasing"] = all(b <= a for a, b in zip(joint, joint[1:]))
    res.checks["joint_decreasing_band"] = decreasing_within_band(joint, joint_se)
    res.checks["kotani_sunada_all"] = ks_all
    res.checks["separation_all"] = sep_all
    return res


RUNNERS = {"trace": run_trace_expansion, "loop": run_loop_count, "alon": run_alon_fraction,
           "tangle": run_tangle_scaling, "spreading": run_spreading}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)


def write_result(res: ExperimentResult, path, fmt: str = "csv") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(res.render(fmt))
