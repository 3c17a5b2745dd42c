"""Experiment runner: several algorithms, several seeds, one problem.

A config file has the sections ``[problem]``, ``[algorithms]``,
``[budget]``, ``[seeds]`` and ``[params]``; see :func:`default_config_text`.
Results land in one directory::

    traces/<algorithm>_seed<k>.csv          evaluation log per run
    diagnostics/<algorithm>_seed<k>.jsonl   per-iteration diagnostics
    convergence/<algorithm>.csv             best-so-far, eval index x seed
    summary.json                            final best median/min/max
"""

from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmarks import BENCHMARKS, benchmark
from .de import DeParams, Strategy, run_de
from .errors import ComparisonError, ConfigError
from .optimizer import GddeParams, Mode, run_gdde
from .problem import EvaluationDatabase, Objective, RunTrace, Stage
from .tuning import TunerConfig

logger = logging.getLogger(__name__)

ALGORITHMS = ("de", "classifier", "local", "gdde")
SECTIONS = ("problem", "algorithms", "budget", "seeds", "params")
N_CHECKPOINTS = 10

# [params] key -> (type, default); empty value means "unset" for optional keys
PARAM_KEYS = {
    "population_size": (int, 50),
    "mutation": (float, 0.5),
    "crossover": (float, 0.9),
    "strategy": (str, "best1"),
    "first_class_size": (int, None),
    "local_size": (int, None),
    "inner_budget": (int, None),
    "inner_population_size": (int, 50),
    "inner_mutation": (float, 0.5),
    "inner_crossover": (float, 0.9),
    "inner_strategy": (str, "best1"),
    "tuner_m": (int, 10),
    "sigma_min": (float, None),
    "sigma_max": (float, None),
    "sigma_min_factor": (float, 0.1),
    "sigma_max_factor": (float, 2.0),
}


def default_config_text() -> str:
    """A complete config with every tunable at its default."""
    lines = [
        "[problem]",
        "# benchmark (sphere, ellipsoid, rosenbrock, ackley, rastrigin) or reservoir case",
        "name = ellipsoid",
        "# benchmarks only",
        "dims = 20",
        "# reservoir only: placement or joint; case_file loads a custom case",
        "mode =",
        "case_file =",
        "",
        "[algorithms]",
        "run = de, classifier, local, gdde",
        "",
        "[budget]",
        "# total real evaluations, initial design included",
        "evaluations = 500",
        "tau = 100",
        "",
        "[seeds]",
        "# comma list; a..b is an inclusive range",
        "values = 1..5",
        "",
        "[params]",
    ]
    for key, (_, default) in PARAM_KEYS.items():
        lines.append(f"{key} = {'' if default is None else default}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    algorithms: tuple[str, ...]
    budget: int
    tau: int
    seeds: tuple[int, ...]
    dims: int | None = None
    mode: str | None = None
    case_file: str | None = None
    params: dict = field(default_factory=dict)

    def de_params(self, seed: int | None = None) -> DeParams:
        p = self.params
        return DeParams(p["population_size"], p["mutation"], p["crossover"], p["strategy"], seed)

    def gdde_params(self, algorithm: str, seed: int | None = None) -> GddeParams:
        p = self.params
        return GddeParams(
            budget=self.budget,
            tau=self.tau,
            population_size=p["population_size"],
            first_class_size=p["first_class_size"],
            local_size=p["local_size"],
            de=DeParams(p["population_size"], p["mutation"], p["crossover"], p["strategy"]),
            inner_de=DeParams(
                p["inner_population_size"], p["inner_mutation"], p["inner_crossover"], p["inner_strategy"]
            ),
            inner_budget=p["inner_budget"],
            tuner=TunerConfig(
                p["tuner_m"], p["sigma_min"], p["sigma_max"], p["sigma_min_factor"], p["sigma_max_factor"]
            ),
            mode=Mode(algorithm),
            rng_seed=seed,
        )

    def make_problem(self) -> tuple[Objective, object]:
        return make_problem(self.problem, self.dims, self.mode, self.case_file, self.budget)


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header)."""
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return n
            continue
        if current == section and key is not None:
            m = re.match(r"\s*([^=:#;\s]+)\s*[=:]", line)
            if m and m.group(1).lower() == key:
                return n
    return None


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, text: str, source: str):
        self.cp = cp
        self.text = text
        self.source = source

    def error(self, section, key, msg) -> ConfigError:
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        field_name = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {field_name}: {msg}")

    def get(self, section, key, kind, default=None, required=False):
        raw = self.cp.get(section, key, fallback="").strip()
        if not raw:
            if required:
                raise self.error(section, key, "missing value")
            return default
        try:
            return kind(raw)
        except ValueError:
            raise self.error(section, key, f"cannot read {raw!r} as {kind.__name__}") from None


def _parse_seeds(raw: str) -> tuple[int, ...]:
    seeds = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item:
            a, b = item.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError(f"empty range {item}")
            seeds.extend(range(a, b + 1))
        else:
            seeds.append(int(item))
    return tuple(seeds)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a config; errors name the line and field."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    r = _Reader(cp, text, source)
    for section in SECTIONS:
        if not cp.has_section(section):
            raise ConfigError(f"{source}: missing section [{section}]")
    for section in cp.sections():
        if section not in SECTIONS:
            raise r.error(section, None, "unknown section")

    name = r.get("problem", "name", str, required=True).lower()
    dims = r.get("problem", "dims", int)
    mode = r.get("problem", "mode", str)
    case_file = r.get("problem", "case_file", str)
    from .reservoir import CASES

    if name in BENCHMARKS:
        if dims is None:
            raise r.error("problem", "dims", "benchmarks need a dimension")
        if dims < 2:
            raise r.error("problem", "dims", "must be at least 2")
    elif name in CASES or case_file:
        if mode is not None and mode not in ("placement", "joint"):
            raise r.error("problem", "mode", "must be placement or joint")
        if case_file and not Path(case_file).is_file():
            raise r.error("problem", "case_file", f"no such file {case_file}")
    else:
        known = sorted(BENCHMARKS) + sorted(CASES)
        raise r.error("problem", "name", f"unknown problem {name!r}; known: {', '.join(known)}")

    raw_algs = cp.get("algorithms", "run", fallback="")
    algorithms = tuple(a.strip().lower() for a in raw_algs.split(",") if a.strip())
    if not algorithms:
        raise r.error("algorithms", "run", "empty algorithm list")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise r.error("algorithms", "run", f"unknown algorithm {a!r}; known: {', '.join(ALGORITHMS)}")
    if len(set(algorithms)) != len(algorithms):
        raise r.error("algorithms", "run", "algorithm listed twice")

    budget = r.get("budget", "evaluations", int, required=True)
    tau = r.get("budget", "tau", int, 100)

    try:
        seeds = _parse_seeds(cp.get("seeds", "values", fallback=""))
    except ValueError as exc:
        raise r.error("seeds", "values", str(exc)) from None
    if not seeds:
        raise r.error("seeds", "values", "no seeds given")
    if len(set(seeds)) != len(seeds):
        raise r.error("seeds", "values", "repeated seed")

    params = {}
    for key in cp.options("params"):
        if key not in PARAM_KEYS:
            raise r.error("params", key, "unknown parameter")
    for key, (kind, default) in PARAM_KEYS.items():
        params[key] = r.get("params", key, kind, default)
    for key in ("strategy", "inner_strategy"):
        try:
            Strategy(params[key])
        except ValueError:
            raise r.error("params", key, f"unknown strategy {params[key]!r}") from None

    cfg = ExperimentConfig(name, algorithms, budget, tau, seeds, dims, mode, case_file, params)
    # let the parameter objects run their own validation
    for a in algorithms:
        try:
            if a == "de":
                p = cfg.de_params()
                if budget < p.population_size:
                    raise ValueError(f"budget {budget} is below the DE population size {p.population_size}")
            else:
                cfg.gdde_params(a)
        except ValueError as exc:
            section, key = _blame(str(exc), cp)
            raise r.error(section, key, f"{a}: {exc}") from None
    return cfg


def _blame(msg: str, cp: configparser.ConfigParser) -> tuple[str, str | None]:
    """Config field a parameter validation message is about."""
    words = re.findall(r"\w+", msg)
    for w in words:
        if w == "budget":
            return "budget", "evaluations"
        if w == "tau":
            return "budget", "tau"
        if w in PARAM_KEYS:
            # inner settings share field names with the outer ones
            for key in (w, f"inner_{w}"):
                if cp.get("params", key, fallback="").strip():
                    return "params", key
            return "params", w
    return "params", None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def make_problem(name, dims=None, mode=None, case_file=None, budget=None):
    """Objective handle and decision space for a benchmark or reservoir case."""
    if name in BENCHMARKS:
        return benchmark(name, dims, budget)
    from .reservoir import ReservoirNPV, default_mode, load_case, make_case

    if case_file:
        case = load_case(case_file)
        mode = mode or "placement"
    else:
        case, _ = make_case(name)
        mode = mode or default_mode(name).value
    space = case.decision_space(mode)
    return Objective(ReservoirNPV(case, mode), space, budget, name=name), space


def run_single(cfg: ExperimentConfig, algorithm: str, seed: int) -> RunTrace:
    """One seeded run of ``algorithm``; the trace holds exactly ``budget`` rows."""
    objective, space = cfg.make_problem()
    if algorithm == "de":
        db = EvaluationDatabase(space, allow_duplicates=True)
        run_de(objective, space, cfg.de_params(seed), cfg.budget, db=db, stage=Stage.BASELINE)
        return RunTrace(db)
    _, trace = run_gdde(objective, space, cfg.gdde_params(algorithm, seed))
    return trace


def run_name(algorithm: str, seed: int) -> str:
    return f"{algorithm}_seed{seed}"


def _run_job(cfg: ExperimentConfig, algorithm: str, seed: int, out: str) -> tuple[str, int, list, float]:
    t0 = time.perf_counter()
    trace = run_single(cfg, algorithm, seed)
    out = Path(out)
    name = run_name(algorithm, seed)
    trace.write_csv(out / "traces" / f"{name}.csv")
    trace.write_diagnostics(out / "diagnostics" / f"{name}.jsonl")
    return algorithm, seed, trace.database.best_so_far().tolist(), time.perf_counter() - t0


def write_convergence(path, seeds, curves) -> None:
    """Best-so-far matrix: one row per evaluation, one column per seed."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eval_index"] + [f"seed_{s}" for s in seeds])
        for i in range(len(curves[0])):
            w.writerow([i] + [repr(float(c[i])) for c in curves])


def read_convergence(path) -> tuple[tuple[int, ...], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    seeds = tuple(int(h.split("_", 1)[1]) for h in rows[0][1:])
    data = np.array([[float(v) for v in row[1:]] for row in rows[1:]], dtype=float)
    return seeds, data.reshape(len(rows) - 1, len(seeds))


def summarize(finals: dict[str, list[float]]) -> dict:
    return {
        alg: {
            "median": float(np.median(v)),
            "min": float(np.min(v)),
            "max": float(np.max(v)),
            "runs": len(v),
        }
        for alg, v in finals.items()
    }


def run_experiment(cfg: ExperimentConfig, out, workers: int = 1) -> dict:
    """Run every (algorithm, seed) pair and write the result directory.

    Returns the summary dictionary also stored in ``summary.json``.
    """
    out = Path(out)
    for sub in ("traces", "diagnostics", "convergence"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    jobs = [(a, s) for a in cfg.algorithms for s in cfg.seeds]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, cfg, a, s, str(out)) for a, s in jobs]
            results = [f.result() for f in futures]
    else:
        results = []
        for a, s in jobs:
            results.append(_run_job(cfg, a, s, str(out)))
            logger.info("%s seed %d done: best %g", a, s, results[-1][2][-1])
    curves = {(a, s): c for a, s, c, _ in results}
    wall = {f"{a}_seed{s}": t for a, s, _, t in results}

    finals = {}
    for a in cfg.algorithms:
        cols = [curves[(a, s)] for s in cfg.seeds]
        write_convergence(out / "convergence" / f"{a}.csv", cfg.seeds, cols)
        finals[a] = [c[-1] for c in cols]
    summary = {
        "problem": cfg.problem,
        "budget": cfg.budget,
        "tau": cfg.tau,
        "seeds": list(cfg.seeds),
        "algorithms": summarize(finals),
        "wall_seconds": {"total": time.perf_counter() - t0, "runs": wall},
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def checkpoints(budget: int, n: int = N_CHECKPOINTS) -> list[int]:
    """Evaluation counts at ``1/n, 2/n, ..., 1`` of the budget."""
    return [max(1, math.ceil(budget * k / n)) for k in range(1, n + 1)]


def _relation(a: float, b: float) -> str:
    if a > b:
        return ">"
    if a < b:
        return "<"
    return "="


def compare(directory) -> dict:
    """Median best-so-far per algorithm at 10% budget checkpoints.

    Writes ``compare.json`` next to the inputs and returns the same data.
    """
    directory = Path(directory)
    files = sorted((directory / "convergence").glob("*.csv"))
    if len(files) < 2:
        raise ComparisonError(f"{directory}: need at least two algorithms, found {len(files)}")
    data = {}
    for f in files:
        data[f.stem] = read_convergence(f)
    algs = [a for a in ALGORITHMS if a in data] + sorted(a for a in data if a not in ALGORITHMS)
    budgets = {a: len(data[a][1]) for a in algs}
    if len(set(budgets.values())) != 1:
        raise ComparisonError(f"mismatched budgets: {budgets}")
    seed_sets = {a: data[a][0] for a in algs}
    if len({tuple(sorted(s)) for s in seed_sets.values()}) != 1:
        raise ComparisonError(f"mismatched seed sets: {seed_sets}")
    budget = budgets[algs[0]]
    rows = []
    for n in checkpoints(budget):
        med = {a: float(np.median(data[a][1][n - 1])) for a in algs}
        order = {
            f"{a} vs {b}": _relation(med[a], med[b])
            for i, a in enumerate(algs)
            for b in algs[i + 1 :]
        }
        rows.append({"evaluations": n, "median": med, "order": order})
    result = {"budget": budget, "seeds": list(seed_sets[algs[0]]), "algorithms": algs, "checkpoints": rows}
    with open(directory / "compare.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


def dominance(result: dict, a: str, b: str, after: int = 0) -> float:
    """Share of checkpoints beyond ``after`` evaluations where median ``a`` >= median ``b``."""
    rows = [r for r in result["checkpoints"] if r["evaluations"] > after]
    if not rows:
        return float("nan")
    return sum(r["median"][a] >= r["median"][b] for r in rows) / len(rows)


def format_comparison(result: dict) -> str:
    algs = result["algorithms"]
    head = ["evals"] + algs
    body = [[str(r["evaluations"])] + [f"{r['median'][a]:.6g}" for a in algs] for r in result["checkpoints"]]
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in [head] + body]
    last = result["checkpoints"][-1]["order"]
    lines.append("final: " + ", ".join(f"{k}: {v}" for k, v in last.items()))
    return "\n".join(lines)
