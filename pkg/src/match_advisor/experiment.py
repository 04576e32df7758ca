"""Experiment harness: seeded batches of advice runs, CSV tables, figures.

Mirrors the evaluation protocol the solvers were built against: batches of
random multi-choice / single-choice instances solved by greedy next to the
exhaustive pseudo-optimum over a budget sweep, and threshold-like instances
from (stand-in) CSV datasets under the two cost schemes.

Outputs per run directory:
  runs.csv      one row per (instance, parameters, solver); deterministic for
                a fixed config, byte for byte.
  summary.csv   aggregate mean/CI rows matching the benefit-curve axes.
  timing.csv    wall-clock rows (budget sweep); inherently non-deterministic,
                kept out of runs.csv so that file stays reproducible.
  *.png         benefit-vs-budget curves (and runtime bars for threshold
                runs) rendered alongside the delimited output.

Per-instance seeds are derived from the master seed, so fanning instances out
across workers (capped by MATCH_ADVISOR_THREADS) cannot change any value in
runs.csv; rows are sorted deterministically before writing.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .advice import AdviceInstance
from .data import (
    ChoiceMode,
    CostScheme,
    gen_er_instance,
    gen_threshold_standin,
    load_threshold_csv,
)
from .prob import mix_seed
from .solvers import AdviseConfig, advise

RUN_COLUMNS = [
    "protocol",
    "instance_seed",
    "n_agents",
    "n_resources",
    "edge_prob",
    "n_restrictions",
    "max_restr_per_resource",
    "cost_scheme",
    "agent_id",
    "budget",
    "solver",
    "oracle",
    "prob_before",
    "prob_after",
    "gain",
    "cost",
    "scenario1",
]

SUMMARY_COLUMNS = [
    "protocol",
    "n_restrictions",
    "cost_scheme",
    "budget",
    "solver",
    "n_runs",
    "mean_prob_before",
    "mean_prob_after",
    "mean_gain",
    "ci95_gain",
]

TIMING_COLUMNS = ["protocol", "cost_scheme", "budget", "solver", "n_runs",
                  "mean_seconds", "ci95_seconds"]


@dataclass
class ExperimentConfig:
    protocol: str  # synthetic-mcsr | synthetic-scmr | threshold
    seed: int = 0
    n_instances: int = 20
    n_agents: int = 10
    n_resources: int = 5
    edge_prob: float = 0.2
    n_restrictions: list[int] = field(default_factory=lambda: [5])
    max_restr_per_resource: int = 2
    budgets: list[int] = field(default_factory=lambda: [1, 2, 3])
    solvers: list[str] = field(default_factory=lambda: ["greedy", "exhaustive"])
    oracle: str = "exact"
    n_samples: int = 1000
    cost_schemes: list[str] = field(default_factory=lambda: ["cost1", "cost2"])
    n_sample_agents: int = 5  # threshold protocol: how many agents get advice
    capacity_step: int = 10
    zoom_chairs: bool = False

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        if "protocol" not in payload:
            raise ValueError(f"{path}: config needs a 'protocol' key")
        return cls(**payload)


def _workers() -> int:
    raw = os.environ.get("MATCH_ADVISOR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _advise_row(inst, budget, solver, oracle, n_samples, seed, base) -> tuple[dict, float]:
    config = AdviseConfig(oracle=oracle, n_samples=n_samples, seed=seed, solver=solver)
    t0 = time.perf_counter()
    solution = advise(inst, budget, config)
    elapsed = time.perf_counter() - t0
    row = dict(base)
    row.update(
        budget=budget,
        solver=solver,
        oracle=oracle,
        prob_before=solution.baseline.value,
        prob_after=solution.probability.value,
        gain=solution.gain,
        cost=float(solution.cost),
        scenario1=solution.scenario1,
    )
    return row, elapsed


def _synthetic_tasks(cfg: ExperimentConfig):
    mode = (
        ChoiceMode.MULTI_CHOICE_SINGLE_RESTRICTION
        if cfg.protocol == "synthetic-mcsr"
        else ChoiceMode.SINGLE_CHOICE_MULTI_RESTRICTION
    )
    for index in range(cfg.n_instances):
        inst_seed = mix_seed(cfg.seed, index)
        for n_restr in cfg.n_restrictions:
            yield inst_seed, n_restr, mode


def _run_synthetic(cfg: ExperimentConfig):
    rows: list[dict] = []
    timings: list[tuple[str, int, str, float]] = []

    def run_one(task):
        inst_seed, n_restr, mode = task
        inst = gen_er_instance(
            cfg.n_agents,
            cfg.n_resources,
            cfg.edge_prob,
            n_restr,
            cfg.max_restr_per_resource,
            choice_mode=mode,
            seed=inst_seed,
        )
        base = {
            "protocol": cfg.protocol,
            "instance_seed": inst_seed,
            "n_agents": cfg.n_agents,
            "n_resources": cfg.n_resources,
            "edge_prob": cfg.edge_prob,
            "n_restrictions": n_restr,
            "max_restr_per_resource": cfg.max_restr_per_resource,
            "cost_scheme": "",
            "agent_id": "",
        }
        out = []
        for budget in cfg.budgets:
            for solver in cfg.solvers:
                row, elapsed = _advise_row(
                    inst, budget, solver, cfg.oracle, cfg.n_samples, inst_seed, base
                )
                out.append((row, ("", budget, solver, elapsed)))
        return out

    tasks = list(_synthetic_tasks(cfg))
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]
    for chunk in results:
        for row, (scheme, budget, solver, elapsed) in chunk:
            rows.append(row)
            timings.append((scheme, budget, solver, elapsed))
    return rows, timings


def _run_threshold(cfg: ExperimentConfig, out_dir: Path):
    data_dir = out_dir / "standin_data"
    data_dir.mkdir(parents=True, exist_ok=True)
    resources_path = data_dir / "resources.csv"
    agents_path = data_dir / "agents.csv"
    gen_threshold_standin(
        resources_path,
        agents_path,
        n_agents=cfg.n_agents,
        n_resources=cfg.n_resources,
        seed=cfg.seed,
        zoom_chairs=cfg.zoom_chairs,
    )
    rows: list[dict] = []
    timings: list[tuple[str, int, str, float]] = []
    n_pick = min(cfg.n_sample_agents, cfg.n_agents)

    def run_one(task):
        pick_index, scheme_name = task
        agent_id = f"course{mix_seed(cfg.seed, pick_index) % cfg.n_agents}"
        inst = load_threshold_csv(
            resources_path,
            agents_path,
            CostScheme(scheme_name),
            agent_id,
            capacity_step=cfg.capacity_step,
        )
        base = {
            "protocol": cfg.protocol,
            "instance_seed": cfg.seed,
            "n_agents": cfg.n_agents,
            "n_resources": cfg.n_resources,
            "edge_prob": "",
            "n_restrictions": len(inst.restrictions),
            "max_restr_per_resource": "",
            "cost_scheme": scheme_name,
            "agent_id": agent_id,
        }
        out = []
        for budget in cfg.budgets:
            row, elapsed = _advise_row(
                inst, budget, "threshold", cfg.oracle, cfg.n_samples, cfg.seed, base
            )
            out.append((row, (scheme_name, budget, "threshold", elapsed)))
        return out

    tasks = [
        (pick, scheme) for pick in range(n_pick) for scheme in cfg.cost_schemes
    ]
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]
    for chunk in results:
        for row, timing in chunk:
            rows.append(row)
            timings.append(timing)
    return rows, timings


def _mean_ci(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, 1.96 * math.sqrt(var / n)


def _summarize(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (
            row["protocol"],
            row["n_restrictions"],
            row["cost_scheme"],
            row["budget"],
            row["solver"],
        )
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        members = groups[key]
        gains = [r["gain"] for r in members]
        mean_gain, ci = _mean_ci(gains)
        out.append(
            {
                "protocol": key[0],
                "n_restrictions": key[1],
                "cost_scheme": key[2],
                "budget": key[3],
                "solver": key[4],
                "n_runs": len(members),
                "mean_prob_before": sum(r["prob_before"] for r in members) / len(members),
                "mean_prob_after": sum(r["prob_after"] for r in members) / len(members),
                "mean_gain": mean_gain,
                "ci95_gain": ci,
            }
        )
    return out


def _summarize_timing(protocol: str, timings) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for scheme, budget, solver, elapsed in timings:
        groups.setdefault((scheme, budget, solver), []).append(elapsed)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        mean, ci = _mean_ci(groups[key])
        out.append(
            {
                "protocol": protocol,
                "cost_scheme": key[0],
                "budget": key[1],
                "solver": key[2],
                "n_runs": len(groups[key]),
                "mean_seconds": mean,
                "ci95_seconds": ci,
            }
        )
    return out


def _write_csv(path: Path, columns: list[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _sort_key(row: dict):
    return tuple(str(row[c]) for c in RUN_COLUMNS)


def _render_figures(out_dir: Path, summary: list[dict], timing: list[dict]) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    series: dict[tuple, list[tuple[int, float, float]]] = {}
    for row in summary:
        label = (row["solver"], row["cost_scheme"], row["n_restrictions"])
        series.setdefault(label, []).append(
            (row["budget"], row["mean_prob_after"], row["ci95_gain"])
        )
    if series:
        fig, ax = plt.subplots(figsize=(6, 4))
        for (solver, scheme, n_restr), points in sorted(series.items()):
            points.sort()
            label = solver
            if scheme:
                label += f" ({scheme})"
            if n_restr != "":
                label += f" |R|={n_restr}"
            ax.errorbar(
                [p[0] for p in points],
                [p[1] for p in points],
                yerr=[p[2] for p in points],
                marker="o",
                capsize=3,
                label=label,
            )
        ax.set_xlabel("budget")
        ax.set_ylabel("mean probability after relaxation")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        target = out_dir / "benefit_vs_budget.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)

    if timing:
        fig, ax = plt.subplots(figsize=(6, 4))
        schemes = sorted({row["cost_scheme"] for row in timing})
        width = 0.8 / max(len(schemes), 1)
        budgets = sorted({row["budget"] for row in timing})
        for k, scheme in enumerate(schemes):
            xs, ys, errs = [], [], []
            for row in timing:
                if row["cost_scheme"] == scheme:
                    xs.append(budgets.index(row["budget"]) + k * width)
                    ys.append(row["mean_seconds"])
                    errs.append(row["ci95_seconds"])
            ax.bar(xs, ys, width=width, yerr=errs, capsize=3,
                   label=str(scheme) or "uniform")
        ax.set_xticks([i + width * (len(schemes) - 1) / 2 for i in range(len(budgets))])
        ax.set_xticklabels([str(b) for b in budgets])
        ax.set_xlabel("budget")
        ax.set_ylabel("mean seconds per advice run")
        ax.legend(fontsize=8)
        fig.tight_layout()
        target = out_dir / "runtime_vs_budget.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    return written


def run_experiment(
    cfg: ExperimentConfig, out_dir, render_figures: bool = True
) -> dict:
    """Execute one protocol and write its tables (and figures) to `out_dir`."""
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    if cfg.protocol in ("synthetic-mcsr", "synthetic-scmr"):
        rows, timings = _run_synthetic(cfg)
    elif cfg.protocol == "threshold":
        rows, timings = _run_threshold(cfg, out_path)
    else:
        raise ValueError(f"unknown protocol {cfg.protocol!r}")

    rows.sort(key=_sort_key)
    summary = _summarize(rows)
    timing = _summarize_timing(cfg.protocol, timings)
    _write_csv(out_path / "runs.csv", RUN_COLUMNS, rows)
    _write_csv(out_path / "summary.csv", SUMMARY_COLUMNS, summary)
    _write_csv(out_path / "timing.csv", TIMING_COLUMNS, timing)
    figures = _render_figures(out_path, summary, timing) if render_figures else []
    return {
        "runs": len(rows),
        "runs_csv": str(out_path / "runs.csv"),
        "summary_csv": str(out_path / "summary.csv"),
        "timing_csv": str(out_path / "timing.csv"),
        "figures": [str(f) for f in figures],
    }
