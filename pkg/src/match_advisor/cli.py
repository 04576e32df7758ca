"""Command-line surface.

Subcommands: gen (instances and stand-in datasets), estimate, advise,
enumerate, validate, experiment.  Successful output goes to stdout; errors are
written to stderr as one JSON object and map to exit code 1 (2 for usage
errors, argparse-style).
"""

from __future__ import annotations

import argparse
import json
import sys

from .advice import InvalidInstanceError, validate_instance
from .data import (
    STANDIN_PRESETS,
    ChoiceMode,
    CostScheme,
    gen_er_instance,
    gen_maxcov_instance,
    gen_threshold_standin,
    load_instance,
    load_threshold_csv,
    save_instance,
)
from .experiment import ExperimentConfig, run_experiment
from .matchenum import enumerate_max_matchings
from .prob import Method, estimate_probability, exact_probability, hkuno_estimate
from .solvers import AdviseConfig, NoSolverAvailable, advise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="match-advisor",
        description=(
            "Advise an agent which restrictions to relax, under a budget, to "
            "maximize its probability of being matched."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate instances or stand-in datasets")
    gen_sub = gen.add_subparsers(dest="generator", required=True)

    g_er = gen_sub.add_parser("er", help="random bipartite instance")
    g_er.add_argument("--agents", type=int, required=True)
    g_er.add_argument("--resources", type=int, required=True)
    g_er.add_argument("--edge-prob", type=float, required=True)
    g_er.add_argument("--restrictions", type=int, required=True)
    g_er.add_argument("--max-per-resource", type=int, default=2)
    g_er.add_argument("--min-per-resource", type=int, default=0)
    g_er.add_argument(
        "--choice", choices=[m.value for m in ChoiceMode], default="mcsr"
    )
    g_er.add_argument("--seed", type=int, default=0)
    g_er.add_argument("--out", required=True)

    g_cov = gen_sub.add_parser("maxcov", help="max-coverage reduction instance")
    g_cov.add_argument("--universe", type=int, required=True)
    g_cov.add_argument(
        "--family",
        required=True,
        help='JSON list of element lists, e.g. "[[0,1],[1,2]]"',
    )
    g_cov.add_argument("--q", type=int, required=True, help="cover size budget")
    g_cov.add_argument("--t", type=int, required=True, help="coverage requirement")
    g_cov.add_argument("--out", required=True)

    g_th = gen_sub.add_parser(
        "threshold-standin", help="synthetic stand-in dataset CSVs"
    )
    g_th.add_argument("--preset", choices=sorted(STANDIN_PRESETS))
    g_th.add_argument("--agents", type=int)
    g_th.add_argument("--resources", type=int)
    g_th.add_argument("--zoom-chairs", action="store_true")
    g_th.add_argument("--seed", type=int, default=0)
    g_th.add_argument("--out-resources", required=True)
    g_th.add_argument("--out-agents", required=True)

    est = sub.add_parser("estimate", help="probability the special agent is matched")
    est.add_argument("--instance", required=True)
    est.add_argument(
        "--method",
        choices=["exact", "sample", "hkuno"],
        default="exact",
    )
    est.add_argument("--samples", type=int, default=1000)
    est.add_argument("--theta-hk", type=int, default=32)
    est.add_argument("--theta-u", type=int, default=0)
    est.add_argument("--seed", type=int, default=0)

    adv = sub.add_parser("advise", help="best restriction set under a budget")
    adv.add_argument("--instance", required=True)
    adv.add_argument("--budget", type=int, required=True)
    adv.add_argument(
        "--solver",
        choices=["auto", "greedy", "threshold", "exhaustive"],
        default="auto",
    )
    adv.add_argument("--oracle", choices=["exact", "sample", "hkuno"], default="exact")
    adv.add_argument("--samples", type=int, default=1000)
    adv.add_argument("--theta-hk", type=int, default=32)
    adv.add_argument("--theta-u", type=int, default=0)
    adv.add_argument("--seed", type=int, default=0)
    adv.add_argument("--min-cost-witness", action="store_true")
    adv.add_argument("--out", choices=["json", "csv"], default="json")

    enum = sub.add_parser("enumerate", help="stream maximum matchings as JSON lines")
    enum.add_argument("--instance", required=True)
    enum.add_argument("--cap", type=int, default=None)

    val = sub.add_parser("validate", help="check instance invariants")
    val.add_argument("--instance", required=True)

    exp = sub.add_parser("experiment", help="run an evaluation protocol")
    exp.add_argument(
        "protocol", choices=["synthetic-mcsr", "synthetic-scmr", "threshold"]
    )
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    return parser


def _cmd_gen(args) -> int:
    if args.generator == "er":
        inst = gen_er_instance(
            args.agents,
            args.resources,
            args.edge_prob,
            args.restrictions,
            args.max_per_resource,
            choice_mode=ChoiceMode(args.choice),
            seed=args.seed,
            min_restr_per_resource=args.min_per_resource,
        )
        save_instance(inst, args.out)
        print(json.dumps({"written": args.out, "agents": inst.graph.n_agents,
                          "resources": inst.graph.n_resources,
                          "pairs": len(inst.incompatibility)}))
        return 0
    if args.generator == "maxcov":
        family = json.loads(args.family)
        inst, budget, target = gen_maxcov_instance(
            args.universe, family, args.q, args.t
        )
        save_instance(inst, args.out)
        print(
            json.dumps(
                {
                    "written": args.out,
                    "budget": budget,
                    "target_probability": f"{target.numerator}/{target.denominator}",
                }
            )
        )
        return 0
    if args.generator == "threshold-standin":
        if args.preset:
            preset = STANDIN_PRESETS[args.preset]
            n_agents, n_resources = preset["n_agents"], preset["n_resources"]
            zoom_chairs = preset["zoom_chairs"] or args.zoom_chairs
        else:
            if args.agents is None or args.resources is None:
                raise ValueError("either --preset or both --agents/--resources")
            n_agents, n_resources = args.agents, args.resources
            zoom_chairs = args.zoom_chairs
        gen_threshold_standin(
            args.out_resources,
            args.out_agents,
            n_agents=n_agents,
            n_resources=n_resources,
            seed=args.seed,
            zoom_chairs=zoom_chairs,
        )
        print(
            json.dumps(
                {
                    "written": [args.out_resources, args.out_agents],
                    "agents": n_agents,
                    "resources": n_resources,
                    "standin": True,
                }
            )
        )
        return 0
    raise ValueError(f"unknown generator {args.generator!r}")


def _cmd_estimate(args) -> int:
    inst = load_instance(args.instance)
    g, agent = inst.graph, inst.special_agent
    if args.method == "exact":
        est = exact_probability(g, agent)
    elif args.method == "sample":
        est = estimate_probability(g, agent, args.samples, args.seed)
    else:
        est = hkuno_estimate(g, agent, args.theta_hk, args.theta_u, args.seed)
    print(json.dumps(est.to_dict()))
    return 0


def _cmd_advise(args) -> int:
    inst = load_instance(args.instance)
    config = AdviseConfig(
        oracle=args.oracle,
        n_samples=args.samples,
        theta_hk=args.theta_hk,
        theta_u=args.theta_u,
        seed=args.seed,
        solver=args.solver,
        min_cost_witness=args.min_cost_witness,
    )
    solution = advise(inst, args.budget, config)
    if args.out == "json":
        print(json.dumps(solution.to_dict()))
    else:
        payload = solution.to_dict()
        cols = ["chosen", "cost", "probability", "baseline", "gain", "scenario1"]
        print(",".join(cols))
        print(
            ",".join(
                [
                    ";".join(str(r) for r in payload["chosen"]),
                    str(payload["cost"]),
                    f"{solution.probability.value:.10g}",
                    f"{solution.baseline.value:.10g}",
                    f"{solution.gain:.10g}",
                    str(payload["scenario1"]).lower(),
                ]
            )
        )
    return 0


def _cmd_enumerate(args) -> int:
    inst = load_instance(args.instance)
    for m in enumerate_max_matchings(inst.graph, cap=args.cap):
        print(json.dumps({"pairs": [list(p) for p in m.pairs]}))
    return 0


def _cmd_validate(args) -> int:
    inst = load_instance(args.instance)  # raises on structural violations
    report = validate_instance(inst)
    print(
        json.dumps(
            {"instance": args.instance, "ok": report.ok,
             "violations": list(report.violations)}
        )
    )
    return 0 if report.ok else 1


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if cfg.protocol != args.protocol:
        raise ValueError(
            f"config protocol {cfg.protocol!r} does not match subcommand "
            f"{args.protocol!r}"
        )
    result = run_experiment(cfg, args.out, render_figures=not args.no_plot)
    print(json.dumps(result))
    return 0


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handlers = {
        "gen": _cmd_gen,
        "estimate": _cmd_estimate,
        "advise": _cmd_advise,
        "enumerate": _cmd_enumerate,
        "validate": _cmd_validate,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except InvalidInstanceError as exc:
        print(
            json.dumps({"error": "invalid-instance", "violations": list(exc.violations)}),
            file=sys.stderr,
        )
        return 1
    except NoSolverAvailable as exc:
        print(json.dumps({"error": "no-solver", "message": str(exc)}), file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
