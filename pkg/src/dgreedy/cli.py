"""Command-line front end: analyze, ratio, simulate, fluid, bound.

Every run is determined by the distribution spec, the options and the
master ``--seed``; per-trial streams are derived by name so outputs are
byte-identical across reruns and thread counts.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exact, explore, fluid, graphgen, rng, spectra
from .errors import AlreadyQuasiOptimal, BudgetExceeded, DGreedyError

EXIT_OK, EXIT_INPUT, EXIT_SUPERCRITICAL, EXIT_NOT_CONVERGED = 0, 1, 2, 3

SIMULATE_COLUMNS = ["master_seed", "trial", "n", "policy", "sigma", "t1_violations",
                    "bad_vertices", "alpha", "budget_exceeded"]


@dataclass
class ExperimentConfig:
    command: str
    dist_spec: dict
    n: int = 0
    seeds: list = field(default_factory=list)
    master_seed: int = 0
    output_path: str | None = None
    flags: dict = field(default_factory=dict)


def load_spec(text: str) -> dict:
    """Parse a distribution spec given inline as JSON or as a path to a JSON file."""
    text = text.strip()
    if not text.startswith("{"):
        text = Path(text).read_text()
    spec = json.loads(text)
    if not isinstance(spec, dict):
        raise ValueError("distribution spec must be a JSON object")
    return spec


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------

def cmd_analyze(cfg: ExperimentConfig) -> tuple[int, str]:
    dist = spectra.DegreeDistribution.from_spec(cfg.dist_spec)
    report = spectra.criticality(dist)
    code = EXIT_OK if report.one_step_quasi_optimal else EXIT_SUPERCRITICAL
    return code, _json(report.to_dict())


def cmd_ratio(cfg: ExperimentConfig) -> tuple[int, str]:
    dist = spectra.DegreeDistribution.from_spec(cfg.dist_spec)
    result = spectra.iterate_m1(dist, max_stages=cfg.flags.get("max_stages", 100))
    code = EXIT_OK if result.converged else EXIT_NOT_CONVERGED
    if cfg.flags.get("csv"):
        rows = [s.to_dict() for s in result.stages]
        columns = list(spectra.M1StageRecord.__dataclass_fields__)
        return code, _csv(rows, columns)
    return code, _json(result.to_dict())


def _simulate_trial(args) -> dict:
    dist_spec, n, master, trial, policy, budget = args
    dist = spectra.DegreeDistribution.from_spec(dist_spec)
    degrees = graphgen.sample_degrees(dist, n, rng.stream(master, trial, "degrees"))
    g = graphgen.sample_cm(degrees, rng.stream(master, trial, "matching"))
    run = explore.uniform_greedy if policy == "greedy" else explore.degree_greedy
    res = run(g, rng.stream(master, trial, "explore"))
    row = {
        "master_seed": master,
        "trial": trial,
        "n": n,
        "policy": policy,
        "sigma": res.sigma,
        "t1_violations": res.t1_violations,
        "bad_vertices": graphgen.component_stats(g).bad_vertices,
        "alpha": None,
        "budget_exceeded": None,
    }
    if policy == "exact":
        try:
            row["alpha"] = exact.exact_alpha(g, budget=budget).alpha
            row["budget_exceeded"] = 0
        except BudgetExceeded:
            row["budget_exceeded"] = 1
    return row


def cmd_simulate(cfg: ExperimentConfig) -> tuple[int, str]:
    spectra.DegreeDistribution.from_spec(cfg.dist_spec)  # validate before fan-out
    policy = cfg.flags.get("policy", "degree-greedy")
    budget = cfg.flags.get("budget", exact.DEFAULT_BUDGET)
    jobs = [] if cfg.n <= 0 else [
        (cfg.dist_spec, cfg.n, cfg.master_seed, trial, policy, budget) for trial in cfg.seeds
    ]
    threads = cfg.flags.get("threads", 1)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_simulate_trial, jobs))
    else:
        rows = [_simulate_trial(j) for j in jobs]
    if cfg.flags.get("json"):
        return EXIT_OK, _json(rows)
    return EXIT_OK, _csv(rows, SIMULATE_COLUMNS)


def cmd_fluid(cfg: ExperimentConfig) -> tuple[int, str]:
    dist = spectra.DegreeDistribution.from_spec(cfg.dist_spec)
    curves = fluid.fluid_curves(dist=dist)
    phase = cfg.flags.get("phase", "both")
    dt = cfg.flags.get("sample_dt", fluid.DEFAULT_SAMPLE_DT)
    traj_dir = cfg.flags.get("trajectories")
    if traj_dir:
        Path(traj_dir).mkdir(parents=True, exist_ok=True)
    rows = []
    for trial in cfg.seeds:
        degrees = graphgen.sample_degrees(dist, cfg.n, rng.stream(cfg.master_seed, trial, "degrees"))
        stream = rng.stream(cfg.master_seed, trial, "fluid")
        one = fluid.simulate_phase1(degrees, stream, dt, seed=[cfg.master_seed, trial])
        runs = []
        if phase in ("1", "both"):
            runs.append((one, curves.u1, curves.a, curves.t1))
        if phase in ("2", "both"):
            two = fluid.simulate_phase2(one.end, stream, dt, seed=[cfg.master_seed, trial])
            runs.append((two, curves.u2, curves.b, curves.t2))
        for traj, u_curve, x_curve, t_closed in runs:
            if traj_dir:
                path = Path(traj_dir) / f"trial{trial:04d}_phase{traj.phase}.csv"
                fluid.write_trajectory(traj, path, curves)
            rows.append({
                "master_seed": cfg.master_seed,
                "trial": trial,
                "n": cfg.n,
                "phase": traj.phase,
                "sup_dev_u": traj.sup_deviation(u_curve, "u"),
                "sup_dev_a_or_b": traj.sup_deviation(x_curve, "secondary"),
                "T_empirical": traj.stop_time,
                "T_closed_form": t_closed,
            })
    columns = ["master_seed", "trial", "n", "phase", "sup_dev_u", "sup_dev_a_or_b",
               "T_empirical", "T_closed_form"]
    if cfg.flags.get("json"):
        return EXIT_OK, _json(rows)
    return EXIT_OK, _csv(rows, columns)


def cmd_bound(cfg: ExperimentConfig) -> tuple[int, str]:
    dist = spectra.DegreeDistribution.from_spec(cfg.dist_spec)
    lam, _ = spectra.moments(dist)
    if lam <= 0:
        out = {"kind": "exact-asymptotic", "value": float(dist.mass.sum())}
        return EXIT_OK, _json(out)
    max_stages = cfg.flags.get("max_stages", 100)
    try:
        capped, value = spectra.degree_cap_upper_bound(dist, max_stages=max_stages)
    except AlreadyQuasiOptimal:
        result = spectra.iterate_m1(dist, max_stages=max_stages)
        return EXIT_OK, _json({"kind": "exact-asymptotic", "value": result.ratio,
                               "converged": result.converged})
    report = spectra.criticality(capped)
    out = {"kind": "upper_bound", "value": value, "capped_nu_tilde": report.nu_tilde,
           "capped_mass": capped.mass.tolist()}
    return EXIT_OK, _json(out)


COMMANDS = {
    "analyze": cmd_analyze,
    "ratio": cmd_ratio,
    "simulate": cmd_simulate,
    "fluid": cmd_fluid,
    "bound": cmd_bound,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--threads", type=int, default=1)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")

    p = argparse.ArgumentParser(prog="dgreedy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("spec", help='distribution spec as JSON or a path, e.g. \'{"kind": "poisson", "lambda": 1.2}\'')
        return sp

    add("analyze", "criticality report; exit 0 if one M1 step suffices, 2 otherwise")
    sp = add("ratio", "independence ratio by iterated M1")
    sp.add_argument("--max-stages", type=int, default=100)
    sp = add("simulate", "sample graphs and run an exploration policy")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seeds", type=int, default=1, help="number of trials")
    sp.add_argument("--policy", choices=["greedy", "degree-greedy", "exact"], default="degree-greedy")
    sp.add_argument("--budget", type=int, default=exact.DEFAULT_BUDGET)
    sp = add("fluid", "simulate the matching phases against their fluid limits")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seeds", type=int, default=1)
    sp.add_argument("--phase", choices=["1", "2", "both"], default="both")
    sp.add_argument("--sample-dt", type=float, default=fluid.DEFAULT_SAMPLE_DT)
    sp.add_argument("--trajectories", help="directory for per-trial trajectory CSVs")
    sp = add("bound", "upper bound (or exact ratio) on the independence ratio")
    sp.add_argument("--max-stages", type=int, default=100)
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "spec", "seed", "out", "n", "seeds")}
    return ExperimentConfig(
        command=args.command,
        dist_spec=load_spec(args.spec),
        n=getattr(args, "n", 0) or 0,
        seeds=list(range(getattr(args, "seeds", 0) or 0)),
        master_seed=args.seed,
        output_path=args.out,
        flags=flags,
    )


def run(cfg: ExperimentConfig) -> tuple[int, str]:
    return COMMANDS[cfg.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, text = run(cfg)
    except (DGreedyError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"dgreedy {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(text, cfg.output_path)
    return code


if __name__ == "__main__":
    sys.exit(main())
