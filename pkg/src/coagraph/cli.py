"""Command-line entry point: ``coagraph <command> [options]``.

Every command writes a CSV table (or JSON with ``--json``) whose leading
``#`` lines carry the run configuration. Exit status is 0 on success, 2 on
usage errors and 1 when the computation itself fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .configuration import build_stub_system
from .degree_model import (
    format_law,
    format_offspring,
    offspring_law,
    parse_law,
    parse_offspring,
)
from .estimator import (
    convergence_sweep,
    run_cluster_size_experiment,
    run_dwass_check,
    run_rerooting_experiment,
    run_structure_experiment,
)
from .gw_law import dwass_total_progeny, exact_code_law, poisson_conditioned_law_check
from .oracle import exact_rho_table, closed_form_report, closed_form_tree_pairing_count, rooted_tally
from .smoluchowski import initial_monomers, integrate, steady_state_error
from .tree_code import format_code

THREADS_ENV = "COAGRAPH_THREADS"


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Everything needed to rerun a command; serialises to one JSON object."""

    command: str
    law: str | None = None
    n: int | None = None
    n_list: list | None = None
    replicates: int | None = None
    mode: str | None = None
    seed: int | None = None
    caps: dict = field(default_factory=dict)
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


# --- argument types ---------------------------------------------------------------


def _law_arg(text):
    try:
        return parse_law(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _offspring_arg(text):
    try:
        return parse_offspring(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _int_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _count(text):
    value = int(float(text))
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


# --- output -----------------------------------------------------------------------


def _cell(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, tuple):
        return format_code(x)
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else str(x)


@dataclass
class Table:
    header: list
    rows: list
    notes: list = field(default_factory=list)  # trailing (key, value) summary lines

    def to_csv(self, meta: dict) -> str:
        buf = io.StringIO()
        for k, v in meta.items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_cell(x) for x in r])
        for k, v in self.notes:
            buf.write(f"# {k}={_cell(v)}\n")
        return buf.getvalue()

    def to_json(self, meta: dict) -> str:
        body = {
            "metadata": meta,
            "columns": self.header,
            "rows": [[_cell(x) for x in r] for r in self.rows],
            "summary": {k: _cell(v) for k, v in self.notes},
        }
        return json.dumps(body, indent=1, sort_keys=True) + "\n"


def _workers(args) -> int:
    cap = os.environ.get(THREADS_ENV)
    want = args.workers if args.workers else 1
    if cap:
        try:
            want = min(want, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    return want


# --- commands ---------------------------------------------------------------------


def _gw_exact(args, cfg):
    if (args.law is None) == (args.offspring is None):
        raise UsageError("give exactly one of --law and --offspring")
    nu = offspring_law(args.law) if args.law is not None else args.offspring
    cfg.law = format_law(args.law) if args.law is not None else None
    cfg.extra["offspring"] = format_offspring(nu)
    cfg.caps["max_size"] = args.max_size
    table = exact_code_law(nu, args.max_size)
    rows = [(c, m, float(m)) for c, m in sorted(table.items(), key=lambda cm: (len(cm[0]), cm[0]))]
    notes = [(f"dwass_k{k}", dwass_total_progeny(nu, k)) for k in range(2, args.max_size + 1)]
    return Table(["code", "mass", "mass_float"], rows, notes)


def _simulate_rho(args, cfg):
    if args.degrees is None and args.law is None:
        raise UsageError("simulate rho needs --law or --degrees")
    if args.degrees is None and args.n is None:
        raise UsageError("simulate rho needs --n with --law")
    rep = run_structure_experiment(
        args.law, args.n, args.replicates, args.code_size_cap, args.mode, args.seed,
        degrees=args.degrees, workers=_workers(args),
    )
    cfg.law = rep.metadata["law"]
    cfg.n = rep.metadata["n"]
    if args.degrees is not None:
        cfg.extra["degrees"] = ",".join(map(str, args.degrees))
    cfg.caps["code_size"] = args.code_size_cap
    rows = [(r.code, r.mean, r.se, r.variance, r.target, r.z) for r in rep.rows]
    for r in (rep.other_tree, rep.null):
        rows.append((r.code, r.mean, r.se, r.variance, None, None))
    notes = [("S", rep.metadata.get("S"))] if rep.metadata.get("S") is not None else []
    return Table(["code", "mean", "se", "variance", "gw2_target", "z"], rows, notes)


def _simulate_sizes(args, cfg):
    rep = run_cluster_size_experiment(
        args.law, args.n, args.replicates, args.k_cap, args.mode, args.seed, workers=_workers(args)
    )
    cfg.caps["k"] = args.k_cap
    rows = [(r.k, r.mean, r.se, r.target, r.z) for r in rep.rows]
    notes = [("weighted_l1", rep.weighted_l1), ("weighted_l1_se", rep.weighted_l1_se), ("mass_ok", rep.mass_ok)]
    return Table(["k", "density", "se", "target", "z"], rows, notes)


def _sweep(args, cfg):
    cfg.n_list = args.n_list
    cfg.caps["code_size"] = args.code_size_cap
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        points = convergence_sweep(
            args.law, args.n_list, args.replicates, args.seed, args.code_size_cap, args.mode,
            workers=_workers(args),
        )
    rows = [(p.n, p.max_error, p.null_mean, p.null_se) for p in points]
    notes = [("warning", str(w.message)) for w in caught]
    return Table(["n", "max_abs_error", "null_mean", "null_se"], rows, notes)


def _reroot(args, cfg):
    cfg.extra["offspring"] = format_offspring(args.offspring)
    cfg.extra["samples"] = args.samples
    cfg.caps.update(size=args.size_cap, report_size=args.report_size_cap)
    rep = run_rerooting_experiment(args.offspring, args.samples, args.size_cap, args.report_size_cap, args.seed)
    notes = [
        ("tv_before_after", rep.tv_before_after),
        ("band_two_sample", rep.band_two_sample),
        ("tv_after_exact", rep.tv_after_exact),
        ("band_one_sample", rep.band_one_sample),
        ("censored", rep.censored),
        ("passed", rep.passed),
    ]
    return Table(["code", "before", "after", "exact"], list(rep.rows), notes)


def _dwass(args, cfg):
    cfg.extra["offspring"] = format_offspring(args.offspring)
    cfg.extra["samples"] = args.samples
    cfg.caps.update(k=args.k_cap, size=args.size_cap)
    rep = run_dwass_check(args.offspring, args.samples, args.k_cap, args.seed, args.size_cap)
    rows = [("tail" if k is None else k, obs, p, p * rep.samples) for k, obs, p in rep.rows]
    notes = [("chi2", rep.chi2), ("dof", rep.dof), ("p_value", rep.p_value),
             ("censored", rep.censored), ("passed", rep.passed)]
    return Table(["k", "observed", "probability", "expected"], rows, notes)


def _poisson(args, cfg):
    cfg.extra.update(p=args.p, samples=args.samples)
    cfg.caps["report_size"] = args.report_size_cap
    rep = poisson_conditioned_law_check(args.p, args.samples, args.seed, args.report_size_cap)
    notes = [("tv", rep.tv), ("band", rep.band), ("passed", rep.passed)]
    return Table(["code", "conditioned_single_ancestor", "gw2"], list(rep.rows), notes)


def _oracle(args, cfg):
    cfg.extra["degrees"] = ",".join(map(str, args.degrees))
    system = build_stub_system(args.degrees)
    table = exact_rho_table(system)
    tally = rooted_tally(system)
    spanning = system.S == 2 * (system.n - 1)
    keyed = sorted(table.items(), key=lambda kv: (kv[0] is None, () if kv[0] is None else (len(kv[0]), kv[0])))
    rows = []
    for c, p in keyed:
        closed = variant = enumerated = None
        if spanning and c is not None and len(c) == system.n:
            rep = closed_form_report(system, c)
            closed, variant, enumerated = rep.as_triple()
        rows.append(("null" if c is None else c, p.numerator, p.denominator, float(p), closed, variant, enumerated))
    notes = [("pairings", tally.pairings), ("tree_pairings", tally.tree_pairings)]
    if spanning:
        notes.append(("tree_pairings_closed_form", closed_form_tree_pairing_count(system)))
    header = ["code", "numerator", "denominator", "expectation", "closed_form", "variant", "enumerated"]
    return Table(header, rows, notes)


def _smolu(args, cfg):
    cfg.law = format_law(args.law)
    cfg.caps.update(A_max=args.a_max, K_max=args.k_max, k_report=args.k_report)
    cfg.extra.update(T=args.T, dt=args.dt, method=args.method, clock=args.clock)
    grid = initial_monomers(args.law, args.a_max, args.k_max)
    run = integrate(grid, args.T, args.dt, args.method, clock=args.clock)
    rows = []
    for t, g in run.checkpoints:
        for a, k in zip(*g.c.nonzero()):
            rows.append((t, int(a), int(k) + 1, float(g.c[a, k])))
    notes = [
        ("A_max", run.final.A_max),
        ("shed_flux", run.final.shed_flux),
        ("max_drift_rate", run.max_drift_rate),
        ("valid", run.valid),
    ]
    for r in steady_state_error(run.final, args.law, min(args.k_report, run.final.K_max)):
        notes.append((f"steady_k{r.k}", f"c0k={r.c0k!r};target={r.target!r};abs_error={r.abs_error!r}"))
    return Table(["t", "a", "k", "c"], rows, notes)


# --- parser -----------------------------------------------------------------------


def _common(p, *, law=False, offspring=False, sim=False):
    p.add_argument("--seed", type=int, default=0)
    if law:
        p.add_argument("--law", type=_law_arg, help='degree law, e.g. "1:0.8,3:0.2"')
    if offspring:
        p.add_argument("--offspring", type=_offspring_arg, help='offspring law, e.g. "0:4/7,2:3/7"')
    if sim:
        p.add_argument("--n", type=_count)
        p.add_argument("--replicates", type=_count, default=20)
        p.add_argument("--mode", choices=("quota", "iid"), default="quota")
        p.add_argument("--workers", type=_count, default=None,
                       help=f"worker processes (capped by ${THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="coagraph", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top.add_argument("--out", help="write to this file instead of stdout")
    top.add_argument("--json", action="store_true",
                     help="emit JSON (with --out, also write a .json file next to the CSV)")
    top.add_argument("--deterministic", action="store_true", help="omit the timestamp line")
    top.add_argument("--config", help="JSON file whose keys are long option names")
    sub = top.add_subparsers(dest="command", required=True, metavar="command")

    gw = sub.add_parser("gw", help="GW2 code law").add_subparsers(dest="action", required=True)
    p = gw.add_parser("exact", help="exact GW2 mass of every code up to a size")
    _common(p, law=True, offspring=True)
    p.add_argument("--max-size", type=int, default=6)
    p.set_defaults(run=_gw_exact)

    sim = sub.add_parser("simulate", help="Monte Carlo on configurations").add_subparsers(
        dest="action", required=True)
    p = sim.add_parser("rho", help="rooted-structure frequencies")
    _common(p, law=True, sim=True)
    p.add_argument("--degrees", type=_int_list, help="fixed degree sequence instead of --law/--n")
    p.add_argument("--code-size-cap", type=int, default=8)
    p.set_defaults(run=_simulate_rho)
    p = sim.add_parser("sizes", help="cluster-size densities")
    _common(p, law=True, sim=True)
    p.add_argument("--k-cap", type=int, default=20)
    p.set_defaults(run=_simulate_sizes)

    p = sub.add_parser("sweep", help="rooted-structure error and non-tree mass across n")
    _common(p, law=True, sim=True)
    p.add_argument("--n-list", type=_int_list, default=[1000, 10000, 100000])
    p.add_argument("--code-size-cap", type=int, default=8)
    p.set_defaults(run=_sweep)

    p = sub.add_parser("reroot-test", help="re-rooting invariance of the GW2 law")
    _common(p, offspring=True)
    p.add_argument("--samples", type=_count, default=100000)
    p.add_argument("--size-cap", type=_count, default=10**4)
    p.add_argument("--report-size-cap", type=int, default=5)
    p.set_defaults(run=_reroot)

    p = sub.add_parser("dwass-check", help="GW2 total size against the Dwass formula")
    _common(p, offspring=True)
    p.add_argument("--samples", type=_count, default=100000)
    p.add_argument("--k-cap", type=int, default=10)
    p.add_argument("--size-cap", type=_count, default=10**4)
    p.set_defaults(run=_dwass)

    p = sub.add_parser("poisson-check", help="conditioned single-ancestor Poisson trees against GW2")
    _common(p)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--samples", type=_count, default=100000)
    p.add_argument("--report-size-cap", type=int, default=6)
    p.set_defaults(run=_poisson)

    p = sub.add_parser("oracle", help="exact rooted-structure expectations by enumeration")
    _common(p)
    p.add_argument("--degrees", type=_int_list, required=True)
    p.set_defaults(run=_oracle)

    p = sub.add_parser("smolu", help="integrate the limited-aggregation coagulation system")
    _common(p, law=True)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--method", choices=("rk4", "euler"), default="rk4")
    p.add_argument("--clock", choices=("t", "log"), default="t")
    p.add_argument("--a-max", type=int, default=None)
    p.add_argument("--k-max", type=int, default=64)
    p.add_argument("--k-report", type=int, default=10)
    p.set_defaults(run=_smolu)
    return top


def _config_argv(path: str) -> list[str]:
    """Turn a JSON config file into long options."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    argv = []
    for key, value in data.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, ",".join(map(str, value))]
        elif value is not None:
            argv += [flag, str(value)]
    return argv


def _merge_config(argv: list[str]) -> list[str]:
    # config options go right after the subcommand path so explicit flags win
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    words = [j for j, a in enumerate(rest) if not a.startswith("-")]
    cut = 0
    for j in words:
        if rest[j] in ("gw", "simulate", "sweep", "reroot-test", "dwass-check", "poisson-check", "oracle", "smolu"):
            cut = j + 1
            if rest[j] in ("gw", "simulate") and j + 1 < len(rest):
                cut = j + 2
            break
    return rest[:cut] + _config_argv(path) + rest[cut:]


def dispatch(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _merge_config(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"coagraph: error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cmd = args.command + (f" {args.action}" if getattr(args, "action", None) else "")
    cfg = ExperimentConfig(
        command=cmd,
        law=format_law(args.law) if getattr(args, "law", None) is not None else None,
        n=getattr(args, "n", None),
        replicates=getattr(args, "replicates", None),
        mode=getattr(args, "mode", None),
        seed=args.seed,
        out=args.out,
    )
    try:
        table = args.run(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"coagraph: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"coagraph: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    meta = {"version": __version__, "config": cfg.to_text()}
    if not args.deterministic:
        meta["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    text = table.to_json(meta) if args.json and not args.out else table.to_csv(meta)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        if args.json:
            stem = args.out[:-4] if args.out.endswith(".csv") else args.out
            with open(stem + ".json", "w") as fh:
                fh.write(table.to_json(meta))
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
