"""Command-line entry point.

Exit codes: 0 success or accept, 1 negative verdict, 2 input error,
3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import io
from .anomaly import PipelineTrace, helly_pipeline
from .consistency import check_equivariance, random_presolution, run_kl_consistency
from .csp import normalize_instance, validate_template
from .errors import BudgetExceeded, CapExceeded, CosetCSPError
from .solver import DEFAULT_NODE_CAP, solve
from .torus import (
    TorusSpec,
    build_torus,
    fooling_experiment,
    single_twist_unsolvable,
    twist,
)

OK, NEGATIVE, INPUT_ERROR, BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _emit(args, obj, human=None):
    if args.format == "json":
        print(json.dumps(obj, sort_keys=True))
    elif human is not None:
        print(human)
    else:
        for k, v in obj.items():
            print(f"{k}: {v if not isinstance(v, (dict, list)) else json.dumps(v, sort_keys=True)}")


def parse_n_range(text: str) -> list[int]:
    """``"2..6"``, ``"2-6"`` or ``"2,3,5"``."""
    for sep in ("..", "-"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _problem(args):
    if not args.instance:
        raise InputError("--instance is required")
    inst, t = io.load_problem(args.instance, args.template)
    return normalize_instance(inst, t), t


def cmd_validate(args) -> int:
    if not args.template:
        raise InputError("--template is required")
    t = io.load_template(args.template)
    report = validate_template(t)
    _emit(args, {"valid": report.valid, "violations": report.violations})
    return OK if report.valid else NEGATIVE


def cmd_solve(args) -> int:
    inst, t = _problem(args)
    h = solve(inst, t, node_cap=args.budget or DEFAULT_NODE_CAP)
    if h is None:
        _emit(args, {"solvable": False}, "unsolvable")
        return NEGATIVE
    sol = io.assignment_to_json(h, inst)
    _emit(args, {"solvable": True, "solution": sol}, json.dumps(sol, sort_keys=False))
    return OK


def cmd_consistency(args) -> int:
    if not 1 <= args.k <= args.l:
        raise InputError("need 1 <= k <= l")
    inst, t = _problem(args)
    res = run_kl_consistency(inst, t, args.k, args.l, trace=args.trace)
    if args.trace:
        sizes = {X: len(v) for X, v in res.initial.items()}
        for e in res.trace:
            sizes[e.subset] -= len(e.removed)
            print(json.dumps({"stage": e.stage, "subset": list(e.subset),
                              "removed": [list(r) for r in e.removed],
                              "size": sizes[e.subset]}))
    if args.assert_equivariance:
        seed, count = _ints(args.assert_equivariance)
        rng = random.Random(seed)
        for _ in range(count):
            s = random_presolution(inst, t, rng)
            if not check_equivariance(inst, t, s, args.k, args.l):
                _emit(args, {"equivariance": False, "presolution": s})
                return NEGATIVE
    verdict = "accept" if res.accept else "reject"
    _emit(args, {"verdict": verdict, "k": args.k, "l": args.l, "passes": res.passes,
                 "stages": res.stages, "emptied_stage": res.emptied_stage,
                 "all_nonempty": res.all_nonempty})
    return OK if res.accept else NEGATIVE


def cmd_pipeline(args) -> int:
    if not args.template and not args.instance:
        raise InputError("--template or --instance is required")
    inst = anomaly = None
    if args.instance:
        d = io.read_json(args.instance)
        inst, t = io.load_problem(d, args.template)
        if "anomaly" in d:
            anomaly = io.assignment_from_json(d["anomaly"])
    else:
        t = io.load_template(args.template)
    trace = PipelineTrace()
    adp = helly_pipeline(t, inst, anomaly, budget=args.budget or 20_000, trace=trace)
    if adp is None:
        _emit(args, {"anomaly": None, "verdict": "no anomaly found (2-Helly or budget)"})
        return NEGATIVE
    out = adp.to_json()
    out["trace"] = trace.steps
    _emit(args, out)
    return OK


def _load_spec(ref) -> TorusSpec:
    d = io.read_json(ref)
    adp = io.load_adp(d.get("adp") or "adp_parity")
    spec = TorusSpec(int(d["n"]), adp)
    for tw in d.get("twists", ()):
        spec = twist(spec, tuple(tw["slot"]), tuple(tw["pi"]))
    return spec, d.get("adp") or "adp_parity"


def _spec_from_args(args):
    if args.spec:
        return _load_spec(args.spec)
    if args.n is None:
        raise InputError("--spec or --n is required")
    ref = args.adp or "adp_parity"
    return TorusSpec(args.n, io.load_adp(ref)), ref


def _write(args, obj):
    text = json.dumps(obj, indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_torus(args) -> int:
    sub = args.torus_command
    if sub == "gen":
        spec, _ = _spec_from_args(args)
        t = spec.adp.template.copy()
        inst = build_torus(spec, t)
        d = io.instance_to_json(inst)
        _write(args, {"template": io.template_to_json(t, include_all=True), **d})
        return OK
    if sub == "twist":
        spec, ref = _spec_from_args(args)
        if not args.slot or not args.pi:
            raise InputError("--slot and --pi are required")
        kind, i, j = args.slot.split(",")
        spec = twist(spec, (kind, int(i), int(j)), tuple(_ints(args.pi)))
        _write(args, spec.to_json(ref))
        return OK
    if sub == "certify":
        spec, _ = _spec_from_args(args)
        verdict = single_twist_unsolvable(spec).value
        _emit(args, {"certificate": verdict}, verdict)
        return OK if verdict == "Unsolvable" else NEGATIVE
    if sub == "experiment":
        adp = io.load_adp(args.adp or "adp_parity")
        rep = fooling_experiment(adp, args.k, args.l, parse_n_range(args.n_range),
                                 node_cap=args.budget or DEFAULT_NODE_CAP, jobs=args.jobs)
        for r in rep["records"]:
            print(json.dumps(r, sort_keys=False))
        print(json.dumps({"minimal_fooling_n": rep["minimal_fooling_n"], "twist": rep["twist"],
                          "k": rep["k"], "l": rep["l"]}))
        return OK if rep["minimal_fooling_n"] is not None else NEGATIVE
    raise InputError(f"unknown torus command {sub!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--template", help="template file or corpus name")
    common.add_argument("--instance", help="instance file or corpus name")
    common.add_argument("--k", type=int, default=2)
    common.add_argument("--l", type=int, default=3)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None)
    common.add_argument("--format", choices=("human", "json"), default="human")
    common.add_argument("--jobs", type=int, default=1)

    p = argparse.ArgumentParser(prog="cosetcsp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a coset template")
    sub.add_parser("solve", parents=[common], help="find a solution")
    c = sub.add_parser("consistency", parents=[common], help="run (k,l)-consistency")
    c.add_argument("--trace", action="store_true", help="emit stagewise removals as JSON lines")
    c.add_argument("--assert-equivariance", metavar="SEED,COUNT")
    sub.add_parser("pipeline", parents=[common], help="anomaly to almost-direct product")

    tor = sub.add_parser("torus", help="torus instances")
    tsub = tor.add_subparsers(dest="torus_command", required=True)
    for name in ("gen", "twist", "certify", "experiment"):
        q = tsub.add_parser(name, parents=[common])
        q.add_argument("--spec", help="torus spec file")
        q.add_argument("--n", type=int)
        q.add_argument("--adp", help="almost-direct product file or corpus name")
        q.add_argument("--out", help="output file (default stdout)")
        if name == "twist":
            q.add_argument("--slot", help="KIND,i,j with KIND R or Rp")
            q.add_argument("--pi", help="comma-separated carrier elements")
        if name == "experiment":
            q.add_argument("--n-range", default="2..6")
    return p


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "consistency": cmd_consistency,
    "pipeline": cmd_pipeline,
    "torus": cmd_torus,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (BudgetExceeded, CapExceeded) as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return BUDGET
    except (InputError, CosetCSPError, OSError, ValueError, KeyError, TypeError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
