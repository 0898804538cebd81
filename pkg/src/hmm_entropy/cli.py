"""Command-line front end.

stdout carries only JSON; diagnostics go to stderr.  Exit codes:

    0  success
    1  malformed input, usage error or invalid model
    2  impossible observation sequence or impossible constraint
    3  refusal (enumeration cap exceeded)
"""

import argparse
import json
import math
import statistics
import sys
import time

import numpy as np

from . import entropy as ent
from .forward_backward import forward_backward, pairwise_marginal, range_marginal, state_marginal
from .model import (EnumerationCapExceeded, ImpossibleConstraint, ImpossibleObservation,
                    ModelError, SubseqConstraint, load_model, load_obs, model_from_dict,
                    oracle_posterior, oracle_subseq_entropy, random_model, save_model, validate)

EXIT_OK, EXIT_INPUT, EXIT_IMPOSSIBLE, EXIT_REFUSED = 0, 1, 2, 3

ALGORITHMS = ("esrfb", "hernando", "mann-mccallum", "brute")
SUBSEQ_ALGORITHMS = ("esrfb", "mann-mccallum", "brute")
BENCH_ALGORITHMS = ("esrfb", "hernando", "mann-mccallum")


class UsageError(Exception):
    pass


class Refusal(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _read(path):
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _inputs(args):
    model = load_model(_read(args.model))
    obs = load_obs(_read(args.obs), model)
    return model, obs


def _unit_divisor(args):
    return math.log(2) if args.bits else 1.0


def _emit(obj):
    json.dump(obj, sys.stdout, allow_nan=False)
    sys.stdout.write("\n")


def run_entropy(model, obs, algorithm):
    """Return ``(entropy_nats, log_likelihood, peak_state_elems)``."""
    if algorithm == "esrfb":
        r = ent.esrfb_entropy(model, obs)
    elif algorithm == "hernando":
        r = ent.hernando_entropy(model, obs)
    elif algorithm == "mann-mccallum":
        r = ent.mm_entropy(model, obs)
    elif algorithm == "brute":
        try:
            post = oracle_posterior(model, obs)
        except EnumerationCapExceeded as e:
            raise Refusal(str(e)) from None
        p = post.probs[post.probs > 0]
        return float(-(p * np.log(p)).sum()) + 0.0, math.log(post.evidence), post.probs.size
    else:
        raise UsageError(f"unknown algorithm {algorithm!r}")
    return r.entropy, r.log_likelihood, r.peak_state_elems


def cmd_entropy(args):
    model, obs = _inputs(args)
    start = time.perf_counter()
    value, loglik, elems = run_entropy(model, obs, args.algorithm)
    elapsed = (time.perf_counter() - start) * 1e3
    _emit({
        "algorithm": args.algorithm,
        "value": value / _unit_divisor(args),
        "unit": "bits" if args.bits else "nats",
        "log_likelihood": loglik,
        "wall_time_ms": elapsed,
        "peak_state_elems": int(elems),
    })


def _parse_states(text):
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"--states must be comma-separated integers, got {text!r}") from None


def _subseq_rows(model, obs, l, r, values, algorithm):
    """List of ``(values, SubseqResult-like)``; ``values=None`` means enumerate all."""
    n = model.num_states
    if values is not None:
        constraint = SubseqConstraint(l, r, values)
        constraint.check(n, obs.size)
    if algorithm == "esrfb":
        if values is None:
            return ent.esrfb_subseq_enumerate(model, obs, l, r)
        return [(values, ent.esrfb_subseq_entropy(model, obs, constraint))]
    if algorithm == "mann-mccallum":
        if values is None:
            return ent.mann_mccallum_subseq_enumerate(model, obs, l, r)
        return [(values, ent.mann_mccallum_subseq(model, obs, constraint))]
    if algorithm == "brute":
        try:
            post = oracle_posterior(model, obs)
        except EnumerationCapExceeded as e:
            raise Refusal(str(e)) from None
        loglik = math.log(post.evidence)
        if values is not None:
            res = oracle_subseq_entropy(model, obs, constraint, posterior=post)
            return [(values, _brute_row(res, loglik, post))]
        rows = []
        for vals in ent.constraint_assignments(n, l, r, ent.ENUMERATION_CAP):
            try:
                res = oracle_subseq_entropy(model, obs, SubseqConstraint(l, r, vals), posterior=post)
                rows.append((vals, _brute_row(res, loglik, post)))
            except ImpossibleConstraint:
                rows.append((vals, ent.SubseqResult(None, 0.0, 0.0, loglik, post.probs.size)))
        return rows
    raise UsageError(f"unknown algorithm {algorithm!r}")


def _brute_row(res, loglik, post):
    p, h = res.p_constraint, res.h_cond
    return ent.SubseqResult(h, p, p * (-h + math.log(p)), loglik, post.probs.size)


def cmd_subseq(args):
    model, obs = _inputs(args)
    if (args.states is None) == (not args.enumerate):
        raise UsageError("give exactly one of --states or --enumerate")
    values = None if args.enumerate else _parse_states(args.states)
    if not 0 <= args.l <= args.r < obs.size:
        raise UsageError(f"need 0 <= --from <= --to <= {obs.size - 1}")
    if args.enumerate and model.num_states ** (args.r - args.l + 1) > ent.ENUMERATION_CAP:
        raise Refusal(f"enumeration of {model.num_states}**{args.r - args.l + 1} "
                      f"assignments exceeds cap {ent.ENUMERATION_CAP}")
    div = _unit_divisor(args)
    start = time.perf_counter()
    rows = _subseq_rows(model, obs, args.l, args.r, values, args.algorithm)
    elapsed = (time.perf_counter() - start) * 1e3
    reports = []
    for vals, res in rows:
        reports.append({
            "algorithm": args.algorithm,
            "from": args.l,
            "to": args.r,
            "states": list(vals),
            "value": None if res.h_cond is None else res.h_cond / div,
            "unit": "bits" if args.bits else "nats",
            "p_constraint": res.p_constraint,
            "h_joint_term": res.h_joint_term / div,
            "log_likelihood": res.log_likelihood,
            "wall_time_ms": elapsed,
            "peak_state_elems": int(res.peak_state_elems),
        })
    _emit(reports if args.enumerate else reports[0])


def cmd_marginal(args):
    model, obs = _inputs(args)
    fb = forward_backward(model, obs)
    last = obs.size - 1
    if args.at is not None:
        if not 0 <= args.at <= last:
            raise UsageError(f"--at must lie in [0, {last}]")
        _emit({"at": args.at, "marginal": state_marginal(fb, args.at).tolist()})
    elif args.pair is not None:
        if not 1 <= args.pair <= last:
            raise UsageError(f"--pair must lie in [1, {last}]")
        _emit({"pair": args.pair,
               "marginal": pairwise_marginal(model, obs, fb, args.pair).tolist()})
    else:
        l, r = args.range
        if args.states is None:
            raise UsageError("--range needs --states")
        constraint = SubseqConstraint(l, r, _parse_states(args.states))
        constraint.check(model.num_states, obs.size)
        _emit({"range": [l, r], "states": list(constraint.values),
               "probability": range_marginal(model, obs, fb, constraint)})


def cmd_validate(args):
    try:
        d = json.loads(_read(args.model))
    except json.JSONDecodeError as e:
        raise ModelError(f"malformed JSON: {e}") from None
    model = model_from_dict(d, check=False)
    problems = validate(model)
    _emit({"valid": not problems, "violations": [v.as_dict() for v in problems]})
    if problems:
        for v in problems:
            print(f"violation: {v.message}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_bench(args):
    if args.n < 1 or args.t < 0 or args.repeat < 1:
        raise UsageError("need --n >= 1, --t >= 0, --repeat >= 1")
    m = args.m or args.n
    model = random_model(args.n, m, args.seed)
    obs = np.random.default_rng(args.seed).integers(0, m, args.t + 1)
    algorithms = BENCH_ALGORITHMS if args.algorithm == "all" else (args.algorithm,)
    results = []
    for name in algorithms:
        samples, elems = [], None
        for _ in range(args.repeat):
            start = time.perf_counter()
            _, _, elems = run_entropy(model, obs, name)
            samples.append((time.perf_counter() - start) * 1e3)
        results.append({
            "algorithm": name,
            "samples_ms": samples,
            "median_ms": statistics.median(samples),
            "peak_state_elems": int(elems),
        })
    _emit({"n": args.n, "m": m, "t": args.t, "seed": args.seed, "repeat": args.repeat,
           "results": results})


def cmd_random(args):
    sys.stdout.write(save_model(random_model(args.n, args.m, args.seed)) + "\n")


def build_parser():
    p = _Parser(prog="hmm-entropy", description="HMM state-sequence entropy tools")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def io(sp):
        sp.add_argument("--model", required=True, help="model JSON file")
        sp.add_argument("--obs", required=True, help="observation JSON file")

    sp = sub.add_parser("entropy", help="H(S | o)")
    io(sp)
    sp.add_argument("--algorithm", choices=ALGORITHMS, default="esrfb")
    sp.add_argument("--bits", action="store_true", help="report bits instead of nats")
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("subseq", help="entropy outside [from, to] given fixed states")
    io(sp)
    sp.add_argument("--from", dest="l", type=int, required=True)
    sp.add_argument("--to", dest="r", type=int, required=True)
    sp.add_argument("--states", help='comma-separated states, e.g. "0,1"')
    sp.add_argument("--enumerate", action="store_true", help="all assignments of s_{from:to}")
    sp.add_argument("--algorithm", choices=SUBSEQ_ALGORITHMS, default="esrfb")
    sp.add_argument("--bits", action="store_true")
    sp.set_defaults(func=cmd_subseq)

    sp = sub.add_parser("marginal", help="posterior state marginals")
    io(sp)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--at", type=int, metavar="T")
    g.add_argument("--pair", type=int, metavar="T")
    g.add_argument("--range", type=int, nargs=2, metavar=("L", "R"))
    sp.add_argument("--states")
    sp.set_defaults(func=cmd_marginal)

    sp = sub.add_parser("bench", help="time and state size on a random model")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, default=None, help="number of symbols (default n)")
    sp.add_argument("--t", type=int, required=True, help="last time index T")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--repeat", type=int, default=1)
    sp.add_argument("--algorithm", choices=BENCH_ALGORITHMS + ("all",), default="all")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("validate", help="check model invariants")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("random", help="print a seeded random model")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_random)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or EXIT_OK
    except (ImpossibleObservation, ImpossibleConstraint) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except (Refusal, EnumerationCapExceeded) as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_REFUSED
    except (UsageError, ModelError, ValueError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
