"""Command-line front end.

Every subcommand prints one JSON document on stdout. Diagnostics go to
stderr. Exit codes: 0 success, 1 domain/input error, 2 bad flags,
3 internal inconsistency between two routes that must agree.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import __version__
from .distribution import (
    SizeFamily,
    at_least_one,
    at_least_one_structured,
    cumulative_at_least,
    dp_cap,
    exact_distribution,
    family_success_probs,
)
from .errors import FelprobError
from .fitting import fit_constants, parse_observations, parse_sizes
from .law import (
    AccuracyLaw,
    ElementPair,
    ErrorConstants,
    accuracy_probability,
    critical_size,
    size_for_probability,
)
from .mesh import local_analysis, read_mesh
from .montecarlo import (
    BLOCK_SIZE,
    RNG_SCHEME,
    UniformErrorModel,
    estimate_probability,
    simulate_family_counts,
)

SELF_CHECK_TOL = 1e-12


class InternalInconsistency(Exception):
    pass


def to_json(obj, indent: int = 2) -> str:
    """Serialize with insertion-ordered keys and floats at 17 significant digits."""

    def enc(x, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if x is None or isinstance(x, bool):
            return json.dumps(x)
        if isinstance(x, int):
            return str(x)
        if isinstance(x, float):
            if not math.isfinite(x):
                return "null"
            return format(x, ".17g")
        if isinstance(x, str):
            return json.dumps(x, ensure_ascii=False)
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in x.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(x, (list, tuple)):
            if not x:
                return "[]"
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
                return "[" + ", ".join(enc(v, level + 1) for v in x) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in x) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(x).__name__}")

    return enc(obj, 0) + "\n"


def _report(command, inputs, outputs):
    return {"command": command, "version": __version__, "inputs": inputs, "outputs": outputs}


def _read_text(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


# --- flag groups -------------------------------------------------------------


def _add_constant_flags(p, required=False):
    g = p.add_argument_group("error constants")
    g.add_argument("--ck", type=float, required=required, help="bound constant C_k of the order-k element")
    g.add_argument("--cm", type=float, required=required, help="bound constant C_m of the order-m element")
    g.add_argument("--k", type=int, required=required, help="lower polynomial order")
    g.add_argument("--m", type=int, required=required, help="higher polynomial order")


def _add_law_flags(p):
    g = p.add_argument_group("law (give --hstar/--delta or --ck/--cm/--k/--m)")
    g.add_argument("--hstar", type=float, help="critical mesh size h*")
    g.add_argument("--delta", type=int, help="order difference m - k")
    _add_constant_flags(p)


def _resolve_law(args, parser) -> tuple[AccuracyLaw, dict]:
    direct = [args.hstar, args.delta]
    consts = [args.ck, args.cm, args.k, args.m]
    if any(v is not None for v in direct) and any(v is not None for v in consts):
        parser.error("give either --hstar/--delta or --ck/--cm/--k/--m, not both")
    if any(v is not None for v in direct):
        if None in direct:
            parser.error("--hstar and --delta must be given together")
        law = AccuracyLaw(h_star=args.hstar, delta=args.delta)
        return law, {"h_star": law.h_star, "delta": law.delta}
    if None in consts:
        parser.error("a law is required: --hstar/--delta or all of --ck/--cm/--k/--m")
    law = critical_size(ErrorConstants(args.ck, args.cm), ElementPair(args.k, args.m))
    inputs = {"ck": args.ck, "cm": args.cm, "k": args.k, "m": args.m}
    inputs.update(h_star=law.h_star, delta=law.delta)
    return law, inputs


# --- subcommands -------------------------------------------------------------


def cmd_hstar(args, parser):
    fit_mode = args.fit_low is not None or args.fit_high is not None
    if args.k is None or args.m is None:
        parser.error("--k and --m are required")
    pair_inputs = {"k": args.k, "m": args.m}
    if fit_mode:
        if args.fit_low is None or args.fit_high is None:
            parser.error("--fit-low and --fit-high must be given together")
        if args.ck is not None or args.cm is not None:
            parser.error("give either --ck/--cm or --fit-low/--fit-high, not both")
        pair = ElementPair(args.k, args.m)
        low = fit_constants(parse_observations(_read_text(args.fit_low)), pair.k)
        high = fit_constants(parse_observations(_read_text(args.fit_high)), pair.m)
        law = critical_size(ErrorConstants(low.constant, high.constant), pair)
        outputs = {
            "h_star": law.h_star,
            "delta": law.delta,
            "fit_low": {"order": low.order, "constant": low.constant, "residual": low.residual},
            "fit_high": {"order": high.order, "constant": high.constant, "residual": high.residual},
        }
        inputs = {"fit_low": args.fit_low, "fit_high": args.fit_high, **pair_inputs}
    else:
        if args.ck is None or args.cm is None:
            parser.error("--ck and --cm are required (or --fit-low/--fit-high)")
        law = critical_size(ErrorConstants(args.ck, args.cm), ElementPair(args.k, args.m))
        outputs = {"h_star": law.h_star, "delta": law.delta}
        inputs = {"ck": args.ck, "cm": args.cm, **pair_inputs}
    return _report("hstar", inputs, outputs)


def cmd_prob(args, parser):
    law, inputs = _resolve_law(args, parser)
    if args.h is None and args.sizes is None and args.invert is None:
        parser.error("give --h, --sizes or --invert")
    if args.h is not None and args.sizes is not None:
        parser.error("give either --h or --sizes, not both")
    sizes = []
    if args.h is not None:
        sizes = [args.h]
        inputs["h"] = args.h
    elif args.sizes is not None:
        sizes = parse_sizes(_read_text(args.sizes))
        inputs["sizes"] = args.sizes
    points = [{"h": h, "probability": accuracy_probability(law, h)} for h in sizes]
    outputs = {"points": points}
    if args.invert is not None:
        inputs["invert"] = args.invert
        outputs["invert"] = {"target": args.invert, "h": size_for_probability(law, args.invert)}
    if args.csv:
        _write_csv(args.csv, ["h", "probability"], [(p["h"], p["probability"]) for p in points])
    return _report("prob", inputs, outputs)


def cmd_family(args, parser):
    law, inputs = _resolve_law(args, parser)
    inputs["sizes"] = args.sizes
    family = SizeFamily(tuple(parse_sizes(_read_text(args.sizes))))
    n = len(family)
    if args.at_least is not None:
        inputs["at_least"] = args.at_least
        if not 0 <= args.at_least <= n:
            raise FelprobError(f"--at-least must lie in [0, {n}], got {args.at_least}")
    cap = dp_cap()
    if args.full_dist and n > cap:
        raise FelprobError(
            f"--full-dist needs N <= {cap} (got N={n}); drop --full-dist or raise FELPROB_DP_CAP"
        )

    probs = family_success_probs(law, family).probs
    structured, partition = at_least_one_structured(law, family)
    generic = at_least_one(probs)
    if abs(structured - generic) > SELF_CHECK_TOL:
        raise InternalInconsistency(
            f"structured ({structured!r}) and generic ({generic!r}) at-least-one values disagree"
        )
    outputs = {
        "probabilities": list(probs),
        "partition": {"n1": partition.n1, "n2": partition.n2},
        "at_least_one": {"structured": structured, "generic": generic},
    }
    dist = None
    if args.full_dist or (args.at_least is not None and args.at_least >= 2):
        if n > cap:
            raise FelprobError(
                f"Prob{{S_N >= {args.at_least}}} needs the exact distribution, capped at N={cap} (got N={n})"
            )
        dist = exact_distribution(probs)
    if args.full_dist:
        outputs["distribution"] = list(dist.mass)
    if args.at_least is not None:
        if args.at_least == 0:
            value = 1.0
        elif args.at_least == 1:
            value = generic
        else:
            value = cumulative_at_least(dist, args.at_least)
        outputs["cumulative"] = {"at_least": args.at_least, "probability": value}
    if args.csv:
        _write_csv(args.csv, ["index", "h", "probability"],
                   [(i + 1, h, p) for i, (h, p) in enumerate(zip(family.sizes, probs))])
    return _report("family", inputs, outputs)


def _parse_select(text, parser):
    try:
        ids = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        parser.error(f"--select expects comma-separated element ids, got {text!r}")
    return ids


def cmd_local(args, parser):
    law, inputs = _resolve_law(args, parser)
    inputs["mesh"] = args.mesh
    mesh = read_mesh(args.mesh)
    selection = None
    if args.select is not None:
        ids = _parse_select(args.select, parser)
        inputs["select"] = ids
        selection = [i - 1 for i in ids]
        bad = [i for i in ids if not 1 <= i <= mesh.n_elements]
        if bad:
            raise FelprobError(f"--select references missing elements {bad} (mesh has {mesh.n_elements})")
    analysis = local_analysis(mesh, law, selection)
    outputs = {
        "simplexes": [
            {
                "id": r.element_id + 1,
                "diameter": r.diameter,
                "probability": r.probability,
                "finer_than_crossover": r.finer_than_crossover,
            }
            for r in analysis.reports
        ],
        "partition": {"n1": analysis.partition.n1, "n2": analysis.partition.n2},
        "mesh_size": analysis.mesh_size,
        "at_least_one": analysis.at_least_one,
        "advisory": [e + 1 for e in analysis.advisory()],
    }
    if args.full_dist:
        if analysis.distribution is None:
            raise FelprobError(
                f"--full-dist needs at most {dp_cap()} simplexes, selection has {len(analysis.reports)}"
            )
        outputs["distribution"] = list(analysis.distribution.mass)
    if args.csv:
        _write_csv(args.csv, ["id", "diameter", "probability", "finer_than_crossover"],
                   [(r.element_id + 1, r.diameter, r.probability, int(r.finer_than_crossover))
                    for r in analysis.reports])
    return _report("local", inputs, outputs)


def _z(estimate, exact, std_error):
    diff = abs(estimate - exact)
    if std_error == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / std_error


def cmd_simulate(args, parser):
    if (args.h is None) == (args.sizes is None):
        parser.error("give exactly one of --h or --sizes")
    constants = ErrorConstants(args.ck, args.cm)
    pair = ElementPair(args.k, args.m)
    law = critical_size(constants, pair)
    if args.trials < 1:
        raise FelprobError(f"--trials must be >= 1, got {args.trials}")
    inputs = {"ck": args.ck, "cm": args.cm, "k": args.k, "m": args.m,
              "h_star": law.h_star, "delta": law.delta}

    if args.h is not None:
        inputs["h"] = args.h
        inputs.update(trials=args.trials, seed=args.seed, rng=RNG_SCHEME, block_size=BLOCK_SIZE)
        model = UniformErrorModel.from_constants(constants, pair, args.h)
        res = estimate_probability(model, args.trials, args.seed, workers=args.workers)
        exact = accuracy_probability(law, args.h)
        outputs = {
            "successes": res.successes,
            "estimate": res.estimate,
            "std_error": res.std_error,
            "exact": exact,
            "z_score": _z(res.estimate, exact, res.std_error),
        }
        return _report("simulate", inputs, outputs)

    inputs["sizes"] = args.sizes
    inputs.update(trials=args.trials, seed=args.seed, rng=RNG_SCHEME, block_size=BLOCK_SIZE)
    family = SizeFamily(tuple(parse_sizes(_read_text(args.sizes))))
    probs = family_success_probs(law, family).probs
    sim = simulate_family_counts(family, constants, pair, args.trials, args.seed, workers=args.workers)
    empirical = sim.distribution.mass
    exact_any, _ = at_least_one_structured(law, family)
    emp_any = 1.0 - empirical[0]
    se_any = math.sqrt(emp_any * (1.0 - emp_any) / args.trials)
    outputs = {
        "probabilities": list(probs),
        "counts": list(sim.counts),
        "empirical": list(empirical),
        "at_least_one": {
            "empirical": emp_any,
            "std_error": se_any,
            "exact": exact_any,
            "z_score": _z(emp_any, exact_any, se_any),
        },
    }
    if len(family) <= dp_cap():
        exact = exact_distribution(probs).mass
        outputs["exact"] = list(exact)
        outputs["total_variation"] = 0.5 * math.fsum(abs(a - b) for a, b in zip(empirical, exact))
    return _report("simulate", inputs, outputs)


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="felprob",
        description="Probability that a P_m Lagrange element is more accurate than P_k (k < m).",
    )
    parser.add_argument("--version", action="version", version=f"felprob {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hstar", help="critical mesh size h* from constants or fitted data")
    _add_constant_flags(p)
    p.add_argument("--fit-low", metavar="FILE", help="'h error' observations for the order-k element")
    p.add_argument("--fit-high", metavar="FILE", help="'h error' observations for the order-m element")
    p.set_defaults(func=cmd_hstar)

    p = sub.add_parser("prob", help="evaluate the law at sizes, or invert it")
    _add_law_flags(p)
    p.add_argument("--h", type=float, help="mesh size")
    p.add_argument("--sizes", metavar="FILE", help="file with one size per line")
    p.add_argument("--invert", type=float, metavar="P", help="size at which the probability equals P")
    p.add_argument("--csv", metavar="PATH", help="also write a per-size table")
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("family", help="distribution of wins over a family of sizes")
    _add_law_flags(p)
    p.add_argument("--sizes", metavar="FILE", required=True)
    p.add_argument("--at-least", type=int, metavar="N", help="report Prob{S_N >= N}")
    p.add_argument("--full-dist", action="store_true", help="report the exact distribution of S_N")
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("local", help="per-simplex analysis of a FELM mesh")
    _add_law_flags(p)
    p.add_argument("--mesh", metavar="FILE", required=True)
    p.add_argument("--select", metavar="ID,ID,...", help="1-based element ids to analyse (default all)")
    p.add_argument("--full-dist", action="store_true")
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_local)

    p = sub.add_parser("simulate", help="Monte-Carlo check of the law under the uniform-error model")
    _add_constant_flags(p, required=True)
    p.add_argument("--h", type=float)
    p.add_argument("--sizes", metavar="FILE")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1, help="threads; does not change the result")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args, parser)
    except InternalInconsistency as exc:
        print(f"felprob: internal inconsistency: {exc}", file=sys.stderr)
        return 3
    except (FelprobError, OSError) as exc:
        print(f"felprob: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(to_json(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
