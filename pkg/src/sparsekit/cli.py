"""Command-line interface: ``sparsekit {sparsify,verify,compare,oracle}``.

Exit status is 0 whenever a command ran, including when a verification
report contains failures, and 2 on usage or validation errors. Errors
are printed as a single ``error: <Kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import Scheme, load_vector, validate_target
from .divergences import from_name
from .exceptions import SignFlipUnsupported, SparsifyError, TooLarge, TrivialInstance
from .oracle import (
    SCDO_MAX_N,
    expected_divergence,
    is_preservative,
    randk_sample,
    randk_scheme,
    scdo_solve,
)
from .us_as import usas_plan
from .us_pi import uspi_plan
from .verify import check_scheme, monte_carlo_check

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SPARSEKIT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SPARSEKIT_SEED must be an integer, got {env!r}") from None


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("sample", "verify", "oracle")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(c) for name, c in zip(names, children)}


def _vector(args) -> np.ndarray:
    if args.input is None:
        raise UsageError("--input is required")
    try:
        return load_vector(args.input)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None


def _check_target(p, m, allow_negative, div):
    try:
        validate_target(p, m, allow_negative=allow_negative)
    except TrivialInstance:
        pass
    if allow_negative and np.any(p < 0) and not div.sign_symmetric:
        raise SignFlipUnsupported(f"{div.describe()} is not symmetric under sign flips")


def _plan(algo, p, m, div, allow_negative):
    if algo == "uspi":
        return uspi_plan(p, m, allow_negative)
    if algo == "usas":
        return usas_plan(div, p, m, allow_negative)
    raise UsageError(f"no sampling plan for algorithm {algo!r}")


def _scheme(algo, p, m, div, allow_negative) -> Scheme:
    if algo == "randk":
        scheme = randk_scheme(p, m)
    else:
        scheme = _plan(algo, p, m, div, allow_negative).scheme()
    scheme.divergence = div.describe()
    return scheme


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_sparsify(args) -> int:
    p = _vector(args)
    div = from_name(args.div)
    _check_target(p, args.m, args.allow_negative, div)
    rngs = _streams(_seed(args))
    if args.exact_scheme:
        scheme = _scheme(args.algo, p, args.m, div, args.allow_negative)
        if args.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["atom", "prob", "index", "value"])
            for a, (prob, s) in enumerate(scheme):
                for i, v in zip(s.support, s.values):
                    w.writerow([a, repr(prob), int(i), repr(float(v))])
            _emit(buf.getvalue(), args.out)
        else:
            _emit(_dump_json(scheme.to_dict()), args.out)
        return 0

    if args.samples < 1:
        raise UsageError("--samples must be positive")
    rng = rngs["sample"]
    if args.algo == "randk":
        if np.any(p < 0) and not args.allow_negative:
            validate_target(p, args.m)
        samples = [randk_sample(p, args.m, rng) for _ in range(args.samples)]
    else:
        plan = _plan(args.algo, p, args.m, div, args.allow_negative)
        samples = [plan.sample(rng) for _ in range(args.samples)]
    triplets = [
        (k, int(i), float(v)) for k, s in enumerate(samples) for i, v in zip(s.support, s.values)
    ]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "index", "value"])
        for k, i, v in triplets:
            w.writerow([k, i, repr(v)])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(
            _dump_json(
                {
                    "n": int(p.size),
                    "m": args.m,
                    "algo": args.algo,
                    "divergence": div.describe(),
                    "samples": args.samples,
                    "triplets": [list(t) for t in triplets],
                }
            ),
            args.out,
        )
    return 0


_EXPECT = {"unbiased", "sum-preserving", "sparsity", "marginals"}


def cmd_verify(args) -> int:
    expect = {e.strip() for e in args.expect.split(",") if e.strip()}
    unknown = expect - _EXPECT
    if unknown:
        raise UsageError(f"unknown --expect entries {sorted(unknown)}")
    plan = None
    if args.scheme:
        try:
            scheme = Scheme.from_dict(json.loads(Path(args.scheme).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read scheme {args.scheme}: {exc}") from None
        if args.input is None:
            raise UsageError("--scheme needs --input for the target vector")
        p = _vector(args)
        m = args.m if args.m is not None else scheme.m
    else:
        if args.m is None:
            raise UsageError("--m is required without --scheme")
        p = _vector(args)
        m = args.m
        div = from_name(args.div)
        _check_target(p, m, args.allow_negative, div)
        scheme = _scheme(args.algo, p, m, div, args.allow_negative)
        if args.algo != "randk":
            plan = _plan(args.algo, p, m, div, args.allow_negative)
    marginals = plan.inclusion() if (plan is not None and "marginals" in expect) else None
    report = {
        "exact": check_scheme(
            scheme,
            p,
            m,
            unbiased="unbiased" in expect,
            sum_preserving="sum-preserving" in expect,
            sparsity="sparsity" in expect,
            marginals=marginals,
        )
    }
    if args.monte_carlo:
        if plan is None:
            raise UsageError("--monte-carlo needs --input with --algo uspi or usas")
        report["monte_carlo"] = monte_carlo_check(
            plan.sample_batch, p, m, args.monte_carlo, _seed(args), marginals=plan.inclusion()
        )
    _emit(_dump_json(report), args.out)
    return 0


def cmd_compare(args) -> int:
    p = _vector(args)
    divs = args.div or ["sqeuclid", "kl"]
    baselines = [b for b in (args.baselines or "").split(",") if b]
    for b in baselines:
        if b != "randk":
            raise UsageError(f"unknown baseline {b!r}")
    rows = []
    for name in divs:
        div = from_name(name)
        _check_target(p, args.m, args.allow_negative, div)
        for algo in ["uspi", "usas", *baselines]:
            scheme = _scheme(algo, p, args.m, div, args.allow_negative)
            rows.append(
                {
                    "algo": algo,
                    "divergence": div.describe(),
                    "expected_divergence": expected_divergence(scheme, div, p),
                }
            )
    if args.format == "json":
        _emit(_dump_json(rows), args.out)
    else:
        lines = [f"{'algo':<8} {'divergence':<16} {'exact E[D]':>22}"]
        lines += [
            f"{r['algo']:<8} {r['divergence']:<16} {r['expected_divergence']:>22.15g}" for r in rows
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_oracle(args) -> int:
    p = _vector(args)
    n = int(np.count_nonzero(p))
    if n > SCDO_MAX_N:
        raise TooLarge(f"guard n <= {SCDO_MAX_N} violated: n = {n}")
    if np.any(p < 0):
        raise UsageError("the oracle compares nonnegative sparsifications; p must be >= 0")
    div = from_name(args.div)
    algo = "uspi" if div.permutation_invariant else "usas"
    scheme = _scheme(algo, p, args.m, div, False)
    value = expected_divergence(scheme, div, p)
    result = scdo_solve(
        p, args.m, div, restarts=args.restarts, steps=args.steps, rng=_streams(_seed(args))["oracle"]
    )
    preservative = None
    if result.scheme is not None:
        preservative, _ = is_preservative(result.scheme, p, args.m, tol=1e-5)
    report = {
        "oracle_best": result.value,
        "algorithm": algo,
        "algorithm_value": value,
        "gap": value - result.value,
        "preservative": preservative,
        "oracle_residual": result.residual,
        "converged": result.converged,
    }
    _emit(_dump_json(report), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsekit", description="Efficient unbiased sparsification of vectors."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, *, m_required=True):
        sp.add_argument("--input", help="vector file: JSON array or CSV, one value per line")
        sp.add_argument("--m", type=int, required=m_required, help="sparsity budget")
        sp.add_argument("--seed", type=int, default=None,
                        help="random seed (falls back to $SPARSEKIT_SEED, then 0)")
        sp.add_argument("--allow-negative", action="store_true",
                        help="sparsify magnitudes and restore signs")
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("sparsify", help="draw samples or print the exact scheme")
    common(sp)
    sp.add_argument("--div", default="sqeuclid", help="sqeuclid | kl | wsq:<weights-file>")
    sp.add_argument("--algo", choices=["uspi", "usas", "randk"], default="uspi")
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--exact-scheme", action="store_true")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_sparsify)

    sp = sub.add_parser("verify", help="check a scheme for unbiasedness, sparsity and sums")
    common(sp, m_required=False)
    sp.add_argument("--scheme", help="scheme JSON written by `sparsify --exact-scheme`")
    sp.add_argument("--div", default="sqeuclid")
    sp.add_argument("--algo", choices=["uspi", "usas", "randk"], default="uspi")
    sp.add_argument("--expect", default="unbiased,sparsity",
                    help="comma list of unbiased, sum-preserving, sparsity, marginals")
    sp.add_argument("--monte-carlo", type=int, default=0, metavar="N",
                    help="also run N seeded draws (N >= 10000)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("compare", help="exact expected divergence per algorithm")
    common(sp)
    sp.add_argument("--div", action="append", help="repeatable; default sqeuclid and kl")
    sp.add_argument("--baselines", default="randk", help="comma list; only randk is available")
    sp.add_argument("--format", choices=["table", "json"], default="table")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("oracle", help="compare against a numeric optimum (n <= 6)")
    common(sp)
    sp.add_argument("--div", default="sqeuclid")
    sp.add_argument("--restarts", type=int, default=50)
    sp.add_argument("--steps", type=int, default=5000)
    sp.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
    except SparsifyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: ValueError: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
