"""Command-line harness: ``omdbarrier {gen,run,verify,compare}``.

Exit codes: 0 success, 1 operational error, 2 failed check (bound violated
with ``run --acceptance``, a verifier outcome not as expected, or files
that differ under ``compare``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .data import (MARKET_KINDS, POVM_KINDS, STATE_KINDS, generate_market,
                   generate_quantum_stream, write_market_csv, write_observables_json)
from .experiment import (ALGORITHMS, CSV_COLUMNS, QUANTUM_SOURCE, ExperimentConfig,
                         read_results_csv, run_experiment)
from .verify import dump, run_lemma_suite

OUTPUT_ENV = "OMDBARRIER_OUTPUT_DIR"
EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2

log = logging.getLogger("omdbarrier")


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


class _Parser(argparse.ArgumentParser):
    """Usage errors are operational errors (status 1); 2 is reserved for failed checks."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="omdbarrier", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a loss stream file")
    g.add_argument("--problem", choices=("ops", "quantum"), default="ops")
    g.add_argument("--kind", choices=MARKET_KINDS, default="iid-uniform",
                   help="market generator (ops only)")
    g.add_argument("--state", choices=STATE_KINDS, default="random")
    g.add_argument("--povm", choices=POVM_KINDS, default="haar")
    g.add_argument("-d", type=int, required=True)
    g.add_argument("-T", type=int, required=True)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("-o", "--out", required=True, help="CSV (ops) or JSON (quantum) path")

    r = sub.add_parser("run", help="run a learner and write per-round CSV + JSON summary")
    r.add_argument("--algorithm", choices=sorted(ALGORITHMS), required=True)
    r.add_argument("--problem", choices=("ops", "quantum"))
    r.add_argument("-d", type=int, required=True)
    r.add_argument("-T", type=int, required=True)
    r.add_argument("--source", help=f"market kind {MARKET_KINDS}, {QUANTUM_SOURCE!r}, or a file")
    r.add_argument("--seed", type=_seed, nargs="+", default=[0],
                   help="one run per seed")
    r.add_argument("--gamma", type=float)
    r.add_argument("--eta", type=float)
    r.add_argument("--eg-variant", choices=("log-d", "sqrt-d"), default="log-d",
                   help="numerator of the EG learning rate: sqrt(log d) or sqrt(d)")
    r.add_argument("--state", choices=STATE_KINDS, default="random")
    r.add_argument("--povm", choices=POVM_KINDS, default="haar")
    r.add_argument("--kahan", action="store_true", help="compensated summation of losses")
    r.add_argument("--comparator-tol", type=float, default=1e-6)
    r.add_argument("-o", "--output", default=None,
                   help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    r.add_argument("--name", help="file stem (single seed only)")
    r.add_argument("--acceptance", action="store_true",
                   help="exit with status 2 if a regret bound is violated")
    r.add_argument("--jobs", type=int, default=1)

    v = sub.add_parser("verify", help="run the inequality checks, emit JSON lines")
    v.add_argument("--seed", type=_seed, default=0)
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("-o", "--out", help="JSON-lines file (default stdout)")

    c = sub.add_parser("compare", help="diff two per-round result CSV files")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--atol", type=float, default=0.0)
    return p


def cmd_gen(args) -> int:
    if args.problem == "ops":
        write_market_csv(args.out, generate_market(args.kind, args.d, args.T, args.seed))
    else:
        stream = generate_quantum_stream(args.d, args.T, args.seed, args.state, args.povm)
        write_observables_json(args.out, stream.observables)
    print(args.out)
    return EXIT_OK


def _run_one(config: ExperimentConfig) -> dict:
    return run_experiment(config).summary


def cmd_run(args) -> int:
    output = args.output or os.environ.get(OUTPUT_ENV) or "results"
    if args.name and len(args.seed) > 1:
        raise ValueError("--name needs a single --seed")
    base = ExperimentConfig(
        algorithm=args.algorithm, d=args.d, T=args.T, problem=args.problem, source=args.source,
        seed=args.seed[0], output=output, name=args.name, gamma=args.gamma, eta=args.eta,
        eg_variant=args.eg_variant, state=args.state, povm=args.povm, kahan=args.kahan,
        comparator_tol=args.comparator_tol)
    configs = [replace(base, seed=s) for s in args.seed]
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_run_one, configs))
    else:
        summaries = [_run_one(c) for c in configs]
    violated = False
    for s in summaries:
        print(json.dumps({k: s[k] for k in ("algorithm", "d", "T", "seed", "final_regret",
                                             "regret_bound", "comparator_gap", "bound_satisfied")}))
        violated |= not s["bound_satisfied"]
    return EXIT_CHECK if (args.acceptance and violated) else EXIT_OK


def cmd_verify(args) -> int:
    reports = run_lemma_suite(args.seed, args.samples)
    if args.out:
        with open(args.out, "w") as fh:
            dump(reports, fh)
    else:
        dump(reports, sys.stdout)
    bad = [r.name for r in reports if not r.ok]
    if bad:
        log.error("unexpected outcome: %s", ", ".join(bad))
        return EXIT_CHECK
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = read_results_csv(args.a), read_results_csv(args.b)
    if len(a["t"]) != len(b["t"]):
        print(json.dumps({"rows": [len(a["t"]), len(b["t"])], "equal": False}))
        return EXIT_CHECK
    diffs = {}
    for col in CSV_COLUMNS:
        x, y = a[col], b[col]
        both_nan = np.isnan(x) & np.isnan(y)
        delta = np.where(both_nan, 0.0, np.abs(x - y))
        diffs[col] = float(np.nanmax(np.where(np.isnan(delta), np.inf, delta)))
    equal = all(v <= args.atol for v in diffs.values())
    print(json.dumps({"max_abs_diff": diffs, "atol": args.atol, "equal": equal}))
    return EXIT_OK if equal else EXIT_CHECK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "verify": cmd_verify, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # operational errors map to exit status 1
        log.error("%s", exc)
        if args.verbose:
            raise
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
