"""Command-line front end.

Subcommands
-----------
transcode   one-shot stick-label draws conditional on a label pattern
sample      run a sampler per config file / flags; writes chain + metadata
diagnose    IAT (and ESS where applicable) from a chain file
reproduce   table1 | table2 | figure1 report bundles (CSV + PNG)
oracle      accept-reject draws and closed-form acceptance rates
prior-check seeded battery of prior identity checks

Configuration comes from an optional ``key = value`` file plus flag
overrides; flags win.  Every run requires an explicit seed.  Exit code 0
on success; failures print ``error: category=<name>: <message>`` on
stderr and exit with the category's code.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .acceptreject import (ar_acceptance_rate, ar_transcode,
                           batch_accept_mask)
from .datasets import synthetic_counts, write_dataset
from .encodings import ooa_sizes, r_to_s
from .errors import EXIT_CODES, DptransError
from .experiments import (build_config, diagnose_chain, figure1_data,
                          parse_config_file, run_chain, table1_data,
                          table2_data, write_chain, write_figure1,
                          write_table1, write_table2)
from .model import ModelSpec
from .priors import (polya_urn_paths, stick_breaking_paths,
                     weighted_urn_paths)
from .rng import RngStream
from .transcode import transcode


def _parse_labels(text: str) -> np.ndarray:
    try:
        return np.asarray([int(tok) for tok in text.split(",")],
                          dtype=np.int64)
    except ValueError:
        raise DptransError(f"could not parse labels {text!r}") from None


def cmd_transcode(args) -> int:
    s = _parse_labels(args.labels)
    rng = RngStream(args.seed).generator()
    draws = [transcode(s, args.alpha, rng) for _ in range(args.draws)]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(",".join(f"r{i+1}" for i in range(len(s))) + "\n")
            for d in draws:
                fh.write(",".join(str(int(v)) for v in d.r) + "\n")
    r1 = np.array([d.r[0] for d in draws])
    print(f"draws={args.draws} alpha={args.alpha} labels={args.labels}")
    for h in range(1, int(r1.max()) + 1):
        frac = float((r1 == h).mean())
        if frac > 0:
            print(f"p(first stick = {h}) = {frac:.4f}")
    if args.out:
        print(f"wrote {args.out}")
    return 0


def cmd_sample(args) -> int:
    mapping = parse_config_file(args.config) if args.config else {}
    overrides = {key: getattr(args, key) for key in
                 ("sampler", "dataset", "seed", "iterations", "burn_in",
                  "alpha", "base_a", "base_b", "trials", "moves",
                  "transcode_every", "outdir")
                 if getattr(args, key) is not None}
    mapping.update(overrides)
    config = build_config(mapping)
    data = run_chain(config)
    paths = write_chain(data, config.outdir)
    report = diagnose_chain(paths["chain"], paths.get("weights"))
    diag_path = Path(config.outdir) / "chain.diag.json"
    diag_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, info in report["iat"].items():
        print(f"IAT_{name} = {info['tau']:.4f} (window {info['window']})")
    if "ess" in report:
        print(f"ESS = {report['ess']:.1f} of {report['draws']}")
    print(f"wrote {paths['chain']}")
    return 0


def cmd_diagnose(args) -> int:
    report = diagnose_chain(args.chain, args.weights)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_reproduce(args) -> int:
    outdir = Path(args.outdir)
    if args.mode == "table1":
        data = table1_data(args.draws, args.prior_sims, args.alpha, args.seed)
        written = write_table1(data, outdir)
        from .figures import render_table1
        written.append(render_table1(data, outdir))
    elif args.mode == "table2":
        _require_dataset(args)
        data = table2_data(args.dataset, args.iterations, args.seed,
                           alpha=args.alpha)
        written = write_table2(data, outdir)
        from .figures import render_table2
        written.append(render_table2(data, outdir))
    else:
        _require_dataset(args)
        data = figure1_data(args.dataset, args.iterations, args.seed,
                            alpha=args.alpha)
        written = write_figure1(data, outdir)
        from .figures import render_figure1
        written.append(render_figure1(data, outdir))
    for path in written:
        print(f"wrote {path}")
    return 0


def _require_dataset(args) -> None:
    if not args.dataset:
        raise DptransError("this mode needs --dataset")


def cmd_oracle(args) -> int:
    s = _parse_labels(args.labels)
    sizes = ooa_sizes(s)
    rate = ar_acceptance_rate(sizes, args.alpha, args.method)
    print(f"sizes={','.join(str(v) for v in sizes)} method={args.method} "
          f"theoretical acceptance rate = {rate:.6g}")
    if args.draws > 0:
        rng = RngStream(args.seed).generator()
        attempts = 0
        rows = []
        for _ in range(args.draws):
            res = ar_transcode(s, args.alpha, args.method, rng,
                               max_attempts=args.max_attempts)
            attempts += res.attempts
            rows.append(res.r)
        print(f"accepted {args.draws} draws in {attempts} proposals "
              f"(empirical rate {args.draws / attempts:.6g})")
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(",".join(f"r{i+1}" for i in range(len(s))) + "\n")
                for r in rows:
                    fh.write(",".join(str(int(v)) for v in r) + "\n")
            print(f"wrote {args.out}")
    return 0


def cmd_prior_check(args) -> int:
    """Battery of prior identities; prints PASS/FAIL per check."""
    failures = 0
    n_draws = args.draws
    alpha = args.alpha
    stream = RngStream(args.seed)

    mat = stick_breaking_paths(n_draws, 1, alpha, stream.child(0).generator())
    ok = True
    details = []
    for h in range(1, 5):
        expect = alpha ** (h - 1) / (1 + alpha) ** h
        got = float((mat[:, 0] == h).mean())
        sigma = max(np.sqrt(expect * (1 - expect) / n_draws), 1e-12)
        details.append(f"h={h}: {got:.4f} vs {expect:.4f}")
        ok &= abs(got - expect) < 3 * sigma
    failures += _report("first stick index is geometric", ok, details)

    # thresholds calibrated at one million draws; scale with sampling noise
    tv_budget = 0.01 * max(np.sqrt(1_000_000 / n_draws), 1.0)
    polya = polya_urn_paths(n_draws, 4, alpha, stream.child(1).generator())
    urn = weighted_urn_paths(n_draws, 4, alpha, stream.child(2).generator())
    tv = _pattern_tv(polya, urn)
    failures += _report("weighted urn matches the classic urn (n=4)",
                        tv < tv_budget,
                        [f"total variation = {tv:.5f} (budget {tv_budget:.5f})"])

    stick = stick_breaking_paths(n_draws, 3, alpha, stream.child(3).generator())
    canon = np.stack([r_to_s(row) for row in stick[:min(n_draws, 200_000)]])
    tv2 = _pattern_tv(canon, polya_urn_paths(len(canon), 3, alpha,
                                             stream.child(4).generator()))
    failures += _report("stick labels relabel to urn labels (n=3)",
                        tv2 < 1.5 * tv_budget,
                        [f"total variation = {tv2:.5f}"])

    mask = batch_accept_mask(stick_breaking_paths(
        n_draws, 6, alpha, stream.child(5).generator()),
        (3, 2, 1), 3)
    rate = ar_acceptance_rate((3, 2, 1), alpha, 3)
    got = float(mask.mean())
    sigma = np.sqrt(rate * (1 - rate) / n_draws)
    failures += _report("accept-reject rate formula (sizes 3,2,1)",
                        abs(got - rate) < 3 * sigma,
                        [f"empirical {got:.5f} vs exact {rate:.5f}"])
    print(f"{4 - failures} of 4 checks passed")
    return 1 if failures else 0


def _pattern_tv(a: np.ndarray, b: np.ndarray) -> float:
    fa = _freqs(a)
    fb = _freqs(b)
    return 0.5 * sum(abs(fa.get(k, 0.0) - fb.get(k, 0.0))
                     for k in set(fa) | set(fb))


def _freqs(mat: np.ndarray) -> dict:
    pats, counts = np.unique(mat, axis=0, return_counts=True)
    return {tuple(int(v) for v in row): c / len(mat)
            for row, c in zip(pats, counts)}


def _report(name: str, ok: bool, details) -> int:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}")
    for line in details:
        print(f"        {line}")
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    model = ModelSpec(alpha=args.alpha, base_a=args.base_a,
                      base_b=args.base_b, trials=args.trials)
    rng = RngStream(args.seed).generator()
    counts = synthetic_counts(args.n, model, rng)
    write_dataset(args.out, counts, args.trials)
    print(f"wrote {args.out} ({args.n} rows, trials={args.trials})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dptrans",
        description="Dirichlet process mixture samplers with encoding "
                    "transcoding")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transcode", help="draw stick labels given a pattern")
    p.add_argument("--labels", required=True,
                   help="comma-separated appearance-order labels, e.g. 1,1,1,1,2")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="optional CSV of the drawn label vectors")
    p.set_defaults(func=cmd_transcode)

    p = sub.add_parser("sample", help="run a sampler and persist the chain")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--sampler")
    p.add_argument("--dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--base-a", dest="base_a", type=float)
    p.add_argument("--base-b", dest="base_b", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--moves", help="comma-separated subset of 1,2,3 or 'none'")
    p.add_argument("--transcode-every", dest="transcode_every", type=int)
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagnose", help="IAT/ESS report for a chain file")
    p.add_argument("chain")
    p.add_argument("--weights", help="log-weight file for ESS")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("reproduce", help="emit a report bundle")
    p.add_argument("mode", choices=("table1", "table2", "figure1"))
    p.add_argument("--outdir", default="reports")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--dataset", help="required for table2/figure1")
    p.add_argument("--iterations", type=int, default=100_000)
    p.add_argument("--draws", type=int, default=100_000,
                   help="transcoding draws (table1)")
    p.add_argument("--prior-sims", dest="prior_sims", type=int,
                   default=1_000_000, help="prior simulations (table1)")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("oracle", help="accept-reject draws and rate formulas")
    p.add_argument("--labels", required=True)
    p.add_argument("--method", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--draws", type=int, default=0,
                   help="number of accepted draws to produce (0 = rate only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-attempts", dest="max_attempts", type=int,
                   default=10**8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("prior-check", help="prior identity test battery")
    p.add_argument("--draws", type=int, default=200_000)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_prior_check)

    p = sub.add_parser("simulate", help="write a synthetic dataset file")
    p.add_argument("--n", type=int, default=320)
    p.add_argument("--trials", type=int, default=9)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--base-a", dest="base_a", type=float, default=1.0)
    p.add_argument("--base-b", dest="base_b", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DptransError as exc:
        print(f"error: category={exc.category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except ValueError as exc:
        # invalid user-supplied values surface as config errors
        print(f"error: category=config: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]


if __name__ == "__main__":
    sys.exit(main())
