"""Command-line entry point: ``residue-sense <subcommand> ...``.

Exit codes: 0 success, 1 an invariant or bound was violated (witness in the
report), 2 usage error. Every random choice derives from ``--seed``
(default 0). Report bodies are deterministic. The wall-clock timestamp goes
only into the ``<out>.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from pathlib import Path

from . import __version__
from .characters import MultCharSpec
from .field import build_field
from .matrix import (
    build_matrix,
    build_paley_matrix,
    coherence,
    compression_ratio,
    format_matrix,
    welch_bound,
)
from .primes import DENSITY_CSV_HEADER, HITS_CSV_HEADER, primes_with_factor_in_range, shifted_prime_density_report
from .recovery import ALGORITHMS, AMPLITUDE_MODELS, RecoveryError, run_experiment
from .reporting import BUDGET_ENV, BudgetExceeded, dumps, enumeration_budget, to_jsonable
from .rip import (
    AnalysisParams,
    check_property_p,
    flat_rip_exhaustive,
    flat_rip_sampled,
    rip_delta_exhaustive,
    rip_from_flat,
    validate_params,
    verify_double_sum_bound,
)
from .verify import verify_suite

TOOL = {"name": "residue-sense", "version": __version__}


class UsageError(ValueError):
    pass


def _emit(body: str, out: str | None, command: str) -> None:
    if out is None:
        sys.stdout.write(body)
        return
    path = Path(out)
    path.write_text(body, encoding="utf-8")
    meta = {
        "command": command,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "tool": TOOL,
    }
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _report(command: str, params: dict, result) -> str:
    return dumps({"command": command, "params": params, "result": result, "tool": TOOL})


def _matrix_from_args(args):
    field = build_field(args.p)
    if getattr(args, "paley", False):
        return build_paley_matrix(field)
    if args.k is None:
        raise UsageError("--k is required unless --paley is given")
    return build_matrix(field, args.k)


# --- subcommands ------------------------------------------------------------


def cmd_gen(args) -> int:
    mat = _matrix_from_args(args)
    out = args.out or f"phipk_{mat.variant.value}_p{mat.p}_k{mat.k}.txt"
    Path(out).write_text(format_matrix(mat), encoding="ascii")
    mu, pair = coherence(mat)
    summary = {
        **mat.metadata(),
        "path": out,
        "compression_ratio": compression_ratio(mat),
        "coherence": mu,
        "coherence_pair": pair,
        "welch_bound": welch_bound(mat.M, mat.N),
    }
    sys.stdout.write(_report("gen", {"p": args.p, "k": mat.k, "paley": args.paley}, summary))
    return 0


def cmd_verify(args) -> int:
    report = verify_suite(args.p_max, threads=args.threads, seed=args.seed)
    _emit(_report("verify", {"p_max": args.p_max, "seed": args.seed}, report), args.out, "verify")
    return 0 if report.passed else 1


def cmd_rip(args) -> int:
    mat = _matrix_from_args(args)
    budget = enumeration_budget(args.budget)
    if args.mode == "exhaustive":
        flat = flat_rip_exhaustive(mat, args.K, budget=budget)
    else:
        flat = flat_rip_sampled(mat, args.K, args.trials, args.seed)
    result = {"matrix": mat.metadata(), "flat_rip": flat}
    if args.K >= 2:
        result["rip_bound_from_flat"] = rip_from_flat(flat.theta, args.K)
    if args.delta:
        result["rip_delta"] = rip_delta_exhaustive(mat, args.K, budget=budget)
    params = {
        "p": args.p,
        "k": mat.k,
        "paley": args.paley,
        "K": args.K,
        "mode": args.mode,
        "trials": args.trials,
        "seed": args.seed,
        "budget": budget,
    }
    _emit(_report("rip", params, result), args.out, "rip")
    return 0


def cmd_doublesum(args) -> int:
    field = build_field(args.p)
    spec = MultCharSpec(field, args.k, args.h)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    if args.check == "property":
        reports = check_property_p(
            field,
            spec,
            args.alpha,
            args.beta,
            trials=args.trials,
            seed=args.seed,
            mode=args.mode,
            sizes=tuple(args.sizes) if args.sizes else None,
            budget=enumeration_budget(args.budget),
        )
    else:
        if args.tau is None:
            raise UsageError("--tau is required for --check sqrt_bound")
        reports = verify_double_sum_bound(field, spec, args.alpha, args.tau, args.beta, args.trials, args.seed)
    violations = [r for r in reports if not r.satisfied or r.witness_S is not None]
    result = {"reports": reports, "violations": len(violations), "asymptotic_caveat": True}
    _emit(_report("doublesum", params, result), args.out, "doublesum")
    return 1 if violations else 0


def cmd_recover(args) -> int:
    mat = _matrix_from_args(args)
    table = run_experiment(
        mat,
        args.K,
        args.trials,
        algorithm=args.alg,
        seed=args.seed,
        amplitude_model=args.amplitudes,
        noise_snr_db=args.snr,
    )
    if args.format == "csv":
        body = table.to_csv()
    else:
        params = {
            "p": args.p,
            "k": mat.k,
            "paley": args.paley,
            "K": args.K,
            "trials": args.trials,
            "alg": args.alg,
            "seed": args.seed,
            "amplitudes": args.amplitudes,
            "snr": args.snr,
        }
        body = _report("recover", params, table)
    _emit(body, args.out, "recover")
    return 0


def cmd_primes(args) -> int:
    params = {"x": args.x, "eps1": args.eps1, "eps2": args.eps2, "density_x": args.density_x}
    hits = primes_with_factor_in_range(args.x, args.eps1, args.eps2)
    if args.hits_out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HITS_CSV_HEADER)
        w.writerows((h.p, h.k) for h in hits)
        Path(args.hits_out).write_text(buf.getvalue(), encoding="utf-8")
    result = {"hits": len(hits), "first_hits": [(h.p, h.k) for h in hits[:20]]}
    if args.density_x:
        rows = shifted_prime_density_report(args.density_x, args.eps1, args.eps2)
        if args.density_out:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(DENSITY_CSV_HEADER)
            w.writerows((r.x, r.eps1, r.eps2, r.hits, repr(r.x_over_logx), repr(r.ratio)) for r in rows)
            Path(args.density_out).write_text(buf.getvalue(), encoding="utf-8")
        result["density"] = rows
    _emit(_report("primes", params, result), args.out, "primes")
    return 0


def cmd_params(args) -> int:
    params = AnalysisParams(args.alpha, args.beta0, args.eps1, args.eps2, args.tau)
    check = validate_params(params, p=args.p, k=args.k)
    echo = {**to_jsonable(params), "p": args.p, "k": args.k}
    _emit(_report("params", echo, check), args.out, "params")
    return 0 if check.ok else 1


# --- parser -------------------------------------------------------------------


def _add_matrix_args(sp) -> None:
    sp.add_argument("--p", type=int, required=True, help="odd prime modulus")
    sp.add_argument("--k", type=int, default=None, help="divisor of p-1 (residue order)")
    sp.add_argument("--paley", action="store_true", help="use the Paley variant (k=2 plus one column)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="residue-sense",
        description="Power-residue sensing matrices: build, verify, measure RIP, run recovery experiments.",
        epilog=f"{BUDGET_ENV} overrides the default enumeration budget (10^8).",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", help="write a matrix file (PHIPK v1)")
    _add_matrix_args(sp)
    sp.add_argument("--out", help="matrix file path")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("verify", help="run the invariant sweep over all primes <= p-max")
    sp.add_argument("--p-max", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1, help="worker processes")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("rip", help="flat-RIP constant (and optionally the RIP constant)")
    _add_matrix_args(sp)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--delta", action="store_true", help="also compute the exhaustive RIP constant")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_rip)

    sp = sub.add_parser("doublesum", help="character double-sum bound tests")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--h", type=int, default=1)
    sp.add_argument("--check", choices=("property", "sqrt_bound"), default="property")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--mode", choices=("sampled", "exhaustive"), default="sampled")
    sp.add_argument("--sizes", type=int, nargs=2, metavar=("LO", "HI"))
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_doublesum)

    sp = sub.add_parser("recover", help="sparse-recovery success table")
    _add_matrix_args(sp)
    sp.add_argument("--K", type=int, nargs="+", required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--alg", choices=ALGORITHMS, default="omp")
    sp.add_argument("--amplitudes", choices=AMPLITUDE_MODELS, default="unit")
    sp.add_argument("--snr", type=float, default=None, help="add complex Gaussian noise at this SNR (dB)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("primes", help="primes with a factor of p-1 in (x^eps1, x^eps2]")
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--eps1", type=float, required=True)
    sp.add_argument("--eps2", type=float, required=True)
    sp.add_argument("--density-x", type=int, nargs="*", default=None, help="x values for the density table")
    sp.add_argument("--hits-out", help="CSV of p,k hits")
    sp.add_argument("--density-out", help="CSV density table")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_primes)

    sp = sub.add_parser("params", help="validate (alpha, beta0, eps1, eps2, tau)")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta0", type=float, required=True)
    sp.add_argument("--eps1", type=float, required=True)
    sp.add_argument("--eps2", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_params)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, BudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RecoveryError as exc:
        print(f"recovery failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
