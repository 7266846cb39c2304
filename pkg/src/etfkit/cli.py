"""``etfkit`` command line.

Exit codes: 0 success, 1 negative finding (verification failed, search
exhausted), 2 usage error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .construct import build, certify_inequivalent, prop2_enumerate
from .core import (
    GramMatrix,
    SignatureUnitary,
    SynthesisMatrix,
    fickus_check,
    frame_from_gram,
    gram_from_signature,
    signature_checks,
    spec_from_dn,
    verify_etf,
)
from .entangle import Bipartition, OptimizerConfig, average_purity, optimize_average_purity, u16_frame
from .families import find_er_pairs, u16_family
from .io import MatrixFileError, parse_matrix_file, serialize_matrix_file
from .roots import roots_feasibility
from .solver import SolverConfig, read_scan_csv, scan, solve_signature, write_scan_csv

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

CHART_COLUMNS = ["N", "d", "theta", "exists"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- helpers ---------------------------------------------------------------


def _alphas(text: str) -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--alphas must be comma-separated numbers: {exc}") from exc
    if len(vals) != 6:
        raise UsageError(f"--alphas needs 6 values, got {len(vals)}")
    return np.array(vals)


def _bipartition(text: str) -> Bipartition:
    try:
        return Bipartition.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        tol=args.tol,
        seeds=args.seeds,
        master_seed=args.master_seed,
        real_mode=args.real,
        threads=args.threads,
    )


def _out_dir(args) -> Path | None:
    if getattr(args, "out", None) is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path | None, argv: list[str], command: str, config: dict, outputs: list[Path], started: str):
    """One manifest per artifact-producing run."""
    if out is None:
        return
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "master_seed": config.get("master_seed"),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [p.name for p in outputs],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _guess_kind(m: np.ndarray) -> str:
    if m.shape[0] != m.shape[1]:
        return "frame"
    if np.allclose(np.diag(m), 1.0, atol=1e-8):
        return "gram"
    return "signature"


# -- subcommands -----------------------------------------------------------


def cmd_solve(args, argv) -> int:
    started = _now()
    if not 1 <= args.d < args.n:
        raise UsageError("need 1 <= d < n")
    cfg = _solver_config(args)
    spec = spec_from_dn(args.d, args.n, args.real)
    res = solve_signature(spec, cfg)
    summary = {
        "n": args.n,
        "d": args.d,
        "theta": spec.theta,
        "status": res.status.value,
        "winning_seed_index": res.winning_seed_index,
        "seeds_used": res.seeds_used,
        "iterations": res.iterations,
        "best_residual": res.best_residual,
        "refined": res.refined,
        "outcome_counts": res.outcome_counts,
    }
    outputs: list[Path] = []
    out = _out_dir(args)
    if res.converged:
        gram = gram_from_signature(res.signature, args.d)
        report = verify_etf(gram, tol=args.verify_tol)
        summary["verification"] = report.as_dict()
        if out is not None:
            outputs.append(serialize_matrix_file(res.signature.matrix, out / f"sig_N{args.n}_d{args.d}.json"))
            outputs.append(serialize_matrix_file(gram.matrix, out / "gram.json"))
            outputs.append(serialize_matrix_file(frame_from_gram(gram).matrix, out / "frame.json"))
    if out is not None:
        (out / "result.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        outputs.append(out / "result.json")
    _write_manifest(out, argv, "solve", {**cfg.as_dict(), "n": args.n, "d": args.d}, outputs, started)
    _emit(summary)
    if not res.converged:
        return EXIT_NEGATIVE
    return EXIT_OK if summary["verification"]["passed"] else EXIT_NEGATIVE


def cmd_verify(args, argv) -> int:
    m = parse_matrix_file(args.matrix)
    kind = args.kind or _guess_kind(m)
    if kind == "frame":
        obj = SynthesisMatrix(m)
    elif kind == "gram":
        n = m.shape[0]
        d = args.d or int(round(n * n / float(np.real(np.trace(m @ m)))))
        obj = GramMatrix(n=n, d=d, matrix=m)
    else:
        fails = signature_checks(m, args.tol)
        if fails:
            _emit({"kind": "signature", "passed": False, "failures": fails})
            return EXIT_NEGATIVE
        sig = SignatureUnitary.from_matrix(m, args.tol)
        d = args.d or int(round(sig.d))
        try:
            obj = gram_from_signature(sig, d)
        except ValueError as exc:
            _emit({"kind": "signature", "passed": False, "failures": [str(exc)]})
            return EXIT_NEGATIVE
    report = verify_etf(obj, tol=args.tol)
    _emit({"kind": kind, **report.as_dict()})
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def cmd_scan(args, argv) -> int:
    started = _now()
    cfg = _solver_config(args)

    def progress(rec):
        if not rec.derived:
            print(f"N={rec.n} d={rec.d} found={int(rec.found)} seeds={rec.seeds_used}", file=sys.stderr)

    records = scan(args.n_min, args.n_max, cfg, progress=progress)
    out = _out_dir(args) or Path(".")
    path = write_scan_csv(records, out / "scan.csv")
    outputs = [path]
    if args.out is not None:
        for r in records:
            if r.found and r.signature is not None:
                outputs.append(serialize_matrix_file(r.signature.matrix, out / f"sig_N{r.n}_d{r.d}.json"))
    bad = [(r.d, r.n) for r in records if r.found and not r.fickus_consistent]
    _write_manifest(out, argv, "scan", {**cfg.as_dict(), "n_min": args.n_min, "n_max": args.n_max}, outputs, started)
    _emit({"records": len(records), "found": sum(r.found for r in records), "fickus_violations": bad, "csv": str(path)})
    return EXIT_NEGATIVE if bad else EXIT_OK


def cmd_construct(args, argv) -> int:
    started = _now()
    try:
        if args.prop2 is not None:
            sigs = prop2_enumerate(args.prop2)
        else:
            sigs = [build(args.spec)]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    outputs = []
    info = []
    for k, s in enumerate(sigs):
        entry = {"index": k, "n": s.n, "cos_theta": s.cos_theta, "d": s.d}
        if out is not None:
            outputs.append(serialize_matrix_file(s.matrix, out / f"signature_{k}.json"))
        info.append(entry)
    result = {"matrices": info}
    if args.prop2 is not None and len(sigs) > 1:
        result["pairwise"] = {
            f"{i},{j}": certify_inequivalent(sigs[i], sigs[j]).value
            for i in range(len(sigs))
            for j in range(i + 1, len(sigs))
        }
    _write_manifest(out, argv, "construct", {"spec": args.spec, "prop2": args.prop2}, outputs, started)
    _emit(result)
    return EXIT_OK


def cmd_roots(args, argv) -> int:
    if args.n < 2 or args.m < 2:
        raise UsageError("need n >= 2 and m >= 2")
    rows = [roots_feasibility(d, args.n, args.m) for d in range(1, args.n)]
    print("d,two_k,feasible,witness,flags")
    for r in rows:
        if r.two_k is None and not args.all:
            continue
        wit = " ".join(map(str, r.witness)) if r.witness else ""
        print(f"{r.d},{'' if r.two_k is None else r.two_k},{int(r.feasible)},{wit},{';'.join(r.flags)}")
    compatible = [r.d for r in rows if r.feasible and r.d != 1]
    print(f"# compatible d (necessary condition only): {', '.join(map(str, compatible)) or 'none'}")
    return EXIT_OK


def cmd_family(args, argv) -> int:
    started = _now()
    if args.family_cmd == "u16":
        alphas = _alphas(args.alphas)
        sig = u16_family(alphas)
        out = _out_dir(args)
        outputs = []
        if out is not None:
            outputs.append(serialize_matrix_file(sig.matrix, out / "u16.json"))
            _write_manifest(out, argv, "family u16", {"alphas": alphas.tolist()}, outputs, started)
        else:
            from .io import matrix_to_json

            _emit(matrix_to_json(sig.matrix))
        return EXIT_OK
    m = parse_matrix_file(args.matrix)
    pairs = find_er_pairs(m, tol=args.tol)
    _emit({"pairs": [list(p.one_based()) for p in pairs], "count": len(pairs)})
    return EXIT_OK


def cmd_purity(args, argv) -> int:
    started = _now()
    bp = _bipartition(args.bipartition)
    if bp.d != 6:
        raise UsageError("the u16 family lives in dimension 6; use a bipartition with d_a*d_b = 6")
    if args.purity_cmd == "eval":
        rep = average_purity(u16_frame(_alphas(args.alphas), args.factorization), bp, tol=1e-8)
        _emit({"family": "u16", "factorization": args.factorization, **rep.as_dict()})
        return EXIT_OK
    cfg = OptimizerConfig(restarts=args.restarts, master_seed=args.master_seed, threads=args.threads)
    method = args.factorization

    def objective(a):
        return average_purity(u16_frame(a, method), bp, tol=1e-8).average

    res = optimize_average_purity(objective, 6, args.mode, cfg)
    out = _out_dir(args)
    payload = {"family": "u16", "bipartition": str(bp), "factorization": method, **res.as_dict()}
    outputs = []
    if out is not None:
        (out / "purity.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        outputs.append(out / "purity.json")
    _write_manifest(out, argv, "purity optimize", {**cfg.as_dict(), "mode": args.mode}, outputs, started)
    _emit(payload)
    return EXIT_OK


def cmd_fickus(args, argv) -> int:
    if not 1 <= args.d < args.n:
        raise UsageError("need 1 <= d < n")
    ok = fickus_check(args.d, args.n)
    _emit({"n": args.n, "d": args.d, "fickus_consistent": ok})
    return EXIT_OK if ok else EXIT_NEGATIVE


def chart_rows(records) -> list[tuple[int, int, float, int]]:
    """Existence chart over ``d = 0..N`` per ``N``; ``d = 0`` and ``d = N`` are
    the trivial signatures ``+I`` and ``-I``."""
    by_n: dict[int, dict[int, bool]] = {}
    for r in records:
        by_n.setdefault(r.n, {})[r.d] = r.found
    rows = []
    for n in sorted(by_n):
        for d in range(0, n + 1):
            theta = 2.0 * math.asin(math.sqrt(d / n))
            exists = True if d in (0, n) else by_n[n].get(d, False)
            rows.append((n, d, theta, int(exists)))
    return rows


def cmd_chart(args, argv) -> int:
    records = read_scan_csv(args.scan_csv)
    rows = chart_rows(records)
    out = _out_dir(args)
    fh = open(out / "chart.csv", "w", newline="") if out is not None else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHART_COLUMNS)
        for n, d, theta, exists in rows:
            w.writerow([n, d, repr(theta), exists])
    finally:
        if out is not None:
            fh.close()
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _add_solver_flags(p, seeds: int = 1000):
    p.add_argument("--seeds", type=int, default=seeds)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--real", action="store_true", help="search real orthogonal signatures")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--out", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="etfkit", description="Equiangular tight frames via signature unitaries.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve", help="multi-seed search for ETF(d, n)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--verify-tol", type=float, default=1e-8)
    _add_solver_flags(s)

    v = sub.add_parser("verify", help="verify a Gram, frame or signature matrix file")
    v.add_argument("matrix")
    v.add_argument("--kind", choices=["gram", "frame", "signature"])
    v.add_argument("--d", type=int)
    v.add_argument("--tol", type=float, default=1e-8)

    sc = sub.add_parser("scan", help="existence scan over a range of N")
    sc.add_argument("--n-min", type=int, default=3)
    sc.add_argument("--n-max", type=int, required=True)
    _add_solver_flags(sc)

    c = sub.add_parser("construct", help="deterministic signature unitaries")
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("spec", nargs="?", help='e.g. "fourier:3", "hadamard:4", "tensor(fourier:2,fourier:2)"')
    g.add_argument("--prop2", type=int, metavar="N", help="all tensor constructions for square N")
    c.add_argument("--out", metavar="DIR")

    r = sub.add_parser("roots", help="m-th roots of unity integrality filter")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--m", type=int, required=True)
    r.add_argument("--all", action="store_true", help="also list d with non-integer 2k")

    f = sub.add_parser("family", help="parametric families and ER pairs")
    fsub = f.add_subparsers(dest="family_cmd", required=True, parser_class=_Parser)
    fu = fsub.add_parser("u16")
    fu.add_argument("--alphas", required=True)
    fu.add_argument("--out", metavar="DIR")
    fd = fsub.add_parser("detect")
    fd.add_argument("matrix")
    fd.add_argument("--tol", type=float, default=1e-8)

    pu = sub.add_parser("purity", help="average purity of reductions for the u16 family")
    psub = pu.add_subparsers(dest="purity_cmd", required=True, parser_class=_Parser)
    pe = psub.add_parser("eval")
    pe.add_argument("--family", choices=["u16"], default="u16")
    pe.add_argument("--alphas", required=True)
    pe.add_argument("--bipartition", default="2x3")
    pe.add_argument("--factorization", choices=["eigh", "cholesky"], default="eigh")
    po = psub.add_parser("optimize")
    po.add_argument("--family", choices=["u16"], default="u16")
    po.add_argument("--mode", choices=["min", "max"], required=True)
    po.add_argument("--restarts", type=int, default=100)
    po.add_argument("--master-seed", type=int, default=0)
    po.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    po.add_argument("--bipartition", default="2x3")
    po.add_argument("--factorization", choices=["eigh", "cholesky"], default="eigh")
    po.add_argument("--out", metavar="DIR")

    fk = sub.add_parser("fickus", help="check the divisibility condition for (d, n)")
    fk.add_argument("--n", type=int, required=True)
    fk.add_argument("--d", type=int, required=True)

    ch = sub.add_parser("chart", help="existence chart CSV (N, d, theta, exists) from a scan CSV")
    ch.add_argument("scan_csv")
    ch.add_argument("--out", metavar="DIR")
    return p


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "scan": cmd_scan,
    "construct": cmd_construct,
    "roots": cmd_roots,
    "family": cmd_family,
    "purity": cmd_purity,
    "fickus": cmd_fickus,
    "chart": cmd_chart,
}


def dispatch(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (MatrixFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(dispatch())
