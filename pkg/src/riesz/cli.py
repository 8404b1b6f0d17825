"""Command-line entry point: ``riesz run|laws|converge|fmt``.

JSON is the machine interface; the human output is a thin formatting layer
over the same report objects.  Reports contain no timings or other
run-dependent fields, so repeated invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .convergence import FAMILIES, parse_indices, run_spec
from .dsl import format_source, run_source
from .dsl.diagnostics import FrontendError, diagnostic
from .dsl.evaluate import SCHEMA_VERSION, CheckResult, ExpectResult
from .errors import NotDeterministicMarginal, NotProbability, RieszError
from .expr import X, cos, exp, fst, snd
from .functions import TestFunction
from .generators import FiniteGenerator, IntervalGenerator, ShiftMapGenerator
from .laws import (
    LawReport,
    affine_instances,
    check_affine_corpus,
    check_fubini,
    check_fubini_sweep,
    check_hexagon,
    check_monad_laws,
    check_naturality,
    check_strongly_affine,
    correlated_instances,
)
from .measures import DEFAULT_SEED, IntegrationConfig, uniform
from .spaces import ProductSpace

SUITES = ("monad", "fubini", "affine", "naturality", "hexagon")
FUBINI_ORACLE = (math.e - 1.0) * math.sin(2.0) / 2.0


def _config(args) -> IntegrationConfig:
    return IntegrationConfig.parse(args.backend, seed=args.seed, tol_abs=args.tol, threads=args.threads)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _emit(args, obj, human: str):
    text = _dump(obj)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text if args.json else human)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


# ---------------------------------------------------------------------------
# run


def _human_run(rep) -> str:
    if rep.diagnostics:
        return "".join(f"{d['code']}: {d['message']}\n" for d in rep.diagnostics)
    lines = []
    for s in rep.evaluation.summaries:
        lines.append(f"{s.name} : {s.space}  mass={_fmt(s.mass)}  depth={s.depth}")
    for r in rep.evaluation.results:
        if isinstance(r, ExpectResult):
            err = f" +/- {_fmt(r.stderr)}" if r.stderr else ""
            lines.append(f"{r.source}  =>  {_fmt(r.value)}{err}  [{r.backend}]")
        elif isinstance(r, CheckResult):
            if r.rejected:
                lines.append(f"{r.source}  =>  rejected ({r.rejected['code']}: {r.rejected['message']})")
            else:
                lines.append(f"{r.source}  =>  {r.verdict} (residual {_fmt(r.report.max_residual)}, tol {r.report.tolerance:g})")
    return "".join(line + "\n" for line in lines)


def cmd_run(args) -> int:
    cfg = _config(args)
    try:
        text = Path(args.program).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        diag = diagnostic("IOError", None, str(exc))
        _emit(args, {"schema_version": SCHEMA_VERSION, "exit_code": 2, "stage": "read", "diagnostics": [diag]}, f"IOError: {exc}\n")
        return 2
    rep = run_source(text, cfg)
    out = rep.to_json()
    out["program"] = args.program
    human = _human_run(rep)
    if rep.diagnostics:
        # diagnostics are JSON whatever the output mode
        if args.out:
            Path(args.out).write_text(_dump(out))
        sys.stdout.write(_dump(out))
        if not args.json:
            sys.stderr.write(human)
    else:
        _emit(args, out, human)
    return rep.exit_code


# ---------------------------------------------------------------------------
# laws


def _tagged(rep: LawReport, name: str) -> LawReport:
    rep.law_name = name
    return rep


def _interval_ok(cfg: IntegrationConfig) -> bool:
    return cfg.backend != "exact"


def suite_reports(suite: str, trials: int, cfg: IntegrationConfig, interval_trials: int | None = None) -> list[LawReport]:
    """LawReports of one suite; ``all`` concatenates every suite."""
    if suite == "all":
        return [r for s in SUITES for r in suite_reports(s, trials, cfg, interval_trials)]
    seed, threads = cfg.seed, cfg.threads
    k = trials // 4 if interval_trials is None else interval_trials
    finite, interval = FiniteGenerator(seed), IntervalGenerator(seed)
    out = []
    if suite == "monad":
        out.append(_tagged(check_monad_laws(finite, trials, cfg, threads), "monad[finite]"))
        if _interval_ok(cfg):
            out.append(_tagged(check_monad_laws(interval, k, cfg, threads), "monad[interval]"))
    elif suite == "naturality":
        out.append(_tagged(check_naturality(None, finite, trials, cfg, threads), "naturality[finite]"))
        out.append(_tagged(check_naturality(None, ShiftMapGenerator(seed), trials, cfg, threads), "naturality[finite_shift]"))
        if _interval_ok(cfg):
            out.append(_tagged(check_naturality(None, interval, k, cfg, threads), "naturality[interval]"))
    elif suite == "hexagon":
        out.append(_tagged(check_hexagon(finite, trials, cfg, threads), "hexagon[finite]"))
        if _interval_ok(cfg):
            out.append(_tagged(check_hexagon(interval, k, cfg, threads), "hexagon[interval]"))
    elif suite == "fubini":
        out.append(_tagged(check_fubini_sweep(finite, trials, cfg, threads), "fubini[finite]"))
        if _interval_ok(cfg):
            out.append(_tagged(check_fubini_sweep(interval, k, cfg, threads), "fubini[interval]"))
            if trials > 0:
                out.append(fubini_analytic(cfg))
    elif suite == "affine":
        out.append(affine_report(trials, cfg))
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return out


def fubini_analytic(cfg: IntegrationConfig) -> LawReport:
    """Both iterated orders of ``e^x cos(y)`` under U(0,1) x U(0,2) against the closed form."""
    mu, nu = uniform(0.0, 1.0), uniform(0.0, 2.0)
    f = TestFunction(exp(fst(X)) * cos(snd(X)), ProductSpace(mu.space, nu.space))
    rep = check_fubini(mu, nu, f, cfg)
    a, b = rep.values
    err = max(abs(a - FUBINI_ORACLE), abs(b - FUBINI_ORACLE))
    oracle = LawReport("oracle", 1, err, rep.tolerance, backend=rep.backend, seed=rep.seed)
    if oracle.failed:
        oracle.witness = {"law": "oracle", "x_first": a, "y_first": b, "oracle": FUBINI_ORACLE, "residual": err}
    top = LawReport("fubini[analytic]", 1, max(rep.max_residual, err), rep.tolerance, rep.witness or oracle.witness, [rep, oracle], rep.backend, rep.seed)
    return top


def affine_report(trials: int, cfg: IntegrationConfig) -> LawReport:
    """Strong affineness over the seeded finite corpus.

    Correlated joints must be rejected by the precondition check; one that
    slips through counts as a failure of the detector, not of the law.
    """
    rep = check_affine_corpus(affine_instances(cfg.seed, trials), cfg)
    rep.law_name = "affine[corpus]"
    controls = correlated_instances(cfg.seed, min(trials, 5))
    accepted = []
    for i, mu in enumerate(controls):
        try:
            check_strongly_affine(mu, cfg)
            accepted.append(i)
        except (NotDeterministicMarginal, NotProbability):
            pass
    detector = LawReport("precondition_rejects_correlated", len(controls), float(len(accepted)), 0.0, backend="exact", seed=cfg.seed)
    if accepted:
        detector.witness = {"law": "precondition_rejects_correlated", "accepted": accepted, "residual": float(len(accepted))}
    rep.parts = [*rep.parts, detector]
    rep.witness = rep.witness or detector.witness
    rep.rejected_controls = len(controls) - len(accepted)
    return rep


def _law_json(rep: LawReport) -> dict:
    out = rep.to_json()
    if hasattr(rep, "rejected"):
        out["rejected"] = rep.rejected
    if hasattr(rep, "rejected_controls"):
        out["rejected_controls"] = rep.rejected_controls
    return out


def cmd_laws(args) -> int:
    cfg = _config(args)
    if args.trials < 0:
        raise SystemExit("--trials must be >= 0")
    reports = suite_reports(args.suite, args.trials, cfg, args.interval_trials)
    ok = all(r.passed for r in reports)
    obj = {
        "schema_version": SCHEMA_VERSION,
        "suite": args.suite,
        "trials": args.trials,
        "config": cfg.to_json(),
        "verdict": "pass" if ok else "fail",
        "reports": [_law_json(r) for r in reports],
    }
    lines = []
    for r in reports:
        lines.append(f"{r.law_name:28s} {r.verdict:4s}  n={r.instances_checked:<5d} max_residual={_fmt(r.max_residual)}  tol={r.tolerance:g}")
        if r.failed and r.witness:
            lines.append("  witness: " + json.dumps(r.witness, sort_keys=True)[:2000])
    lines.append(f"overall: {'pass' if ok else 'fail'}")
    _emit(args, obj, "".join(line + "\n" for line in lines))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# converge


def _load_spec(arg: str) -> dict:
    path = Path(arg)
    if not path.exists() and arg in FAMILIES:
        return {"family": arg}
    spec = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(spec, dict):
        raise ValueError("a convergence spec must be a JSON object")
    return spec


def cmd_converge(args) -> int:
    cfg = _config(args)
    try:
        spec = _load_spec(args.spec)
        indices = parse_indices(args.indices) if args.indices else None
        rep = run_spec(spec, indices, cfg, args.tol, args.threads)
    except (OSError, ValueError, KeyError, TypeError, RieszError) as exc:
        code = exc.code if isinstance(exc, RieszError) else "MalformedSpec"
        obj = {"schema_version": SCHEMA_VERSION, "diagnostics": [diagnostic(code, None, str(exc).strip("'\""))]}
        sys.stdout.write(_dump(obj))
        return 2
    obj = {"schema_version": SCHEMA_VERSION, "spec": spec, "config": cfg.to_json(), **rep.to_json()}
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    name = spec.get("family", spec.get("mode", "spec"))
    lines = [f"{name}: {rep.verdict}  (mode {rep.mode}, tol {rep.tolerance:g}, non-increasing tail: {rep.decreasing})"]
    for n, r in zip(rep.indices, rep.sup_residuals):
        lines.append(f"  n={n:<4d} residual={_fmt(r)}")
    _emit(args, obj, "".join(line + "\n" for line in lines))
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# fmt


def cmd_fmt(args) -> int:
    status = 0
    for p in args.files:
        text = Path(p).read_text(encoding="utf-8")
        try:
            out = format_source(text)
        except FrontendError as exc:
            sys.stdout.write(_dump({"schema_version": SCHEMA_VERSION, "file": p, "diagnostics": [exc.to_json()]}))
            return 2
        if args.check:
            if out != text:
                sys.stderr.write(f"{p}: not canonically formatted\n")
                status = 1
        elif args.write:
            Path(p).write_text(out)
        else:
            sys.stdout.write(out)
    return status


# ---------------------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("tolerance must be >= 0")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", default="auto", help="exact | quad:<order> | mc:<samples> | auto (default)")
    common.add_argument("--tol", type=_nonneg, default=None, help="absolute tolerance override")
    common.add_argument("--seed", type=_u64, default=DEFAULT_SEED, help=f"64-bit seed (default {DEFAULT_SEED})")
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--out", default=None, help="also write the JSON report to this path")
    common.add_argument("--threads", type=_positive, default=1, help="worker threads (results do not depend on it)")

    p = argparse.ArgumentParser(prog="riesz", description="Measures as integration functionals: programs, law checks, convergence.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="evaluate a .rpl program")
    r.add_argument("program")
    r.set_defaults(func=cmd_run)

    lw = sub.add_parser("laws", parents=[common], help="run a law-checking suite")
    lw.add_argument("suite", choices=[*SUITES, "all"])
    lw.add_argument("--trials", type=int, default=200)
    lw.add_argument("--interval-trials", type=int, default=None, help="interval instances (default trials/4)")
    lw.set_defaults(func=cmd_laws)

    c = sub.add_parser("converge", parents=[common], help="run a convergence spec (JSON file or built-in family name)")
    c.add_argument("spec")
    c.add_argument("--indices", default=None, help="a..b or a,b,c")
    c.add_argument("--csv", default=None, help="write (n, residual) rows to this path")
    c.set_defaults(func=cmd_converge)

    f = sub.add_parser("fmt", help="print programs in canonical form")
    f.add_argument("files", nargs="+")
    mode = f.add_mutually_exclusive_group()
    mode.add_argument("--check", action="store_true", help="exit 1 if a file is not canonical")
    mode.add_argument("--write", action="store_true", help="rewrite files in place")
    f.set_defaults(func=cmd_fmt)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.backend = getattr(args, "backend", None)
        if args.backend is not None:
            IntegrationConfig.parse(args.backend)
    except ValueError as exc:
        sys.stderr.write(f"riesz: {exc}\n")
        return 2
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
