"""Command-line front end.

Exit codes: 0 certified / PASS, 2 falsified / FAIL, 3 inconclusive, 1 error
(including hypothesis gates that block a check).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import get_entry, load_catalog, run_entry
from .classify import Property, classify
from .common import EIG_TOL, SLACK_TOL, Caps, GridSpec, Status, step_grid
from .envelopes import EnvelopeKind, PairGrid, fit_envelope, nues_status, refine_envelope
from .expr import ExprError
from .files import (SystemFileError, build_gains, build_system, file_caps, file_grid,
                    load_system_file, system_to_dict)
from .gramians import GramianKind, check_gramian_relations, gramian
from .integrate import IntegrationError
from .linalg import jacobi_eigvalsh, spectral_norm
from .system import DomainViolation, LtvSystem, TransitionEvaluator
from .verify import HypothesisSet, ReportStatus, Theorem, run_theorem

EXIT_OK, EXIT_ERROR, EXIT_FALSIFIED, EXIT_INCONCLUSIVE = 0, 1, 2, 3

_STATUS_EXIT = {
    Status.CERTIFIED.value: EXIT_OK,
    Status.FALSIFIED.value: EXIT_FALSIFIED,
    Status.INCONCLUSIVE.value: EXIT_INCONCLUSIVE,
    ReportStatus.PASS.value: EXIT_OK,
    ReportStatus.FAIL.value: EXIT_FALSIFIED,
    ReportStatus.HYPOTHESIS_VIOLATED.value: EXIT_ERROR,
}


@dataclass
class Loaded:
    system: LtvSystem
    gains: dict
    grid: GridSpec
    caps: Caps
    hyp: HypothesisSet | None
    rtol: float
    atol: float
    eig_tol: float
    slack_tol: float
    source: str

    def evaluator(self, workers: int) -> TransitionEvaluator:
        return TransitionEvaluator(self.system, rtol=self.rtol, atol=self.atol, workers=workers)

    def settings(self, workers: int) -> dict:
        return {"source": self.source, "rtol": self.rtol, "atol": self.atol,
                "eig_tol": self.eig_tol, "slack_tol": self.slack_tol, "workers": workers,
                "grids": self.grid.as_dict(), "caps": self.caps.as_dict()}


def _load(args) -> Loaded:
    """A *.system.json path, or a catalog id such as S1."""
    path = Path(args.file)
    if path.exists():
        sf = load_system_file(path)
        system = build_system(sf)
        gains = build_gains(sf, system)
        grid, caps = file_grid(sf), file_caps(sf)
        tol = sf.tolerances
        hyp = HypothesisSet.from_dict(sf.hypotheses) if sf.hypotheses else None
        source = path.name
    else:
        try:
            entry = get_entry(args.file)
        except KeyError:
            raise SystemFileError(f"{args.file}: no such file or catalog entry") from None
        system, gains, grid, caps, tol, hyp = entry.system, entry.gains, entry.grid, Caps(), None, None
        source = f"catalog:{entry.id}"
    pick = lambda flag, name, default: (flag if flag is not None
                                        else getattr(tol, name, None) if tol is not None and getattr(tol, name, None) is not None
                                        else default)
    grid = GridSpec.parse(args.t_grid, args.sigma_grid, grid)
    if args.caps:
        caps = Caps.parse(args.caps)
    return Loaded(system, gains, grid, caps, hyp,
                  rtol=pick(args.rtol, "rtol", 1e-9), atol=pick(args.atol, "atol", 1e-12),
                  eig_tol=pick(args.eig_tol, "eig_tol", EIG_TOL),
                  slack_tol=pick(args.slack_tol, "slack_tol", SLACK_TOL), source=source)


# report output

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


CSV_COLUMNS = ("t", "sigma", "lambda_min", "lambda_max", "bound_lower", "bound_upper")


def _emit(args, command: str, settings: dict, results: dict, witnesses: list,
          tables: dict, started: float, code: int) -> int:
    section = {"command": command, "settings": settings, "results": results, "witnesses": witnesses}
    report = {"deterministic": _clean(section),
              "footer": {"wall_time_s": round(time.perf_counter() - started, 3), "exit_code": code}}
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n")
        for name, rows in tables.items():
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_COLUMNS)
                for r in rows:
                    w.writerow([repr(float(v)) for v in r])
    if not args.quiet:
        print(text)
    return code


# commands

def cmd_transition(args, started) -> int:
    ld = _load(args)
    ev = ld.evaluator(args.workers)
    t, s = args.t, args.s
    phi = ev.transition(t, s)
    mid = 0.5 * (t + s)
    cocycle = spectral_norm(phi - ev.transition(t, mid) @ ev.transition(mid, s)) / max(1.0, spectral_norm(phi))
    inverse = spectral_norm(phi @ ev.transition(s, t) - np.eye(ev.n))
    results = {"t": t, "s": s, "phi": phi, "cocycle_residual": cocycle, "inverse_residual": inverse}
    return _emit(args, "transition", ld.settings(args.workers), results, [], {}, started, EXIT_OK)


def cmd_gramian(args, started) -> int:
    ld = _load(args)
    ev = ld.evaluator(args.workers)
    g = gramian(ev, GramianKind(args.kind), args.a, args.b)
    rel = check_gramian_relations(ev, args.a, args.b)
    results = {"kind": args.kind, "interval": [args.a, args.b], "matrix": g.value,
               "eigenvalues": jacobi_eigvalsh(g.value), "relation_residuals": rel.__dict__}
    return _emit(args, "gramian", ld.settings(args.workers), results, [], {}, started, EXIT_OK)


def cmd_classify(args, started) -> int:
    ld = _load(args)
    ev = ld.evaluator(args.workers)
    v = classify(ev, Property(args.property), ld.grid.ts, ld.grid.sigmas, ld.caps, ld.eig_tol)
    tables = {f"classify_{v.property.value}_{k}": v.surface_rows(k) for k in v.property.pair}
    witnesses = [v.witness] if v.witness else []
    return _emit(args, "classify", ld.settings(args.workers), v.as_dict(), witnesses, tables,
                 started, _STATUS_EXIT[v.status.value])


def cmd_fit_envelope(args, started) -> int:
    ld = _load(args)
    ev = ld.evaluator(args.workers)
    kind = EnvelopeKind(args.kind)
    g = ld.grid
    nodes = sorted(set(g.ts) | {t + s for t in g.ts for s in g.sigmas})
    grid = PairGrid(nodes, nodes)
    env = fit_envelope(ev, kind, grid, step_grid(ld.caps.rate), step_grid(ld.caps.nu))
    if args.refine:
        env = refine_envelope(ev, env, grid, levels=args.refine, caps=ld.caps)
    if kind.decays:
        status = nues_status(env, ld.caps)
    else:
        status = Status.CERTIFIED if env.prefactor <= ld.caps.pref else Status.FALSIFIED
    results = dict(env.as_dict(), status=status.value)
    return _emit(args, "fit-envelope", ld.settings(args.workers), results, [], {}, started,
                 _STATUS_EXIT[status.value])


def _theorem_tables(rep) -> dict:
    if rep.theorem is Theorem.FEEDBACK_OBS:
        out = {}
        for r in rep.rows:
            out.setdefault(f"corridor_{r['direction']}", []).append(
                (r["t"], r["sigma"], r["lambda_min"], r["lambda_max"], r["lower"], r["upper"]))
        return out
    if rep.theorem in (Theorem.DETECT_IMPLIES_NUCO, Theorem.STAB_IMPLIES_NUCC):
        return {"floor": [(r["t"], r["sigma"], r["lambda_min"], math.nan, r["floor"], math.nan)
                          for r in rep.rows]}
    return {}


def cmd_verify(args, started) -> int:
    ld = _load(args)
    ev = ld.evaluator(args.workers)
    rep = run_theorem(ev, Theorem(args.theorem), ld.grid.ts, ld.grid.sigmas, ld.gains, ld.hyp,
                      ld.caps, ld.eig_tol, ld.slack_tol)
    if rep.status is ReportStatus.HYPOTHESIS_VIOLATED:
        failing = [k for k, v in rep.margins.items() if not v > 0]
        print(f"hypothesis margin not positive: {', '.join(failing) or rep.failed_stage}",
              file=sys.stderr)
    return _emit(args, "verify", ld.settings(args.workers), rep.as_dict(), [], _theorem_tables(rep),
                 started, _STATUS_EXIT[rep.status.value])


def cmd_catalog(args, started) -> int:
    entries = load_catalog()
    if args.action == "list":
        results = {"entries": [{"id": e.id, "description": e.description,
                                "expected": [f"{x.label()} -> {x.status}" for x in e.expected]}
                               for e in entries]}
        return _emit(args, "catalog list", {}, results, [], {}, started, EXIT_OK)
    if args.action == "export":
        if len(args.ids) != 1:
            raise SystemFileError("export takes exactly one catalog id")
        e = get_entry(args.ids[0])
        text = json.dumps(system_to_dict(e.system, e.gains, e.grid), indent=2)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / f"{e.id}.system.json").write_text(text + "\n")
        if not args.quiet:
            print(text)
        return EXIT_OK
    chosen = [get_entry(i) for i in args.ids] if args.ids else entries
    caps = Caps.parse(args.caps) if args.caps else Caps()
    results, witnesses, all_ok = {}, [], True
    for e in chosen:
        ev = TransitionEvaluator(e.system, rtol=args.rtol or 1e-9, atol=args.atol or 1e-12,
                                 workers=args.workers)
        outs = run_entry(e, ev, caps, args.eig_tol, args.slack_tol)
        results[e.id] = [o.as_dict() for o in outs]
        for o in outs:
            all_ok &= o.reproduced
            if o.witness_t is not None:
                witnesses.append({"entry": e.id, "target": o.expectation.target, "t": o.witness_t})
    settings = {"rtol": args.rtol or 1e-9, "atol": args.atol or 1e-12,
                "eig_tol": args.eig_tol or EIG_TOL, "slack_tol": args.slack_tol or SLACK_TOL,
                "caps": caps.as_dict(), "workers": args.workers,
                "grids": {e.id: e.grid.as_dict() for e in chosen}}
    return _emit(args, "catalog run", settings, results, witnesses, {}, started,
                 EXIT_OK if all_ok else EXIT_FALSIFIED)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--eig-tol", type=float)
    common.add_argument("--slack-tol", type=float)
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("--t-grid", metavar="LO:HI:COUNT",
                        help="start times; write --t-grid=-3:3:7 when LO is negative")
    common.add_argument("--sigma-grid", metavar="V1,V2,...")
    common.add_argument("--caps", metavar="RATE:NU:PREF")
    common.add_argument("--out", metavar="DIR", help="write report.json and CSV tables here")
    common.add_argument("-q", "--quiet", action="store_true", help="do not print the report")

    p = argparse.ArgumentParser(prog="ltvkit", description="Observability and controllability "
                                "checks for linear time-varying systems.")
    sub = p.add_subparsers(dest="command", required=True)
    file_help = "system file (*.system.json) or catalog id"

    s = sub.add_parser("transition", parents=[common], help="transition matrix with self-checks")
    s.add_argument("file", help=file_help)
    s.add_argument("t", type=float)
    s.add_argument("s", type=float)
    s.set_defaults(fn=cmd_transition)

    s = sub.add_parser("gramian", parents=[common], help="one Gramian with relation residuals")
    s.add_argument("file", help=file_help)
    s.add_argument("kind", choices=[k.value for k in GramianKind])
    s.add_argument("a", type=float)
    s.add_argument("b", type=float)
    s.set_defaults(fn=cmd_gramian)

    s = sub.add_parser("classify", parents=[common], help="tri-valued verdict on the grid window")
    s.add_argument("file", help=file_help)
    s.add_argument("property", choices=[x.value for x in Property])
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("fit-envelope", parents=[common], help="fit a transition-norm envelope")
    s.add_argument("file", help=file_help)
    s.add_argument("kind", choices=[k.value for k in EnvelopeKind])
    s.add_argument("--refine", type=int, default=0, metavar="LEVELS",
                   help="coarse-to-fine passes around the grid optimum, each 10x finer")
    s.set_defaults(fn=cmd_fit_envelope)

    s = sub.add_parser("verify", parents=[common], help="check one result by id")
    s.add_argument("file", help=file_help)
    s.add_argument("theorem", choices=[t.value for t in Theorem])
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("catalog", parents=[common], help="list, run or export catalog entries")
    s.add_argument("action", choices=["list", "run", "export"])
    s.add_argument("ids", nargs="*")
    s.set_defaults(fn=cmd_catalog)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        return args.fn(args, started)
    except (SystemFileError, ExprError, DomainViolation, IntegrationError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
