"""Batch front-end: domain files in, JSON / CSV reports out.

Exit codes with --strict: 0 all pass, 2 a bound check failed, 3 solver
failure, 4 configuration error.  Configuration errors always exit with 4.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import BoundaryFamily, NearZigzagError, ValleyBoundary, b_factor
from .convergence import DEFAULT_LEVELS, convergence_study
from .disc_analytic import disc_eigenvalues
from .eigen import EigenSolverError, IndefiniteMassError, smallest_eigenpairs, verify_residuals
from .fem import assemble, assemble_first_order, write_triplets
from .geometry import BoundaryCurve, InvalidCurveError, DegenerateMeshError, area, triangulate
from .theorem import check_gap, gap_lower_bound, proof_inequality_check, solve_neumann
from .valley import (
    ZigzagSpectralError,
    assemble_four_spinor,
    filtered_gap,
    permute_armchair,
    spectral_equivalence_check,
)

EXIT_OK, EXIT_FAIL, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3, 4
# Stricter than the library guard: at |cos eta| ~ 1e-7 the bound is ~1e-7 and meaningless.
CLI_ZIGZAG_TOL = 1e-6


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    domain: str | None = None
    eta: float | None = None
    bc: str = "infinite-mass"
    nu_phase: float = 0.0
    h: float = 0.05
    k: int = 4
    tol: float = 1e-8
    seed: int = 42
    out: str | None = None
    budget: float | None = None
    strict: bool = False
    levels: list[float] = field(default_factory=lambda: list(DEFAULT_LEVELS))
    etas: list[float] = field(default_factory=list)

    def curve(self) -> BoundaryCurve:
        if self.domain is None:
            return BoundaryCurve.disc(1.0)
        try:
            return BoundaryCurve.from_json(self.domain)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"cannot read domain file {self.domain!r}: {exc}") from exc

    def validate(self, command: str) -> None:
        etas = list(self.etas)
        if self.eta is not None:
            etas.append(self.eta)
        for e in etas:
            if abs(math.cos(e)) <= CLI_ZIGZAG_TOL:
                raise NearZigzagError(
                    f"eta={e} is at the zigzag point (|cos eta| = {abs(math.cos(e)):.2g}); "
                    f"the gap bound requires cos(eta) != 0, choose eta away from pi/2 + n pi"
                )
        if not self.h > 0:
            raise ConfigError(f"--h must be positive, got {self.h}")
        if self.k < 1:
            raise ConfigError(f"--k must be at least 1, got {self.k}")
        if not (1e-14 < self.tol < 1e-2):
            raise ConfigError(f"--tol must lie in (1e-14, 1e-2), got {self.tol}")
        if self.budget is not None and self.budget < 0:
            raise ConfigError("--budget must be non-negative")
        if command in ("verify", "sweep", "converge"):
            lv = self.levels
            if len(lv) < 3 or any(b >= a for a, b in zip(lv, lv[1:])):
                raise ConfigError(f"--levels needs at least three decreasing mesh sizes, got {lv}")
        if command == "sweep" and not self.etas:
            raise ConfigError("sweep needs --etas")
        curve = self.curve()
        hs = self.levels if command in ("verify", "sweep", "converge") else [self.h]
        if max(hs) >= curve.diameter() / 4:
            raise ConfigError(f"mesh size {max(hs)} must be below diameter/4 = {curve.diameter() / 4:.3g}")

    def digest(self) -> str:
        d = asdict(self)
        d.pop("out")  # where results go does not change them
        payload = json.dumps(d, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _provenance(cfg: RunConfig) -> dict:
    return {"version": __version__, "config_hash": cfg.digest(), "seed": cfg.seed}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json(payload: dict, out: str | None) -> None:
    _emit(json.dumps(payload, indent=2, sort_keys=True, default=_plain) + "\n", out)


def _csv(rows: list[dict], columns: list[str], cfg: RunConfig, out: str | None) -> None:
    buf = io.StringIO()
    prov = _provenance(cfg)
    buf.write("# " + " ".join(f"{k}={v}" for k, v in prov.items()) + "\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r.get(c, "") for c in columns})
    _emit(buf.getvalue(), out)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DIRACGAP_THREADS", "1")))
    except ValueError:
        return 1


# pipelines -------------------------------------------------------------------


def run_solve(cfg: RunConfig) -> int:
    cfg.validate("solve")
    eta = 0.0 if cfg.eta is None else cfg.eta
    curve = cfg.curve()
    t0 = time.perf_counter()
    mesh = triangulate(curve, cfg.h)
    fam = BoundaryFamily.from_eta(eta)
    prob = assemble(mesh, fam)
    t1 = time.perf_counter()
    res = smallest_eigenpairs(prob, k=cfg.k, tol=cfg.tol, seed=cfg.seed)
    t2 = time.perf_counter()
    A = area(curve)
    report = check_gap(res, A, eta, budget=cfg.budget or 0.0)
    payload = {
        "domain": curve.to_dict(),
        "eta": eta,
        "B": fam.B,
        "area": A,
        "h": cfg.h,
        "eigenvalues_mu": res.eigenvalues.tolist(),
        "gaps_abs_lambda": res.gaps.tolist(),
        "residuals": res.residuals.tolist(),
        "bound": report.bound,
        "budget": report.budget,
        "verdict": report.verdict,
        "dim": prob.dim,
        "timings": {"assemble_s": t1 - t0, "solve_s": t2 - t1},
        **_provenance(cfg),
    }
    _json(payload, cfg.out)
    return EXIT_FAIL if (cfg.strict and report.verdict != "PASS") else EXIT_OK


def _verify_payload(cfg: RunConfig, curve: BoundaryCurve, eta: float) -> dict:
    study = convergence_study(curve, eta, cfg.levels, k=max(cfg.k, 2), tol=cfg.tol, seed=cfg.seed, keep_results=True)
    budget = study.budget if cfg.budget is None else cfg.budget
    prob, res = study.results[-1]
    A = area(curve)
    gap = check_gap(res, A, eta, budget=budget)
    payload = {
        "domain": curve.to_dict(),
        "gap_report": gap.to_dict(),
        "convergence": {
            "h": study.hs,
            "sqrt_mu1": study.sqrt_mu1,
            "extrapolated": study.extrapolation.value,
            "error_estimate": study.extrapolation.estimate,
            "observed_order": study.extrapolation.order,
            "monotone": study.extrapolation.monotone,
        },
        "residual_check": verify_residuals(prob, res),
    }
    if prob.family.is_infinite_mass:
        ns = solve_neumann(prob.mesh, curve)
        payload["neumann"] = {
            "C": ns.C,
            "solvability_residual": ns.solvability_residual,
            "discrete_compatibility": ns.discrete_compatibility,
            "linear_residual": ns.linear_residual,
        }
        payload["proof_checks"] = [
            proof_inequality_check(res, ns, prob, pair=j, budget=budget).to_dict() for j in range(len(res))
        ]
    return payload


def run_verify(cfg: RunConfig) -> int:
    cfg.validate("verify")
    eta = 0.0 if cfg.eta is None else cfg.eta
    payload = _verify_payload(cfg, cfg.curve(), eta)
    payload.update(_provenance(cfg))
    _json(payload, cfg.out)
    verdicts = [payload["gap_report"]["verdict"]] + [p["verdict"] for p in payload.get("proof_checks", [])]
    failed = any(v != "PASS" for v in verdicts)
    return EXIT_FAIL if (cfg.strict and failed) else EXIT_OK


def _sweep_row(cfg: RunConfig, curve: BoundaryCurve, eta: float) -> dict:
    try:
        study = convergence_study(curve, eta, cfg.levels, k=2, tol=cfg.tol, seed=cfg.seed)
        budget = study.budget if cfg.budget is None else cfg.budget
        rep = check_gap(study.sqrt_mu1[-1], area(curve), eta, budget=budget)
        return {
            "eta": eta,
            "B": rep.B,
            "bound": rep.bound,
            "gap_fem": rep.gap,
            "margin": rep.margin,
            "budget": budget,
            "pass": str(rep.verdict == "PASS").lower(),
        }
    except Exception as exc:  # recorded per row, the sweep continues
        return {"eta": eta, "B": b_factor(eta), "pass": "false", "error": f"{type(exc).__name__}: {exc}"}


def run_sweep(cfg: RunConfig) -> int:
    cfg.validate("sweep")
    curve = cfg.curve()
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda e: _sweep_row(cfg, curve, e), cfg.etas))
    cols = ["eta", "B", "bound", "gap_fem", "margin", "pass", "budget", "error"]
    _csv(rows, cols, cfg, cfg.out)
    failed = any(r["pass"] != "true" for r in rows)
    if cfg.strict and any("error" in r for r in rows):
        return EXIT_SOLVER
    return EXIT_FAIL if (cfg.strict and failed) else EXIT_OK


def run_convergence(cfg: RunConfig) -> int:
    cfg.validate("converge")
    eta = 0.0 if cfg.eta is None else cfg.eta
    study = convergence_study(cfg.curve(), eta, cfg.levels, k=2, tol=cfg.tol, seed=cfg.seed)
    cols = ["h", "mu1", "sqrt_mu1", "richardson_estimate", "observed_order"]
    _csv(study.rows(), cols, cfg, cfg.out)
    if not study.extrapolation.monotone:
        print("warning: non-monotone convergence over the last three levels", file=sys.stderr)
    return EXIT_OK


def run_disc(cfg: RunConfig, m_max: int, per_m: int) -> int:
    curve = cfg.curve()
    if curve.kind != "disc":
        raise ConfigError("the disc subcommand needs a disc domain")
    spec = disc_eigenvalues(curve.R, m_max, per_m)
    rows = [{"m": m, "index": i, "k": k, "residual": r} for m, i, k, r in spec.table()]
    _csv(rows, ["m", "index", "k", "residual"], cfg, cfg.out)
    return EXIT_OK


def run_valley(cfg: RunConfig) -> int:
    cfg.validate("valley")
    curve = cfg.curve()
    vb = ValleyBoundary.armchair(cfg.nu_phase) if cfg.bc == "armchair" else ValleyBoundary(cfg.bc)
    mesh = triangulate(curve, cfg.h)
    four = assemble_four_spinor(mesh, vb)
    k0 = assemble_first_order(mesh, BoundaryFamily.from_eta(0.0))
    squared = assemble(mesh, BoundaryFamily.from_eta(0.0))
    mus = smallest_eigenpairs(squared, k=min(20, squared.dim // 4), tol=cfg.tol, seed=cfg.seed).eigenvalues
    payload = {"domain": curve.to_dict(), "bc": cfg.bc, "nu_phase": cfg.nu_phase, "h": cfg.h}
    if vb.kind == "armchair":
        _, structure = permute_armchair(four)
        payload["structure"] = structure
        payload["equivalence"] = spectral_equivalence_check(four, k0)
    else:
        kpi = assemble_first_order(mesh, BoundaryFamily.from_eta(math.pi))
        payload["equivalence"] = spectral_equivalence_check(four, k0, two_spinor_pi=kpi)
    gap = filtered_gap(four, mus)
    A = area(curve)
    bound = gap_lower_bound(A, 0.0)
    budget = cfg.budget or 0.0
    payload.update(
        {
            "squared_form_gaps": np.sqrt(np.maximum(mus, 0)).tolist(),
            "filtered_gap": gap,
            "bound": bound,
            "verdict": "PASS" if gap >= bound - budget else "FAIL",
            **_provenance(cfg),
        }
    )
    _json(payload, cfg.out)
    return EXIT_FAIL if (cfg.strict and payload["verdict"] != "PASS") else EXIT_OK


def run_export(cfg: RunConfig, which: str) -> int:
    cfg.validate("export-matrix")
    if not cfg.out:
        raise ConfigError("export-matrix needs --out")
    eta = 0.0 if cfg.eta is None else cfg.eta
    mesh = triangulate(cfg.curve(), cfg.h)
    fam = BoundaryFamily.from_eta(eta)
    prob = assemble_first_order(mesh, fam) if which == "K" else assemble(mesh, fam)
    mat = {"S": prob.S, "K": prob.S, "M": prob.M, "R": prob.R}[which]
    write_triplets(mat, cfg.out)
    return EXIT_OK


# argument parsing ----------------------------------------------------------------


def _angle(tok: str) -> float:
    """Parse '0.3', 'pi', '-pi/6', '2*pi/3', '2pi/3'."""
    tok = tok.strip().lower().replace(" ", "")
    num, _, den = tok.partition("/")
    value = 1.0
    sign = -1.0 if num.startswith("-") else 1.0
    num = num.lstrip("+-")
    for factor in num.replace("pi", "*pi").strip("*").split("*"):
        if factor:
            value *= math.pi if factor == "pi" else float(factor)
    value = sign * value
    if den:
        value /= float(den)
    return value


def _floats(text: str) -> list[float]:
    try:
        return [_angle(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diracgap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mesh=True):
        sp.add_argument("--domain", help="domain description JSON (default: unit disc)")
        sp.add_argument("--eta", type=float, help="boundary angle eta in radians (default 0)")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--strict", action="store_true", help="nonzero exit on any FAIL verdict")
        sp.add_argument("--budget", type=float, help="override the discretization error budget")
        if mesh:
            sp.add_argument("--h", type=float, default=0.05)
            sp.add_argument("--k", type=int, default=4)

    common(sub.add_parser("solve", help="lowest eigenvalues of D_eta^2 on one mesh"))
    v = sub.add_parser("verify", help="gap bound with Richardson budget and proof checks")
    common(v)
    v.add_argument("--levels", type=_floats, default=list(DEFAULT_LEVELS))
    s = sub.add_parser("sweep", help="gap bound across an eta grid (CSV)")
    common(s)
    s.add_argument("--etas", type=_floats, required=True, help="comma list, 'pi' allowed, e.g. 0,pi/6,pi/4")
    s.add_argument("--levels", type=_floats, default=list(DEFAULT_LEVELS))
    c = sub.add_parser("converge", help="refinement study and Richardson extrapolation (CSV)")
    common(c)
    c.add_argument("--levels", type=_floats, default=list(DEFAULT_LEVELS))
    d = sub.add_parser("disc", help="analytic disc spectrum (CSV)")
    common(d, mesh=False)
    d.add_argument("--m-max", type=int, default=5)
    d.add_argument("--per-m", type=int, default=3)
    va = sub.add_parser("valley", help="four-spinor reductions (JSON)")
    common(va)
    va.add_argument("--bc", choices=["infinite-mass", "armchair", "zigzag"], default="armchair")
    va.add_argument("--nu-phase", type=float, default=0.0)
    e = sub.add_parser("export-matrix", help="write S, K, M or R as sparse triplets")
    common(e)
    e.add_argument("--which", choices=["S", "K", "M", "R"], default="S")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = {f for f in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in fields and v is not None})
    try:
        if args.command == "solve":
            return run_solve(cfg)
        if args.command == "verify":
            return run_verify(cfg)
        if args.command == "sweep":
            return run_sweep(cfg)
        if args.command == "converge":
            return run_convergence(cfg)
        if args.command == "disc":
            return run_disc(cfg, args.m_max, args.per_m)
        if args.command == "valley":
            return run_valley(cfg)
        return run_export(cfg, args.which)
    except (ConfigError, NearZigzagError, InvalidCurveError, ZigzagSpectralError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigenSolverError, IndefiniteMassError, DegenerateMeshError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
