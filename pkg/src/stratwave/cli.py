"""Command-line front end.

    stratwave solve    <scenario.json | dir> [--out DIR]
    stratwave certify  <scenario.json | dir> [--out DIR]
    stratwave eigen    <scenario.json | dir> [--out DIR]
    stratwave sweep    <scenario.json | dir> [--out DIR]
    stratwave verify   <suite> [--trials N] [--seed S] [--inject-negative]
    stratwave report   --dir OUT

Exit status: 0 on success, 1 when a mandatory stage or a verification trial
fails, 2 for an unreadable or invalid scenario.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .certificates import certify, lemma_conditions, margin_uncertainty, supersolution_coefficient_check
from .diagnostics import compute_diagnostics, flux_error, m_components_eulerian, reconstruct_eulerian
from .eigen import assemble_L, bnv_exp_bound, principal_eigenvalue, pw_lower_bound
from .errors import StratWaveError
from .core_fields import Grid
from .io import dumps_report, write_solution
from .laminar import solve_laminar
from .profiles import StreamlineProfiles, validate_stable
from .symmetry import boundary_identities_check, eulerian_symmetry_check, moving_plane_sweep, reflect
from .verification import SUITES, run_suite
from .wave_solver import SolverParams, check_invariants, continue_from_laminar

MANDATORY = ("laminar", "continuation", "diagnostics")
COMMAND_STAGES = {
    "solve": None,
    "certify": {"certificates": True, "eigen": False, "sweep": False},
    "eigen": {"certificates": False, "eigen": True, "sweep": False},
    "sweep": {"certificates": False, "eigen": False, "sweep": True},
}


class ScenarioError(ValueError):
    """The scenario file cannot be parsed or fails validation."""


@dataclass
class Scenario:
    name: str
    grid: Grid
    profiles: StreamlineProfiles
    g: float
    c: float | None
    Q: float
    amplitude: float
    steps: int
    analysis: dict
    seed: int
    output: str | None
    raw: dict

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from exc
        return cls.from_dict(raw, default_name=path.stem)

    @classmethod
    def from_dict(cls, raw: dict, default_name: str = "scenario") -> "Scenario":
        if not isinstance(raw, dict):
            raise ScenarioError("scenario must be a JSON object")
        try:
            gs = raw["grid"]
            grid = Grid(float(gs["L"]), float(gs["p0"]), int(gs["Nq"]), int(gs["Np"]))
            profiles = StreamlineProfiles.from_spec(raw["profiles"], grid.p0)
            g = float(raw.get("g", 9.81))
            if not g > 0:
                raise ScenarioError("g must be positive")
            cont = raw.get("continuation", {})
            analysis = {"certificates": True, "eigen": False, "sweep": True, "refine_check": False,
                        "n_lambda": None}
            unknown = set(raw.get("analysis", {})) - set(analysis)
            if unknown:
                raise ScenarioError(f"unknown analysis keys: {sorted(unknown)}")
            analysis.update(raw.get("analysis", {}))
            scen = cls(
                name=str(raw.get("name", default_name)), grid=grid, profiles=profiles, g=g,
                c=None if raw.get("c") is None else float(raw["c"]),
                Q=float(raw["laminar"]["Q"]),
                amplitude=float(cont.get("amplitude", 0.0)), steps=int(cont.get("steps", 1)),
                analysis=analysis, seed=int(raw.get("seed", 0)), output=raw.get("output"), raw=raw,
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"invalid scenario: {type(exc).__name__}: {exc}") from exc
        if scen.amplitude < 0 or scen.steps < 1:
            raise ScenarioError("continuation needs amplitude >= 0 and steps >= 1")
        return scen


def _failure(stage, exc):
    payload = {}
    for attr in ("diagnostics", "history", "amplitude", "where"):
        if hasattr(exc, attr):
            payload[attr] = getattr(exc, attr)
    return {"stage": stage, "error": type(exc).__name__, "message": str(exc), "payload": payload}


def _svg_contours(sol, n_lines: int = 9) -> str:
    """Streamlines p = const drawn through y = h - d, plus the surface and bed."""
    grid = sol.grid
    y = sol.h.values - sol.d
    q = np.append(grid.q, grid.q[0] + grid.L)
    width, height, pad = 800.0, 400.0, 20.0
    ymin, ymax = float(y.min()), float(y.max())
    sx = (width - 2 * pad) / grid.L
    sy = (height - 2 * pad) / max(ymax - ymin, 1e-300)
    idx = np.unique(np.linspace(0, grid.Np - 1, n_lines).round().astype(int))
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
             f'viewBox="0 0 {width:.0f} {height:.0f}">',
             f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>']
    for j in idx:
        col = np.append(y[:, j], y[0, j])
        pts = " ".join(f"{pad + (qq - q[0]) * sx:.3f},{height - pad - (yy - ymin) * sy:.3f}"
                       for qq, yy in zip(q, col))
        stroke = "2" if j in (0, grid.Np - 1) else "1"
        lines.append(f'<polyline fill="none" stroke="black" stroke-width="{stroke}" points="{pts}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def run(scen: Scenario, out_dir: Path | None = None, toggles: dict | None = None) -> tuple[dict, int]:
    """Run the scenario pipeline; returns the report dict and an exit status."""
    analysis = dict(scen.analysis)
    if toggles:
        analysis.update(toggles)
    report = {"tool": "stratwave", "version": __version__, "scenario": {k: v for k, v in scen.raw.items()
                                                                        if k != "output"},
              "stages": [], "failures": []}
    artefacts = {}

    def stage(name, fn):
        try:
            out = fn()
            report["stages"].append({"stage": name, "status": "ok"})
            return out
        except (StratWaveError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            report["stages"].append({"stage": name, "status": "failed"})
            report["failures"].append(_failure(name, exc))
            return None

    report["stability"] = vars(validate_stable(scen.profiles))
    lam = stage("laminar", lambda: solve_laminar(scen.profiles, scen.g, scen.Q, scen.grid.Np))
    sol = None
    if lam is not None:
        report["laminar"] = {"Q": lam.Q, "d": lam.d, "bed_slope": lam.slope,
                             "top_residual": lam.top_residual()}
        params = SolverParams()
        sol = stage("continuation",
                    lambda: continue_from_laminar(lam, scen.grid, scen.amplitude, scen.steps, params))
    if sol is not None:
        info = sol.info
        report["solution"] = {
            "Q": sol.Q, "d": sol.d, "amplitude": sol.amplitude, "nu": info.get("nu", 0.0),
            "iterations": info.get("iterations"), "bifurcation": info.get("bifurcation"),
            "continuation": info.get("continuation"), "invariant_violations": check_invariants(sol),
        }
        diag = stage("diagnostics", lambda: compute_diagnostics(sol))
        if diag is not None:
            report["diagnostics"] = diag.to_dict()
            artefacts["diagnostics.csv"] = "name,value\n" + "".join(
                f"{k},{float(v)!r}\n" for k, v in diag.to_dict().items())

        def reconstruction():
            fields = reconstruct_eulerian(sol, scen.c)
            comps = m_components_eulerian(fields.u, fields.v, fields.rho, fields.y, fields.c)
            return {"c": fields.c, "flux_max_error": flux_error(fields, scen.grid.p0),
                    "M_eulerian_components": list(comps),
                    "symmetry_axis0": eulerian_symmetry_check(fields, 0.0).to_dict()}
        report["reconstruction"] = stage("reconstruction", reconstruction)

        if analysis.get("certificates") and diag is not None:
            def certificates():
                cert = certify(sol)
                out = cert.to_dict()
                out["supersolution"] = supersolution_coefficient_check(sol, scen.c).to_dict()
                if analysis.get("refine_check"):
                    fine_grid = scen.grid.refined()
                    lam_f = solve_laminar(scen.profiles, scen.g, scen.Q, fine_grid.Np)
                    sol_f = continue_from_laminar(lam_f, fine_grid, scen.amplitude, scen.steps)
                    out["margin_uncertainty"] = margin_uncertainty(cert, certify(sol_f))
                return out
            report["certificates"] = stage("certificates", certificates)

        if analysis.get("sweep"):
            def sweep():
                mp = moving_plane_sweep(sol, analysis.get("n_lambda"))
                artefacts["trace.csv"] = "lambda,min_w_top\n" + "".join(
                    f"{lam_!r},{'' if m is None else repr(float(m))}\n" for lam_, m in mp.trace)
                out = mp.to_dict()
                out["identities"] = boundary_identities_check(sol, -scen.grid.L / 4).to_dict()
                return out
            report["sweep"] = stage("sweep", sweep)

        if analysis.get("eigen"):
            def eigen():
                h_t = reflect(sol.h, 0.0)
                op = assemble_L(sol.h, h_t, scen.profiles, scen.g)
                est = principal_eigenvalue(op)
                lemma = lemma_conditions(sol.h, h_t, scen.profiles, scen.g)
                return {"lambda1": est.lambda1, "method": est.method, "residual": est.residual,
                        "pw_bound_eigenvector": pw_lower_bound(op, est.eigenvector),
                        "ellipticity_floor": op.ellipticity_floor(), "drift_sup": op.drift_sup(),
                        "bnv_bound_drift_part": bnv_exp_bound(op.replace(c=0.0)),
                        "lemma": lemma.to_dict()}
            report["eigen"] = stage("eigen", eigen)

    failed = {f["stage"] for f in report["failures"]}
    status = 1 if failed & set(MANDATORY) or lam is None or sol is None else 0
    report["status"] = "failed" if status else "ok"
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(dumps_report(report), encoding="utf-8")
        for name, text in artefacts.items():
            (out_dir / name).write_text(text, encoding="utf-8")
        if sol is not None:
            write_solution(out_dir / "solution.bin", sol)
            (out_dir / "contours.svg").write_text(_svg_contours(sol), encoding="utf-8")
    return report, status


def _run_path(args_tuple):
    path, out, toggles = args_tuple
    try:
        scen = Scenario.load(path)
    except ScenarioError as exc:
        return str(path), 2, str(exc)
    out_dir = Path(out) if out else Path(scen.output or f"out/{scen.name}")
    _, status = run(scen, out_dir, toggles)
    return str(path), status, str(out_dir)


def _cmd_scenarios(args) -> int:
    target = Path(args.scenario)
    toggles = COMMAND_STAGES[args.command]
    if target.is_dir():
        files = sorted(target.glob("*.json"))
        if not files:
            print(f"no scenario files in {target}", file=sys.stderr)
            return 2
        base = Path(args.out) if args.out else None
        jobs = [(f, str(base / f.stem) if base else None, toggles) for f in files]
        workers = min(len(jobs), os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_path, jobs))
    else:
        results = [_run_path((target, args.out, toggles))]
    worst = 0
    for path, status, info in results:
        if status == 2:
            print(f"{path}: {info}", file=sys.stderr)
        else:
            print(f"{path}: {'ok' if status == 0 else 'FAILED'} -> {info}")
        worst = max(worst, status)
    return worst


def _cmd_verify(args) -> int:
    res = run_suite(args.suite, args.trials, args.seed, args.inject_negative)
    print(f"suite {res.name}: {res.trials} trials, {res.failures} failures, {res.skipped} skipped, "
          f"worst margin {res.worst_margin:.6g}")
    for name, note in sorted(res.notes.items()):
        print(f"  {name}: lambda1={note['lambda1']:.6g} principle_holds={note['principle_holds']}"
              + (" witness found" if note["witness"] else ""))
    if not res.passed:
        print(json.dumps(res.failing, indent=2, default=float), file=sys.stderr)
        return 1
    return 0


def _cmd_report(args) -> int:
    root = Path(args.dir)
    files = sorted(root.rglob("report.json"))
    if not files:
        print(f"no report.json under {root}", file=sys.stderr)
        return 2
    worst = 0
    for f in files:
        rep = json.loads(f.read_text(encoding="utf-8"))
        name = rep.get("scenario", {}).get("name", f.parent.name)
        cert = rep.get("certificates") or {}
        verdicts = " ".join(f"{k}={'pass' if (cert.get(k) or {}).get('verdict') else 'fail'}"
                            for k in ("S1", "S2", "S3") if k in cert)
        sweep = rep.get("sweep") or {}
        print(f"{name}: status={rep.get('status')} {verdicts} "
              f"symmetry={sweep.get('classification', '-')}")
        for fail in rep.get("failures", []):
            print(f"  stage {fail['stage']} failed: {fail['error']}: {fail['message']}")
        worst = max(worst, 0 if rep.get("status") == "ok" else 1)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratwave", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"stratwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_text in (("solve", "run the full scenario pipeline"),
                           ("certify", "solve and evaluate the symmetry certificates"),
                           ("eigen", "solve and analyse the reflected-difference operator"),
                           ("sweep", "solve and run the moving-plane sweep")):
        p = sub.add_parser(cmd, help=help_text)
        p.add_argument("scenario", help="scenario JSON file or a directory of them")
        p.add_argument("--out", help="output directory (default: the scenario's 'output' entry)")
    v = sub.add_parser("verify", help="run a seeded property suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-negative", action="store_true",
                   help="add an operator with negative principal eigenvalue as a negative control")
    r = sub.add_parser("report", help="summarise report.json files under a directory")
    r.add_argument("--dir", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in COMMAND_STAGES:
        return _cmd_scenarios(args)
    if args.command == "verify":
        return _cmd_verify(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
