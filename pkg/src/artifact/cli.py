"""Command-line front end: ``artifact {simulate,partition,hyperfine,epr-demo}``.

Scenarios are YAML files (schema version 1).  Set ``ARTIFACT_LOG_LEVEL`` to
change verbosity.  On failure a JSON error record is printed and the exit
code is non-zero.
"""

from __future__ import annotations

import argparse
import ast
import csv
import json
import logging
import math
import operator
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .connection import HamiltonianSpec, IntegrationError, split_hamiltonian
from .flow import DegenerateFrameError, evolve_polar
from .hilbert import PolarFrame, StateVector, ValidationError, polar_decompose, random_hermitian, random_state
from .hyperfine import HyperfineParams, closed_form_frame, gamma_t, hyperfine_hamiltonian, oracle_table
from .io import load_hamiltonian, load_state, save_json
from .toroid import (
    RightToroid,
    ToroidPoint,
    check_naturality,
    diagonal_arcs,
    locate,
    part_measure,
    tiling_obj,
    tiling_svg,
)
from .tracker import fano_state, iterate_conditional, track_labels

log = logging.getLogger("artifact")

SCHEMA_VERSION = 1
EXIT_FAIL = 1
EXIT_ERROR = 2


class ScenarioError(ValidationError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("ARTIFACT_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"config file not found: {p}")
    data = yaml.safe_load(p.read_text()) or {}
    if not isinstance(data, dict):
        raise ScenarioError("config must be a mapping")
    version = data.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported config version {version}")
    base = p.parent
    for section in ("state", "hamiltonian"):
        spec = data.get(section)
        if isinstance(spec, dict) and "file" in spec:
            spec["file"] = str((base / spec["file"]).resolve())
    return data


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _arith(node) -> float:
    if isinstance(node, ast.Expression):
        return _arith(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_arith(node.left), _arith(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_arith(node.operand)
    raise ScenarioError("angles may only use numbers, pi and + - * /")


def _angle(value) -> float:
    """Numbers, or strings such as ``"3*pi/7"``."""
    if isinstance(value, str):
        return _arith(ast.parse(value, mode="eval"))
    return float(value)


# ------------------------------------------------------------------------------------
# scenario building


def build_state(cfg: dict, rng: np.random.Generator) -> StateVector:
    spec = cfg.get("state", {"preset": "random"})
    if "file" in spec:
        return load_state(spec["file"])
    preset = spec.get("preset", "random")
    dims = cfg.get("space", {}).get("dims", [2, 2])
    if preset == "hyperfine":
        return gamma_t(_hyperfine_params(spec), 0.0)
    if preset == "product":
        a = random_state(dims[0], 1, rng).amplitudes
        b = random_state(dims[1], 1, rng).amplitudes
        return StateVector.from_array(np.kron(a, b), dims[0], dims[1])
    if preset == "singlet":
        qp = float(spec.get("q_plus", 0.8))
        v = np.array([0, qp, -math.sqrt(1 - qp * qp), 0])
        return StateVector.from_array(v, 2, 2)
    if preset == "random":
        return random_state(dims[0], dims[1], rng)
    raise ScenarioError(f"unknown state preset {preset!r}")


def _hyperfine_params(spec: dict) -> HyperfineParams:
    return HyperfineParams(float(spec.get("mu", 1.0)), _angle(spec.get("theta", "3*pi/7")), float(spec.get("q_plus", 0.94)))


def build_hamiltonian(cfg: dict, dims, rng: np.random.Generator) -> HamiltonianSpec:
    spec = cfg.get("hamiltonian", {"preset": "random"})
    if "file" in spec:
        return load_hamiltonian(spec["file"])
    preset = spec.get("preset", "random")
    n1, n2 = dims
    if preset == "hyperfine":
        return hyperfine_hamiltonian(float(spec.get("mu", cfg.get("state", {}).get("mu", 1.0))))
    if preset == "noninteracting":
        scale = float(spec.get("scale", 1.0))
        return HamiltonianSpec.from_split(None, random_hermitian(n1, rng, scale), random_hermitian(n2, rng, scale))
    if preset == "random":
        h = random_hermitian(n1 * n2, rng, float(spec.get("scale", 1.0)))
        return HamiltonianSpec.constant(h, (n1, n2), split=split_hamiltonian(h, n1, n2))
    raise ScenarioError(f"unknown Hamiltonian preset {preset!r}")


def _initial_frame(gamma: StateVector, cfg: dict, rng: np.random.Generator) -> PolarFrame:
    if cfg.get("state", {}).get("preset") == "hyperfine":
        return closed_form_frame(_hyperfine_params(cfg["state"]), 0.0)
    frame = polar_decompose(gamma)
    phases = cfg.get("phases", "random")
    if phases == "random":
        phases = rng.uniform(0, 2 * math.pi, frame.m)
    phases = np.asarray(phases, dtype=float)
    if phases.size != frame.m:
        raise ScenarioError(f"need {frame.m} initial phases, got {phases.size}")
    rot = np.exp(1j * phases)
    # the reciprocal phase goes on phi so that the state is unchanged
    return PolarFrame(frame.q * rot, frame.phi * rot.conj(), frame.psi)


def _times(cfg: dict) -> np.ndarray:
    t = cfg.get("time", {})
    t0, t1 = float(t.get("t0", 0.0)), float(t.get("t1", 1.0))
    n = int(t.get("samples", 201))
    if not t1 > t0 or n < 2:
        raise ScenarioError("time span must satisfy t1 > t0 with at least two samples")
    return np.linspace(t0, t1, n)


# ------------------------------------------------------------------------------------
# commands


def run_simulate(cfg: dict, out: Path, seed: int, tol: float, mode: str) -> int:
    rng = np.random.default_rng(seed)
    gamma = build_state(cfg, rng)
    spec = build_hamiltonian(cfg, (gamma.space.n1, gamma.space.n2), rng)
    frame0 = _initial_frame(gamma, cfg, rng)
    times = _times(cfg)
    log.info("evolving %d samples in %s mode", times.size, mode)
    traj = evolve_polar(gamma, spec, times, frame0=frame0, tol=tol, mode=mode)
    timeline = track_labels(traj)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    timeline.write_jumps(out / "jumps.jsonl")
    timeline.to_csv(out / "timeline.csv")
    summary = {
        "name": cfg.get("name", "scenario"),
        "seed": seed,
        "mode": mode,
        "tolerances": {"tol": tol},
        "samples": int(times.size),
        "jumps": len(timeline.events),
        "final_label": int(timeline.labels[-1]),
        "label_counts": {str(k): int(np.sum(timeline.labels == k)) for k in range(traj.q.shape[1])},
        "norm_residual": float(np.abs(np.sum(np.abs(traj.q) ** 2, axis=1) - 1).max()),
        "reconstruct_residual": traj.reconstruct_residual(),
        "max_radius_drift": float(np.abs(traj.radii - traj.radii[0]).max()),
    }
    if cfg.get("state", {}).get("preset") == "hyperfine":
        p = _hyperfine_params(cfg["state"])
        window = (times * p.omega >= 3 * math.pi) & (times * p.omega <= 10 * math.pi)
        if window.any():
            frac = float(np.mean(timeline.labels[window] == 0))
            summary["plus_fraction_3pi_10pi"] = frac
            summary["plus_on_3pi_10pi"] = frac == 1.0
    save_json(summary, out / "summary.json")
    print(json.dumps(summary, sort_keys=True))
    return 0


def _toroid_from(cfg: dict) -> RightToroid:
    part = cfg.get("partition", cfg)
    if "squares" in part:
        return RightToroid.from_squares([float(x) for x in part["squares"]])
    if "radii" in part:
        return RightToroid.normalized([float(x) for x in part["radii"]])
    golden = (1 + math.sqrt(5)) / 2
    return RightToroid.normalized([golden, 1.0])


def run_partition(cfg: dict, out: Path, seed: int, tol: float, suites, exports) -> int:
    rng = np.random.default_rng(seed)
    toroid = _toroid_from(cfg)
    part = cfg.get("partition", cfg)
    samples = int(part.get("samples", 10_000))
    report: dict = {"seed": seed, "radii": list(toroid.radii), "tolerances": {"diagonal": tol, "sigma": 3}, "suites": {}}
    ok = True
    for q in part.get("queries", []):
        lab = locate(ToroidPoint(q), toroid)
        report.setdefault("queries", []).append({"point": list(map(float, q)), "label": lab.k, "on_boundary": lab.on_boundary})
    for suite in suites:
        if suite == "diagonal":
            base = ToroidPoint(rng.random(toroid.n) * toroid.circumferences)
            arcs = diagonal_arcs(toroid, base, method="sampled")
            err = float(np.abs(arcs.lengths - 2 * np.pi * toroid.r2).max())
            passed = err <= tol
            report["suites"]["diagonal"] = {"lengths": arcs.lengths.tolist(), "max_error": err, "passed": passed}
        elif suite == "volume":
            rows = []
            passed = True
            for k in range(toroid.n):
                p, se = part_measure(toroid, k, samples, rng)
                good = abs(p - toroid.r2[k]) <= 3 * max(se, math.sqrt(toroid.r2[k] * (1 - toroid.r2[k]) / samples))
                passed &= bool(good)
                rows.append({"k": k, "fraction": p, "expected": float(toroid.r2[k]), "passed": bool(good)})
            report["suites"]["volume"] = {"parts": rows, "passed": passed}
        elif suite == "naturality":
            if toroid.n < 2:
                raise ScenarioError("naturality needs n >= 2")
            rep = check_naturality(toroid, samples=min(samples, 1000), rng=rng, mode="limit")
            passed = rep.violations == 0
            report["suites"]["naturality"] = {**json.loads(rep.to_json()), "passed": passed}
        else:
            raise ScenarioError(f"unknown suite {suite!r}")
        ok &= passed
    out.mkdir(parents=True, exist_ok=True)
    for kind in exports:
        if kind == "svg":
            (out / "tiling.svg").write_text(tiling_svg(toroid))
        elif kind == "obj":
            (out / "tiling.obj").write_text(tiling_obj(toroid))
        else:
            raise ScenarioError(f"unknown export {kind!r}")
    report["passed"] = ok
    save_json(report, out / "report.json")
    print(json.dumps(report, sort_keys=True))
    return 0 if ok else EXIT_FAIL


def run_hyperfine(cfg: dict, out: Path, samples: int) -> int:
    params = _hyperfine_params(cfg.get("state", cfg.get("hyperfine", {})))
    times = np.linspace(0.0, 10 * math.pi / params.omega, samples)
    rows = oracle_table(params, times)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "hyperfine.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if not isinstance(v, str) else v) for k, v in row.items()})
    print(json.dumps({"rows": len(rows), "file": str(out / "hyperfine.csv")}))
    return 0


def run_epr_demo(out: Path, seed: int) -> int:
    """Photon (2) ⊗ atom (3) ⊗ apparatus (3): every ``α_i`` is an iterated conditional state."""
    rng = np.random.default_rng(seed)
    alphas = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    alphas /= np.linalg.norm(alphas, axis=0)
    weights = np.sqrt(np.array([0.5, 0.3, 0.2]))
    gamma = fano_state(alphas, weights)
    radii = weights / np.linalg.norm(weights)
    toroid = RightToroid(tuple(radii))
    stages = []
    for i in range(3):
        # a point on the circle C_i away from the basepoint selects term i
        arcs = np.zeros(3)
        arcs[i] = 0.5 * toroid.circumferences[i]
        state = iterate_conditional(gamma, (2, 3, 3), [(0, 1), (0,)], [ToroidPoint(arcs), None])
        overlap = abs(np.vdot(alphas[:, i], state.ray))
        stages.append({"i": i, "label": state.k, "overlap_with_alpha": overlap, "provenance": [list(map(list, p[:2])) + [p[2]] for p in state.provenance]})
    ok = all(abs(s["overlap_with_alpha"] - 1) < 1e-10 for s in stages)
    out.mkdir(parents=True, exist_ok=True)
    result = {"seed": seed, "stages": stages, "passed": ok}
    save_json(result, out / "epr.json")
    print(json.dumps(result, sort_keys=True))
    return 0 if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML scenario file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out")
    common.add_argument("--tol", type=float, default=None)
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="evolve a scenario and track labels")
    sim.add_argument("--mode", choices=("ode", "svd"), default=None)
    par = sub.add_parser("partition", parents=[common], help="toroid partition queries and suites")
    par.add_argument("--suite", action="append", choices=("diagonal", "volume", "naturality"), default=[])
    par.add_argument("--export", action="append", choices=("svg", "obj"), default=[])
    par.add_argument("--squares", type=float, nargs="+", help="squared radii (override config)")
    hf = sub.add_parser("hyperfine", parents=[common], help="closed-form oracle dump")
    hf.add_argument("--samples", type=int, default=1001)
    sub.add_parser("epr-demo", parents=[common], help="three-factor iterated conditioning walkthrough")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.command == "simulate":
            tol = args.tol if args.tol is not None else float(cfg.get("tolerances", {}).get("tol", 1e-10))
            mode = args.mode or cfg.get("mode", "svd")
            return run_simulate(cfg, out, args.seed, tol, mode)
        if args.command == "partition":
            if args.squares:
                cfg = {**cfg, "partition": {**cfg.get("partition", {}), "squares": args.squares}}
            tol = args.tol if args.tol is not None else 1e-9
            suites = args.suite or cfg.get("partition", {}).get("suites", [])
            exports = args.export or cfg.get("partition", {}).get("export", [])
            return run_partition(cfg, out, args.seed, tol, suites, exports)
        if args.command == "hyperfine":
            return run_hyperfine(cfg, out, args.samples)
        return run_epr_demo(out, args.seed)
    except (ValidationError, IntegrationError, DegenerateFrameError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
