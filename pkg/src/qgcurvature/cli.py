"""Command-line interface: ``qgcurv {curvature,criterion,simulate,sweep}``.

Every run writes its fully resolved configuration to ``config.json`` in the
output directory next to the results.  Exit codes: 0 success, 1 failed
verification, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .algebra import mode_element, shear_element
from .criterion import (FAILS, CriticalFamily, corollary_check, criterion_report, critical_family,
                        witness_for)
from .curvature import CurvatureReport, ModeCurvature, ModeProfile, curvature_arnold, total_curvature
from .errors import ConfigError, ConvergenceError, SimulationBlowupError
from .flows import ShearFlow
from .grid import Grid1D, Params
from .simulate import (QGState, RunConfig, eddy_time, evolve, random_perturbation,
                       spreading_experiment, write_trajectory)

OUTPUT_ENV = "QGCURV_OUTPUT_DIR"
DEFAULT_OUTPUT = "qgcurv-out"

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


# -- parsing ---------------------------------------------------------------------


def _floats(text: str, what: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what}: cannot parse numbers in {text!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{what}: expected finite comma-separated numbers, got {text!r}")
    return vals


def parse_flow(spec: str):
    """Parse a flow spec; returns ``(flow or None, family, fields)``.

    ``critsinh`` flows need ``L`` and are built later by :func:`build_flow`.
    """
    if not isinstance(spec, str) or ":" not in spec:
        raise ConfigError(f"flow spec {spec!r} must look like 'poly:...', 'critsinh:...' or 'samples:...'")
    family, _, body = spec.partition(":")
    if family == "poly":
        return ShearFlow.polynomial(_floats(body, "poly")), family, None
    if family == "critsinh":
        vals = _floats(body, "critsinh")
        if len(vals) != 5:
            raise ConfigError("critsinh needs alpha2,y0,z0,sign,beta")
        return None, family, vals
    if family == "samples":
        try:
            data = np.loadtxt(body, delimiter="," if body.endswith(".csv") else None, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"samples: cannot read {body!r}: {exc}") from exc
        if data.shape[1] != 2:
            raise ConfigError("samples file needs two columns: y, psi")
        try:
            return ShearFlow.sampled(data[:, 0], data[:, 1]), family, None
        except ValueError as exc:
            raise ConfigError(f"samples: {exc}") from exc
    raise ConfigError(f"unknown flow family {family!r}")


def resolve_params(cfg: dict) -> Params:
    """Fill ``alpha2`` / ``beta`` from a ``critsinh`` spec when not given."""
    _, family, vals = parse_flow(cfg["flow"])
    a2, beta = cfg.get("alpha2"), cfg.get("beta")
    if family == "critsinh":
        if a2 is not None and a2 != vals[0] or beta is not None and beta != vals[4]:
            raise ConfigError("alpha2/beta conflict with the critsinh flow spec")
        a2, beta = vals[0], vals[4]
    cfg["alpha2"] = 0.0 if a2 is None else float(a2)
    cfg["beta"] = 0.0 if beta is None else float(beta)
    try:
        return Params(L=float(cfg["L"]), alpha2=cfg["alpha2"], beta=cfg["beta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_flow(spec: str, params: Params) -> ShearFlow:
    flow, family, vals = parse_flow(spec)
    if family == "critsinh":
        try:
            cf = CriticalFamily(vals[0], vals[1], vals[2], vals[3], vals[4])
            return critical_family(cf, params)
        except ValueError as exc:
            raise ConfigError(f"critsinh: {exc}") from exc
    return flow


def parse_modes(spec) -> list:
    if isinstance(spec, list):
        modes = [int(m) for m in spec]
    else:
        spec = str(spec)
        try:
            if ".." in spec:
                a, b = spec.split("..")
                modes = list(range(int(a), int(b) + 1))
            else:
                modes = [int(t) for t in spec.split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigError(f"cannot parse modes {spec!r}") from exc
    if not modes or any(m <= 0 for m in modes) or len(set(modes)) != len(modes):
        raise ConfigError(f"modes must be distinct positive integers, got {spec!r}")
    return modes


def make_profile(spec: str, n: int, grid: Grid1D) -> np.ndarray:
    """``sin:k`` gives ``sin(k pi y / L)``; ``random:seed`` a smooth random profile."""
    kind, _, arg = str(spec).partition(":")
    y = grid.y / grid.L
    if kind == "sin":
        try:
            k = int(arg or 1)
        except ValueError as exc:
            raise ConfigError(f"bad profile {spec!r}") from exc
        return np.sin(k * np.pi * y).astype(complex)
    if kind == "random":
        try:
            seed = int(arg or 0)
        except ValueError as exc:
            raise ConfigError(f"bad profile {spec!r}") from exc
        rng = np.random.default_rng([seed, n])
        g = np.zeros(grid.ny, dtype=complex)
        for k in range(1, 6):
            g += (rng.normal() + 1j * rng.normal()) / k**2 * np.sin(k * np.pi * y)
        g[0] = g[-1] = 0.0
        return g
    raise ConfigError(f"unknown profile {spec!r} (use sin:k or random:seed)")


def make_grid(cfg: dict) -> Grid1D:
    try:
        return Grid1D(int(cfg["ny"]), float(cfg["L"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- output helpers -------------------------------------------------------------


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _write(outdir: str, name: str, text: str) -> str:
    path = os.path.join(outdir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


# -- commands -------------------------------------------------------------------


def _rel(a: float, b: float, floor: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def cmd_curvature(cfg: dict, outdir: str) -> int:
    params = resolve_params(cfg)
    flow = build_flow(cfg["flow"], params)
    grid = make_grid(cfg)
    modes = parse_modes(cfg["modes"])
    methods = [m.strip() for m in str(cfg["methods"]).split(",") if m.strip()]
    for m in methods:
        if m not in ("green", "integral", "arnold"):
            raise ConfigError(f"unknown method {m!r}")
    nmax = int(cfg["nmax"])
    if "arnold" in methods and nmax < max(modes):
        raise ConfigError(f"nmax={nmax} must be at least the largest mode {max(modes)}")
    profiles = {n: make_profile(cfg["profile"], n, grid) for n in modes}
    pert = [ModeProfile(n, profiles[n], grid) for n in modes]
    reports, rows = {}, []
    for m in methods:
        if m == "arnold":
            X = shear_element(flow, params, grid, nmax)
            entries = []
            for n in modes:
                k = curvature_arnold(X, mode_element(n, profiles[n], nmax, grid), params)
                kn = k / (2 * math.pi * 2 * n * n)
                entries += [ModeCurvature(n, kn, "arnold"), ModeCurvature(-n, kn, "arnold")]
            rep = CurvatureReport(entries)
        else:
            rep = total_curvature(flow, params, pert, method=m, workers=cfg.get("workers"))
        reports[m] = rep
        rows.extend(rep.to_rows())
    # agreement between methods
    scale = max((abs(e.K_n) for r in reports.values() for e in r.entries), default=0.0)
    floor = max(1e-12 * scale, 1e-300)
    worst = 0.0
    names = list(reports)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            for a, b in zip(reports[names[i]].entries, reports[names[j]].entries):
                worst = max(worst, _rel(a.K_n, b.K_n, floor))
    payload = {
        "methods": {m: r.to_dict() for m, r in reports.items()},
        "max_relative_disagreement": worst,
        "flow": flow.describe(),
    }
    _write(outdir, "curvature.csv", _csv(rows, ["n", "K_n", "method", "err_est"]))
    _write(outdir, "curvature.json", _dump(payload))
    signs = {e.n: e.K_n for e in reports[names[0]].entries}
    for n in modes:
        print(f"n={n:3d}  K_n={signs[n]: .10e}")
    print(f"max relative disagreement between methods: {worst:.3e}")
    if cfg["verify"] and worst > float(cfg["tol"]):
        print(f"verification failed: disagreement {worst:.3e} > tol {cfg['tol']}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_criterion(cfg: dict, outdir: str) -> int:
    params = resolve_params(cfg)
    flow = build_flow(cfg["flow"], params)
    grid = make_grid(cfg)
    modes = parse_modes(cfg["modes"])
    rep = criterion_report(flow, params, modes, grid, oracle=bool(cfg["oracle"]))
    for note in rep.notes:
        print(f"notice: {note}")
    witnesses = []
    for v in rep.per_n:
        if v.verdict == FAILS:
            w = witness_for(flow, params, v.n, grid)
            if w is not None:
                name = f"witness_n{v.n}.csv"
                rows = [{"y": float(y), "re_g": float(g.real), "im_g": float(g.imag)}
                        for y, g in zip(w.grid.y, w.g)]
                _write(outdir, name, _csv(rows, ["y", "re_g", "im_g"]))
                witnesses.append(name)
    payload = rep.to_dict()
    payload["witness_files"] = witnesses
    _write(outdir, "criterion.json", _dump(payload))
    _write(outdir, "criterion.txt", rep.to_text() + "\n")
    print(rep.to_text())
    if cfg["oracle"] and not all(o["agrees"] for o in rep.oracle):
        print("verification failed: eigenvalue oracle disagrees with the criterion", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_simulate(cfg: dict, outdir: str) -> int:
    params = resolve_params(cfg)
    flow = build_flow(cfg["flow"], params)
    grid = make_grid(cfg)
    nmax = int(cfg["nmax"])
    eps = float(cfg["eps"])
    pert = random_perturbation(int(cfg["pert_modes"]), grid, nmax, seed=int(cfg["seed"]))
    base = QGState.shear(flow, params, nmax, grid)
    start = QGState.from_stream(base.psi + pert * eps, params)
    T = eddy_time(start)
    t_end = float(cfg["t_end"]) if cfg.get("t_end") is not None else float(cfg["eddy_times"]) * T
    if not math.isfinite(t_end):
        t_end = 0.0
    try:
        rc = RunConfig(t_end, dt=cfg.get("dt"), cfl=float(cfg["cfl"]),
                       output_every=int(cfg["output_every"]), nmax=nmax, ny=grid.ny)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    summary = {"eddy_time": T, "t_end": t_end}
    if cfg["spreading"]:
        verdict = criterion_report(flow, params, [1, 2, 3], grid).label
        res = spreading_experiment(flow, pert, eps, rc, params, verdict)
        _write(outdir, "spreading.csv", _csv(res.to_rows(), ["t", "separation"]))
        summary.update(growth_rate=res.growth_rate, amplification=res.amplification,
                       criterion_verdict=verdict)
        print(f"separation growth rate {res.growth_rate:.6e}, amplification {res.amplification:.6e}, "
              f"criterion: {verdict}")
    traj = evolve(start, rc)
    write_trajectory(traj, outdir)
    summary.update(steps=traj.steps, dt=traj.dt,
                   energy_drift=traj.relative_drift("E"),
                   enstrophy_drift=traj.relative_drift("enstrophy"))
    _write(outdir, "summary.json", _dump(summary))
    print(f"{traj.steps} steps of dt={traj.dt:.6e}; energy drift {summary['energy_drift']:.3e}, "
          f"enstrophy drift {summary['enstrophy_drift']:.3e}")
    return EXIT_OK


def _sweep_point(args) -> dict:
    flow_spec, L, a2, beta, modes, ny = args
    params = Params(L=L, alpha2=a2, beta=beta)
    flow = build_flow(flow_spec, params)
    grid = Grid1D(ny, L)
    rep = criterion_report(flow, params, modes, grid)
    return {"alpha2": a2, "beta": beta, "verdict": rep.label,
            "corollary": corollary_check(flow, params, grid).label}


def cmd_sweep(cfg: dict, outdir: str) -> int:
    a2s = _floats(str(cfg["alpha2_grid"]), "alpha2-grid") if cfg.get("alpha2_grid") else []
    betas = _floats(str(cfg["beta_grid"]), "beta-grid") if cfg.get("beta_grid") else []
    if not a2s or not betas:
        raise ConfigError("sweep grid is empty: give --alpha2-grid and --beta-grid")
    if any(a < 0 for a in a2s):
        raise ConfigError("alpha2 values must be nonnegative")
    _, family, _ = parse_flow(cfg["flow"])
    if family == "critsinh":
        raise ConfigError("critsinh flows fix alpha2 and beta and cannot be swept")
    modes = parse_modes(cfg["modes"])
    make_grid(cfg)
    jobs = [(cfg["flow"], float(cfg["L"]), a, b, modes, int(cfg["ny"])) for a in a2s for b in betas]
    workers = cfg.get("workers") or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    _write(outdir, "sweep.csv", _csv(rows, ["alpha2", "beta", "verdict", "corollary"]))
    _write(outdir, "sweep.json", _dump({"points": rows, "flow": cfg["flow"], "modes": modes}))
    for r in rows:
        print(f"alpha2={r['alpha2']:<10g} beta={r['beta']:<10g} {r['verdict']}")
    return EXIT_OK


COMMANDS = {"curvature": cmd_curvature, "criterion": cmd_criterion,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--flow", default="poly:0,-0.5,0.5",
                        help="poly:c0,c1,... | critsinh:alpha2,y0,z0,sign,beta | samples:PATH")
    common.add_argument("--alpha2", type=float, default=None, help="Froude parameter (default 0)")
    common.add_argument("--beta", type=float, default=None, help="beta-plane parameter (default 0)")
    common.add_argument("--L", type=float, default=1.0, help="channel width")
    common.add_argument("--ny", type=int, default=513, help="grid points across the channel (odd)")
    common.add_argument("--config", default=None, help="JSON file whose keys override the flags")
    common.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or {DEFAULT_OUTPUT})")

    p = _Parser(prog="qgcurv", description="Curvature and stability of quasi-geostrophic shear flows.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("curvature", parents=[common], help="per-mode curvature K_n")
    c.add_argument("--modes", default="1..4", help="modes as 1..4 or 1,3")
    c.add_argument("--profile", default="random:0", help="sin:k or random:seed")
    c.add_argument("--methods", default="green,integral,arnold", help="comma list of green, integral, arnold")
    c.add_argument("--nmax", type=int, default=16, help="Fourier truncation for the arnold path")
    c.add_argument("--verify", action="store_true", help="exit 1 if the methods disagree by more than --tol")
    c.add_argument("--tol", type=float, default=1e-3, help="disagreement tolerance relative to the curvature scale")
    c.add_argument("--workers", type=int, default=None, help="threads across modes")

    k = sub.add_parser("criterion", parents=[common], help="sign criterion per mode")
    k.add_argument("--modes", default="1..6", help="modes as 1..6 or 1,3")
    k.add_argument("--oracle", action="store_true", help="cross-check with the eigenvalue oracle")

    s = sub.add_parser("simulate", parents=[common], help="time integration from a perturbed shear")
    s.add_argument("--nmax", type=int, default=32, help="Fourier truncation")
    s.add_argument("--t-end", dest="t_end", type=float, default=None, help="end time (overrides --eddy-times)")
    s.add_argument("--eddy-times", dest="eddy_times", type=float, default=1.0, help="end time in eddy turnover times")
    s.add_argument("--dt", type=float, default=None, help="fixed step (default from --cfl)")
    s.add_argument("--cfl", type=float, default=0.5, help="CFL number for the automatic step")
    s.add_argument("--output-every", dest="output_every", type=int, default=0, help="steps between snapshots (0 keeps the ends)")
    s.add_argument("--eps", type=float, default=1e-3, help="perturbation amplitude")
    s.add_argument("--pert-modes", dest="pert_modes", type=int, default=3, help="perturb modes 1..N")
    s.add_argument("--seed", type=int, default=0, help="perturbation seed")
    s.add_argument("--spreading", action="store_true", help="also track separation from the unperturbed run")

    w = sub.add_parser("sweep", parents=[common], help="criterion verdicts over (alpha2, beta)")
    w.add_argument("--alpha2-grid", dest="alpha2_grid", default="", help="comma list of alpha2 values")
    w.add_argument("--beta-grid", dest="beta_grid", default="0", help="comma list of beta values")
    w.add_argument("--modes", default="1..6", help="modes as 1..6 or 1,3")
    w.add_argument("--workers", type=int, default=None, help="worker processes")
    return p


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def resolve_config(argv) -> tuple[str, dict]:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = vars(ns).copy()
    command = cfg.pop("command")
    path = cfg.pop("config")
    if path:
        for key, val in load_config(path).items():
            k = key.replace("-", "_")
            if k not in cfg or k == "config":
                raise ConfigError(f"{path}: unknown key {key!r} for '{command}'")
            cfg[k] = val
    if cfg.get("out") is None:
        cfg["out"] = os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT)
    return command, cfg


def main(argv=None) -> int:
    try:
        command, cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        outdir = cfg["out"]
        os.makedirs(outdir, exist_ok=True)
        code = COMMANDS[command](cfg, outdir)
        echo = {k: v for k, v in cfg.items()}
        echo.update(command=command, version=__version__)
        _write(outdir, "config.json", _dump(echo))
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, SimulationBlowupError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
