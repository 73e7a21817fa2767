"""Command-line entry point.

    glpattern <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--plots]

Subcommands: stationary, evolve, continuation, fit, select-phase, symbols,
verify-linear, sweep. Artifacts are CSV/JSON plus optional PNG heatmaps; every
run writes a manifest with a config snapshot and checksums. Exit codes:
0 success, 2 validation error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_to_dict, load_config
from .farfit import default_annulus, fit_far_field, selection_scan
from .fieldio import read_field, write_field, write_manifest
from .grid import Grid2D
from .model import (GLParams, reconstruct_A, selected_phase, zero_state)
from .solvers import (continuation_in_eps, evolve, solve_stationary)
from .symbols import (ModeGrid, TestFieldSextuple, L_symbol_eigs, M_symbol_report,
                      bordering_integral, cokernel_pairing, eckhaus_report,
                      random_bump_pair)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                              for v in row) + "\n")
    return path


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _maybe_plots(out: Path, cfg: ExperimentConfig, A, artifacts, enabled: bool):
    if not enabled:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .farfit import unwrap_phase

    extent = [-cfg.grid.half_width, cfg.grid.half_width] * 2
    for name, fieldv in (("amplitude", np.abs(A)),
                         ("phase_offset", unwrap_phase(A, cfg.params, cfg.grid)[0])):
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(fieldv.T, origin="lower", extent=extent, cmap="viridis")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        p = out / f"{name}.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        artifacts.append(p)


def _run_stationary(cfg: ExperimentConfig, out: Path, plots: bool):
    artifacts = []
    state, report = solve_stationary(cfg.params, cfg.inhomogeneity, cfg.grid,
                                     cfg=cfg.newton, farfield=cfg.farfield)
    A = reconstruct_A(state, cfg.params, cfg.grid)
    fit = fit_far_field(A, cfg.params, cfg.grid, chi_outer=cfg.farfield.r_outer)
    artifacts.append(write_field(out / "A.glf", cfg.grid, A))
    artifacts.append(_write_json(out / "report.json", {
        "success": report.success, "iterations": report.iterations,
        "final_residual": report.final_residual,
        "residual_history": report.residual_history,
        "message": report.message,
        "c": state.c, "phi_inf": state.phi_inf,
        "fit": {"c_fit": fit.c_fit, "phi_inf_fit": fit.phi_inf_fit,
                "s_inf_fit": fit.s_inf_fit, "residual_rms": fit.residual_rms},
    }))
    _maybe_plots(out, cfg, A, artifacts, plots)
    return artifacts, EXIT_OK if report.success else EXIT_SOLVER


def _run_evolve(cfg: ExperimentConfig, out: Path, plots: bool):
    artifacts = []
    X, _ = cfg.grid.meshgrid()
    A0 = cfg.params.tau * np.exp(1j * (cfg.params.k * X + cfg.params.phi0))
    A, result = evolve(A0, cfg.params, cfg.inhomogeneity, cfg.grid, cfg=cfg.evolve,
                       farfield=cfg.farfield)
    header = ["t", "residual", "amp_min", "amp_max", "c_fit", "phi_inf_fit"]
    rows = [[s.get(k, np.nan) for k in header] for s in result["snapshots"]
            if "blowup" not in s]
    artifacts.append(_write_csv(out / "evolution.csv", header, rows))
    artifacts.append(write_field(out / "A_final.glf", cfg.grid, A))
    artifacts.append(_write_json(out / "report.json", {
        "blowup": result["blowup"], "snapshots": len(result["snapshots"]),
        "final": result["snapshots"][-1]}))
    _maybe_plots(out, cfg, A, artifacts, plots)
    return artifacts, EXIT_SOLVER if result["blowup"] else EXIT_OK


def _run_continuation(cfg: ExperimentConfig, out: Path, plots: bool):
    artifacts = []
    table = continuation_in_eps(cfg.params, cfg.inhomogeneity, cfg.grid,
                                cfg.eps_list, cfg=cfg.newton, farfield=cfg.farfield)
    rows = [[r["eps"], r["c"], r["phi_inf"], r["c_fit"]] for r in table["rows"]]
    artifacts.append(_write_csv(out / "continuation.csv",
                                ["eps", "c", "phi_inf", "c_fit"], rows))
    artifacts.append(_write_json(out / "report.json", {
        "slope_c": table["slope_c"], "slope_c_fit": table["slope_c_fit"],
        "truncated_at": table["truncated_at"], "message": table["message"]}))
    return artifacts, EXIT_OK if table["truncated_at"] is None else EXIT_SOLVER


def _run_fit(cfg: ExperimentConfig, out: Path, plots: bool):
    src = cfg.raw.get("field_file")
    if src is None:
        raise ValueError("config key 'field_file': required for the fit subcommand")
    grid, A = read_field(src)
    fit = fit_far_field(A, cfg.params, grid, chi_outer=cfg.farfield.r_outer)
    return [_write_json(out / "fit.json", {
        "c_fit": fit.c_fit, "phi_inf_fit": fit.phi_inf_fit, "s_inf_fit": fit.s_inf_fit,
        "residual_rms": fit.residual_rms, "n_nodes": fit.n_nodes,
        "annulus": [fit.annulus.r_inner, fit.annulus.r_outer]})], EXIT_OK


def _run_select_phase(cfg: ExperimentConfig, out: Path, plots: bool):
    artifacts = []
    sel = selected_phase(cfg.inhomogeneity, cfg.params, cfg.grid)
    phi_list = cfg.phi_list if len(cfg.phi_list) > 1 else \
        list(np.linspace(sel["phi1"] - 0.8, sel["phi1"] + 0.8, 7))
    scan = selection_scan(cfg.inhomogeneity, cfg.params, cfg.grid, phi_list,
                          eps=cfg.eps_list[0], cfg=cfg.newton, farfield=cfg.farfield)
    rows = [[r["phi"], r.get("c_fit", np.nan), r.get("phi_inf_fit", np.nan),
             r.get("s_inf_fit", np.nan), r.get("residual", np.nan)]
            for r in scan["rows"]]
    artifacts.append(_write_csv(out / "scan.csv",
                                ["phi", "c_fit", "phi_inf_fit", "s_inf_fit", "residual"], rows))
    artifacts.append(_write_json(out / "report.json", {
        "predicted": {"phi1": sel["phi1"], "phi2": sel["phi2"],
                      "slope1": sel["slope1"], "slope2": sel["slope2"]},
        "roots": scan["roots"],
        "all_converged": all(r.get("converged") for r in scan["rows"])}))
    ok = all(r.get("converged") for r in scan["rows"])
    return artifacts, EXIT_OK if ok else EXIT_SOLVER


def _run_symbols(cfg: ExperimentConfig, out: Path, plots: bool):
    artifacts = []
    mg = ModeGrid.default()
    rows = []
    for xi in mg.axis[::4]:
        for eta in mg.axis[::4]:
            l1, l2 = L_symbol_eigs(xi, eta, cfg.params)
            rows.append([xi, eta, l1.real, l1.imag, l2.real, l2.imag])
    artifacts.append(_write_csv(out / "symbols.csv",
                                ["xi", "eta", "re_l1", "im_l1", "re_l2", "im_l2"], rows))
    eck = eckhaus_report(cfg.params)
    msym = M_symbol_report(cfg.params)
    artifacts.append(_write_json(out / "verdict.json", {
        "eckhaus_stable": eck["eckhaus_stable"], "max_real_part": eck["max_real_part"],
        "d_parallel": eck["d_parallel"], "multiplier": msym}))
    return artifacts, EXIT_OK


def _run_verify_linear(cfg: ExperimentConfig, out: Path, plots: bool):
    rng = np.random.default_rng(cfg.seed)
    pairings = []
    for _ in range(20):
        s, phi = random_bump_pair(cfg.grid, rng)
        t = TestFieldSextuple.from_smooth_pair(s, phi, cfg.params, cfg.grid)
        scale = max(np.max(np.abs(f)) for f in (t.f2, t.f3, t.f4, t.f5))
        area = (2.0 * cfg.grid.half_width) ** 2
        pairings.append(float(np.max(np.abs(cokernel_pairing(t, cfg.params, cfg.grid)))
                              / (scale * area)))
    b1, b2 = bordering_integral(cfg.params, cfg.grid)
    target = -2.0 * np.pi / np.sqrt(cfg.params.alpha)
    doc = {
        "cokernel_max_relative_pairing": max(pairings),
        "cokernel_ok": max(pairings) <= 1e-6,
        "bordering": {"x_moment": b1, "y_moment": b2,
                      "mutual_agreement": abs(b1 - b2) / max(1.0, abs(b1)),
                      "value_minus_2pi_over_sqrt_alpha": target,
                      "relative_error": abs(b1 - target) / abs(target)},
    }
    return [_write_json(out / "verify_linear.json", doc)], EXIT_OK


def _run_sweep(cfg: ExperimentConfig, out: Path, plots: bool):
    """Fan out stationary solves over the (eps, phi0) grid of the config."""
    artifacts = []
    rows = []
    status = EXIT_OK
    workers = max(1, int(os.environ.get("GLPATTERN_THREADS", "1")))
    jobs = [(eps, phi) for eps in cfg.eps_list for phi in cfg.phi_list]

    def one(job):
        eps, phi = job
        p = GLParams(k=cfg.params.k, eps=eps, phi0=phi)
        state, report = solve_stationary(p, cfg.inhomogeneity, cfg.grid,
                                         cfg=cfg.newton, farfield=cfg.farfield)
        if not report.success:
            return [eps, phi, np.nan, np.nan, np.nan, 0]
        fit = fit_far_field(reconstruct_A(state, p, cfg.grid), p, cfg.grid,
                            chi_outer=cfg.farfield.r_outer)
        return [eps, phi, state.c, fit.c_fit, fit.phi_inf_fit, 1]

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]
    if any(r[-1] == 0 for r in rows):
        status = EXIT_SOLVER
    artifacts.append(_write_csv(out / "sweep.csv",
                                ["eps", "phi", "c", "c_fit", "phi_inf_fit", "converged"], rows))
    return artifacts, status


_RUNNERS = {
    "stationary": _run_stationary,
    "evolve": _run_evolve,
    "continuation": _run_continuation,
    "fit": _run_fit,
    "select-phase": _run_select_phase,
    "symbols": _run_symbols,
    "verify-linear": _run_verify_linear,
    "sweep": _run_sweep,
}


def run(subcommand: str, cfg: ExperimentConfig, plots: bool = False):
    """Execute one subcommand; returns (manifest_path, exit_code)."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    try:
        artifacts, status = _RUNNERS[subcommand](cfg, out, plots)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, EXIT_VALIDATION
    manifest = write_manifest(out, config_to_dict(cfg), artifacts, started, _now(),
                              version=__version__, partial=status != EXIT_OK)
    return manifest, status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="glpattern", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(_RUNNERS))
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--plots", action="store_true", help="emit PNG heatmaps")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, out_dir=args.out)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw["seed"] = args.seed
    _, status = run(args.subcommand, cfg, plots=args.plots)
    return status


if __name__ == "__main__":
    sys.exit(main())
