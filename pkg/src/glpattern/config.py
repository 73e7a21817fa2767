"""Experiment configuration: a single JSON document with explicit defaults.

Every value is validated against the module preconditions before any
computation; error messages name the offending key and the violated bound.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .correctors import FarField
from .grid import Grid2D
from .model import ECKHAUS_K, GLParams, Inhomogeneity, make_params
from .solvers import EvolveConfig, NewtonConfig

__all__ = ["ExperimentConfig", "load_config", "config_to_dict"]

_DEFAULTS = {
    "L": 50.0,
    "n": 501,
    "k": None,          # required
    "eps": None,        # required (scalar or list)
    "phi0": 0.0,        # scalar or list
    "gamma": 0.5,
    "beta": 3.0,
    "seed": 0,
}


@dataclass
class ExperimentConfig:
    grid: Grid2D
    params: GLParams
    eps_list: list
    phi_list: list
    gamma: float
    beta: float
    inhomogeneity: Inhomogeneity
    newton: NewtonConfig
    evolve: EvolveConfig
    farfield: FarField
    out_dir: str
    seed: int
    raw: dict = field(repr=False, default_factory=dict)


def _fail(key, msg):
    raise ValueError(f"config key '{key}': {msg}")


def _build_inhomogeneity(block: dict) -> Inhomogeneity:
    kind = block.get("kind", "gaussian")
    amp = block.get("amplitude", 1.0)
    if isinstance(amp, (list, tuple)):
        if len(amp) != 2:
            _fail("inhomogeneity.amplitude", "complex amplitude must be [re, im]")
        amp = complex(amp[0], amp[1])
    center = tuple(block.get("center", (0.0, 0.0)))
    sigma = float(block.get("width", block.get("sigma", 1.0)))
    table = None
    if kind == "tabulated":
        from .fieldio import read_field

        path = block.get("file")
        if path is None:
            _fail("inhomogeneity.file", "tabulated inhomogeneity needs a field file")
        _, table = read_field(path)
    try:
        return Inhomogeneity(kind=kind, amplitude=amp, center=center, sigma=sigma, table=table)
    except ValueError as exc:
        _fail("inhomogeneity", str(exc))


def config_from_dict(doc: dict, out_dir: str | None = None) -> ExperimentConfig:
    d = dict(_DEFAULTS)
    d.update({k: v for k, v in doc.items() if k not in ("inhomogeneity", "solver", "farfield")})
    for key in ("k", "eps"):
        if d.get(key) is None:
            _fail(key, "required key is missing")

    L, n = float(d["L"]), int(d["n"])
    if n < 17 or n % 2 == 0:
        _fail("n", f"must be odd and >= 17, got {n}")
    if L <= 0:
        _fail("L", f"must be positive, got {L}")
    grid = Grid2D(half_width=L, npts=n)

    eps = d["eps"]
    eps_list = [float(e) for e in (eps if isinstance(eps, (list, tuple)) else [eps])]
    if any(e < 0 for e in eps_list):
        _fail("eps", "forcing amplitudes must be nonnegative")
    phi0 = d["phi0"]
    phi_list = [float(p) for p in (phi0 if isinstance(phi0, (list, tuple)) else [phi0])]

    k = float(d["k"])
    try:
        params = make_params(k, eps=eps_list[0], phi0=phi_list[0])
    except ValueError as exc:
        _fail("k", f"{exc} (Eckhaus bound |k| < 1/sqrt(3) ~ {ECKHAUS_K:.5f})")

    gamma, beta = float(d["gamma"]), float(d["beta"])
    if not (0.0 < gamma < 1.0):
        _fail("gamma", f"weight exponent must lie in (0, 1), got {gamma}")
    if beta <= gamma + 2.0:
        _fail("beta", f"need beta > gamma + 2 = {gamma + 2.0}, got {beta}")

    g = _build_inhomogeneity(doc.get("inhomogeneity", {}))

    solver = doc.get("solver", {})
    try:
        newton = NewtonConfig(**solver.get("newton", {}))
    except (TypeError, ValueError) as exc:
        _fail("solver.newton", str(exc))
    try:
        evolve = EvolveConfig(**solver.get("evolve", {}))
    except (TypeError, ValueError) as exc:
        _fail("solver.evolve", str(exc))

    ff_block = doc.get("farfield", {})
    try:
        if ff_block:
            farfield = FarField(
                r_inner=float(ff_block.get("r_inner", 0.5)),
                r_outer=float(ff_block.get("r_outer", 1.0)),
                degree=int(ff_block.get("degree", 9)),
            )
        else:
            from .solvers import default_solver_farfield

            farfield = default_solver_farfield(grid)
    except ValueError as exc:
        _fail("farfield", str(exc))
    if farfield.r_outer > 0.45 * L:
        _fail("farfield.r_outer", f"cutoff outer radius {farfield.r_outer} too large for L={L}")

    seed = int(d.get("seed", 0))
    resolved = dict(doc)
    resolved.update({"L": L, "n": n, "k": k, "eps": eps_list, "phi0": phi_list,
                     "gamma": gamma, "beta": beta, "seed": seed})
    return ExperimentConfig(
        grid=grid, params=params, eps_list=eps_list, phi_list=phi_list,
        gamma=gamma, beta=beta, inhomogeneity=g, newton=newton, evolve=evolve,
        farfield=farfield, out_dir=out_dir or doc.get("out_dir", "glpattern-out"),
        seed=seed, raw=resolved,
    )


def load_config(path, out_dir: str | None = None) -> ExperimentConfig:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config_from_dict(doc, out_dir=out_dir)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Round-trippable snapshot with all defaults resolved."""
    out = dict(cfg.raw)
    out["solver"] = {"newton": asdict(cfg.newton), "evolve": asdict(cfg.evolve)}
    out["farfield"] = {"r_inner": cfg.farfield.r_inner, "r_outer": cfg.farfield.r_outer,
                       "degree": cfg.farfield.degree}
    ih = cfg.inhomogeneity
    amp = ih.amplitude
    out["inhomogeneity"] = {
        "kind": ih.kind,
        "amplitude": [np.real(amp).item(), np.imag(amp).item()],
        "center": list(ih.center),
        "width": ih.sigma,
    }
    return out
