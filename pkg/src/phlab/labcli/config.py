"""Experiment configuration: a single TOML file with an explicit schema.

Configs are diffable and archivable alongside outputs; unknown keys are
rejected so stale or misspelled settings cannot silently change an
experiment.  Per-stage sub-seeds derive from the master seed through a
splitmix64 fold of the stage name (util.derive_seed), so any stage can be
re-run in isolation with identical streams.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields

import numpy as np

from ..dynamics import EPS_MAX_DEFAULT, FourierScalarField, MapSpec, eigendirection
from ..errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1

KINDS = (
    "splitting-check",
    "exponents",
    "hoelder",
    "boxdim",
    "obstruction",
    "integrability",
    "weierstrass-reference",
    "full-dichotomy",
)


@dataclass(frozen=True)
class MapConfig:
    matrix: tuple[tuple[int, ...], ...]
    epsilon: float = 0.0
    direction: str | tuple[float, ...] | None = None
    fourier: tuple[tuple[tuple[int, ...], float, float], ...] = ()

    def build(self) -> MapSpec:
        if self.epsilon == 0.0 or not self.fourier:
            return MapSpec.make_linear(self.matrix)
        spec_lin = MapSpec.make_linear(self.matrix)
        if isinstance(self.direction, str):
            if not self.direction.startswith("eigen:") or self.direction[6:] not in "scu":
                raise ConfigError(f"unknown direction selector {self.direction!r}")
            e = eigendirection(spec_lin.linear, self.direction[6:])
        elif self.direction is not None:
            e = np.asarray(self.direction, dtype=float)
        else:
            raise ConfigError("perturbed map requires a direction")
        return MapSpec.make_perturbed(
            self.matrix, self.epsilon, FourierScalarField(self.fourier), e
        )


@dataclass(frozen=True)
class Params:
    """Estimator knobs; every numeric result in a report echoes these."""

    bundle_tol: float = 1e-12
    cache_quantum: float = 1e-6
    k_max: int = 8
    n_max: int = 2000
    birkhoff_samples: int = 50
    birkhoff_window: float = 0.5
    period_cap: int = 5
    grid_samples: int = 64
    scale_j_min: int = 4
    scale_j_max: int = 12
    base_samples: int = 100
    cloud_samples: int = 1000000
    probes: int = 256
    delta_list: tuple[float, ...] = (0.02, 0.05, 0.1)
    arc_samples: int = 16
    holonomy_tol: float = 1e-8
    obstruction_floor_min: float = 1e-7
    su_samples: int = 12
    su_radius_a: float = 0.05
    su_radius_b: float = 0.05
    su_floor_min: float = 1e-6
    gap_threshold: float = 1e-6
    alpha_margin: float = 0.05
    section: str = "s"
    weierstrass_lambda: float = 0.55
    weierstrass_b: int = 3
    weierstrass_phi: str = "cos"
    threads: int = 1

    def validate(self) -> None:
        checks = [
            (0 < self.bundle_tol <= 1e-6, "bundle_tol in (0, 1e-6]"),
            (0 <= self.cache_quantum <= 1e-3, "cache_quantum in [0, 1e-3]"),
            (1 <= self.k_max <= 64, "k_max in [1, 64]"),
            (4 <= self.n_max <= 10**6, "n_max in [4, 1e6]"),
            (1 <= self.birkhoff_samples <= 10**4, "birkhoff_samples in [1, 1e4]"),
            (0.0 < self.birkhoff_window < 1.0, "birkhoff_window in (0,1)"),
            (1 <= self.period_cap <= 12, "period_cap in [1, 12]"),
            (1 <= self.grid_samples <= 10**5, "grid_samples in [1, 1e5]"),
            (1 <= self.scale_j_min < self.scale_j_max <= 24, "scale exponents 1 <= j_min < j_max <= 24"),
            (self.scale_j_max - self.scale_j_min >= 3, "at least 4 scales"),
            (1 <= self.base_samples <= 10**5, "base_samples in [1, 1e5]"),
            (100 <= self.cloud_samples <= 10**8, "cloud_samples in [100, 1e8]"),
            (8 <= self.probes <= 10**5, "probes in [8, 1e5]"),
            (all(0 < d <= 0.25 for d in self.delta_list), "delta values in (0, 0.25]"),
            (2 <= self.arc_samples <= 1024, "arc_samples in [2, 1024]"),
            (0 < self.holonomy_tol <= 1e-4, "holonomy_tol in (0, 1e-4]"),
            (0 < self.obstruction_floor_min <= 1e-3, "obstruction_floor_min in (0, 1e-3]"),
            (1 <= self.su_samples <= 1000, "su_samples in [1, 1000]"),
            (0 < self.su_radius_a <= 0.1, "su_radius_a in (0, 0.1]"),
            (0 < self.su_radius_b <= 0.1, "su_radius_b in (0, 0.1]"),
            (0 < self.su_floor_min <= 1e-2, "su_floor_min in (0, 1e-2]"),
            (0 < self.gap_threshold <= 1e-2, "gap_threshold in (0, 1e-2]"),
            (0 < self.alpha_margin < 0.5, "alpha_margin in (0, 0.5)"),
            (self.section in ("s", "c"), "section in {'s','c'}"),
            (2 <= self.weierstrass_b <= 64, "weierstrass_b in [2, 64]"),
            (1.0 / self.weierstrass_b < self.weierstrass_lambda < 1.0, "weierstrass_lambda in (1/b, 1)"),
            (self.weierstrass_phi in ("cos", "sin"), "weierstrass_phi in {'cos','sin'}"),
            (1 <= self.threads <= 256, "threads in [1, 256]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(f"parameter out of range: {msg}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    map: MapConfig | None = None
    params: Params = field(default_factory=Params)
    out_dir: str | None = None
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.kind != "weierstrass-reference" and self.map is None:
            raise ConfigError(f"kind {self.kind!r} requires a [map] table")
        self.params.validate()
        if self.map is not None:
            if abs(self.map.epsilon) > EPS_MAX_DEFAULT:
                raise ConfigError(f"|epsilon| must not exceed {EPS_MAX_DEFAULT}")
            self.map.build()  # raises on inconsistent matrix/direction/fourier


def _check_keys(table: dict, allowed, where: str) -> None:
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def config_from_dict(data: dict) -> ExperimentConfig:
    _check_keys(data, {"schema_version", "kind", "seed", "out_dir", "map", "params"}, "config")
    try:
        kind = data["kind"]
        seed = int(data["seed"])
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc}") from None
    map_cfg = None
    if "map" in data:
        m = data["map"]
        _check_keys(m, {"matrix", "epsilon", "direction", "fourier"}, "[map]")
        if "matrix" not in m:
            raise ConfigError("[map] requires matrix")
        fourier = []
        for i, t in enumerate(m.get("fourier", [])):
            _check_keys(t, {"frequency", "cos", "sin"}, f"[[map.fourier]][{i}]")
            fourier.append(
                (tuple(int(v) for v in t["frequency"]), float(t.get("cos", 0.0)), float(t.get("sin", 0.0)))
            )
        direction = m.get("direction")
        if isinstance(direction, list):
            direction = tuple(float(v) for v in direction)
        map_cfg = MapConfig(
            matrix=tuple(tuple(int(v) for v in row) for row in m["matrix"]),
            epsilon=float(m.get("epsilon", 0.0)),
            direction=direction,
            fourier=tuple(fourier),
        )
    params = Params()
    if "params" in data:
        p = data["params"]
        allowed = {f.name for f in fields(Params)}
        _check_keys(p, allowed, "[params]")
        kwargs = dict(p)
        if "delta_list" in kwargs:
            kwargs["delta_list"] = tuple(float(v) for v in kwargs["delta_list"])
        params = Params(**kwargs)
    cfg = ExperimentConfig(
        kind=kind,
        seed=seed,
        map=map_cfg,
        params=params,
        out_dir=data.get("out_dir"),
        schema_version=int(data.get("schema_version", SCHEMA_VERSION)),
    )
    cfg.validate()
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from None
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out: dict = {"schema_version": cfg.schema_version, "kind": cfg.kind, "seed": cfg.seed}
    if cfg.out_dir is not None:
        out["out_dir"] = cfg.out_dir
    if cfg.map is not None:
        m: dict = {"matrix": [list(r) for r in cfg.map.matrix]}
        if cfg.map.epsilon:
            m["epsilon"] = cfg.map.epsilon
        if cfg.map.direction is not None:
            m["direction"] = (
                cfg.map.direction if isinstance(cfg.map.direction, str) else list(cfg.map.direction)
            )
        if cfg.map.fourier:
            m["fourier"] = [
                {"frequency": list(k), "cos": c, "sin": s} for k, c, s in cfg.map.fourier
            ]
        out["map"] = m
    defaults = Params()
    p = {}
    for f in fields(Params):
        v = getattr(cfg.params, f.name)
        if v != getattr(defaults, f.name):
            p[f.name] = list(v) if isinstance(v, tuple) else v
    if p:
        out["params"] = p
    return out


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value {v!r} to TOML")


def serialize_config(cfg: ExperimentConfig) -> str:
    """TOML text whose parse reproduces the config exactly."""
    data = config_to_dict(cfg)
    lines = []
    for key in ("schema_version", "kind", "seed", "out_dir"):
        if key in data:
            lines.append(f"{key} = {_toml_value(data[key])}")
    if "map" in data:
        lines.append("")
        lines.append("[map]")
        m = data["map"]
        for key in ("matrix", "epsilon", "direction"):
            if key in m:
                lines.append(f"{key} = {_toml_value(m[key])}")
        for t in m.get("fourier", []):
            lines.append("")
            lines.append("[[map.fourier]]")
            for key in ("frequency", "cos", "sin"):
                lines.append(f"{key} = {_toml_value(t[key])}")
    if "params" in data:
        lines.append("")
        lines.append("[params]")
        for key, v in data["params"].items():
            lines.append(f"{key} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"
