"""Experiment runner: executes a configured experiment kind and assembles a
self-describing report (config echo, per-stage records, timings, warnings).

Reports are deterministic for a fixed config+seed; with normalize_timings
the JSON output is byte-identical across runs.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from .. import fractal, holonomy
from ..dynamics import MapSpec, classify_linear
from ..errors import PhlabError
from ..exponents import (
    SamplingGrid,
    birkhoff_alpha,
    continued_orbits,
    induced_A,
    kappa,
    periodic_alpha,
    pinching_exponents,
)
from ..splitting import Bundle, get_evaluator
from ..torus import line_angle_arr, wrap_coords
from ..util import derive_seed, halton, parallel_map
from .config import ExperimentConfig, config_to_dict

SCHEMA_VERSION = 1


@dataclass
class Table:
    name: str
    header: tuple[str, ...]
    rows: list[tuple]


@dataclass
class StageResult:
    name: str
    record: dict
    tables: list[Table] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass
class ExperimentReport:
    config: dict
    stages: dict
    timings: dict
    warnings: list[str]
    verdicts: dict
    schema_version: int = SCHEMA_VERSION
    failed_stage: str | None = None
    error: str | None = None
    tables: dict = field(default_factory=dict)

    def to_json(self, normalize_timings: bool = False) -> str:
        data = {
            "schema_version": self.schema_version,
            "config": self.config,
            "stages": self.stages,
            "timings": {k: 0.0 for k in self.timings} if normalize_timings else self.timings,
            "warnings": self.warnings,
            "verdicts": self.verdicts,
            "failed_stage": self.failed_stage,
            "error": self.error,
        }
        return json.dumps(_plain(data), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    """Convert numpy scalars/arrays, dataclasses and tuples to JSON-safe types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    if isinstance(obj, Bundle):
        return obj.value
    return obj


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def _stage_splitting_check(spec: MapSpec, cfg: ExperimentConfig) -> StageResult:
    p = cfg.params
    ev = get_evaluator(spec, tol=p.bundle_tol, cache_quantum=None)
    pts = halton(p.base_samples, spec.dim, seed=derive_seed(cfg.seed, "splitting"))
    from ..dynamics import apply_arr, jacobian

    rows = []
    worst = {b: 0.0 for b in (Bundle.S, Bundle.C, Bundle.U, Bundle.CS, Bundle.CU)}
    for xa in pts:
        fx = apply_arr(spec, xa)
        jac = jacobian(spec, xa)
        res = {}
        for b in (Bundle.S, Bundle.C, Bundle.U):
            v = ev.vector(xa, b)
            pushed = jac @ v
            ang = line_angle_arr(pushed / np.linalg.norm(pushed), ev.vector(fx, b))
            res[b.value] = ang
            worst[b] = max(worst[b], ang)
        for b in (Bundle.CS, Bundle.CU):
            n = ev.vector(xa, b)
            pulled = np.linalg.solve(jac.T, n)
            ang = line_angle_arr(pulled / np.linalg.norm(pulled), ev.vector(fx, b))
            res[b.value] = ang
            worst[b] = max(worst[b], ang)
        rows.append((*xa, res["s"], res["c"], res["u"], res["cs"], res["cu"]))
    record = {
        "equivariance_max_angle": {b.value: worst[b] for b in worst},
        "tolerance": p.bundle_tol,
        "samples": len(pts),
    }
    header = tuple(f"x{i+1}" for i in range(spec.dim)) + ("equiv_s", "equiv_c", "equiv_u", "equiv_cs", "equiv_cu")
    return StageResult("splitting-check", record, [Table("equivariance", header, rows)])


def _stage_exponents(spec: MapSpec, cfg: ExperimentConfig) -> StageResult:
    p = cfg.params
    grid = SamplingGrid(p.grid_samples, seed=derive_seed(cfg.seed, "exponents"), period_cap=min(p.period_cap, 3))
    pin = pinching_exponents(spec, p.k_max, grid)
    sample_pts = halton(p.birkhoff_samples, spec.dim, seed=derive_seed(cfg.seed, "birkhoff"))
    n_birk = min(p.n_max, 400)
    alpha_s = birkhoff_alpha(spec, "s", 1, n_birk, sample_pts[: min(8, len(sample_pts))],
                             window=(p.birkhoff_window, 1.0))
    alpha_c = birkhoff_alpha(spec, "c", 1, n_birk, sample_pts[: min(8, len(sample_pts))],
                             window=(p.birkhoff_window, 1.0))
    a_k = {}
    small_grid = SamplingGrid(min(p.grid_samples, 32), seed=derive_seed(cfg.seed, "induced"))
    for k in range(1, p.k_max + 1):
        a_k[k] = induced_A(spec, "forward-cs", k, small_grid, n_birkhoff=64).a_k
    a_values = list(a_k.values())
    non_monotone = any(b > a + 1e-12 for a, b in zip(a_values[:-1], a_values[1:]))
    warnings = []
    if non_monotone:
        warnings.append("A_k tail is not monotone; the inf over k may not have converged by k_max")
    record = {
        "theta_s": pin.theta_s,
        "theta_c": pin.theta_c,
        "k_used": pin.k_used,
        "min_margin": pin.min_margin,
        "per_k_theta_s": pin.per_k_theta_s,
        "per_k_theta_c": pin.per_k_theta_c,
        "alpha_s": alpha_s.estimate,
        "alpha_c": alpha_c.estimate,
        "A_k": {str(k): v for k, v in a_k.items()},
        "A": min(a_values),
        "kappa": kappa(spec.linear),
        "grid": {"n": grid.n, "period_cap": grid.period_cap},
    }
    grid_rows = [
        (*x, k, ts[k - 1], tc[k - 1])
        for x, ts, tc in pin.samples
        for k in range(1, p.k_max + 1)
    ]
    tables = [
        Table("per_k", ("k", "theta_s", "theta_c", "A_k"),
              [(k, pin.per_k_theta_s[k - 1], pin.per_k_theta_c[k - 1], a_k[k]) for k in a_k]),
        Table("theta_grid", ("x1", "x2", "x3", "k", "theta_s", "theta_c"), grid_rows),
        Table("alpha_samples", ("x1", "x2", "x3", "alpha_s"),
              [(*x, v) for x, v in alpha_s.per_sample]),
    ]
    return StageResult("exponents", record, tables, warnings)


def _section_sampler(spec: MapSpec, cfg: ExperimentConfig):
    p = cfg.params
    return fractal.bundle_section(
        spec, Bundle(p.section), tol=max(p.bundle_tol, 1e-12), cache_quantum=p.cache_quantum or None
    )


def _stage_hoelder(spec: MapSpec, cfg: ExperimentConfig, sampler=None, label="hoelder") -> StageResult:
    p = cfg.params
    sampler = sampler if sampler is not None else _section_sampler(spec, cfg)
    scales = fractal.dyadic_scales(p.scale_j_min, p.scale_j_max)
    rep = fractal.hoelder_fit(sampler, scales, base_samples=p.base_samples, probes=p.probes,
                              seed=derive_seed(cfg.seed, label))
    record = {
        "sampler": sampler.name,
        "exponent": rep.exponent,
        "raw_slope": rep.raw_slope,
        "constant": rep.constant,
        "fit_r2": rep.fit_r2,
        "smooth": rep.smooth,
        "scales": rep.scales,
        "per_scale_sup_osc": rep.per_scale_sup_osc,
        "probes": p.probes,
        "base_samples": p.base_samples,
    }
    table = Table("sup_oscillation", ("scale", "sup_osc"),
                  list(zip(rep.scales, rep.per_scale_sup_osc)))
    return StageResult(label, record, [table])


def _stage_boxdim(spec: MapSpec | None, cfg: ExperimentConfig, sampler=None, label="boxdim") -> StageResult:
    p = cfg.params
    sampler = sampler if sampler is not None else _section_sampler(spec, cfg)
    cloud = fractal.graph_cloud(sampler, p.cloud_samples, seed=derive_seed(cfg.seed, label))
    scales = fractal.dyadic_scales(p.scale_j_min, p.scale_j_max)
    rep = fractal.box_dimension(cloud, scales, expected_dim=cloud.base_dim)
    record = {
        "sampler": sampler.name,
        "fit_slope": rep.fit_slope,
        "lower_slope": rep.lower_slope,
        "upper_slope": rep.upper_slope,
        "fit_r2": rep.fit_r2,
        "window_slopes": rep.window_slopes,
        "stable_indices": rep.stable_indices,
        "counts": rep.sweep.counts,
        "scales": rep.sweep.scales,
        "cloud_samples": p.cloud_samples,
    }
    slopes = rep.window_slopes + (float("nan"),)
    table = Table("scale_sweep", ("scale", "count", "slope"),
                  [(s, c, slopes[i]) for i, (s, c) in enumerate(zip(rep.sweep.scales, rep.sweep.counts))])
    return StageResult(label, record, [table], list(rep.warnings))


def _stage_obstruction(spec: MapSpec, cfg: ExperimentConfig, section=None,
                       direction="auto", label="obstruction") -> StageResult:
    p = cfg.params
    params = holonomy.ObstructionParams(
        arc_samples=p.arc_samples,
        holonomy_tol=p.holonomy_tol,
        floor_min=p.obstruction_floor_min,
        bundle_direction=direction,
        seed=derive_seed(cfg.seed, label) % 2**31,
    )
    rep = holonomy.delta_scan(spec, section or p.section.upper(), p.delta_list,
                              base_samples=p.base_samples, params=params)
    record = {
        "section": rep.section,
        "direction": rep.direction,
        "verdict": rep.verdict,
        "floor_min": rep.floor_min,
        "blocks": [
            {
                "delta": b.delta,
                "min": b.min_value,
                "max": b.max_value,
                "control_max": b.control_max,
                "noise_floor": b.noise_floor,
                "verdict": b.verdict,
            }
            for b in rep.blocks
        ],
    }
    rows = []
    for b in rep.blocks:
        for x, v in b.values:
            rows.append((b.delta, *x, v, b.noise_floor))
    table = Table("delta_values", ("delta", "x1", "x2", "x3", "value", "noise_floor"), rows)
    return StageResult(label, record, [table])


def _stage_integrability(spec: MapSpec, cfg: ExperimentConfig) -> StageResult:
    p = cfg.params
    gaps = holonomy.c_periodic_gap(spec, p.period_cap, gap_threshold=p.gap_threshold)
    su = holonomy.su_defect_scan(
        spec,
        p.su_samples,
        a=p.su_radius_a,
        b=p.su_radius_b,
        params=holonomy.SuDefectParams(floor_min=p.su_floor_min),
        seed=derive_seed(cfg.seed, "su-defect") % 2**31,
    )
    record = {
        "max_c_gap": gaps.max_c_gap,
        "gap_verdict": gaps.gap_verdict,
        "gap_threshold": gaps.gap_threshold,
        "orbit_errors": gaps.orbit_errors,
        "su_verdict": su.su_verdict,
        "su_floor": su.su_floor,
        "su_defect_max": max((d for *_, d in su.su_defects), default=float("nan")),
    }
    tables = [
        Table("c_gaps", ("orbit", "gap"), list(gaps.c_periodic_gaps)),
        Table("su_defects", ("x1", "x2", "x3", "a", "b", "defect"),
              [(*x, a, b, d) for x, a, b, d in su.su_defects]),
    ]
    return StageResult("integrability", record, tables)


def _stage_weierstrass(cfg: ExperimentConfig) -> StageResult:
    p = cfg.params
    lam, b, phi = p.weierstrass_lambda, p.weierstrass_b, p.weierstrass_phi
    sampler = fractal.weierstrass_section(lam, b, phi)
    control = fractal.sine_section()
    scales = fractal.dyadic_scales(p.scale_j_min, p.scale_j_max)
    seed = derive_seed(cfg.seed, "weierstrass")
    cloud = fractal.graph_cloud(sampler, p.cloud_samples, seed=seed)
    rep = fractal.box_dimension(cloud, scales, expected_dim=1)
    ctrl_cloud = fractal.graph_cloud(control, p.cloud_samples, seed=seed)
    ctrl_rep = fractal.box_dimension(ctrl_cloud, scales, expected_dim=1)
    hrep = fractal.hoelder_fit(sampler, scales, base_samples=min(p.base_samples, 64),
                               probes=p.probes, seed=seed)
    record = {
        "lambda": lam,
        "b": b,
        "phi": phi,
        "dimension_formula": fractal.weierstrass_box_dimension_formula(lam, b),
        "dimension_fit": rep.fit_slope,
        "dimension_window": [rep.lower_slope, rep.upper_slope],
        "hoelder_formula": fractal.weierstrass_hoelder_exponent(lam, b),
        "hoelder_fit": hrep.exponent,
        "control_dimension_fit": ctrl_rep.fit_slope,
        "counts": rep.sweep.counts,
        "scales": rep.sweep.scales,
    }
    slopes = rep.window_slopes + (float("nan"),)
    tables = [
        Table("scale_sweep", ("scale", "count", "slope"),
              [(s, c, slopes[i]) for i, (s, c) in enumerate(zip(rep.sweep.scales, rep.sweep.counts))]),
        Table("sup_oscillation", ("scale", "sup_osc"), list(zip(hrep.scales, hrep.per_scale_sup_osc))),
    ]
    return StageResult("weierstrass-reference", record, tables, list(rep.warnings))


def _stage_dichotomy(spec: MapSpec, cfg: ExperimentConfig, prior: dict) -> StageResult:
    """Final verdict block of the full pipeline: regularity vs fractality."""
    p = cfg.params
    exp_rec = prior["exponents"]
    hoe_rec = prior["hoelder"]
    obs_rec = prior["obstruction"]
    int_rec = prior["integrability"]
    a_est = exp_rec["A"]
    threshold = exp_rec["theta_s"] if p.section == "s" else exp_rec["theta_c"]
    alpha = min(a_est + p.alpha_margin, 0.97)
    sampler = _section_sampler(spec, cfg)
    control = fractal.bundle_section(MapSpec(spec.linear), Bundle(p.section),
                                     tol=max(p.bundle_tol, 1e-12))
    scales = fractal.dyadic_scales(min(p.scale_j_min + 1, p.scale_j_max - 3), p.scale_j_max)
    seed = derive_seed(cfg.seed, "criterion")
    c_est = fractal.fractal_criterion(sampler, alpha, scales, base_samples=min(p.base_samples, 50),
                                      probes=p.probes, seed=seed)
    c_floor = fractal.fractal_criterion(control, alpha, scales, base_samples=min(p.base_samples, 50),
                                        probes=p.probes, seed=seed)
    floor = max(c_floor, 1e-9)
    certified = bool(c_est > 3.0 * floor)
    record = {
        "alpha": alpha,
        "A_estimate": a_est,
        "criterion_c_est": c_est,
        "criterion_floor": floor,
        "fractal_certified": certified,
        "dim_lower_bound": holonomy.dim_lower_bound_from_A(alpha, spec.dim) if 0 < alpha < 1 else None,
        "hoelder_threshold": threshold,
        "hoelder_exponent": hoe_rec["exponent"],
    }
    verdicts = {
        "hoelder_exceeds_threshold": bool(hoe_rec["exponent"] > threshold),
        "holonomy_invariant": obs_rec["verdict"],
        "fractal_certified": certified,
        "gap_verdict": int_rec["gap_verdict"],
        "su_verdict": int_rec["su_verdict"],
    }
    record["verdicts"] = verdicts
    return StageResult("dichotomy", record, [])


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg.validate()
    spec = cfg.map.build() if cfg.map is not None else None
    stages: dict = {}
    timings: dict = {}
    warnings: list[str] = []
    verdicts: dict = {}
    tables: dict = {}
    failed = None
    error = None

    def run_stage(fn, *args, **kwargs):
        t0 = time.monotonic()
        result: StageResult = fn(*args, **kwargs)
        timings[result.name] = time.monotonic() - t0
        stages[result.name] = result.record
        tables[result.name] = result.tables
        warnings.extend(f"{result.name}: {w}" for w in result.warnings)
        return result

    plan = {
        "splitting-check": lambda: run_stage(_stage_splitting_check, spec, cfg),
        "exponents": lambda: run_stage(_stage_exponents, spec, cfg),
        "hoelder": lambda: run_stage(_stage_hoelder, spec, cfg),
        "boxdim": lambda: run_stage(_stage_boxdim, spec, cfg),
        "obstruction": lambda: run_stage(_stage_obstruction, spec, cfg),
        "integrability": lambda: run_stage(_stage_integrability, spec, cfg),
        "weierstrass-reference": lambda: run_stage(_stage_weierstrass, cfg),
    }
    try:
        if cfg.kind == "full-dichotomy":
            run_stage(_stage_splitting_check, spec, cfg)
            run_stage(_stage_exponents, spec, cfg)
            run_stage(_stage_hoelder, spec, cfg)
            run_stage(_stage_obstruction, spec, cfg, section=cfg.params.section.upper())
            run_stage(_stage_integrability, spec, cfg)
            res = run_stage(_stage_dichotomy, spec, cfg, stages)
            verdicts = res.record["verdicts"]
        else:
            plan[cfg.kind]()
            if cfg.kind == "obstruction":
                verdicts = {"holonomy_invariant": stages["obstruction"]["verdict"]}
            elif cfg.kind == "integrability":
                verdicts = {
                    "gap_verdict": stages["integrability"]["gap_verdict"],
                    "su_verdict": stages["integrability"]["su_verdict"],
                }
    except PhlabError as exc:
        failed = next(reversed(stages), None)
        failed = failed if failed is not None else cfg.kind
        error = f"{type(exc).__name__}: {exc}"
    return ExperimentReport(
        config=config_to_dict(cfg),
        stages=_plain(stages),
        timings=timings,
        warnings=warnings,
        verdicts=_plain(verdicts),
        failed_stage=failed if error else None,
        error=error,
        tables=tables,
    )


def emit_csv(report: ExperimentReport, out_dir: str) -> list[str]:
    """One CSV per table: UTF-8, header row, '.' decimal separator."""
    import os

    paths = []
    os.makedirs(out_dir, exist_ok=True)
    for stage, tabs in report.tables.items():
        for tab in tabs:
            path = os.path.join(out_dir, f"{stage}__{tab.name}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(",".join(tab.header) + "\n")
                for row in tab.rows:
                    fh.write(",".join(_csv_cell(v) for v in row) + "\n")
            paths.append(path)
    return paths


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v).replace(",", ";")
