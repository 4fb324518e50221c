"""Induced bundle maps on lines inside the cs-plane, their unstable
holonomy, the holonomy obstruction function, the su joint-integrability
defect, and periodic-data gap criteria.

Verdict thresholds follow a calibration policy: every obstruction/defect
pipeline is first run on the linear part of the map with identical
parameters, and the noise floor is the maximum of that control measurement
and a tolerance-derived minimum (floor_min).  The raw control values on a
linear model sit at rounding level (1e-13), far below what the estimator
tolerances can resolve on a perturbed map, so thresholds keyed to the raw
control alone would misclassify invariant sections; floor_min encodes the
estimator resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    MapSpec,
    apply_arr,
    classify_linear,
    inverse_apply_arr,
    jacobian,
)
from .errors import DomainError, GeometryError, NonConvergenceError, TransportError
from .exponents import SamplingGrid, _step_rates, _theta_s_ratio
from .splitting import (
    Bundle,
    BundleEvaluator,
    LeafArc,
    forward_orbit,
    get_evaluator,
    orbit_frames,
    trace_leaf,
)
from .torus import TorusPoint, line_angle_arr, torus_delta, torus_distance_arr, wrap_coords
from .util import derive_seed, halton


def _normalize(v):
    return v / np.linalg.norm(v)


def _align(v, ref):
    return -v if float(np.dot(v, ref)) < 0.0 else v


# ---------------------------------------------------------------------------
# induced bundle maps
# ---------------------------------------------------------------------------


@dataclass
class InducedBundleMap:
    """Bundle map on lines inside the cs-plane over the base map or its inverse.

    time_direction 'forward': the fiber action is Df over f, and holonomy is
    taken along W^u.  'backward': the action is Df^-1 over f^-1, whose base
    unstable foliation is W^s of the original map.
    """

    spec: MapSpec
    time_direction: str = "forward"
    evaluator: BundleEvaluator | None = None

    def __post_init__(self):
        if self.time_direction not in ("forward", "backward"):
            raise DomainError("time_direction must be 'forward' or 'backward'")
        if self.spec.dim != 3:
            raise DomainError("induced bundle maps require d = 3")
        if self.evaluator is None:
            # exact cache keys: holonomy compares section values at 1e-8
            # resolution, below the snapping error of the quantized cache
            self.evaluator = get_evaluator(self.spec, cache_quantum=None)

    @property
    def leaf_bundle(self) -> Bundle:
        return Bundle.U if self.time_direction == "forward" else Bundle.S

    def base_pull(self, xa: np.ndarray) -> np.ndarray:
        """One step into the past of the base map (f^-1 forward, f backward)."""
        if self.time_direction == "forward":
            return inverse_apply_arr(self.spec, xa, tol=self.evaluator.inverse_tol)
        return apply_arr(self.spec, xa)

    def check_partially_hyperbolic(self, k_max: int = 8, grid_n: int = 8) -> bool:
        """Fiber-vs-base rate ratio below 1 for some k <= k_max on a small grid."""
        grid = SamplingGrid(grid_n, seed=11)
        ev = self.evaluator
        for k in range(1, k_max + 1):
            ratios = []
            for xa in grid.points(self.spec):
                pts = forward_orbit(self.spec, xa, k)
                rates = _step_rates(self.spec, orbit_frames(self.spec, pts, ev)).sum(axis=0)
                if self.time_direction == "forward":
                    ratios.append(_theta_s_ratio(rates))
                else:
                    ratios.append(1.0 - rates[1] / rates[0])
            if max(ratios) < 1.0:
                return True
        return False


def fiber_transport(
    f_map: InducedBundleMap, x, y, line_vec: np.ndarray, max_distance: float = 0.25
) -> np.ndarray:
    """Reference identification of nearby fibers: orthogonal projection of the
    line onto the cs-plane at y, renormalized.

    Near-isometric for close base points; degenerates (error) when the line
    is nearly orthogonal to the target plane.
    """
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(np.asarray(x, dtype=float))
    ya = y.coords if isinstance(y, TorusPoint) else wrap_coords(np.asarray(y, dtype=float))
    if torus_distance_arr(xa, ya) >= max_distance:
        raise DomainError("transport endpoints too far apart")
    n = f_map.evaluator.vector(ya, Bundle.CS)
    proj = line_vec - np.dot(line_vec, n) * n
    norm = float(np.linalg.norm(proj))
    if norm < 0.5:
        raise TransportError(
            f"line nearly orthogonal to target cs-plane (projected norm {norm:.3f})"
        )
    return proj / norm


class _HolonomyWork:
    """Shared incremental state for one holonomy base pair (x fixed, y varies)."""

    def __init__(self, f_map: InducedBundleMap, xa: np.ndarray):
        self.f_map = f_map
        self.ev = f_map.evaluator
        self.x_orbit = [wrap_coords(xa)]
        self.x_jacs: list[np.ndarray] = []
        self.x_ncs = [self.ev.vector(xa, Bundle.CS)]

    def extend(self, depth: int) -> None:
        while len(self.x_orbit) <= depth:
            nxt = self.f_map.base_pull(self.x_orbit[-1])
            self.x_orbit.append(nxt)
            self.x_ncs.append(_normalize(self._pull_normal(self.x_ncs[-1], len(self.x_orbit) - 1, self.x_orbit)))

    def _pull_normal(self, n_prev: np.ndarray, k: int, orbit) -> np.ndarray:
        # cs-normal at orbit[k] from the normal at orbit[k-1]
        if self.f_map.time_direction == "forward":
            # orbit[k] = f^-1(orbit[k-1]): n(z) = Df(z)^T n(f z)
            return jacobian(self.f_map.spec, orbit[k]).T @ n_prev
        # orbit[k] = f(orbit[k-1]): n(f z) = Df(z)^-T n(z)
        return np.linalg.solve(jacobian(self.f_map.spec, orbit[k - 1]).T, n_prev)

    def fiber_pull_chain(self, v: np.ndarray, orbit, depth: int) -> np.ndarray:
        """Pull a fiber line back `depth` steps along the given past orbit."""
        spec = self.f_map.spec
        for k in range(1, depth + 1):
            if self.f_map.time_direction == "forward":
                v = np.linalg.solve(jacobian(spec, orbit[k]), v)
            else:
                v = jacobian(spec, orbit[k - 1]) @ v
            v = _normalize(v)
        return v

    def fiber_push_chain(self, v: np.ndarray, orbit, ncs, depth: int) -> np.ndarray:
        spec = self.f_map.spec
        for k in range(depth, 0, -1):
            if self.f_map.time_direction == "forward":
                v = jacobian(spec, orbit[k]) @ v
            else:
                v = np.linalg.solve(jacobian(spec, orbit[k - 1]), v)
            v = _normalize(v)
            n = ncs[k - 1]
            v = _normalize(v - np.dot(v, n) * n)  # kill transverse numerical drift
        return v


def unstable_holonomy(
    f_map: InducedBundleMap,
    x,
    y,
    line_vec: np.ndarray,
    n_max: int = 120,
    tol: float = 1e-9,
    _work: _HolonomyWork | None = None,
) -> np.ndarray:
    """Holonomy transport of a fiber line from over x to over y along the
    base unstable leaf, realized as the limit of (push)^n o transport o (pull)^n.

    The pulled-back base points approach each other exponentially along the
    leaf, so the transported line converges at the fiber-vs-base domination
    rate.  Depths follow a geometric schedule; the iteration stops when two
    successive depths agree within tol and errors out at n_max otherwise.
    """
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(np.asarray(x, dtype=float))
    ya = y.coords if isinstance(y, TorusPoint) else wrap_coords(np.asarray(y, dtype=float))
    if torus_distance_arr(xa, ya) < 1e-15:
        return _normalize(np.asarray(line_vec, dtype=float))
    work = _work if _work is not None else _HolonomyWork(f_map, xa)
    ev = f_map.evaluator
    y_orbit = [ya]
    y_ncs = [ev.vector(ya, Bundle.CS)]

    def extend_y(depth):
        while len(y_orbit) <= depth:
            y_orbit.append(f_map.base_pull(y_orbit[-1]))
            y_ncs.append(_normalize(work._pull_normal(y_ncs[-1], len(y_orbit) - 1, y_orbit)))

    prev = None
    gap = np.inf
    best_gap = np.inf
    v0 = _normalize(np.asarray(line_vec, dtype=float))
    # the gap first decays at the domination rate, then diverges once the
    # backward-amplified leaf error overtakes it: step through depths densely
    # enough to catch the minimum and abort once divergence is manifest
    for depth in range(4, n_max + 1, 3):
        work.extend(depth)
        extend_y(depth)
        v = work.fiber_pull_chain(v0, work.x_orbit, depth)
        n = y_ncs[depth]
        proj = v - np.dot(v, n) * n
        norm = float(np.linalg.norm(proj))
        if norm < 0.5:
            raise TransportError("transport degenerated at holonomy depth %d" % depth)
        v = proj / norm
        v = work.fiber_push_chain(v, y_orbit, y_ncs, depth)
        if prev is not None:
            gap = line_angle_arr(v, prev)
            if gap < tol:
                return v
            best_gap = min(best_gap, gap)
            if gap > 100.0 * best_gap:
                break
        prev = v
    raise NonConvergenceError(
        f"holonomy did not reach gap {tol:.1e} by depth {n_max} (best gap {best_gap:.3e}); "
        "the induced map may not be partially hyperbolic or y is off the leaf",
        gap=float(best_gap) if np.isfinite(best_gap) else None,
    )


# ---------------------------------------------------------------------------
# obstruction function and scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObstructionParams:
    """Tolerances of the obstruction pipeline.

    floor_min reflects the holonomy resolution: the transported line carries
    an error of order holonomy_tol plus the backward-amplified leaf-tracing
    error, so obstruction values below ~1e-7 are not distinguishable from an
    exactly invariant section.
    """

    arc_samples: int = 16
    leaf_steps: int = 16
    holonomy_tol: float = 1e-8
    n_max: int = 120
    field_tol: float = 1e-12
    floor_min: float = 1e-7
    bundle_direction: str = "auto"  # 'auto' | 'forward' | 'backward'
    seed: int = 0


def _section_bundle(section: str) -> Bundle:
    if section in ("s", "S"):
        return Bundle.S
    if section in ("c", "C"):
        return Bundle.C
    raise DomainError("section must be 'S' or 'C'")


def _direction_for(section: str, params: ObstructionParams) -> str:
    if params.bundle_direction != "auto":
        return params.bundle_direction
    return "forward" if section in ("s", "S") else "backward"


def obstruction_profile(
    spec: MapSpec,
    section: str,
    x,
    deltas,
    arc_samples: int | None = None,
    params: ObstructionParams = ObstructionParams(),
    f_map: InducedBundleMap | None = None,
) -> dict[float, float]:
    """Obstruction values at several leaf radii from one traced arc.

    One arc is traced at the largest delta and the holonomy is evaluated once
    per node; each smaller delta takes the max over the nodes inside its
    disk.  The node sets nest, so the returned values are monotone in delta
    by construction (the sup over a smaller disk never exceeds the sup over
    a larger one).
    """
    bundle = _section_bundle(section)
    direction = _direction_for(section, params)
    if f_map is None:
        f_map = InducedBundleMap(spec, direction)
    ev = f_map.evaluator
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(np.asarray(x, dtype=float))
    deltas = sorted(float(d) for d in deltas)
    d_max = deltas[-1]
    n_samples = params.arc_samples if arc_samples is None else arc_samples
    arc = trace_leaf(
        spec,
        xa,
        f_map.leaf_bundle,
        halfwidth=d_max,
        step=d_max / max(params.leaf_steps, 2 * n_samples),
        evaluator=ev,
    )
    # union of per-delta even node samplings: every delta keeps >= n_samples nodes
    sel: set[int] = set()
    arcs = arc.arclengths
    for d in deltas:
        inside = np.nonzero(np.abs(arcs) <= d + 1e-12)[0]
        take = np.round(np.linspace(0, len(inside) - 1, n_samples)).astype(int)
        sel.update(int(inside[i]) for i in take)
    z0 = ev.vector(xa, bundle)
    work = _HolonomyWork(f_map, xa)
    node_vals = []
    for i in sorted(sel):
        ya = wrap_coords(arc.lifts[i])
        if torus_distance_arr(xa, ya) < 1e-14:
            continue
        transported = unstable_holonomy(
            f_map, xa, ya, z0, n_max=params.n_max, tol=params.holonomy_tol, _work=work
        )
        node_vals.append((abs(float(arcs[i])), line_angle_arr(ev.vector(ya, bundle), transported)))
    out = {}
    for d in deltas:
        vals = [v for s, v in node_vals if s <= d + 1e-12]
        out[d] = max(vals) if vals else 0.0
    return out


def obstruction_delta(
    spec: MapSpec,
    section: str,
    x,
    delta: float,
    arc_samples: int | None = None,
    params: ObstructionParams = ObstructionParams(),
    f_map: InducedBundleMap | None = None,
) -> float:
    """sup over the leaf disk of radius delta of the angle between the section
    value and the holonomy transport of the section value at the center.

    Section 'S' rides the forward bundle map along W^u; section 'C' defaults
    to the backward map along W^s (override with params.bundle_direction to
    probe the forward holonomy invariance of the center section).
    """
    return obstruction_profile(
        spec, section, x, [delta], arc_samples=arc_samples, params=params, f_map=f_map
    )[float(delta)]


@dataclass(frozen=True)
class DeltaBlock:
    delta: float
    values: tuple[tuple[tuple[float, ...], float], ...]
    min_value: float
    max_value: float
    control_max: float
    noise_floor: float
    verdict: str


@dataclass(frozen=True)
class ObstructionReport:
    section: str
    direction: str
    blocks: tuple[DeltaBlock, ...]
    verdict: str
    floor_min: float
    invariant_factor: float = 3.0
    obstructed_factor: float = 10.0


def delta_scan(
    spec: MapSpec,
    section: str,
    delta_list,
    base_samples: int,
    params: ObstructionParams = ObstructionParams(),
) -> ObstructionReport:
    """Obstruction values over a base grid for each delta, with verdicts
    calibrated against the linear control run with identical parameters.

    Verdict per delta: 'invariant' when the maximum stays below 3x the noise
    floor, 'obstructed' when the minimum exceeds 10x the floor, otherwise
    'indeterminate'.  The overall verdict requires all deltas to agree.
    """
    direction = _direction_for(section, params)
    f_map = InducedBundleMap(spec, direction)
    control_spec = MapSpec(spec.linear)
    control_map = InducedBundleMap(control_spec, direction)
    pts = halton(base_samples, spec.dim, seed=derive_seed(params.seed, "delta-scan"))
    deltas = sorted(float(d) for d in delta_list)
    control_profiles = [
        obstruction_profile(control_spec, section, p, deltas, params=params, f_map=control_map)
        for p in pts
    ]
    profiles = [
        obstruction_profile(spec, section, p, deltas, params=params, f_map=f_map) for p in pts
    ]
    blocks = []
    for delta in deltas:
        control_max = float(max(prof[delta] for prof in control_profiles))
        floor = max(control_max, params.floor_min)
        vals = [(tuple(p), prof[delta]) for p, prof in zip(pts, profiles)]
        lo = float(min(v for _, v in vals))
        hi = float(max(v for _, v in vals))
        if hi < 3.0 * floor:
            verdict = "invariant"
        elif lo > 10.0 * floor:
            verdict = "obstructed"
        else:
            verdict = "indeterminate"
        blocks.append(DeltaBlock(float(delta), tuple(vals), lo, hi, control_max, floor, verdict))
    verdicts = {b.verdict for b in blocks}
    overall = verdicts.pop() if len(verdicts) == 1 else "indeterminate"
    return ObstructionReport(section, direction, tuple(blocks), overall, params.floor_min)


# ---------------------------------------------------------------------------
# su joint-integrability defect
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuDefectParams:
    leaf_steps: int = 16
    field_tol: float = 1e-8
    crossing_tol: float = 1e-10
    chart_tol: float = 1e-10
    floor_min: float = 1e-6
    c_leg_steps: int = 6
    cache_quantum: float | None = 1e-5  # defect floor is 1e-6; snapping noise ~1e-8


class _CsChart:
    """Local chart of the cs-leaf through y by (s-arclength, c-arclength) legs.

    The surface point at (xi_s, xi_c) is reached by walking xi_s along the
    integrated s-spine and then xi_c along the integrated c-line; chart
    coordinates of an ambient point are found by a 2D Newton iteration on
    the in-plane residual.
    """

    def __init__(self, spec: MapSpec, ya: np.ndarray, spine_halfwidth: float,
                 params: SuDefectParams, evaluator: BundleEvaluator):
        self.spec = spec
        self.ev = evaluator
        self.params = params
        self.ya = ya
        self.normal = evaluator.vector(ya, Bundle.CS)
        self.u_s = evaluator.vector(ya, Bundle.S)
        self.u_c = evaluator.vector(ya, Bundle.C)
        gram = np.array(
            [[1.0, np.dot(self.u_s, self.u_c)], [np.dot(self.u_s, self.u_c), 1.0]]
        )
        self.gram_inv = np.linalg.inv(gram)
        self.spine_halfwidth = spine_halfwidth
        self.spine = trace_leaf(
            spec, ya, Bundle.S, halfwidth=spine_halfwidth,
            step=spine_halfwidth / max(16, params.leaf_steps), evaluator=evaluator,
        )
        self.y_lift_offset = self.spine.lifts[self.spine.center_index] - ya

    def surface_delta(self, xi_s: float, xi_c: float) -> np.ndarray:
        """Displacement (relative to y) of the surface point at chart coords."""
        if abs(xi_s) > self.spine_halfwidth:
            raise GeometryError("chart s-coordinate left the spine")
        start = self.spine.lift_at(xi_s)
        z = start.copy()
        n_steps = max(2, self.params.c_leg_steps)
        h = xi_c / n_steps
        if xi_c != 0.0:
            ref = self.u_c
            for _ in range(n_steps):
                d1 = _align(self.ev.vector(wrap_coords(z), Bundle.C), ref)
                mid = z + 0.5 * h * d1
                d2 = _align(self.ev.vector(wrap_coords(mid), Bundle.C), d1)
                z = z + h * d2
                ref = d1
        return z - self.spine.lifts[self.spine.center_index]

    def chart_coords(
        self, delta: np.ndarray, max_iter: int = 10, tol: float | None = None
    ) -> tuple[float, float, np.ndarray]:
        """(xi_s, xi_c, surface displacement) of the surface point under delta."""
        chart_tol = self.params.chart_tol if tol is None else tol
        d_in = delta - np.dot(delta, self.normal) * self.normal
        xi = self.gram_inv @ np.array([np.dot(d_in, self.u_s), np.dot(d_in, self.u_c)])
        xi_s, xi_c = float(xi[0]), float(xi[1])
        surf = self.surface_delta(xi_s, xi_c)
        for _ in range(max_iter):
            resid = delta - surf
            resid_in = resid - np.dot(resid, self.normal) * self.normal
            if float(np.linalg.norm(resid_in)) < chart_tol:
                break
            step = self.gram_inv @ np.array(
                [np.dot(resid_in, self.u_s), np.dot(resid_in, self.u_c)]
            )
            xi_s += float(step[0])
            xi_c += float(step[1])
            surf = self.surface_delta(xi_s, xi_c)
        return xi_s, xi_c, surf


def su_defect(
    spec: MapSpec,
    x,
    a: float,
    b: float,
    params: SuDefectParams = SuDefectParams(),
    evaluator: BundleEvaluator | None = None,
) -> float:
    """Quadrilateral closure defect of the s- and u-leaves through x.

    Walk a along W^u to y and b along W^s to z; shoot the u-leaf from z until
    it crosses the local cs-leaf at y (bisection on the signed normal
    offset); the defect is the |c-arclength| of the crossing point in the
    (s, c) chart of that leaf.  Ambient distance would conflate s- and
    c-offsets; the integrability criterion concerns exactly the c-offset.
    """
    if a > 0.1 or b > 0.1:
        raise DomainError("leaf radii a, b must not exceed 0.1")
    ev = evaluator if evaluator is not None else get_evaluator(
        spec, tol=params.field_tol, cache_quantum=params.cache_quantum
    )
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(np.asarray(x, dtype=float))
    u_arc = trace_leaf(spec, xa, Bundle.U, halfwidth=a, step=a / params.leaf_steps, evaluator=ev)
    s_arc = trace_leaf(spec, xa, Bundle.S, halfwidth=b, step=b / params.leaf_steps, evaluator=ev)
    y_lift = u_arc.lift_at(a)
    z_lift = s_arc.lift_at(b)
    ya = wrap_coords(y_lift)
    za = wrap_coords(z_lift)

    spine_halfwidth = min(2.0 * b + 0.02, 0.24)
    for attempt in range(2):
        try:
            chart = _CsChart(spec, ya, spine_halfwidth, params, ev)
            return _shoot_and_measure(spec, chart, xa, ya, za, u_arc, a, params, ev)
        except GeometryError:
            if attempt == 1:
                raise
            spine_halfwidth = min(2.0 * spine_halfwidth, 0.45)
    raise GeometryError("unreachable")


def _shoot_and_measure(spec, chart, xa, ya, za, u_arc, a, params, ev) -> float:
    ref_dir = u_arc.directions[u_arc.center_index]
    shoot = trace_leaf(spec, za, Bundle.U, halfwidth=3.0 * a, step=3.0 * a / 48, evaluator=ev)
    if np.dot(shoot.directions[shoot.center_index], ref_dir) < 0.0:
        flip = -1.0
    else:
        flip = 1.0

    base_delta = torus_delta(ya, za)

    def offset(t: float, tol: float) -> tuple[float, float]:
        lift = shoot.lift_at(flip * t)
        delta = base_delta + (lift - shoot.lifts[shoot.center_index])
        _, xi_c, surf = chart.chart_coords(delta, tol=tol)
        return float(np.dot(delta - surf, chart.normal)), xi_c

    # the crossing is located on the normal offset, which is insensitive to
    # in-plane sliding of the chart point: a loose chart suffices until the
    # final defect readout
    loose = 1e-6
    lo_t, lo_g = 0.0, offset(0.0, loose)[0]
    hi_t = None
    t = a / 4.0
    while t <= 3.0 * a + 1e-12:
        g = offset(t, loose)[0]
        if np.sign(g) != np.sign(lo_g) or g == 0.0:
            hi_t = t
            break
        lo_t, lo_g = t, g
        t += a / 4.0
    if hi_t is None:
        raise GeometryError("u-leaf from z did not cross the cs-leaf at y within 3a")
    while hi_t - lo_t > params.crossing_tol:
        mid = 0.5 * (lo_t + hi_t)
        g = offset(mid, loose)[0]
        if np.sign(g) == np.sign(lo_g) and g != 0.0:
            lo_t, lo_g = mid, g
        else:
            hi_t = mid
    _, xi_c = offset(0.5 * (lo_t + hi_t), params.chart_tol)
    return abs(xi_c)


# ---------------------------------------------------------------------------
# periodic-data gaps and integrability report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrabilityReport:
    """Joint-integrability evidence: quadrilateral defects and periodic-data gaps."""

    su_defects: tuple[tuple[tuple[float, ...], float, float, float], ...]  # (x, a, b, defect)
    c_periodic_gaps: tuple[tuple[str, float], ...]  # (orbit id, |log-gap|)
    max_c_gap: float
    su_verdict: str | None
    gap_verdict: str | None
    su_floor: float | None = None
    gap_threshold: float = 1e-6
    orbit_errors: tuple[str, ...] = ()
    u_periodic_gaps: tuple[tuple[str, float], ...] = ()


def c_periodic_gap(
    spec: MapSpec,
    period_cap: int,
    gap_threshold: float = 1e-6,
    residual_tol: float = 1e-11,
) -> IntegrabilityReport:
    """Center-multiplier gaps |(1/n) log|mult_c| - log|lam_c|| over all
    continued periodic orbits up to period_cap.

    Continuation failures are recorded per orbit, not fatal.  The verdict is
    'zero-gap' when the maximum gap stays below gap_threshold and
    'positive-gap' otherwise.
    """
    from .dynamics import continue_periodic_orbit, linear_periodic_orbits

    cls = classify_linear(spec.linear)
    if not cls.is_partially_hyperbolic_anosov:
        raise DomainError("c-periodic data needs a partially hyperbolic Anosov linear part")
    log_c = float(np.log(abs(cls.eigenvalues[1])))
    log_u = float(np.log(abs(cls.eigenvalues[2])))
    gaps = []
    u_gaps = []
    errors = []
    for n in range(1, period_cap + 1):
        for idx, orbit in enumerate(linear_periodic_orbits(spec.linear, n)):
            oid = f"n={n}#{idx}@{tuple(round(c, 6) for c in orbit[0].coords)}"
            try:
                po = continue_periodic_orbit(spec, orbit[0], n, residual_tol=residual_tol)
            except Exception as exc:  # recorded, not fatal
                errors.append(f"{oid}: {exc}")
                continue
            logm = np.sort(np.log(np.abs(np.linalg.eigvals(po.multiplier))))
            gaps.append((oid, abs(float(logm[1]) / n - log_c)))
            u_gaps.append((oid, abs(float(logm[2]) / n - log_u)))
    if not gaps:
        raise DomainError("no periodic orbits could be continued")
    max_gap = max(g for _, g in gaps)
    return IntegrabilityReport(
        su_defects=(),
        c_periodic_gaps=tuple(gaps),
        max_c_gap=float(max_gap),
        su_verdict=None,
        gap_verdict="zero-gap" if max_gap < gap_threshold else "positive-gap",
        gap_threshold=gap_threshold,
        orbit_errors=tuple(errors),
        u_periodic_gaps=tuple(u_gaps),
    )


def su_defect_scan(
    spec: MapSpec,
    n_samples: int,
    a: float = 0.05,
    b: float = 0.05,
    params: SuDefectParams = SuDefectParams(),
    seed: int = 0,
) -> IntegrabilityReport:
    """su-defects at quasi-random base points with a linear control floor and
    a majority-vote verdict ('integrable' / 'obstructed' / 'indeterminate')."""
    control = MapSpec(spec.linear)
    ev_c = get_evaluator(control, tol=params.field_tol)
    ev = get_evaluator(spec, tol=params.field_tol)
    pts = halton(n_samples, spec.dim, seed=derive_seed(seed, "su-scan"))
    control_vals = [su_defect(control, p, a, b, params=params, evaluator=ev_c) for p in pts[: max(4, n_samples // 4)]]
    floor = max(max(control_vals), params.floor_min)
    rows = []
    votes = {"integrable": 0, "obstructed": 0, "abstain": 0}
    for p in pts:
        d = su_defect(spec, p, a, b, params=params, evaluator=ev)
        rows.append((tuple(p), a, b, float(d)))
        if d > 10.0 * floor:
            votes["obstructed"] += 1
        elif d < 3.0 * floor:
            votes["integrable"] += 1
        else:
            votes["abstain"] += 1
    decided = votes["integrable"] + votes["obstructed"]
    if decided == 0 or votes["integrable"] == votes["obstructed"]:
        verdict = "indeterminate"
    else:
        verdict = "integrable" if votes["integrable"] > votes["obstructed"] else "obstructed"
    return IntegrabilityReport(
        su_defects=tuple(rows),
        c_periodic_gaps=(),
        max_c_gap=float("nan"),
        su_verdict=verdict,
        gap_verdict=None,
        su_floor=float(floor),
    )


def dim_lower_bound_from_A(a_estimate: float, base_dim: int) -> float:
    """Graph-dimension lower bound base_dim + 1 - A from the fiber/base ratio."""
    if not 0.0 < a_estimate < 1.0:
        raise DomainError("A estimate must lie in (0,1)")
    return float(base_dim + 1.0 - a_estimate)
