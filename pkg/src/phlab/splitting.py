"""Invariant bundles of partially hyperbolic torus maps.

Every bundle value is obtained by power iteration of the Jacobian cocycle:

  * E^u   : products of Df along the backward orbit (dominant direction),
  * E^s   : products of Df^-1 along the forward orbit,
  * E^cs  : normals under the transpose cocycle along the forward orbit,
  * E^cu  : normals under the inverse-transpose cocycle along the backward orbit,
  * E^c   : intersection of the cs- and cu-planes.

Bundles are recomputed on demand -- there is no precomputed interpolation
grid, so fractal-scale measurements never inherit mesh smoothing.  A
memoizing cache keyed by quantized base point (quantum 1e-6 by default,
configurable, disable with cache_quantum=None) bounds the cost of repeated
evaluations; values are always computed at the snapped point so results are
deterministic regardless of call order or scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import (
    MapSpec,
    apply_arr,
    classify_linear,
    eigen_frame,
    inverse_apply_arr,
    jacobian,
    unit_eigenvector,
)
from .errors import DomainError, NonConvergenceError
from .torus import (
    LineDirection,
    PlaneValue,
    TorusPoint,
    line_angle_arr,
    planes_intersect,
    wrap,
    wrap_coords,
)


class Bundle(Enum):
    S = "s"
    C = "c"
    U = "u"
    CS = "cs"
    CU = "cu"


@dataclass(frozen=True)
class SplittingResult:
    """A computed bundle value with its convergence diagnostics."""

    value: LineDirection | PlaneValue
    iterations_used: int
    convergence_gap: float

    @property
    def vector(self) -> np.ndarray:
        if isinstance(self.value, LineDirection):
            return self.value.components
        return self.value.normal.components


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _align(v: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return -v if float(np.dot(v, ref)) < 0.0 else v


class BundleEvaluator:
    """On-demand evaluator for the invariant bundles of one map.

    Parameters
    ----------
    spec : MapSpec
        The map; its linear part must classify as partially hyperbolic
        Anosov (Anosov suffices for d=2, where only S and U exist).
    tol : float
        Angle gap between successive power iterates at which the iteration
        stops.
    cache_quantum : float or None
        Base points are snapped to this grid before evaluation and the
        result cached per snapped point.  None disables snapping (exact
        float keys are still cached).
    inverse_tol : float
        Tolerance used for backward orbit steps; defaults to tol/100 so the
        inversion error stays below the bundle error budget.
    """

    def __init__(
        self,
        spec: MapSpec,
        tol: float = 1e-12,
        cache_quantum: float | None = 1e-6,
        max_iter: int = 400,
        inverse_tol: float | None = None,
        max_cache: int = 400_000,
    ):
        self.spec = spec
        self.tol = float(tol)
        self.cache_quantum = cache_quantum
        self.max_iter = int(max_iter)
        # tol/100 keeps inversion error below the bundle budget; the floor
        # respects the float64 resolution of the fixed-point iteration
        self.inverse_tol = max(tol / 100.0, 1e-13) if inverse_tol is None else float(inverse_tol)
        self.max_cache = max_cache
        self._cache: dict = {}
        d = spec.dim
        cls = classify_linear(spec.linear)
        if d == 3:
            if not cls.is_partially_hyperbolic_anosov:
                raise DomainError("linear part is not partially hyperbolic Anosov")
            fr = eigen_frame(spec.linear)
            self._seeds = {
                Bundle.U: fr.e_u,
                Bundle.S: fr.e_s,
                Bundle.CS: fr.left_u,  # normal to span(e_s, e_c)
                Bundle.CU: fr.left_s,  # normal to span(e_c, e_u)
            }
        elif d == 2:
            if not cls.is_anosov:
                raise DomainError("linear part is not Anosov")
            arr = spec.matrix()
            lam_s, lam_u = cls.eigenvalues
            self._seeds = {
                Bundle.U: unit_eigenvector(arr, lam_u),
                Bundle.S: unit_eigenvector(arr, lam_s),
            }
        else:
            raise DomainError("bundle evaluation supports d in {2,3}")
        self.classification = cls

    # -- orbit step streams -------------------------------------------------

    def _forward_steps(self, xa):
        x = xa
        while True:
            yield jacobian(self.spec, x)
            x = apply_arr(self.spec, x)

    def _backward_steps(self, xa):
        x = xa
        while True:
            x = inverse_apply_arr(self.spec, x, tol=self.inverse_tol)
            yield jacobian(self.spec, x)

    def _steps(self, xa, bundle: Bundle):
        if bundle is Bundle.U:
            return ((a, False, False) for a in self._backward_steps(xa))
        if bundle is Bundle.S:
            return ((a, True, False) for a in self._forward_steps(xa))
        if bundle is Bundle.CS:
            return ((a, False, True) for a in self._forward_steps(xa))
        if bundle is Bundle.CU:
            return ((a, True, True) for a in self._backward_steps(xa))
        raise DomainError(f"no cocycle stream for {bundle}")

    # -- core power iteration ------------------------------------------------

    def _iterate(self, xa: np.ndarray, bundle: Bundle) -> tuple[np.ndarray, int, float]:
        seed = self._seeds[bundle]
        prod = np.eye(self.spec.dim)
        v_prev = seed
        best_gap = np.inf
        stall = 0
        reseeds = 0
        rng = None
        gap = np.inf
        stream = self._steps(xa, bundle)
        for n in range(1, self.max_iter + 1):
            a, inv, transpose = next(stream)
            if transpose:
                a = a.T
            step = np.linalg.inv(a) if inv else a
            prod = prod @ step
            prod = prod / np.max(np.abs(prod))
            v = _normalize(prod @ seed)
            v = _align(v, v_prev)
            gap = line_angle_arr(v, v_prev)
            v_prev = v
            if gap < self.tol:
                return v, n, gap
            if gap < best_gap * 0.999:
                best_gap = gap
                stall = 0
            else:
                stall += 1
                if stall >= 20:
                    if reseeds >= 3:
                        break
                    if rng is None:
                        rng = np.random.default_rng(0xC0C1C2)
                    seed = _normalize(rng.normal(size=self.spec.dim))
                    reseeds += 1
                    stall = 0
                    best_gap = np.inf
        raise NonConvergenceError(
            f"power iteration for {bundle.value} bundle did not reach gap {self.tol:.1e} "
            f"in {self.max_iter} iterations (last gap {gap:.3e}); domination may fail "
            f"or the perturbation is too strong",
            gap=float(gap),
        )

    # -- public array-level API ----------------------------------------------

    def _snap(self, xa: np.ndarray) -> tuple[np.ndarray, tuple]:
        q = self.cache_quantum
        if q:
            snapped = wrap_coords(np.round(xa / q) * q)
            return snapped, tuple(snapped)
        return xa, tuple(xa)

    def _cached(self, xa: np.ndarray, bundle: Bundle) -> tuple[np.ndarray, int, float]:
        xa = wrap_coords(np.asarray(xa, dtype=float))
        snapped, key_pt = self._snap(xa)
        key = (bundle, key_pt)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if bundle is Bundle.C:
            ncs, i1, g1 = self._cached(snapped, Bundle.CS)
            ncu, i2, g2 = self._cached(snapped, Bundle.CU)
            inter = planes_intersect(PlaneValue(LineDirection(ncs)), PlaneValue(LineDirection(ncu)))
            res = (inter.components, i1 + i2, max(g1, g2))
        else:
            res = self._iterate(snapped, bundle)
        if len(self._cache) >= self.max_cache:
            self._cache.clear()
        self._cache[key] = res
        return res

    def vector(self, xa, bundle: Bundle) -> np.ndarray:
        """Unit vector spanning the bundle (for S/C/U) or the plane normal (CS/CU)."""
        return self._cached(np.asarray(xa, dtype=float), bundle)[0]

    def result(self, x, bundle: Bundle) -> SplittingResult:
        xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(x)
        vec, iters, gap = self._cached(xa, bundle)
        if bundle in (Bundle.CS, Bundle.CU):
            value: LineDirection | PlaneValue = PlaneValue(LineDirection(vec))
        else:
            value = LineDirection(vec)
        return SplittingResult(value, iters, gap)


_EVALUATORS: dict = {}


def get_evaluator(spec: MapSpec, tol: float = 1e-12, cache_quantum: float | None = 1e-6) -> BundleEvaluator:
    key = (spec.key(), tol, cache_quantum)
    ev = _EVALUATORS.get(key)
    if ev is None:
        ev = BundleEvaluator(spec, tol=tol, cache_quantum=cache_quantum)
        _EVALUATORS[key] = ev
    return ev


def invariant_direction(spec: MapSpec, x, which: Bundle | str, tol: float = 1e-12) -> SplittingResult:
    """E^s or E^u at x, to angle tolerance tol."""
    which = Bundle(which) if not isinstance(which, Bundle) else which
    if which not in (Bundle.S, Bundle.U):
        raise DomainError("invariant_direction computes S or U only")
    return get_evaluator(spec, tol).result(x, which)


def invariant_plane(spec: MapSpec, x, which: Bundle | str, tol: float = 1e-12) -> SplittingResult:
    """E^cs or E^cu at x (d=3), represented by the plane normal."""
    which = Bundle(which) if not isinstance(which, Bundle) else which
    if which not in (Bundle.CS, Bundle.CU):
        raise DomainError("invariant_plane computes CS or CU only")
    if spec.dim != 3:
        raise DomainError("plane fields require d = 3")
    return get_evaluator(spec, tol).result(x, which)


def center_direction(
    spec: MapSpec,
    x,
    tol: float = 1e-12,
    invariance_check: float | None = None,
) -> SplittingResult:
    """E^c at x as the intersection of the cs- and cu-planes.

    With invariance_check set, verifies angle(Df(x) E^c(x), E^c(f x)) below
    the given threshold and raises NonConvergenceError otherwise.
    """
    if spec.dim != 3:
        raise DomainError("center direction requires d = 3")
    ev = get_evaluator(spec, tol)
    res = ev.result(x, Bundle.C)
    if invariance_check is not None:
        xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(x)
        pushed = jacobian(spec, xa) @ res.vector
        there = ev.vector(apply_arr(spec, xa), Bundle.C)
        ang = line_angle_arr(_normalize(pushed), there)
        if ang > invariance_check:
            raise NonConvergenceError(
                f"center invariance defect {ang:.3e} above check threshold", gap=ang
            )
    return res


# ---------------------------------------------------------------------------
# frames along orbits (two-pass propagation; one 3x3 op per point and bundle)
# ---------------------------------------------------------------------------


@dataclass
class OrbitFrames:
    """Unit bundle vectors at each point of an orbit segment.

    points[i+1] = f(points[i]); arrays are indexed the same way.  The s and
    cs entries are seeded at the future end and propagated backward, u and
    cu at the past end and propagated forward -- each direction of
    propagation is the self-correcting one, so the frames carry evaluator
    accuracy along the whole segment at O(1) cost per point.
    """

    points: np.ndarray  # (n+1, d) wrapped
    u: np.ndarray
    s: np.ndarray
    c: np.ndarray | None
    cs_normal: np.ndarray | None
    cu_normal: np.ndarray | None


def forward_orbit(spec: MapSpec, xa: np.ndarray, n: int) -> np.ndarray:
    pts = np.empty((n + 1, spec.dim))
    pts[0] = wrap_coords(xa)
    for i in range(n):
        pts[i + 1] = apply_arr(spec, pts[i])
    return pts


def backward_orbit(spec: MapSpec, xa: np.ndarray, n: int, tol: float = 1e-13) -> np.ndarray:
    """Orbit x, f^-1 x, ..., f^-n x (index i holds f^-i x)."""
    pts = np.empty((n + 1, spec.dim))
    pts[0] = wrap_coords(xa)
    for i in range(n):
        pts[i + 1] = inverse_apply_arr(spec, pts[i], tol=tol)
    return pts


def orbit_frames(spec: MapSpec, points: np.ndarray, evaluator: BundleEvaluator | None = None) -> OrbitFrames:
    """Bundle frames along an orbit given in forward order (points[i+1] = f(points[i]))."""
    ev = evaluator if evaluator is not None else get_evaluator(spec)
    n = len(points) - 1
    d = spec.dim
    jacs = [jacobian(spec, points[i]) for i in range(n)]
    u = np.empty((n + 1, d))
    s = np.empty((n + 1, d))
    u[0] = ev.vector(points[0], Bundle.U)
    for i in range(n):
        u[i + 1] = _align(_normalize(jacs[i] @ u[i]), jacs[i] @ u[i])
    s[n] = ev.vector(points[n], Bundle.S)
    for i in range(n - 1, -1, -1):
        s[i] = _normalize(np.linalg.solve(jacs[i], s[i + 1]))
    if d != 3:
        return OrbitFrames(points, u, s, None, None, None)
    ncs = np.empty((n + 1, d))
    ncu = np.empty((n + 1, d))
    ncs[n] = ev.vector(points[n], Bundle.CS)
    for i in range(n - 1, -1, -1):
        ncs[i] = _normalize(jacs[i].T @ ncs[i + 1])
    ncu[0] = ev.vector(points[0], Bundle.CU)
    for i in range(n):
        ncu[i + 1] = _normalize(np.linalg.solve(jacs[i].T, ncu[i]))
    c = np.empty((n + 1, d))
    for i in range(n + 1):
        c[i] = _normalize(np.cross(ncs[i], ncu[i]))
    return OrbitFrames(points, u, s, c, ncs, ncu)


# ---------------------------------------------------------------------------
# leaf tracing
# ---------------------------------------------------------------------------


@dataclass
class LeafArc:
    """Arclength-parametrized polyline of a 1-dimensional leaf through x.

    lifts live in R^d (no wrapping inside the arc); points are the wrapped
    images.  arclengths run from -halfwidth to +halfwidth, strictly
    increasing, with arclengths[center_index] = 0 at the base point.
    """

    points: list[TorusPoint]
    lifts: np.ndarray
    arclengths: np.ndarray
    directions: np.ndarray
    bundle: Bundle
    center_index: int

    def lift_at(self, s: float) -> np.ndarray:
        """Linear interpolation of the lifted polyline at signed arclength s."""
        t = np.clip(s, self.arclengths[0], self.arclengths[-1])
        i = int(np.searchsorted(self.arclengths, t))
        if i == 0:
            return self.lifts[0]
        a, b = self.arclengths[i - 1], self.arclengths[i]
        w = (t - a) / (b - a)
        return (1 - w) * self.lifts[i - 1] + w * self.lifts[i]

    def point_at(self, s: float) -> TorusPoint:
        return wrap(self.lift_at(s))

    def sample_nodes(self, k: int) -> list[tuple[float, np.ndarray]]:
        """k (arclength, lift) pairs at polyline nodes, evenly spread over the arc."""
        idx = np.unique(np.round(np.linspace(0, len(self.arclengths) - 1, k)).astype(int))
        return [(float(self.arclengths[i]), self.lifts[i]) for i in idx]


def _leaf_field(ev: BundleEvaluator, bundle: Bundle):
    if bundle is Bundle.C:
        return lambda za: ev.vector(za, Bundle.C)
    if bundle in (Bundle.S, Bundle.U):
        return lambda za: ev.vector(za, bundle)
    raise DomainError("leaves are traced along 1-dimensional bundles (S, C, U)")


def trace_leaf(
    spec: MapSpec,
    x,
    bundle: Bundle | str,
    halfwidth: float,
    step: float,
    field_tol: float = 1e-10,
    evaluator: BundleEvaluator | None = None,
) -> LeafArc:
    """Trace the S/C/U leaf through x by RK4 integration of the unit direction field.

    The sign of the field is chosen at every stage to stay within 90 degrees
    of the incoming direction, which keeps the tangent continuous along the
    polyline.  step must not exceed halfwidth/16.
    """
    bundle = Bundle(bundle) if not isinstance(bundle, Bundle) else bundle
    if step > halfwidth / 16.0 + 1e-15:
        raise DomainError("step must be <= halfwidth/16")
    ev = evaluator if evaluator is not None else get_evaluator(spec, tol=field_tol)
    field = _leaf_field(ev, bundle)
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(x)

    def rk4_side(sign: float):
        pts = [xa.astype(float)]
        dirs = [_align(field(xa), sign * field(xa))]
        n_steps = int(np.ceil(halfwidth / step - 1e-9))
        h = halfwidth / n_steps
        z = xa.astype(float)
        d0 = dirs[0]
        for _ in range(n_steps):
            k1 = _align(field(wrap_coords(z)), d0)
            k2 = _align(field(wrap_coords(z + 0.5 * h * k1)), k1)
            k3 = _align(field(wrap_coords(z + 0.5 * h * k2)), k1)
            k4 = _align(field(wrap_coords(z + h * k3)), k1)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            d0 = _align(field(wrap_coords(z)), k1)
            pts.append(z.copy())
            dirs.append(d0)
        return pts, dirs, h, n_steps

    fw_pts, fw_dirs, h, n_steps = rk4_side(+1.0)
    bw_pts, bw_dirs, _, _ = rk4_side(-1.0)
    lifts = np.array(bw_pts[::-1] + fw_pts[1:])
    dirs = np.array([-d for d in bw_dirs[::-1]] + fw_dirs[1:])
    arcs = np.arange(-n_steps, n_steps + 1) * h
    points = [wrap(z) for z in lifts]
    return LeafArc(points, lifts, arcs, dirs, bundle, center_index=n_steps)


# ---------------------------------------------------------------------------
# local center-stable patch
# ---------------------------------------------------------------------------


@dataclass
class CsPatch:
    """A (2*grid+1)^2 coordinate patch of the local cs-leaf around y.

    grid_points[i][j] sits at s-arclength (i-grid)*spacing and c-arclength
    (j-grid)*spacing along the integrated coordinate polylines.
    """

    base: TorusPoint
    lifts: np.ndarray  # (2g+1, 2g+1, d)
    spacing: float
    grid: int

    @property
    def grid_points(self) -> list[list[TorusPoint]]:
        g = 2 * self.grid + 1
        return [[wrap(self.lifts[i, j]) for j in range(g)] for i in range(g)]


def _integrate_line(ev: BundleEvaluator, field, z0: np.ndarray, length: float, step: float,
                    project_normal=None):
    """RK4 polyline along a unit field from z0, one node per step, both signs handled by caller."""
    n_steps = max(1, int(np.ceil(abs(length) / step - 1e-9)))
    h = length / n_steps
    z = z0.astype(float)
    d0 = field(wrap_coords(z))
    out = [z.copy()]
    for _ in range(n_steps):
        k1 = _align(field(wrap_coords(z)), d0)
        k2 = _align(field(wrap_coords(z + 0.5 * h * k1)), k1)
        k3 = _align(field(wrap_coords(z + 0.5 * h * k2)), k1)
        k4 = _align(field(wrap_coords(z + h * k3)), k1)
        delta = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if project_normal is not None:
            nrm = project_normal(wrap_coords(z))
            delta = delta - np.dot(delta, nrm) * nrm
        z = z + delta
        d0 = _align(field(wrap_coords(z)), np.sign(h) * k1 if h != 0 else k1)
        out.append(z.copy())
    return out


def cs_patch(
    spec: MapSpec,
    y,
    radius: float,
    grid: int,
    evaluator: BundleEvaluator | None = None,
    field_tol: float = 1e-10,
) -> CsPatch:
    """Integrate the cs-plane field into a local coordinate patch around y.

    First traces the E^s spine through y, then an E^c line from every spine
    node; every RK4 increment is projected back onto the current cs-plane to
    suppress transverse drift.
    """
    if spec.dim != 3:
        raise DomainError("cs patches require d = 3")
    ev = evaluator if evaluator is not None else get_evaluator(spec, tol=field_tol)
    ya = y.coords if isinstance(y, TorusPoint) else wrap_coords(y)
    h = radius / grid
    s_field = lambda za: ev.vector(za, Bundle.S)
    c_field = lambda za: ev.vector(za, Bundle.C)
    nrm = lambda za: ev.vector(za, Bundle.CS)

    plus = _integrate_line(ev, s_field, ya, radius, h, project_normal=nrm)
    minus = _integrate_line(ev, s_field, ya, -radius, h, project_normal=nrm)
    spine = minus[::-1][:-1] + plus  # 2g+1 nodes, center at index g
    g = grid
    lifts = np.empty((2 * g + 1, 2 * g + 1, 3))
    for i, node in enumerate(spine):
        cplus = _integrate_line(ev, c_field, node, radius, h, project_normal=nrm)
        cminus = _integrate_line(ev, c_field, node, -radius, h, project_normal=nrm)
        col = cminus[::-1][:-1] + cplus
        for j, z in enumerate(col):
            lifts[i, j] = z
    return CsPatch(wrap(ya), lifts, h, g)
