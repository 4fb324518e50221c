"""Regularity and dimension measurements on graphs of sections.

A section is anything that maps base points to fiber values equipped with a
fiber metric: scalar function graphs, Weierstrass-type reference graphs with
known dimension, and the invariant bundles of a torus map viewed as sections
into the angle-metric Grassmannian.

The sup in oscillation measurements is approximated from below by
quasi-random probing (Halton with a seed-derived rotation); probe counts are
prefix-monotone, so increasing `probes` can only increase the estimate.
Box counting uses dyadic axis-aligned grids with a single fixed origin: the
grids nest exactly, which makes N(eps) monotone and reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError
from .splitting import Bundle, BundleEvaluator, LeafArc, get_evaluator
from .torus import line_angle_arr, wrap_coords
from .util import derive_seed, halton, loglog_fit

# ---------------------------------------------------------------------------
# Weierstrass-type reference graphs
# ---------------------------------------------------------------------------


def _phi_scalar(phi, t: float) -> float:
    if phi == "cos":
        return float(np.cos(2.0 * np.pi * t))
    if phi == "sin":
        return float(np.sin(2.0 * np.pi * t))
    if callable(phi):
        return float(phi(t))
    raise DomainError(f"unknown phi selector {phi!r}")


def weierstrass_eval(lam: float, b: int, phi, x: float, tol: float = 1e-12) -> float:
    """Truncated lacunary sum  sum_n lam^n phi(b^n x)  with error <= tol*|phi|_inf/(1-lam).

    The fractional parts of b^n x are reduced exactly: x is a dyadic rational
    p/q in float64, so b^n x mod 1 = (p b^n mod q)/q in integer arithmetic.
    Naive float reduction would destroy all significant digits once
    b^n > 2^53 / |x|, which happens well before lam^n reaches tol.
    """
    if not (isinstance(b, (int, np.integer)) and b >= 2):
        raise DomainError("b must be an integer >= 2")
    if not (1.0 / b < lam < 1.0):
        raise DomainError(f"lambda must lie in (1/b, 1), got {lam}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    n_terms = int(np.ceil(np.log(tol) / np.log(lam)))
    p, q = float(x).as_integer_ratio()
    m = p % q
    total = 0.0
    weight = 1.0
    for _ in range(n_terms):
        m = (m * b) % q
        weight *= lam
        total += weight * _phi_scalar(phi, m / q)
    return total


def weierstrass_lattice_samples(
    lam: float,
    b: int,
    n_samples: int,
    seed: int,
    phi="cos",
    tol: float = 1e-12,
    lattice_bits: int = 20,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Weierstrass samples on the dyadic lattice i/2^lattice_bits.

    Base points are stratified (one jittered point per lattice stratum, then
    truncated/padded to n_samples) so graph columns are covered evenly; the
    argument reduction stays exact because b^n * i mod 2^bits fits in int64.
    """
    if lattice_bits > 20:
        raise DomainError("lattice_bits > 20 would overflow int64 in the reduction")
    q = 1 << lattice_bits
    rng = np.random.default_rng(derive_seed(seed, "weier-lattice"))
    base = (np.arange(n_samples, dtype=np.int64) * q) // n_samples
    jitter_span = max(1, q // n_samples)
    idx = (base + rng.integers(0, jitter_span, size=n_samples, dtype=np.int64)) % q
    n_terms = int(np.ceil(np.log(tol) / np.log(lam)))
    w = np.zeros(n_samples)
    t = idx.copy()
    weight = 1.0
    for _ in range(n_terms):
        t = (t * b) % q
        weight *= lam
        arg = 2.0 * np.pi * (t / q)
        if phi == "cos":
            w += weight * np.cos(arg)
        elif phi == "sin":
            w += weight * np.sin(arg)
        else:
            raise DomainError("lattice sampling supports phi in {'cos','sin'}")
    return idx / q, w


def weierstrass_box_dimension_formula(lam: float, b: int) -> float:
    """Known box dimension 2 + log(lam)/log(b) of the trigonometric graphs."""
    return 2.0 + float(np.log(lam) / np.log(b))


def weierstrass_hoelder_exponent(lam: float, b: int) -> float:
    """Classical Holder exponent -log(lam)/log(b) of the trigonometric graphs."""
    return float(-np.log(lam) / np.log(b))


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


@dataclass
class SectionSampler:
    """base point -> fiber value, with a fiber metric.

    base_kind 'torus' probes Euclidean balls with mod-1 wrap, 'segment'
    clips probes to [0,1)^d without wrap, 'arc' uses arclength along a
    supplied leaf and 1-dimensional base coordinates.
    """

    name: str
    base_dim: int
    fiber_dim: int
    eval_fn: Callable
    fiber_metric: Callable
    fiber_kind: str = "scalar"  # 'scalar' | 'line'
    base_kind: str = "torus"  # 'torus' | 'segment' | 'arc'
    arc: LeafArc | None = None
    chart_frame: np.ndarray | None = None  # rows: in-plane axis 1, axis 2, chart center
    batch_eval: Callable | None = None  # (n, seed) -> (base (n, base_dim), values)

    def value(self, x):
        return self.eval_fn(x)


def _scalar_metric(a, b) -> float:
    return abs(float(a) - float(b))


def constant_section(value: float = 0.0, base_dim: int = 1) -> SectionSampler:
    return SectionSampler(
        name="constant",
        base_dim=base_dim,
        fiber_dim=1,
        eval_fn=lambda x: value,
        fiber_metric=_scalar_metric,
    )


def function_section(fn: Callable, name: str, base_dim: int = 1, base_kind: str = "torus",
                     batch_eval: Callable | None = None) -> SectionSampler:
    return SectionSampler(
        name=name,
        base_dim=base_dim,
        fiber_dim=1,
        eval_fn=fn,
        fiber_metric=_scalar_metric,
        base_kind=base_kind,
        batch_eval=batch_eval,
    )


def sine_section() -> SectionSampler:
    """Smooth control graph sin(2 pi x) over T^1, with a fast batch path."""

    def batch(n, seed):
        pts = halton(n, 1, seed=derive_seed(seed, "sine-batch"))[:, 0]
        return pts.reshape(-1, 1), np.sin(2.0 * np.pi * pts)

    return function_section(
        lambda x: float(np.sin(2.0 * np.pi * float(np.atleast_1d(x)[0]))),
        name="sine",
        batch_eval=batch,
    )


def weierstrass_section(lam: float, b: int, phi="cos", tol: float = 1e-12) -> SectionSampler:
    def batch(n, seed):
        x, w = weierstrass_lattice_samples(lam, b, n, seed, phi=phi, tol=tol)
        return x.reshape(-1, 1), w

    return function_section(
        lambda x: weierstrass_eval(lam, b, phi, float(np.atleast_1d(x)[0]), tol=tol),
        name=f"weierstrass(lam={lam},b={b},{phi})",
        batch_eval=batch,
    )


def _orthonormal_frame(center: np.ndarray) -> np.ndarray:
    """Rows (a1, a2, center): a deterministic orthonormal frame with given last axis."""
    c = center / np.linalg.norm(center)
    ref = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    a1 = ref - np.dot(ref, c) * c
    a1 = a1 / np.linalg.norm(a1)
    a2 = np.cross(c, a1)
    return np.stack([a1, a2, c])


def bundle_section(
    spec,
    which: Bundle | str,
    tol: float = 1e-10,
    cache_quantum: float | None = 1e-6,
    evaluator: BundleEvaluator | None = None,
) -> SectionSampler:
    """The invariant bundle of a map as a line-valued section over T^3.

    The chart frame is centered at the corresponding eigendirection of the
    linear part, where the section values of the perturbed maps concentrate.
    """
    from .dynamics import eigendirection

    which = Bundle(which) if not isinstance(which, Bundle) else which
    ev = evaluator if evaluator is not None else get_evaluator(spec, tol=tol, cache_quantum=cache_quantum)
    center = eigendirection(spec.linear, which.value if which.value in "scu" else "c")
    return SectionSampler(
        name=f"bundle-{which.value}",
        base_dim=spec.dim,
        fiber_dim=1,
        eval_fn=lambda xa: ev.vector(np.asarray(xa, dtype=float), which),
        fiber_metric=line_angle_arr,
        fiber_kind="line",
        chart_frame=_orthonormal_frame(center),
    )


def leaf_restricted_section(spec, which: Bundle | str, arc: LeafArc,
                            tol: float = 1e-10, evaluator: BundleEvaluator | None = None) -> SectionSampler:
    """A bundle section restricted to a leaf arc, parametrized by arclength."""
    from .dynamics import eigendirection

    which = Bundle(which) if not isinstance(which, Bundle) else which
    ev = evaluator if evaluator is not None else get_evaluator(spec, tol=tol)
    center = eigendirection(spec.linear, which.value if which.value in "scu" else "c")

    def ev_at(s):
        return ev.vector(wrap_coords(arc.lift_at(float(np.atleast_1d(s)[0]))), which)

    return SectionSampler(
        name=f"leaf-bundle-{which.value}",
        base_dim=1,
        fiber_dim=1,
        eval_fn=ev_at,
        fiber_metric=line_angle_arr,
        fiber_kind="line",
        base_kind="arc",
        arc=arc,
        chart_frame=_orthonormal_frame(center),
    )


# ---------------------------------------------------------------------------
# oscillation statistics
# ---------------------------------------------------------------------------


def _ball_offsets(dim: int, eps: float, probes: int, seed: int) -> np.ndarray:
    """`probes` quasi-random offsets filling the open eps-ball (prefix-monotone)."""
    out = []
    skip = 0
    rot = derive_seed(seed, "osc-probes")
    while len(out) < probes:
        chunk = halton(probes, dim, seed=rot, skip=skip)
        offs = eps * (2.0 * chunk - 1.0)
        keep = offs[np.linalg.norm(offs, axis=1) < eps]
        out.extend(keep)
        skip += probes
        if skip > 100 * probes:
            raise DomainError("ball rejection sampling stalled")
    return np.array(out[:probes])


def oscillation(sampler: SectionSampler, x, eps: float, probes: int = 256, seed: int = 0) -> float:
    """sup of fiber distance d(Phi(x), Phi(y)) over d(x,y) < eps, probed from below.

    Monotone non-decreasing in `probes` (prefix property of the probe set).
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if sampler.base_kind == "arc":
        s0 = float(np.atleast_1d(x)[0])
        offs = _ball_offsets(1, eps, probes, seed)[:, 0]
        v0 = sampler.value(s0)
        lo, hi = sampler.arc.arclengths[0], sampler.arc.arclengths[-1]
        best = 0.0
        for o in offs:
            s = s0 + o
            if s < lo or s > hi:
                continue
            best = max(best, sampler.fiber_metric(v0, sampler.value(s)))
        return best
    xa = np.asarray(np.atleast_1d(x), dtype=float)
    offs = _ball_offsets(sampler.base_dim, eps, probes, seed)
    v0 = sampler.value(xa if sampler.base_dim > 1 else xa[:1])
    best = 0.0
    for o in offs:
        y = xa + o
        if sampler.base_kind == "torus":
            y = np.mod(y, 1.0)
        elif np.any(y < 0.0) or np.any(y >= 1.0):
            continue
        best = max(best, sampler.fiber_metric(v0, sampler.value(y)))
    return best


def h_alpha_eps(sampler: SectionSampler, x, alpha: float, eps: float,
                probes: int = 256, seed: int = 0) -> float:
    """Oscillation normalized by eps^alpha; bounded below on fractal graphs."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0,1)")
    return oscillation(sampler, x, eps, probes=probes, seed=seed) / eps**alpha


def _base_samples(sampler: SectionSampler, n: int, seed: int) -> list:
    if sampler.base_kind == "arc":
        lo, hi = sampler.arc.arclengths[0], sampler.arc.arclengths[-1]
        u = halton(n, 1, seed=derive_seed(seed, "base"))[:, 0]
        return [lo + (hi - lo) * v for v in u]
    pts = halton(n, sampler.base_dim, seed=derive_seed(seed, "base"))
    return [p for p in pts]


def criterion_table(sampler: SectionSampler, alpha: float, scales, base_samples: int,
                    probes: int = 256, seed: int = 0) -> np.ndarray:
    """Matrix of h_alpha_eps values: rows = base samples, columns = scales."""
    xs = _base_samples(sampler, base_samples, seed)
    out = np.empty((len(xs), len(scales)))
    for i, x in enumerate(xs):
        for j, eps in enumerate(scales):
            out[i, j] = h_alpha_eps(sampler, x, alpha, eps, probes=probes, seed=seed + j)
    return out


def fractal_criterion(sampler: SectionSampler, alpha: float, scales, base_samples: int,
                      probes: int = 256, seed: int = 0) -> float:
    """min over sampled base points and scales of h_alpha_eps.

    A value bounded away from the noise floor certifies (numerically) the
    graph-dimension lower bound base_dim + 1 - alpha.
    """
    return float(np.min(criterion_table(sampler, alpha, scales, base_samples, probes, seed)))


@dataclass(frozen=True)
class HoelderReport:
    exponent: float
    constant: float
    fit_r2: float
    per_scale_sup_osc: tuple[float, ...]
    scales: tuple[float, ...]
    raw_slope: float
    smooth: bool = False


def hoelder_fit(sampler: SectionSampler, scales, base_samples: int,
                probes: int = 256, seed: int = 0, smooth_threshold: float = 1e-9) -> HoelderReport:
    """Exponent fit from per-scale sup-oscillations.

    S(eps) = max over base samples of the oscillation; the exponent is the
    log-log least-squares slope, clamped into (0, 1].  Per-sample
    oscillations are accumulated from fine to coarse scales (a probe inside
    a smaller ball is valid for every larger ball), which keeps the reported
    S(eps) non-decreasing in eps.  Oscillations below smooth_threshold are
    indistinguishable from evaluator roundoff and count as zero; a section
    below it at every scale reports exponent 1 with the smooth flag.
    """
    scales = sorted(float(s) for s in scales)  # increasing
    if len(scales) < 4:
        raise DomainError("need at least 4 scales for a Holder fit")
    xs = _base_samples(sampler, base_samples, seed)
    osc = np.empty((len(xs), len(scales)))
    for i, x in enumerate(xs):
        for j, eps in enumerate(scales):
            osc[i, j] = oscillation(sampler, x, eps, probes=probes, seed=seed + j)
    osc = np.maximum.accumulate(osc, axis=1)
    sup = osc.max(axis=0)
    keep = sup > smooth_threshold
    if not np.any(keep):
        return HoelderReport(1.0, 0.0, 1.0, tuple(float(v) for v in sup), tuple(scales),
                             raw_slope=1.0, smooth=True)
    slope, intercept, r2 = loglog_fit(np.array(scales)[keep], sup[keep])
    exponent = float(min(max(slope, 1e-9), 1.0))
    return HoelderReport(
        exponent=exponent,
        constant=float(np.exp(intercept)),
        fit_r2=r2,
        per_scale_sup_osc=tuple(float(v) for v in sup),
        scales=tuple(scales),
        raw_slope=float(slope),
    )


# ---------------------------------------------------------------------------
# point clouds and box dimension
# ---------------------------------------------------------------------------


@dataclass
class PointCloud:
    """Embedded graph samples: base coordinates (periodic) + fiber chart coordinates."""

    points: np.ndarray  # (n, D)
    periodic_mask: tuple[bool, ...]
    base_dim: int
    chart_ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def save(self, path_base: str) -> None:
        """Write <base>.bin (little-endian float64 rows) and <base>.json header."""
        pts = np.ascontiguousarray(self.points, dtype="<f8")
        with open(path_base + ".bin", "wb") as fh:
            fh.write(pts.tobytes())
        header = {
            "dimension": self.dim,
            "rows": int(self.points.shape[0]),
            "periodic_mask": list(self.periodic_mask),
            "base_dim": self.base_dim,
            "charts": None if self.chart_ids is None else sorted(set(int(c) for c in self.chart_ids)),
            "meta": self.meta,
        }
        with open(path_base + ".json", "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)


#: band (in |dot with chart center|) inside which a line value is duplicated
#: into the secondary chart
CHART_DUP_BAND = 0.05


def _line_chart_coords(v: np.ndarray, frame: np.ndarray) -> list[tuple[int, float, float]]:
    """Chart assignments of a line value: (chart id, coord1, coord2).

    Chart 0 is the hemisphere around frame[2], chart 1 around frame[0];
    values within CHART_DUP_BAND of the boundary go into both charts.  The
    arcsin coordinates keep the chart metric within a few percent of the
    angle metric near the chart center.
    """
    a1, a2, c = frame
    out = []
    d0 = abs(float(np.dot(v, c)))
    d1 = abs(float(np.dot(v, a1)))
    if d0 >= d1 - CHART_DUP_BAND:
        w = v if np.dot(v, c) >= 0 else -v
        out.append((0, float(np.arcsin(np.clip(np.dot(w, a1), -1, 1))),
                    float(np.arcsin(np.clip(np.dot(w, a2), -1, 1)))))
    if d1 >= d0 - CHART_DUP_BAND:
        w = v if np.dot(v, a1) >= 0 else -v
        out.append((1, float(np.arcsin(np.clip(np.dot(w, a2), -1, 1))),
                    float(np.arcsin(np.clip(np.dot(w, c), -1, 1)))))
    return out


def graph_cloud(sampler: SectionSampler, base_samples: int, seed: int = 0) -> PointCloud:
    """Sample the graph of a section into a point cloud.

    Scalar fibers embed as one extra coordinate; line fibers embed through
    two fixed orthogonal charts with hemisphere sign resolution and boundary
    duplication (chart ids recorded in the cloud).
    """
    if sampler.batch_eval is not None:
        base, vals = sampler.batch_eval(base_samples, seed)
        pts = np.column_stack([base, np.asarray(vals, dtype=float)])
        mask = tuple([sampler.base_kind == "torus"] * sampler.base_dim + [False])
        return PointCloud(pts, mask, sampler.base_dim, meta={"sampler": sampler.name})
    xs = _base_samples(sampler, base_samples, seed)
    if sampler.fiber_kind == "scalar":
        rows = np.empty((len(xs), sampler.base_dim + 1))
        for i, x in enumerate(xs):
            rows[i, : sampler.base_dim] = np.atleast_1d(x)
            rows[i, -1] = float(sampler.value(x))
        mask = tuple([sampler.base_kind == "torus"] * sampler.base_dim + [False])
        return PointCloud(rows, mask, sampler.base_dim, meta={"sampler": sampler.name})
    if sampler.chart_frame is None:
        raise DomainError("line-valued sampler needs a chart frame")
    rows = []
    charts = []
    for x in xs:
        v = sampler.value(x)
        for cid, c1, c2 in _line_chart_coords(v, sampler.chart_frame):
            rows.append([*np.atleast_1d(x), c1, c2])
            charts.append(cid)
    pts = np.asarray(rows, dtype=float)
    mask = tuple([sampler.base_kind == "torus"] * sampler.base_dim + [False, False])
    return PointCloud(
        pts,
        mask,
        sampler.base_dim,
        chart_ids=np.asarray(charts, dtype=np.int64),
        meta={"sampler": sampler.name, "chart_frame": sampler.chart_frame.tolist()},
    )


@dataclass(frozen=True)
class ScaleSweep:
    """Occupied-box (or packing) counts over decreasing dyadic scales."""

    scales: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        for a, b in zip(self.scales[:-1], self.scales[1:]):
            if not b < a:
                raise DomainError("scales must be strictly decreasing")
        for a, b in zip(self.counts[:-1], self.counts[1:]):
            if b < a:
                raise DomainError("box counts must be non-decreasing as scales shrink")


def dyadic_scales(j_min: int, j_max: int) -> list[float]:
    """Scales 2^-j for j from j_min to j_max inclusive (decreasing)."""
    return [2.0**-j for j in range(j_min, j_max + 1)]


def _occupied_boxes(cloud: PointCloud, eps: float) -> int:
    pts = cloud.points
    n, dim = pts.shape
    codes = np.zeros(n, dtype=np.int64)
    stride = 1
    for d in range(dim):
        idx = np.floor(pts[:, d] / eps).astype(np.int64)
        if cloud.periodic_mask[d]:
            m = int(round(1.0 / eps))
            idx = idx % m
            span = m
        else:
            idx = idx - idx.min()
            span = int(idx.max()) + 1
        codes = codes * span + idx
        stride *= span
        if stride > 2**62:
            raise DomainError("box index space overflows int64; use coarser scales")
    if cloud.chart_ids is not None:
        total = 0
        for cid in np.unique(cloud.chart_ids):
            total += len(np.unique(codes[cloud.chart_ids == cid]))
        return total
    return len(np.unique(codes))


@dataclass(frozen=True)
class DimensionReport:
    lower_slope: float
    upper_slope: float
    window_slopes: tuple[float, ...]
    fit_slope: float
    fit_r2: float
    sweep: ScaleSweep
    stable_indices: tuple[int, ...]
    warnings: tuple[str, ...] = ()


def box_dimension(
    cloud: PointCloud,
    scales,
    min_count: int = 50,
    expected_dim: int | None = None,
    occupancy_guard: int = 10,
    stable_window: tuple[int, int] | None = None,
) -> DimensionReport:
    """Box-counting dimension estimate of a point cloud on nested dyadic grids.

    window_slopes are the consecutive-scale slopes; lower/upper_slope take
    min/max over the stable window and fit_slope is the least-squares slope
    there.  The default stable window keeps scales whose occupancy stays
    below len(points)/occupancy_guard: beyond that the counts are sample-
    starved and would bias the dimension downward.  A density warning is
    recorded whenever the base sampling rule min_count*(1/eps)^base_dim is
    violated on a stable scale.
    """
    scales = sorted((float(s) for s in scales), reverse=True)
    if len(scales) < 4:
        raise DomainError("need at least 4 scales")
    if scales[0] > 0.5 or scales[-1] <= 0.0:
        raise DomainError("scales must lie in (0, 0.5]")
    for s in scales:
        j = np.log2(1.0 / s)
        if abs(j - round(j)) > 1e-9:
            raise DomainError(f"scale {s} is not dyadic")
    counts = [_occupied_boxes(cloud, s) for s in scales]
    sweep = ScaleSweep(tuple(scales), tuple(counts))
    log_n = np.log(counts)
    log_inv = np.array([-np.log(s) for s in scales])
    window_slopes = tuple(
        float((log_n[i + 1] - log_n[i]) / (log_inv[i + 1] - log_inv[i]))
        for i in range(len(scales) - 1)
    )
    warnings = []
    n_pts = cloud.points.shape[0]
    if stable_window is not None:
        stable = list(range(stable_window[0], stable_window[1] + 1))
    else:
        stable = [i for i, c in enumerate(counts) if c <= n_pts / occupancy_guard]
        if len(stable) < 4:
            stable = list(range(min(4, len(scales))))
            warnings.append("occupancy guard left fewer than 4 scales; using the coarsest 4")
    exp_dim = expected_dim if expected_dim is not None else cloud.base_dim
    for i in stable:
        if n_pts < min_count * (1.0 / scales[i]) ** exp_dim:
            warnings.append(
                f"density rule violated at scale {scales[i]:.3g}: "
                f"{n_pts} < {min_count}*(1/eps)^{exp_dim}"
            )
    pair_idx = [i for i in stable if i + 1 in stable]
    if not pair_idx:
        pair_idx = list(range(len(window_slopes)))
    sel = [window_slopes[i] for i in pair_idx]
    fit_slope, _, r2 = loglog_fit(
        [1.0 / scales[i] for i in stable], [counts[i] for i in stable]
    )
    return DimensionReport(
        lower_slope=float(min(sel)),
        upper_slope=float(max(sel)),
        window_slopes=window_slopes,
        fit_slope=fit_slope,
        fit_r2=r2,
        sweep=sweep,
        stable_indices=tuple(stable),
        warnings=tuple(warnings),
    )


def packing_count(cloud: PointCloud, eps: float) -> int:
    """Greedy maximal number of pairwise-disjoint eps-balls centered at cloud points.

    Deterministic given the input order; grid-bucketed so only neighboring
    buckets are scanned.  Periodic coordinates use the wrapped distance.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    pts = cloud.points
    n, dim = pts.shape
    cell = 2.0 * eps
    periodic = cloud.periodic_mask
    spans = []
    for d in range(dim):
        spans.append(max(1, int(np.ceil(1.0 / cell))) if periodic[d] else 0)
    buckets: dict = {}
    accepted: list[np.ndarray] = []

    def key_of(p):
        key = []
        for d in range(dim):
            i = int(np.floor(p[d] / cell))
            key.append(i % spans[d] if periodic[d] else i)
        return tuple(key)

    def dist(p, q):
        tot = 0.0
        for d in range(dim):
            delta = abs(p[d] - q[d])
            if periodic[d]:
                delta = delta % 1.0
                delta = min(delta, 1.0 - delta)
            tot += delta * delta
        return np.sqrt(tot)

    from itertools import product as iproduct

    count = 0
    for i in range(n):
        p = pts[i]
        k = key_of(p)
        ok = True
        for off in iproduct((-1, 0, 1), repeat=dim):
            kk = []
            for d in range(dim):
                v = k[d] + off[d]
                if periodic[d]:
                    v %= spans[d]
                kk.append(v)
            for j in buckets.get(tuple(kk), ()):
                if dist(p, accepted[j]) < 2.0 * eps:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            buckets.setdefault(k, []).append(len(accepted))
            accepted.append(p)
            count += 1
    return count
