"""Scalar exponents of the splitting: pinching coefficients, Birkhoff
critical exponents along orbits, induced fiber-vs-base rate ratios, and the
periodic-orbit estimates that Livsic-type arguments tie together.

All rates chain single-step Jacobians applied to unit bundle vectors along
the orbit; Df^k is never formed as a float matrix power.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    LinearMapSpec,
    MapSpec,
    PeriodicOrbit,
    classify_linear,
    jacobian,
    linear_periodic_orbits,
)
from .errors import DomainError
from .splitting import (
    Bundle,
    BundleEvaluator,
    OrbitFrames,
    backward_orbit,
    forward_orbit,
    get_evaluator,
    orbit_frames,
)
from .torus import TorusPoint, wrap_coords
from .util import derive_seed, halton

# ---------------------------------------------------------------------------
# sampling grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingGrid:
    """Low-discrepancy sample of base points, optionally joined by all
    periodic points of the linear part up to a period cap (periodic orbits
    realize the extremal exponents on these models)."""

    n: int
    seed: int = 0
    period_cap: int = 0

    def points(self, spec: MapSpec) -> list[np.ndarray]:
        pts = [p for p in halton(self.n, spec.dim, seed=derive_seed(self.seed, "grid"))]
        if self.period_cap:
            for per in range(1, self.period_cap + 1):
                for orbit in linear_periodic_orbits(spec.linear, per):
                    pts.append(orbit[0].coords)
        return pts


# ---------------------------------------------------------------------------
# rates along orbits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateSample:
    """Logs of |Df^k| restricted to each 1-dim bundle at x."""

    x: tuple[float, ...]
    k: int
    log_rate_s: float
    log_rate_c: float
    log_rate_u: float


def _step_rates(spec: MapSpec, frames: OrbitFrames) -> np.ndarray:
    """Per-step log rates along an orbit: array (n, 3) with columns s, c, u."""
    pts = frames.points
    n = len(pts) - 1
    out = np.empty((n, 3))
    for i in range(n):
        jac = jacobian(spec, pts[i])
        out[i, 0] = np.log(np.linalg.norm(jac @ frames.s[i]))
        out[i, 1] = np.log(np.linalg.norm(jac @ frames.c[i]))
        out[i, 2] = np.log(np.linalg.norm(jac @ frames.u[i]))
    return out


def bundle_rates(spec: MapSpec, x, k: int, evaluator: BundleEvaluator | None = None) -> RateSample:
    """log |Df^k| restricted to E^s, E^c, E^u at x, by chaining unit vectors."""
    ev = evaluator if evaluator is not None else get_evaluator(spec)
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(np.asarray(x, dtype=float))
    pts = forward_orbit(spec, xa, k)
    rates = _step_rates(spec, orbit_frames(spec, pts, ev)).sum(axis=0)
    if not rates[0] < rates[1] < rates[2]:
        raise DomainError(f"rate ordering violated at {xa}: {rates}")
    return RateSample(tuple(xa), k, float(rates[0]), float(rates[1]), float(rates[2]))


def _theta_s_ratio(r: np.ndarray) -> float:
    rs, rc, ru = r
    if ru <= 0:
        raise DomainError("non-positive unstable rate in pinching ratio")
    return float((rc - rs) / ru)


def _theta_c_ratio(r: np.ndarray) -> float:
    rs, rc, _ = r
    if rs >= 0:
        raise DomainError("non-negative stable rate in pinching ratio")
    return float(1.0 - rc / rs)


# ---------------------------------------------------------------------------
# pinching exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PinchingReport:
    theta_s: float
    theta_c: float
    k_used: int
    grid_size: int
    min_margin: float
    per_k_theta_s: tuple[float, ...] = field(default=())
    per_k_theta_c: tuple[float, ...] = field(default=())
    # per grid point: (x, theta_s(k,x) for each k, theta_c(k,x) for each k)
    samples: tuple[tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]], ...] = ()


def pinching_exponents(spec: MapSpec, k_max: int, grid: SamplingGrid) -> PinchingReport:
    """Grid approximation of the pinching coefficients.

    theta_*(k, x) is computed from the k-step bundle rates at every grid
    point; the report takes max over k of the grid minimum, so refining the
    grid can only decrease the reported value.  min_margin is the log-slack
    of the defining inequality at the reported exponent over the whole grid
    (zero at the argmin up to rounding).
    """
    ev = get_evaluator(spec)
    pts = grid.points(spec)
    per_x_cum = []
    for xa in pts:
        orbit = forward_orbit(spec, xa, k_max)
        rates = _step_rates(spec, orbit_frames(spec, orbit, ev))
        per_x_cum.append(np.cumsum(rates, axis=0))
    theta_s_k, theta_c_k = [], []
    for k in range(1, k_max + 1):
        theta_s_k.append(min(_theta_s_ratio(c[k - 1]) for c in per_x_cum))
        theta_c_k.append(min(_theta_c_ratio(c[k - 1]) for c in per_x_cum))
    ks = int(np.argmax(theta_s_k))
    kc = int(np.argmax(theta_c_k))
    theta_s = theta_s_k[ks]
    theta_c = theta_c_k[kc]
    # slack of log|Df^k|E^c| - log|Df^k|E^s| - theta*log|Df^k|E^u| at k_used
    margins = [c[ks][1] - c[ks][0] - theta_s * c[ks][2] for c in per_x_cum]
    samples = tuple(
        (
            tuple(xa),
            tuple(_theta_s_ratio(c[k]) for k in range(k_max)),
            tuple(_theta_c_ratio(c[k]) for k in range(k_max)),
        )
        for xa, c in zip(pts, per_x_cum)
    )
    return PinchingReport(
        theta_s=theta_s,
        theta_c=theta_c,
        k_used=ks + 1,
        grid_size=len(pts),
        min_margin=float(min(margins)),
        per_k_theta_s=tuple(theta_s_k),
        per_k_theta_c=tuple(theta_c_k),
        samples=samples,
    )


# ---------------------------------------------------------------------------
# Birkhoff critical exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BirkhoffReport:
    """Per-sample liminf approximations of an orbit-averaged exponent.

    curve[n-1] is the min over samples of the partial-sum ratio after n
    blocks; estimate is the min over samples of each sample's tail infimum
    (window given as fractions of n_max).
    """

    which: str
    k: int
    n_max: int
    per_sample: tuple[tuple[tuple[float, ...], float], ...]
    curve: tuple[float, ...]
    estimate: float
    a_k: float | None = None
    fiber_norm_ratio_k: float | None = None


def _block_sums(rates: np.ndarray, k: int) -> np.ndarray:
    n_blocks = rates.shape[0] // k
    return rates[: n_blocks * k].reshape(n_blocks, k, 3).sum(axis=1)


def _ratio_curve(blocks: np.ndarray, which: str) -> np.ndarray:
    cum = np.cumsum(blocks, axis=0)
    if which == "s":
        num = cum[:, 1] - cum[:, 0]
        den = cum[:, 2]
    elif which == "c":
        num = cum[:, 1] - cum[:, 0]
        den = -cum[:, 0]
    else:
        raise DomainError(f"which must be 's' or 'c', got {which!r}")
    if np.any(np.abs(den) < 1e-8):
        raise DomainError("denominator partial sums below 1e-8")
    return num / den


def birkhoff_alpha(
    spec: MapSpec,
    which: str,
    k: int,
    n_max: int,
    samples,
    window: tuple[float, float] = (0.5, 1.0),
    evaluator: BundleEvaluator | None = None,
) -> BirkhoffReport:
    """Partial-sum ratio curves along orbits; the liminf is approximated by
    the minimum over the tail window (default second half).

    which='s' averages (log c-rate - log s-rate)/log u-rate over backward
    orbits; which='c' averages the inverse-map analogue 1 - sum(c)/sum(s)
    over forward orbits.
    """
    ev = evaluator if evaluator is not None else get_evaluator(spec)
    lo = max(1, int(np.ceil(window[0] * n_max)))
    hi = n_max
    per_sample = []
    curves = []
    for s in samples:
        xa = s.coords if isinstance(s, TorusPoint) else wrap_coords(np.asarray(s, dtype=float))
        if which == "s":
            pts = backward_orbit(spec, xa, n_max * k, tol=ev.inverse_tol)[::-1]
        else:
            pts = forward_orbit(spec, xa, n_max * k)
        rates = _step_rates(spec, orbit_frames(spec, pts, ev))
        if which == "s":
            rates = rates[::-1]
            # block i now sums steps from f^{-ik}x forward, matching the
            # backward Birkhoff sums
        curve = _ratio_curve(_block_sums(rates, k), which)
        curves.append(curve)
        per_sample.append((tuple(xa), float(np.min(curve[lo - 1 : hi]))))
    pooled = np.min(np.stack(curves), axis=0)
    return BirkhoffReport(
        which=which,
        k=k,
        n_max=n_max,
        per_sample=tuple(per_sample),
        curve=tuple(float(v) for v in pooled),
        estimate=float(min(v for _, v in per_sample)),
    )


def periodic_alpha(spec: MapSpec, which: str, orbits) -> float:
    """Exponent ratio from periodic multipliers; min over the given orbits.

    The multiplier eigenvalues must be separated by more than 1e-6 in
    log-modulus, otherwise the bundle identification degenerates.
    """
    values = []
    for orbit in orbits:
        if not isinstance(orbit, PeriodicOrbit):
            raise DomainError("periodic_alpha expects PeriodicOrbit values")
        eig = np.linalg.eigvals(orbit.multiplier)
        logm = np.sort(np.log(np.abs(eig)))
        if logm[1] - logm[0] < 1e-6 or logm[2] - logm[1] < 1e-6:
            raise DomainError("multiplier eigenvalues cluster in log-modulus")
        ls, lc, lu = logm
        if which == "s":
            values.append((lc - ls) / lu)
        elif which == "c":
            values.append(1.0 - lc / ls)
        else:
            raise DomainError(f"which must be 's' or 'c', got {which!r}")
    if not values:
        raise DomainError("no orbits supplied")
    return float(min(values))


def continued_orbits(spec: MapSpec, period_cap: int, residual_tol: float = 1e-11):
    """Continue all linear-part periodic orbits up to period_cap to orbits of spec."""
    from .dynamics import continue_periodic_orbit

    out = []
    for n in range(1, period_cap + 1):
        for orbit in linear_periodic_orbits(spec.linear, n):
            out.append(continue_periodic_orbit(spec, orbit[0], n, residual_tol=residual_tol))
    return out


# ---------------------------------------------------------------------------
# induced fiber/base rate ratios (bundle maps on lines inside the cs-plane)
# ---------------------------------------------------------------------------


def fiber_norm_ratio(spec: MapSpec, xa: np.ndarray, k: int, evaluator=None) -> float:
    """Exact projective fiber expansion log(sigma_1/sigma_2) of Df^k on the
    cs-plane at x, in an orthonormal basis of the plane.

    Diagnostic only: the reported A_k uses the bundle-split ratio, which the
    plane ratio approaches as k grows.
    """
    ev = evaluator if evaluator is not None else get_evaluator(spec)
    pts = forward_orbit(spec, wrap_coords(xa), k)
    fr = orbit_frames(spec, pts, ev)

    def basis(i):
        b1 = fr.s[i]
        b2 = fr.c[i] - np.dot(fr.c[i], b1) * b1
        return np.stack([b1, b2 / np.linalg.norm(b2)], axis=1)

    m = np.eye(3)
    for i in range(k):
        m = jacobian(spec, pts[i]) @ m
    restr = basis(k).T @ m @ basis(0)
    sv = np.linalg.svd(restr, compute_uv=False)
    return float(np.log(sv[0] / sv[1]))


def induced_A(
    spec: MapSpec,
    which: str,
    k: int,
    grid: SamplingGrid,
    n_birkhoff: int = 200,
    window: tuple[float, float] = (0.5, 1.0),
) -> BirkhoffReport:
    """Fiber-vs-base expansion ratio of the induced map on lines in the cs-plane.

    which='forward-cs': the bundle map acts by Df over f; the ratio at (k, x)
    is (log c-rate - log s-rate)/(log u-rate) and A_k is its grid supremum.
    which='backward-cs': the map acts by Df^-1 over f^-1; the base unstable
    rate becomes the inverse s-rate and the ratio is 1 - c/s in logs.
    The alpha analogue averages the same ratios along the matching orbits.
    """
    if spec.dim != 3:
        raise DomainError("induced bundle maps require d = 3")
    if which not in ("forward-cs", "backward-cs"):
        raise DomainError(f"unknown induced map selector {which!r}")
    ev = get_evaluator(spec)
    pts = grid.points(spec)
    ratio_fn = _theta_s_ratio if which == "forward-cs" else _theta_c_ratio
    ratios = []
    for xa in pts:
        orbit = forward_orbit(spec, xa, k)
        rates = _step_rates(spec, orbit_frames(spec, orbit, ev)).sum(axis=0)
        ratios.append(ratio_fn(rates))
    a_k = float(max(ratios))
    alpha = birkhoff_alpha(
        spec,
        "s" if which == "forward-cs" else "c",
        k,
        n_birkhoff,
        [pts[i] for i in range(min(len(pts), 8))],
        window=window,
        evaluator=ev,
    )
    diag = fiber_norm_ratio(spec, pts[0], k, ev) / (
        bundle_rates(spec, pts[0], k, ev).log_rate_u if which == "forward-cs" else 1.0
    )
    return BirkhoffReport(
        which=which,
        k=k,
        n_max=alpha.n_max,
        per_sample=alpha.per_sample,
        curve=alpha.curve,
        estimate=alpha.estimate,
        a_k=a_k,
        fiber_norm_ratio_k=float(diag) if which == "forward-cs" else None,
    )


def kappa(linear: LinearMapSpec) -> float:
    """log|lambda_s| / log|lambda_c| of the linear part (both logs negative)."""
    cls = classify_linear(linear)
    if not cls.is_partially_hyperbolic_anosov:
        raise DomainError("kappa requires a partially hyperbolic Anosov linear part")
    lam_s, lam_c, _ = cls.eigenvalues
    return float(np.log(abs(lam_s)) / np.log(abs(lam_c)))
