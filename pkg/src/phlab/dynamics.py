"""Toral diffeomorphisms under study: unimodular integer matrices and their
rank-one trigonometric perturbations x -> Lx + eps*phi(x)*e.

All Newton / fixed-point work happens on R^d lifts with explicitly tracked
integer offsets; wrapping occurs only at API boundaries.  phi is a finite
Fourier sum so every Jacobian is analytic (no differentiation error enters
the downstream estimators).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ContinuationError, DomainError, InversionError, SizeError
from .torus import TorusPoint, wrap, wrap_coords

EPS_MAX_DEFAULT = 0.1

# ---------------------------------------------------------------------------
# exact integer linear algebra (d <= 3)
# ---------------------------------------------------------------------------


def _int_matrix(rows) -> tuple[tuple[int, ...], ...]:
    mat = tuple(tuple(int(v) for v in row) for row in rows)
    d = len(mat)
    if d not in (1, 2, 3) or any(len(r) != d for r in mat):
        raise DomainError("matrix must be square, d in {1,2,3}")
    for row, orig in zip(mat, rows):
        for v, o in zip(row, orig):
            if float(o) != float(v):
                raise DomainError("matrix entries must be integers")
    return mat


def int_det(m) -> int:
    d = len(m)
    if d == 1:
        return m[0][0]
    if d == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def int_matmul(a, b):
    d = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d)) for i in range(d)
    )


def int_matpow(m, n: int):
    d = len(m)
    out = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
    base = m
    k = n
    while k:
        if k & 1:
            out = int_matmul(out, base)
        base = int_matmul(base, base)
        k >>= 1
    return out


def int_adjugate(m):
    d = len(m)
    if d == 1:
        return ((1,),)
    if d == 2:
        return ((m[1][1], -m[0][1]), (-m[1][0], m[0][0]))
    c = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            s = [k for k in range(3) if k != j]
            minor = m[r[0]][s[0]] * m[r[1]][s[1]] - m[r[0]][s[1]] * m[r[1]][s[0]]
            c[j][i] = (-1) ** (i + j) * minor
    return tuple(tuple(row) for row in c)


# ---------------------------------------------------------------------------
# map specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearMapSpec:
    """A unimodular integer matrix acting on T^d."""

    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        mat = _int_matrix(self.matrix)
        object.__setattr__(self, "matrix", mat)
        if abs(int_det(mat)) != 1:
            raise DomainError(f"matrix is not unimodular: det = {int_det(mat)}")

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def det(self) -> int:
        return int_det(self.matrix)

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    def inverse_array(self) -> np.ndarray:
        # adj(M)/det; det = +-1 keeps it an exact integer matrix
        adj = int_adjugate(self.matrix)
        det = int_det(self.matrix)
        return np.array([[v * det for v in row] for row in adj], dtype=float)


@dataclass(frozen=True)
class FourierScalarField:
    """Finite Fourier sum phi(x) = sum c*cos(2 pi k.x) + s*sin(2 pi k.x).

    Smooth and Z^d-periodic by construction; the gradient is the term-wise
    analytic derivative.
    """

    terms: tuple[tuple[tuple[int, ...], float, float], ...]
    _freqs: np.ndarray = field(init=False, repr=False, compare=False)
    _cos: np.ndarray = field(init=False, repr=False, compare=False)
    _sin: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        norm_terms = []
        for freq, c, s in self.terms:
            k = tuple(int(v) for v in freq)
            norm_terms.append((k, float(c), float(s)))
        object.__setattr__(self, "terms", tuple(norm_terms))
        object.__setattr__(self, "_freqs", np.array([t[0] for t in norm_terms], dtype=float))
        object.__setattr__(self, "_cos", np.array([t[1] for t in norm_terms]))
        object.__setattr__(self, "_sin", np.array([t[2] for t in norm_terms]))

    def value(self, x: np.ndarray) -> float:
        args = 2.0 * np.pi * (self._freqs @ x)
        return float(self._cos @ np.cos(args) + self._sin @ np.sin(args))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        args = 2.0 * np.pi * (self._freqs @ x)
        coef = -self._cos * np.sin(args) + self._sin * np.cos(args)
        return 2.0 * np.pi * (self._freqs.T @ coef)

    def sup_gradient_norm(self) -> float:
        """Upper bound for sup_x |grad phi(x)|."""
        return sum(
            2.0 * np.pi * float(np.linalg.norm(k)) * float(np.hypot(c, s))
            for k, c, s in self.terms
        )


def sine_field(axis: int = 0, dim: int = 3, amplitude: float = 1.0 / (2.0 * np.pi)) -> FourierScalarField:
    """phi(x) = amplitude * sin(2 pi x_axis); vanishes at 0 with unit directional slope
    along the axis when amplitude = 1/(2 pi)."""
    k = tuple(1 if i == axis else 0 for i in range(dim))
    return FourierScalarField(((k, 0.0, amplitude),))


@dataclass(frozen=True)
class MapSpec:
    """A torus map: Linear(L) or Perturbed(L, eps, phi, e).

    Perturbed maps require eps * sup|grad phi| * |L^-1 e| < 1 so the
    fixed-point inversion contracts, and |eps| <= eps_max to keep the cone
    conditions verifiable downstream.
    """

    linear: LinearMapSpec
    epsilon: float = 0.0
    phi: FourierScalarField | None = None
    direction: np.ndarray | None = None
    eps_max: float = EPS_MAX_DEFAULT
    _inv: np.ndarray = field(init=False, repr=False, compare=False)
    _arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_inv", self.linear.inverse_array())
        object.__setattr__(self, "_arr", self.linear.array())
        self._arr.setflags(write=False)
        if self.phi is None:
            object.__setattr__(self, "epsilon", 0.0)
            object.__setattr__(self, "direction", None)
            return
        if abs(self.epsilon) > self.eps_max:
            raise DomainError(f"|epsilon| = {abs(self.epsilon)} exceeds eps_max = {self.eps_max}")
        if self.direction is None:
            raise DomainError("perturbed map needs a direction vector")
        e = np.asarray(self.direction, dtype=float)
        n = float(np.linalg.norm(e))
        if abs(n - 1.0) > 1e-9:
            if n < 1e-15:
                raise DomainError("perturbation direction is zero")
            e = e / n
        e.setflags(write=False)
        object.__setattr__(self, "direction", e)
        contraction = abs(self.epsilon) * self.phi.sup_gradient_norm() * float(
            np.linalg.norm(self._inv @ e)
        )
        if contraction >= 1.0:
            raise DomainError(
                f"perturbation too strong for invertibility: contraction bound {contraction:.3f} >= 1"
            )

    @classmethod
    def make_linear(cls, rows) -> "MapSpec":
        return cls(LinearMapSpec(tuple(tuple(r) for r in rows)))

    @classmethod
    def make_perturbed(cls, rows, epsilon, phi, direction, eps_max=EPS_MAX_DEFAULT) -> "MapSpec":
        return cls(
            LinearMapSpec(tuple(tuple(r) for r in rows)),
            epsilon=float(epsilon),
            phi=phi,
            direction=np.asarray(direction, dtype=float),
            eps_max=eps_max,
        )

    @property
    def dim(self) -> int:
        return self.linear.dim

    @property
    def is_perturbed(self) -> bool:
        return self.phi is not None

    def matrix(self) -> np.ndarray:
        return self._arr

    def key(self) -> tuple:
        """Hashable identity used for caches."""
        phi_key = self.phi.terms if self.phi is not None else None
        dir_key = tuple(self.direction) if self.direction is not None else None
        return (self.linear.matrix, self.epsilon, phi_key, dir_key)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def apply_lift(spec: MapSpec, x: np.ndarray) -> np.ndarray:
    """Lifted map on R^d: Lx + eps*phi(x)*e, no wrapping."""
    y = spec.matrix() @ x
    if spec.is_perturbed and spec.epsilon != 0.0:
        y = y + spec.epsilon * spec.phi.value(x) * spec.direction
    return y


def apply(spec: MapSpec, x) -> TorusPoint:
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(x)
    if xa.size != spec.dim:
        raise DomainError("point dimension differs from map dimension")
    return wrap(apply_lift(spec, xa))


def apply_arr(spec: MapSpec, xa: np.ndarray) -> np.ndarray:
    return wrap_coords(apply_lift(spec, xa))


def jacobian(spec: MapSpec, x) -> np.ndarray:
    """Df at x: the constant matrix for Linear, L + eps*(e outer grad phi) for Perturbed."""
    if not spec.is_perturbed or spec.epsilon == 0.0:
        return spec.matrix()
    xa = x.coords if isinstance(x, TorusPoint) else wrap_coords(x)
    return spec.matrix() + spec.epsilon * np.outer(spec.direction, spec.phi.gradient(xa))


def inverse_apply_arr(spec: MapSpec, ya: np.ndarray, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Array-level inverse; see inverse_apply."""
    inv = spec._inv
    if not spec.is_perturbed or spec.epsilon == 0.0:
        return wrap_coords(inv @ ya)
    e = spec.direction
    x = inv @ ya
    last_step = np.inf
    stagnant = 0
    for _ in range(max_iter):
        # phi is Z^d-periodic: lifts need no wrapping inside the iteration
        x_new = inv @ (ya - spec.epsilon * spec.phi.value(x) * e)
        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        if step < tol / 10.0:
            return wrap_coords(x)
        # roundoff floor: steps this small cannot shrink further in float64
        if step < 1e-12 and step >= last_step:
            stagnant += 1
            if stagnant >= 3:
                return wrap_coords(x)
        else:
            stagnant = 0
        last_step = step
    raise InversionError(
        f"fixed-point inversion did not converge in {max_iter} iterations", gap=last_step
    )


def inverse_apply(spec: MapSpec, y, tol: float = 1e-12) -> TorusPoint:
    """Preimage of y under the map, accurate to tol on the torus.

    Linear maps invert exactly through the integer inverse matrix.  Perturbed
    maps iterate x <- L^-1(y - eps*phi(x)*e) on a lift; the construction-time
    contraction check guarantees convergence.
    """
    ya = y.coords if isinstance(y, TorusPoint) else wrap_coords(y)
    return TorusPoint(inverse_apply_arr(spec, ya, tol=tol))


# ---------------------------------------------------------------------------
# spectral classification (exact characteristic polynomial + bisection)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralClassification:
    """Eigenvalue data of a linear spec, sorted by modulus."""

    eigenvalues: tuple[float, ...]
    is_anosov: bool
    is_partially_hyperbolic_anosov: bool
    center_contracting: bool
    has_complex_pair: bool = False

    @property
    def moduli(self) -> tuple[float, ...]:
        return tuple(abs(v) for v in self.eigenvalues)


def _bisect_root(p, lo: float, hi: float, tol: float = 1e-14) -> float:
    flo = p(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = p(mid)
        if fm == 0.0 or (hi - lo) < tol * max(1.0, abs(mid)):
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cubic_real_roots(a2: int, a1: int, a0: int) -> list[float]:
    """Real roots of x^3 + a2 x^2 + a1 x + a0, each polished to ~1e-15."""

    def p(x):
        return ((x + a2) * x + a1) * x + a0

    def dp(x):
        return (3.0 * x + 2.0 * a2) * x + a1

    bound = 1.0 + max(abs(a2), abs(a1), abs(a0))
    disc = 4 * a2 * a2 - 12 * a1
    cuts = [-bound, bound]
    if disc > 0:
        r = np.sqrt(float(disc))
        cuts = sorted([-bound, (-2 * a2 - r) / 6.0, (-2 * a2 + r) / 6.0, bound])
    roots = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if p(lo) == 0.0 and (not roots or abs(roots[-1] - lo) > 1e-12):
            roots.append(lo)
        if (p(lo) < 0) != (p(hi) < 0):
            r0 = _bisect_root(p, lo, hi)
            for _ in range(4):  # Newton polish
                d = dp(r0)
                if d != 0.0:
                    r0 = r0 - p(r0) / d
            roots.append(r0)
    if p(bound) == 0.0:
        roots.append(float(bound))
    return sorted(set(roots))


def classify_linear(linear: LinearMapSpec, margin: float = 1e-9) -> SpectralClassification:
    """Spectral flags from the exact characteristic polynomial.

    Real roots come from bisection over the monotone intervals of the cubic
    (quadratic formula for d=2), polished by Newton.  Eigenvalue moduli
    within `margin` of 1 raise a DomainError (indeterminate hyperbolicity)
    unless +-1 is an exact integer root, which classifies definitively as
    not Anosov.  A complex pair yields is_partially_hyperbolic_anosov=False.
    """
    m = linear.matrix
    d = linear.dim
    det = int_det(m)
    if d == 2:
        tr = m[0][0] + m[1][1]
        coeffs = (1, -tr, det)
    elif d == 3:
        tr = m[0][0] + m[1][1] + m[2][2]
        m2 = (
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
            + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2] - m[1][2] * m[2][1]
        )
        coeffs = (1, -tr, m2, -det)
    else:
        raise DomainError("classification supports d in {2,3}")

    def p_exact(v: int) -> int:
        total = 0
        for c in coeffs:
            total = total * v + c
        return total

    def snap(lams):
        out = []
        for lam in lams:
            if abs(abs(lam) - 1.0) < margin:
                unit = 1.0 if lam > 0 else -1.0
                if p_exact(int(unit)) == 0:
                    out.append(unit)
                else:
                    raise DomainError("eigenvalue modulus indeterminately close to 1")
            else:
                out.append(float(lam))
        return out

    if d == 2:
        disc = tr * tr - 4 * det
        if disc < 0:
            rho = float(np.sqrt(abs(det)))
            if abs(rho - 1.0) < margin:  # always the case for unimodular 2x2
                return SpectralClassification((1.0, 1.0), False, False, False, has_complex_pair=True)
            return SpectralClassification((rho, rho), False, False, False, has_complex_pair=True)
        r = np.sqrt(float(disc))
        lams = snap(sorted(((tr - r) / 2.0, (tr + r) / 2.0), key=abs))
        anosov = abs(lams[0]) < 1.0 < abs(lams[1])
        return SpectralClassification(tuple(lams), anosov, False, False)

    roots = _cubic_real_roots(coeffs[1], coeffs[2], coeffs[3])
    if len(roots) < 3:
        real = roots[0]
        rho = float(np.sqrt(1.0 / abs(real)))  # |real| * rho^2 = |det| = 1
        eig = tuple(sorted(snap([real]) + [rho, rho], key=abs))
        if abs(rho - 1.0) < margin and abs(eig[0]) != 1.0:
            raise DomainError("complex pair modulus indeterminately close to 1")
        anosov = all(abs(v) != 1.0 for v in eig) and abs(eig[0]) < 1.0 < abs(eig[-1])
        return SpectralClassification(eig, anosov, False, False, has_complex_pair=True)
    lams = snap(sorted(roots, key=abs))
    prod = lams[0] * lams[1] * lams[2]
    if abs(abs(prod) - 1.0) > 1e-10:
        raise DomainError(f"eigenvalue product {prod} inconsistent with unimodularity")
    a_s, a_c, a_u = (abs(v) for v in lams)
    if 1.0 in (a_s, a_c, a_u):
        return SpectralClassification(tuple(lams), False, False, False)
    anosov = a_s < 1.0 and a_u > 1.0
    contracting = a_s < a_c < 1.0 < a_u
    expanding = a_s < 1.0 < a_c < a_u
    separated = (a_c - a_s) > margin and (a_u - a_c) > margin
    ph_anosov = anosov and separated and (contracting or expanding)
    return SpectralClassification(tuple(lams), anosov, ph_anosov, contracting and ph_anosov)


def unit_eigenvector(matrix: np.ndarray, lam: float) -> np.ndarray:
    """Unit eigenvector of a d x d matrix for a simple real eigenvalue.

    Uses the best-conditioned cross product of rows of (M - lam I) for d=3,
    the analogous 2-vector construction for d=2.
    """
    d = matrix.shape[0]
    a = matrix - lam * np.eye(d)
    if d == 2:
        cands = [np.array([-a[0, 1], a[0, 0]]), np.array([-a[1, 1], a[1, 0]])]
    else:
        cands = [np.cross(a[i], a[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    v = max(cands, key=lambda w: float(np.linalg.norm(w)))
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class EigenFrame:
    """Sorted eigenvalues with unit right/left eigenvectors of a 3x3 linear spec."""

    lam_s: float
    lam_c: float
    lam_u: float
    e_s: np.ndarray
    e_c: np.ndarray
    e_u: np.ndarray
    left_s: np.ndarray
    left_c: np.ndarray
    left_u: np.ndarray


@lru_cache(maxsize=64)
def _eigen_frame_cached(matrix_key) -> EigenFrame:
    linear = LinearMapSpec(matrix_key)
    cls = classify_linear(linear)
    if linear.dim != 3 or cls.has_complex_pair:
        raise DomainError("eigen frame requires three real eigenvalues in d=3")
    arr = linear.array()
    lam_s, lam_c, lam_u = cls.eigenvalues
    vecs = {name: unit_eigenvector(arr, lam) for name, lam in (("s", lam_s), ("c", lam_c), ("u", lam_u))}
    lefts = {name: unit_eigenvector(arr.T, lam) for name, lam in (("s", lam_s), ("c", lam_c), ("u", lam_u))}
    return EigenFrame(
        lam_s, lam_c, lam_u,
        vecs["s"], vecs["c"], vecs["u"],
        lefts["s"], lefts["c"], lefts["u"],
    )


def eigen_frame(linear: LinearMapSpec) -> EigenFrame:
    return _eigen_frame_cached(linear.matrix)


def eigendirection(linear: LinearMapSpec, which: str) -> np.ndarray:
    """Unit eigenvector selected by 's' | 'c' | 'u'."""
    fr = eigen_frame(linear)
    try:
        return {"s": fr.e_s, "c": fr.e_c, "u": fr.e_u}[which]
    except KeyError:
        raise DomainError(f"unknown eigendirection selector {which!r}") from None


# ---------------------------------------------------------------------------
# periodic points and orbits
# ---------------------------------------------------------------------------


def linear_periodic_count(linear: LinearMapSpec, n: int) -> int:
    """|det(L^n - I)|, computed exactly in integer arithmetic."""
    d = linear.dim
    mn = int_matpow(linear.matrix, n)
    m = tuple(tuple(mn[i][j] - int(i == j) for j in range(d)) for i in range(d))
    return abs(int_det(m))


def _exact_periodic_points(linear: LinearMapSpec, n: int, cap: int) -> list[tuple[Fraction, ...]]:
    d = linear.dim
    mn = int_matpow(linear.matrix, n)
    m = tuple(tuple(mn[i][j] - int(i == j) for j in range(d)) for i in range(d))
    det = int_det(m)
    if det == 0:
        raise DomainError("det(L^n - I) = 0; periodic points are not isolated")
    if abs(det) > cap:
        raise SizeError(f"|det(L^n - I)| = {abs(det)} exceeds cap {cap}")
    adj = int_adjugate(m)
    # solutions mod Z^d form the subgroup generated by the columns of (L^n-I)^-1
    gens = [tuple(Fraction(adj[i][j], det) % 1 for i in range(d)) for j in range(d)]
    zero = tuple(Fraction(0) for _ in range(d))
    seen = {zero}
    frontier = [zero]
    while frontier:
        base = frontier.pop()
        for g in gens:
            cand = tuple((b + gi) % 1 for b, gi in zip(base, g))
            if cand not in seen:
                seen.add(cand)
                frontier.append(cand)
    assert len(seen) == abs(det)
    return sorted(seen)


def linear_periodic_points(linear: LinearMapSpec, n: int, cap: int = 100_000) -> list[TorusPoint]:
    """All x in [0,1)^d with L^n x = x mod Z^d; count = |det(L^n - I)|.

    Solved exactly in rationals (the solution set is the subgroup of T^d
    generated by the columns of (L^n - I)^-1), so every returned point has
    zero residual up to float conversion.
    """
    pts = _exact_periodic_points(linear, n, cap)
    return [wrap([float(c) for c in p]) for p in pts]


def linear_periodic_orbits(linear: LinearMapSpec, n: int, cap: int = 100_000) -> list[list[TorusPoint]]:
    """Period-n points grouped into L-orbits (one entry per orbit, exact arithmetic)."""
    pts = _exact_periodic_points(linear, n, cap)
    remaining = set(pts)
    orbits = []
    for p in pts:
        if p not in remaining:
            continue
        orbit = []
        q = p
        while True:
            orbit.append(q)
            remaining.discard(q)
            q = tuple(
                sum(Fraction(linear.matrix[i][j]) * q[j] for j in range(linear.dim)) % 1
                for i in range(linear.dim)
            )
            if q == p:
                break
        orbits.append([wrap([float(c) for c in point]) for point in orbit])
    return orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    """A located periodic orbit with its n-step multiplier matrix."""

    points: tuple[TorusPoint, ...]
    period: int
    multiplier: np.ndarray
    residual: float


def multiplier_along(spec: MapSpec, points) -> np.ndarray:
    """Product of single-step Jacobians along an orbit (left-multiplied in order)."""
    m = np.eye(spec.dim)
    for p in points:
        m = jacobian(spec, p) @ m
    return m


def continue_periodic_orbit(spec: MapSpec, seed, n: int, residual_tol: float = 1e-11) -> PeriodicOrbit:
    """Newton continuation of a periodic orbit from a nearby seed.

    Works on the lifted equation f^n(x) - x - m = 0 where m is the integer
    offset of the seed orbit; quadratic convergence near the solution.
    """
    sa = seed.coords if isinstance(seed, TorusPoint) else wrap_coords(seed)
    if sa.size != spec.dim:
        raise DomainError("seed dimension differs from map dimension")

    def lift_orbit(x0):
        pts = [x0]
        for _ in range(n):
            pts.append(apply_lift(spec, pts[-1]))
        return pts

    offset = np.round(lift_orbit(sa)[-1] - sa)
    x = sa.copy()
    d = spec.dim
    for _ in range(50):
        pts = lift_orbit(x)
        g = pts[-1] - x - offset
        jac = np.eye(d)
        for p in pts[:-1]:
            jac = jacobian(spec, wrap_coords(p)) @ jac
        jmat = jac - np.eye(d)
        if abs(np.linalg.det(jmat)) < 1e-10:
            raise ContinuationError("Jacobian of f^n - id is singular at the iterate")
        step = np.linalg.solve(jmat, g)
        if float(np.max(np.abs(step))) > 0.25:
            raise ContinuationError(f"Newton step too large: {float(np.max(np.abs(step))):.3g}")
        x = x - step
        if float(np.max(np.abs(step))) < 1e-14:
            break
    else:
        raise ContinuationError("Newton did not converge in 50 iterations")

    x_pt = wrap(x)
    orbit_pts = [x_pt]
    for _ in range(n - 1):
        orbit_pts.append(apply(spec, orbit_pts[-1]))
    from .torus import torus_distance

    resid = torus_distance(apply(spec, orbit_pts[-1]), x_pt)
    if resid > residual_tol:
        raise ContinuationError(f"orbit residual {resid:.3e} above tolerance {residual_tol:.1e}")
    mult = multiplier_along(spec, orbit_pts)
    return PeriodicOrbit(tuple(orbit_pts), n, mult, resid)
