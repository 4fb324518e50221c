"""Geometry of the flat torus T^d (d <= 3) and of lines/planes in R^3.

Points live in [0,1)^d with mod-1 identification.  One-dimensional
subspaces are unit vectors identified with their negation; comparisons
always go through the angle metric so no global orientation is kept.
Two-planes in R^3 are stored via their unit normal, again up to sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateIntersectionError, DomainError

#: below this angle between plane normals the cross product loses half the
#: significant digits; callers needing smaller angles must refine upstream
TOL_PARALLEL = 1e-8

_UNIT_NORM_TOL = 1e-12


def _as_array(raw, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.size not in (1, 2, 3):
        raise DomainError(f"{name} must be a 1-, 2- or 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries: {arr}")
    return arr


def wrap_coords(raw) -> np.ndarray:
    """Array-level mod-1 reduction into [0,1)^d.

    Trusts finite input (hot path); the public wrap() validates.
    """
    arr = np.asarray(raw, dtype=float)
    out = arr - np.floor(arr)
    # the subtraction can round up to exactly 1.0 for tiny negatives
    out[out >= 1.0] = 0.0
    return out


@dataclass(frozen=True)
class TorusPoint:
    """A point of T^d, all coordinates in [0,1)."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", wrap_coords(_as_array(self.coords, "point")))
        self.coords.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.coords.size

    def __iter__(self):
        return iter(self.coords)

    def __repr__(self):
        inner = ", ".join(f"{c:.12g}" for c in self.coords)
        return f"TorusPoint({inner})"


@dataclass(frozen=True)
class TangentVector:
    """A vector attached to a base point of T^d; norm is Euclidean."""

    base: TorusPoint
    components: np.ndarray

    def __post_init__(self):
        comp = _as_array(self.components, "components")
        if comp.size != self.base.dim:
            raise DomainError("tangent vector dimension differs from base point")
        object.__setattr__(self, "components", comp)
        self.components.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


def wrap(raw) -> TorusPoint:
    """Reduce raw coordinates mod Z^d into [0,1)^d.  Idempotent."""
    return TorusPoint(wrap_coords(_as_array(raw, "point")))


def torus_distance_arr(p: np.ndarray, q: np.ndarray) -> float:
    """Array-level flat-torus distance (min over integer translates)."""
    if p.size != q.size:
        raise DomainError(f"dimension mismatch: {p.size} vs {q.size}")
    d = np.abs(p - q) % 1.0
    d = np.minimum(d, 1.0 - d)
    return float(np.sqrt(np.dot(d, d)))


def torus_distance(p, q) -> float:
    """Distance on the flat torus: min over Z^d-translates of Euclidean distance.

    Separates per coordinate, so the minimum is min(|dx|, 1-|dx|) axis-wise.
    """
    pa = p.coords if isinstance(p, TorusPoint) else wrap_coords(p)
    qa = q.coords if isinstance(q, TorusPoint) else wrap_coords(q)
    return torus_distance_arr(pa, qa)


def torus_delta(p, q) -> np.ndarray:
    """Shortest displacement vector from p to q (each component in [-1/2, 1/2))."""
    pa = p.coords if isinstance(p, TorusPoint) else wrap_coords(p)
    qa = q.coords if isinstance(q, TorusPoint) else wrap_coords(q)
    if pa.size != qa.size:
        raise DomainError(f"dimension mismatch: {pa.size} vs {qa.size}")
    d = (qa - pa + 0.5) % 1.0 - 0.5
    return d


def _unit(raw, name: str) -> np.ndarray:
    v = _as_array(raw, name)
    n = float(np.linalg.norm(v))
    if n < 1e-15:
        raise DomainError(f"{name} is (numerically) the zero vector")
    return v / n


@dataclass(frozen=True)
class LineDirection:
    """A 1-dimensional subspace of R^d: unit vector up to sign.

    Equality and hashing are not defined through the components (the sign is
    arbitrary); compare lines with line_angle.
    """

    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _as_array(self.components, "line direction")
        n = float(np.linalg.norm(v))
        if abs(n - 1.0) > _UNIT_NORM_TOL:
            if n < 1e-15:
                raise DomainError("line direction is the zero vector")
            v = v / n
        object.__setattr__(self, "components", v)
        self.components.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.components.size

    def __repr__(self):
        inner = ", ".join(f"{c:.9g}" for c in self.components)
        return f"LineDirection({inner})"


def line(raw) -> LineDirection:
    """Normalize raw components into a LineDirection."""
    return LineDirection(_unit(raw, "line direction"))


def line_angle_arr(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in [0, pi/2] between the lines spanned by unit vectors a and b.

    Uses atan2 of the orthogonal residue so angles near 0 keep full float
    precision (plain arccos of the dot product bottoms out near sqrt(eps)).
    """
    c = float(np.dot(a, b))
    resid = a - c * b
    s = float(np.linalg.norm(resid))
    return float(np.arctan2(s, abs(c)))


def line_angle(a, b) -> float:
    """Angle between two lines, in [0, pi/2].

    Equals arccos(|a.b|) in exact arithmetic; zero iff the lines coincide
    and invariant under flipping either sign.
    """
    av = a.components if isinstance(a, LineDirection) else _unit(a, "a")
    bv = b.components if isinstance(b, LineDirection) else _unit(b, "b")
    if av.size != bv.size:
        raise DomainError("line dimensions differ")
    return line_angle_arr(av, bv)


@dataclass(frozen=True)
class PlaneValue:
    """A 2-plane in R^3 represented by its unit normal, up to sign."""

    normal: LineDirection

    def __post_init__(self):
        if self.normal.dim != 3:
            raise DomainError("planes are only supported in R^3")

    def contains(self, direction, tol: float = 1e-10) -> bool:
        v = direction.components if isinstance(direction, LineDirection) else _unit(direction, "direction")
        return abs(float(np.dot(v, self.normal.components))) < tol


def plane(normal_raw) -> PlaneValue:
    return PlaneValue(line(normal_raw))


def plane_angle(p: PlaneValue, q: PlaneValue) -> float:
    """Angle between two planes = angle between their normal lines."""
    return line_angle(p.normal, q.normal)


def planes_intersect(p: PlaneValue, q: PlaneValue, tol_parallel: float = TOL_PARALLEL) -> LineDirection:
    """Intersection line of two transverse planes in R^3.

    Computed as the normalized cross product of the normals; requires the
    planes to make an angle above tol_parallel.
    """
    ang = plane_angle(p, q)
    if ang <= tol_parallel:
        raise DegenerateIntersectionError(ang)
    cross = np.cross(p.normal.components, q.normal.components)
    return LineDirection(_unit(cross, "intersection"))
