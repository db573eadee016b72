"""Pure geometric computations: geodesic distance and length, point-to-polyline
projection, arc-length interpolation and affine georeferencing of plan images.

All functions are pure and re-entrant. Distances use a spherical model; see
``EARTH_RADIUS_KM`` for the radius convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateControlPoints,
    DegenerateTransform,
    EmptyRoute,
    InvalidRoute,
    TooFewControlPoints,
)
from .model import GeoPosition

# Spherical earth radius in kilometers. Chosen so that one degree of latitude
# along a meridian is exactly R*pi/180 = 111.1949266... km.
EARTH_RADIUS_KM = 6371.0

# Determinant threshold below which an affine transform is unusable.
_DEGENERACY_EPS = 1e-15


def haversine_km(a: GeoPosition, b: GeoPosition) -> float:
    """Great-circle distance between two positions in kilometers."""
    lam1, phi1 = math.radians(a.lon), math.radians(a.lat)
    lam2, phi2 = math.radians(b.lon), math.radians(b.lat)
    s = (
        math.sin((phi2 - phi1) / 2.0) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin((lam2 - lam1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def polyline_length_km(route: list[GeoPosition]) -> float:
    """Sum of haversine distances over consecutive route points."""
    if not route:
        raise EmptyRoute("route has no points")
    return sum(haversine_km(route[i], route[i + 1]) for i in range(len(route) - 1))


def cumulative_lengths_km(route: list[GeoPosition]) -> list[float]:
    """Running arc length at every route vertex, starting at 0."""
    if not route:
        raise EmptyRoute("route has no points")
    out = [0.0]
    for i in range(len(route) - 1):
        out.append(out[-1] + haversine_km(route[i], route[i + 1]))
    return out


@dataclass(frozen=True)
class PolylineProjection:
    segment_index: int
    t: float  # fraction in [0, 1] along the segment
    snapped: GeoPosition
    distance_km: float  # geodesic distance from query to snapped point


def project_point_to_polyline(query: GeoPosition, route: list[GeoPosition]) -> PolylineProjection:
    """Globally nearest projection of ``query`` onto the polyline.

    Each segment is first projected in a local equirectangular plane centered
    at the query (x = lon*cos(lat_query), y = lat); the parameter is then
    refined against true geodesic distance, since the planar solution drifts
    by >1e-6 km once the query sits tens of kilometers off the route. Ties go
    to the lowest segment index.
    """
    if len(route) < 2:
        raise InvalidRoute("route needs at least 2 points")
    cos_q = math.cos(math.radians(query.lat))
    qx, qy = query.lon * cos_q, query.lat

    best: PolylineProjection | None = None
    for i in range(len(route) - 1):
        a, b = route[i], route[i + 1]

        def point_at(t: float) -> GeoPosition:
            if t == 0.0:
                return a
            if t == 1.0:
                return b
            return GeoPosition(a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat))

        ax, ay = a.lon * cos_q, a.lat
        bx, by = b.lon * cos_q, b.lat
        dx, dy = bx - ax, by - ay
        denom = dx * dx + dy * dy
        if denom == 0.0:
            t_planar = 0.0
        else:
            t_planar = min(1.0, max(0.0, ((qx - ax) * dx + (qy - ay) * dy) / denom))

        # ternary search on geodesic distance; endpoints and the planar
        # solution stay as exact candidates so coincidence cases snap cleanly
        lo, hi = 0.0, 1.0
        for _ in range(100):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if haversine_km(query, point_at(m1)) <= haversine_km(query, point_at(m2)):
                hi = m2
            else:
                lo = m1
        t_refined = (lo + hi) / 2.0

        for t in (0.0, 1.0, t_planar, t_refined):
            snapped = point_at(t)
            dist = haversine_km(query, snapped)
            if best is None or dist < best.distance_km:
                best = PolylineProjection(segment_index=i, t=t, snapped=snapped, distance_km=dist)
    assert best is not None
    return best


def _to_vector(p: GeoPosition) -> tuple[float, float, float]:
    lam, phi = math.radians(p.lon), math.radians(p.lat)
    return (math.cos(phi) * math.cos(lam), math.cos(phi) * math.sin(lam), math.sin(phi))


def _to_position(x: float, y: float, z: float) -> GeoPosition:
    norm = math.sqrt(x * x + y * y + z * z)
    x, y, z = x / norm, y / norm, z / norm
    return GeoPosition(math.degrees(math.atan2(y, x)), math.degrees(math.asin(max(-1.0, min(1.0, z)))))


def gc_interpolate(a: GeoPosition, b: GeoPosition, t: float) -> GeoPosition:
    """Point on the great circle from ``a`` to ``b`` at angular fraction ``t``.

    Guarantees exact arc-length proportionality: distance(a, result) equals
    t * distance(a, b) up to float rounding, which keeps pipeline lengths
    additive when routes are split at interpolated points.
    """
    if t <= 0.0:
        return a
    if t >= 1.0:
        return b
    va, vb = _to_vector(a), _to_vector(b)
    dot = max(-1.0, min(1.0, va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2]))
    omega = math.acos(dot)
    if omega < 1e-12:
        # coincident endpoints: linear blend is exact enough
        return GeoPosition(a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat))
    sin_omega = math.sin(omega)
    wa = math.sin((1.0 - t) * omega) / sin_omega
    wb = math.sin(t * omega) / sin_omega
    return _to_position(
        wa * va[0] + wb * vb[0],
        wa * va[1] + wb * vb[1],
        wa * va[2] + wb * vb[2],
    )


def point_along_polyline(route: list[GeoPosition], distance_km: float) -> tuple[int, float, GeoPosition]:
    """Position at a given arc length from the route start.

    Returns (segment_index, fraction within segment, position). The distance
    is clamped into [0, total length]. Within a segment the point lies on the
    great circle between the segment endpoints.
    """
    if len(route) < 2:
        raise InvalidRoute("route needs at least 2 points")
    cumulative = cumulative_lengths_km(route)
    total = cumulative[-1]
    target = min(max(distance_km, 0.0), total)
    for i in range(len(route) - 1):
        seg_len = cumulative[i + 1] - cumulative[i]
        if target <= cumulative[i + 1] or i == len(route) - 2:
            if seg_len <= 0.0:
                return i, 0.0, route[i]
            t = (target - cumulative[i]) / seg_len
            t = min(1.0, max(0.0, t))
            return i, t, gc_interpolate(route[i], route[i + 1], t)
    raise AssertionError("unreachable")


# -------------------------------------------------------------------------
# Affine georeferencing
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class ControlPointPair:
    """One landmark: pixel coordinates (origin top-left, y down) + world position."""

    pixel: tuple[float, float]
    world: GeoPosition

    def __post_init__(self) -> None:
        px, py = self.pixel
        if not (math.isfinite(px) and math.isfinite(py)) or px < 0 or py < 0:
            raise ValueError("pixel coordinates must be finite and >= 0")


@dataclass(frozen=True)
class AffineTransform:
    """Pixel-to-world mapping: lon = a*px + b*py + c, lat = d*px + e*py + f."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    rms_residual_deg: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.a * self.e - self.b * self.d) <= _DEGENERACY_EPS:
            raise DegenerateTransform("affine transform is not invertible")

    def coefficients(self) -> tuple[float, float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.e, self.f)


def solve_affine(pairs: list[ControlPointPair]) -> AffineTransform:
    """Least-squares fit of the six affine coefficients from landmark pairs.

    Three non-degenerate pairs interpolate exactly; more are fit in the
    least-squares sense with the residual reported in degrees.
    """
    if len(pairs) < 3:
        raise TooFewControlPoints(f"need at least 3 control point pairs, got {len(pairs)}")
    design = np.array([[p.pixel[0], p.pixel[1], 1.0] for p in pairs], dtype=float)
    if np.linalg.matrix_rank(design, tol=1e-9) < 3:
        raise DegenerateControlPoints("pixel control points are collinear")
    lons = np.array([p.world.lon for p in pairs], dtype=float)
    lats = np.array([p.world.lat for p in pairs], dtype=float)
    coef_lon, _, _, _ = np.linalg.lstsq(design, lons, rcond=None)
    coef_lat, _, _, _ = np.linalg.lstsq(design, lats, rcond=None)
    residuals = np.concatenate([design @ coef_lon - lons, design @ coef_lat - lats])
    rms = float(np.sqrt(np.mean(residuals**2)))
    return AffineTransform(
        a=float(coef_lon[0]),
        b=float(coef_lon[1]),
        c=float(coef_lon[2]),
        d=float(coef_lat[0]),
        e=float(coef_lat[1]),
        f=float(coef_lat[2]),
        rms_residual_deg=rms,
    )


def apply_affine(t: AffineTransform, pixel: tuple[float, float]) -> GeoPosition:
    """Map pixel coordinates to a world position."""
    px, py = pixel
    return GeoPosition(t.a * px + t.b * py + t.c, t.d * px + t.e * py + t.f)


def invert_affine(t: AffineTransform, position: GeoPosition) -> tuple[float, float]:
    """Map a world position back to pixel coordinates (closed-form 2x2 inverse)."""
    det = t.a * t.e - t.b * t.d
    if abs(det) <= _DEGENERACY_EPS:
        raise DegenerateTransform("affine transform is not invertible")
    dx, dy = position.lon - t.c, position.lat - t.f
    return ((t.e * dx - t.b * dy) / det, (-t.d * dx + t.a * dy) / det)
