"""
Workspace cross-section (ρ, z) analysis.

Posture counts per point and per raster, critical value curves (images of
the joint-space singular curves) and cusp points, i.e. workspace points
where three inverse kinematic solutions coincide.
"""

import math
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import ContinuumOfSolutionsError
from .joint_topology import SingularCurve, singular_curves
from .kinematics import (CartesianPoint, DesignParams, ik_coefficients_rz, ik_quartic,
                         ik_quartic_rz, section_map, solve_ik, trig_coefficients_rz)
from .quartic_core import count_real_roots, real_roots, triple_root_refine

# cusps are counted on the half plane ρ ≥ 0
SECTION_CONVENTION = "half-plane rho >= 0"


@dataclass(frozen=True)
class SectionPoint:
    rho: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and math.isfinite(self.z)):
            raise ValueError(f"non-finite section point ({self.rho}, {self.z})")
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")

    def cartesian(self):
        return CartesianPoint(self.rho, 0.0, self.z)


@dataclass
class PostureRaster:
    """Posture counts on a resolution² grid; counts[i, j] is pixel (ρ_i, z_j)."""

    rho_bounds: tuple[float, float]
    z_bounds: tuple[float, float]
    resolution: int
    counts: np.ndarray = field(repr=False)

    @property
    def pixel_size(self):
        return ((self.rho_bounds[1] - self.rho_bounds[0]) / self.resolution,
                (self.z_bounds[1] - self.z_bounds[0]) / self.resolution)

    @property
    def rho_axis(self):
        return self.rho_bounds[0] + (np.arange(self.resolution) + 0.5) * self.pixel_size[0]

    @property
    def z_axis(self):
        return self.z_bounds[0] + (np.arange(self.resolution) + 0.5) * self.pixel_size[1]

    @property
    def max_count(self):
        return int(self.counts.max())

    def histogram(self):
        values, freq = np.unique(self.counts, return_counts=True)
        return {int(v): int(n) for v, n in zip(values, freq)}

    def pixel_of(self, rho, z):
        drho, dz = self.pixel_size
        i = int(np.clip((rho - self.rho_bounds[0]) // drho, 0, self.resolution - 1))
        j = int(np.clip((z - self.z_bounds[0]) // dz, 0, self.resolution - 1))
        return i, j

    def rows(self):
        """(ρ, z, count) in row-major pixel order."""
        rho, z = self.rho_axis, self.z_axis
        for i in range(self.resolution):
            for j in range(self.resolution):
                yield float(rho[i]), float(z[j]), int(self.counts[i, j])


@dataclass(frozen=True)
class CuspPoint:
    rho: float
    z: float
    t_triple: float
    theta3: float
    residuals: tuple[float, float, float]
    p3: float


@dataclass(frozen=True)
class CriticalCurve:
    """Section image of one singular curve, vertices in curve order."""

    points: np.ndarray = field(repr=False)
    factor: str
    closed: bool

    @property
    def degenerate(self):
        """Axial lines collapse to a single section point."""
        return float(np.ptp(self.points[:, 0]) + np.ptp(self.points[:, 1])) < 1e-9


@dataclass(frozen=True)
class PostureRegion:
    count: int
    rho: float
    z: float
    pixels: int


def section_window(params: DesignParams):
    reach = params.reach
    return (0.0, reach), (-reach, reach)


def posture_count(params: DesignParams, p: SectionPoint, **root_options) -> int:
    """Distinct real roots of the IK quartic at (ρ, 0, z), a root at infinity counted once."""
    quartic = ik_quartic(params, p.cartesian())
    if quartic.is_zero:
        raise ContinuumOfSolutionsError()
    return real_roots(quartic, **root_options).distinct_count


def posture_counts_rz(params: DesignParams, rho, z, *, degeneracy=1e-12):
    """Vectorized posture counts for arrays of section coordinates."""
    rho = np.asarray(rho, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    coeffs = ik_coefficients_rz(params, rho ** 2 + z ** 2, z ** 2)
    return count_real_roots(coeffs, degeneracy=degeneracy)


def section_raster(params: DesignParams, resolution: int = 256, *, degeneracy=1e-12) -> PostureRaster:
    """
    Posture counts at pixel centres of the section window. The window covers
    ρ ∈ [0, reach] and z ∈ [-reach, reach]; centres sit half a pixel off the
    edges so no sample lies on z = 0 for an even resolution.
    """
    if resolution < 128:
        raise ValueError(f"resolution must be at least 128, got {resolution}")
    rho_bounds, z_bounds = section_window(params)
    raster = PostureRaster(rho_bounds, z_bounds, resolution, np.zeros((resolution, resolution), dtype=int))
    rho, z = np.meshgrid(raster.rho_axis, raster.z_axis, indexing="ij")
    raster.counts = posture_counts_rz(params, rho, z, degeneracy=degeneracy).reshape(resolution, resolution)
    logging.debug(f"{params.label()}: section raster {resolution}² histogram {raster.histogram()}")
    return raster


def curve_images(params: DesignParams, curves: list[SingularCurve]) -> list[CriticalCurve]:
    images = []
    for curve in curves:
        rho, z = section_map(params, curve.points[:, 0], curve.points[:, 1])
        images.append(CriticalCurve(np.column_stack([rho, z]), curve.factor, curve.closed))
    return images


def critical_value_curves(params: DesignParams, resolution: int = 256, **tracer_options) -> list[CriticalCurve]:
    """Images of the singular curves under q -> (ρ, z) at θ1 = 0, in tracing order."""
    return curve_images(params, singular_curves(params, resolution, **tracer_options))


def posture_regions(raster: PostureRaster) -> list[PostureRegion]:
    """
    Connected regions of equal posture count, each with a representative
    pixel (the member nearest the region centroid) for labelling.
    """
    regions = []
    rho, z = raster.rho_axis, raster.z_axis
    for count in sorted(np.unique(raster.counts)):
        labels, n = ndimage.label(raster.counts == count)
        if n == 0:
            continue
        centroids = ndimage.center_of_mass(labels > 0, labels, range(1, n + 1))
        for lab, (ci, cj) in zip(range(1, n + 1), centroids):
            members = np.argwhere(labels == lab)
            k = int(np.argmin((members[:, 0] - ci) ** 2 + (members[:, 1] - cj) ** 2))
            i, j = members[k]
            regions.append(PostureRegion(int(count), float(rho[i]), float(z[j]), len(members)))
    regions.sort(key=lambda r: (-r.pixels, r.count))
    return regions


def ik_posture_count(params: DesignParams, rho: float, z: float, **ik_options) -> int:
    """Distinct configurations solve_ik returns at (ρ, 0, z); 0 on a continuum of solutions."""
    try:
        return len(solve_ik(params, CartesianPoint(float(rho), 0.0, float(z)), **ik_options))
    except ContinuumOfSolutionsError:
        return 0


def confirmed_regions(params: DesignParams, raster: PostureRaster, count: int = 4, samples: int = 5,
                      **ik_options) -> list[PostureRegion]:
    """
    Regions of `count` postures that solve_ik confirms at a majority of their
    most interior pixels. A complex root pair with a tiny imaginary part is
    counted twice by the raster; along such a band solve_ik clusters the pair
    and the region is dropped.
    """
    labels, n = ndimage.label(raster.counts == count)
    if n == 0:
        return []
    depth = ndimage.distance_transform_edt(labels > 0)
    rho, z = raster.rho_axis, raster.z_axis
    confirmed = []
    for lab in range(1, n + 1):
        members = np.argwhere(labels == lab)
        deepest = members[np.argsort(-depth[members[:, 0], members[:, 1]], kind="stable")[:samples]]
        hits = sum(1 for i, j in deepest if ik_posture_count(params, rho[i], z[j], **ik_options) == count)
        i, j = deepest[0]
        if 2 * hits > len(deepest):
            confirmed.append(PostureRegion(count, float(rho[i]), float(z[j]), len(members)))
        else:
            logging.debug(f"{params.label()}: {count}-posture region of {len(members)} pixels "
                          f"near ({rho[i]:.4f}, {z[j]:.4f}) not confirmed ({hits}/{len(deepest)})")
    return confirmed


def sample_critical_curves(params: DesignParams, images: list[CriticalCurve], offset: float,
                           stride: int = 4, *, degeneracy=1e-12, **ik_options) -> int:
    """
    Largest posture count found at ±offset along the normals of the critical
    value curves; catches thin 4-posture pockets the raster may step over.
    A count of 4 is only taken once solve_ik confirms it.
    """
    best = 0
    for curve in images:
        if curve.degenerate or len(curve.points) < 3:
            continue
        pts = curve.points[::stride]
        tangent = np.gradient(curve.points, axis=0)[::stride]
        norm = np.hypot(tangent[:, 0], tangent[:, 1])
        keep = norm > 0
        if not np.any(keep):
            continue
        normal = np.column_stack([-tangent[keep, 1], tangent[keep, 0]]) / norm[keep, None]
        pts = pts[keep]
        offsets = np.vstack([pts + offset * normal, pts - offset * normal])
        offsets = offsets[(offsets[:, 0] > 0) & (np.abs(offsets[:, 1]) > 0)]
        if not len(offsets):
            continue
        counts = posture_counts_rz(params, offsets[:, 0], offsets[:, 1], degeneracy=degeneracy)
        best = max(best, int(counts[counts <= 2].max(initial=0)))
        for k in np.flatnonzero(counts == 4):
            if ik_posture_count(params, *offsets[k], degeneracy=degeneracy, **ik_options) == 4:
                return 4
    return best


def _second_derivative(params, theta3, R, Z):
    """F″(θ3) of the trigonometric IK equation; accepts arrays."""
    m0, m1, m2, m3, m4, m5 = trig_coefficients_rz(params, R, Z)
    k = m4 - m5
    c, s = np.cos(theta3), np.sin(theta3)
    return 2.0 * k * np.cos(2.0 * theta3) - 2.0 * m3 * np.sin(2.0 * theta3) - m2 * c - m1 * s


@dataclass
class CuspSearch:
    cusps: list[CuspPoint]
    candidates: int
    dropped: int


def search_cusps(params: DesignParams, curves: list[SingularCurve], *,
                 eps_axis=1e-6, eps_dedup=1e-4, eps_triple=1e-10, eps_nondeg=1e-6) -> CuspSearch:
    """
    Walks each singular curve. Along it the IK polynomial at the image point
    keeps a double root at θ3 of the vertex; a sign change of F″ between two
    vertices brackets a triple root. Each bracket seeds triple_root_refine in
    (t, R, Z = z²).
    """
    reach = params.reach
    axis_tol = eps_axis * reach
    dedup_tol = eps_dedup * reach

    def family(x):
        return ik_quartic_rz(params, x[0], x[1])

    seeds = []
    for curve in curves:
        if curve.factor == "axial" or len(curve.points) < 2:
            continue
        theta2, theta3 = curve.points[:, 0], curve.points[:, 1]
        rho, z = section_map(params, theta2, theta3)
        R, Z = rho ** 2 + z ** 2, z ** 2
        f2 = _second_derivative(params, theta3, R, Z)
        nxt = np.roll(np.arange(len(f2)), -1) if curve.closed else np.arange(1, len(f2))
        here = np.arange(len(nxt))
        for i, j in zip(here, nxt):
            if f2[i] == 0.0 or np.sign(f2[i]) == np.sign(f2[j]):
                continue
            w = f2[i] / (f2[i] - f2[j])
            dtheta = math.remainder(theta3[j] - theta3[i], 2.0 * math.pi)
            seed_theta = theta3[i] + w * dtheta
            seed_z = z[i] + w * (z[j] - z[i])
            if abs(seed_z) <= axis_tol or min(rho[i], rho[j]) <= axis_tol:
                continue
            seeds.append((seed_theta, R[i] + w * (R[j] - R[i]), Z[i] + w * (Z[j] - Z[i]), seed_z))

    cusps = []
    dropped = 0
    for seed_theta, R0, Z0, z0 in seeds:
        result = triple_root_refine(family, (math.tan(seed_theta / 2.0), (R0, Z0)),
                                    eps_triple=eps_triple, eps_nondeg=eps_nondeg)
        if result is None:
            dropped += 1
            logging.warning(f"{params.label()}: cusp candidate near θ3={seed_theta:.4f} did not refine")
            continue
        R, Z = result.params
        if Z <= axis_tol ** 2 or R - Z <= axis_tol ** 2:
            continue
        cusp = CuspPoint(math.sqrt(R - Z), math.copysign(math.sqrt(Z), z0), result.t,
                         result.theta, result.residuals, abs(result.p3))
        if any(math.hypot(cusp.rho - c.rho, cusp.z - c.z) <= dedup_tol for c in cusps):
            continue
        cusps.append(cusp)
    # F depends on z only through Z = z², so cusps come in mirror pairs
    for cusp in list(cusps):
        if not any(math.hypot(cusp.rho - c.rho, cusp.z + c.z) <= dedup_tol for c in cusps):
            logging.debug(f"{params.label()}: adding mirror of cusp at rho={cusp.rho:.6f}, z={cusp.z:.6f}")
            cusps.append(replace(cusp, z=-cusp.z))
    cusps.sort(key=lambda c: (c.rho, c.z))
    logging.debug(f"{params.label()}: {len(cusps)} cusps from {len(seeds)} candidates, {dropped} dropped")
    return CuspSearch(cusps, len(seeds), dropped)


def find_cusps(params: DesignParams, resolution: int = 256, *, eps_curve=1e-9, **options) -> list[CuspPoint]:
    curves = singular_curves(params, resolution, eps_curve=eps_curve)
    return search_cusps(params, curves, **options).cusps
