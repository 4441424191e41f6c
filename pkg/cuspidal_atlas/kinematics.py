"""
Kinematics of the 3R family α2 = -90°, α3 = +90°, r3 = 0 (lengths in units of d2).

- Forward kinematics and the section map (ρ, z)
- Jacobian matrix and its determinant (closed form, factored)
- The trigonometric IK equation in θ3 and its tan-half-angle quartic
- Full inverse kinematics lifting t -> (θ1, θ2, θ3)

Eliminating θ1, θ2 from the direct equations: with A = d3 + d4 cosθ3,
B = r2 + d4 sinθ3 and R = x² + y² + z²,

    A cosθ2 = (R - 1 - A² - B²) / 2,    A sinθ2 = -z,

so squaring and adding gives one equation in θ3 alone,

    m5 cos²θ3 + m4 sin²θ3 + m3 cosθ3 sinθ3 + m2 cosθ3 + m1 sinθ3 + m0 = 0,

with m0 = -(x² + y²) + r2² + (R + 1 - L)²/4, m1 = 2 r2 d4 + (L - R - 1) d4 r2,
m2 = (L - R - 1) d4 d3, m3 = 2 r2 d3 d4², m4 = d4²(r2² + 1), m5 = d3² d4²,
L = d3² + d4² + r2². The equation depends on z only through z², which is
why the workspace section is symmetric about z = 0.
"""

import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat

from .errors import ContinuumOfSolutionsError
from .quartic_core import Quartic, real_roots

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wraps into (-π, π]."""
    wrapped = math.remainder(angle, TWO_PI)
    return math.pi if wrapped == -math.pi else wrapped


class DesignParams(BaseModel):
    """Normalized lengths d3/d2, d4/d2, r2/d2 of one family member."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    d3: PositiveFloat
    d4: PositiveFloat
    r2: PositiveFloat

    @property
    def L(self):
        return self.d3 ** 2 + self.d4 ** 2 + self.r2 ** 2

    @property
    def reach(self):
        """Upper bound 1 + d3 + d4 + r2 on |p|."""
        return 1.0 + self.d3 + self.d4 + self.r2

    def label(self):
        return f"d3={self.d3:g} r2={self.r2:g} d4={self.d4:g}"


@dataclass(frozen=True)
class JointConfig:
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            object.__setattr__(self, name, wrap_angle(float(getattr(self, name))))

    def as_array(self):
        return np.array([self.theta1, self.theta2, self.theta3])

    def distance(self, other):
        """Largest per-joint angular difference, measured on the circle."""
        return max(abs(wrap_angle(a - b)) for a, b in zip(self.as_array(), other.as_array()))


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite point ({self.x}, {self.y}, {self.z})")

    @property
    def rho(self):
        return math.hypot(self.x, self.y)

    @property
    def R(self):
        return self.x ** 2 + self.y ** 2 + self.z ** 2

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def norm(self):
        return math.sqrt(self.R)


@dataclass(frozen=True)
class TrigQuadraticForm:
    """Coefficients of the θ3-only IK equation at one workspace point."""

    m0: float
    m1: float
    m2: float
    m3: float
    m4: float
    m5: float
    R: float
    L: float

    def derivatives(self, theta):
        """(F, F′, F″, F‴) with respect to θ3."""
        c, s = math.cos(theta), math.sin(theta)
        c2, s2 = math.cos(2.0 * theta), math.sin(2.0 * theta)
        k = self.m4 - self.m5
        f0 = self.m5 * c * c + self.m4 * s * s + self.m3 * c * s + self.m2 * c + self.m1 * s + self.m0
        f1 = k * s2 + self.m3 * c2 - self.m2 * s + self.m1 * c
        f2 = 2.0 * k * c2 - 2.0 * self.m3 * s2 - self.m2 * c - self.m1 * s
        f3 = -4.0 * k * s2 - 4.0 * self.m3 * c2 + self.m2 * s - self.m1 * c
        return f0, f1, f2, f3

    def residual(self, theta):
        return self.derivatives(theta)[0]

    def scale(self):
        return max(abs(v) for v in (self.m0, self.m1, self.m2, self.m3, self.m4, self.m5))

    def quartic(self):
        return Quartic.from_coefficients(half_angle_coefficients(
            self.m0, self.m1, self.m2, self.m3, self.m4, self.m5))


def fk(params: DesignParams, q: JointConfig) -> CartesianPoint:
    """Direct kinematic equations with d2 = 1."""
    c1, s1 = math.cos(q.theta1), math.sin(q.theta1)
    c2, s2 = math.cos(q.theta2), math.sin(q.theta2)
    c3, s3 = math.cos(q.theta3), math.sin(q.theta3)
    a = params.d3 + params.d4 * c3
    b = params.r2 + params.d4 * s3
    x = a * c1 * c2 - b * s1 + c1
    y = a * s1 * c2 + b * c1 + s1
    z = -a * s2
    return CartesianPoint(x, y, z)


def section_map(params: DesignParams, theta2, theta3):
    """(ρ, z) of configurations at θ1 = 0; accepts arrays."""
    theta2 = np.asarray(theta2, dtype=float)
    theta3 = np.asarray(theta3, dtype=float)
    a = params.d3 + params.d4 * np.cos(theta3)
    b = params.r2 + params.d4 * np.sin(theta3)
    rho = np.hypot(a * np.cos(theta2) + 1.0, b)
    z = -a * np.sin(theta2)
    return rho, z


def jacobian(params: DesignParams, q: JointConfig) -> np.ndarray:
    """∂(x, y, z)/∂(θ1, θ2, θ3), hand-differentiated."""
    c1, s1 = math.cos(q.theta1), math.sin(q.theta1)
    c2, s2 = math.cos(q.theta2), math.sin(q.theta2)
    c3, s3 = math.cos(q.theta3), math.sin(q.theta3)
    a = params.d3 + params.d4 * c3
    b = params.r2 + params.d4 * s3
    da = -params.d4 * s3
    db = params.d4 * c3
    local = np.array([
        [-b, -a * s2, da * c2],
        [a * c2 + 1.0, 0.0, db],
        [0.0, -a * c2, -da * s2],
    ])
    rot = np.array([[c1, -s1, 0.0], [s1, c1, 0.0], [0.0, 0.0, 1.0]])
    return rot @ local


def jacobian_factors(params: DesignParams, theta2, theta3):
    """
    det J = -d4 · axial · orientation with
    axial = d3 + d4 cosθ3 and orientation = cosθ2 (r2 cosθ3 - d3 sinθ3) - sinθ3.
    """
    c3, s3 = np.cos(theta3), np.sin(theta3)
    axial = params.d3 + params.d4 * c3
    orientation = np.cos(theta2) * (params.r2 * c3 - params.d3 * s3) - s3
    return axial, orientation


def jacobian_det(params: DesignParams, theta2, theta3):
    """Determinant of the position Jacobian (independent of θ1); accepts arrays."""
    axial, orientation = jacobian_factors(params, theta2, theta3)
    return -params.d4 * axial * orientation


def axial_lines(params: DesignParams, rel_tol: float = 1e-9):
    """
    θ3 values where d3 + d4 cosθ3 = 0: two lines when d4 > d3, the single
    tangent line θ3 = π when d4 = d3 within rel_tol, none otherwise.
    """
    ratio = params.d3 / params.d4
    if abs(ratio - 1.0) <= rel_tol:
        return [math.pi]
    if ratio > 1.0:
        return []
    beta = math.acos(-ratio)
    return [-beta, beta]


def half_angle_coefficients(m0, m1, m2, m3, m4, m5):
    """Coefficients (a, b, c, d, e) of (1 + t²)²·F(2 atan t); accepts arrays."""
    a = m5 - m2 + m0
    b = -2.0 * m3 + 2.0 * m1
    c = -2.0 * m5 + 4.0 * m4 + 2.0 * m0
    d = 2.0 * m3 + 2.0 * m1
    e = m5 + m2 + m0
    return a, b, c, d, e


def trig_coefficients_rz(params: DesignParams, R, Z):
    """(m0, ..., m5) from R = x² + y² + z² and Z = z²; accepts arrays."""
    d3, d4, r2, L = params.d3, params.d4, params.r2, params.L
    R = np.asarray(R, dtype=float)
    Z = np.asarray(Z, dtype=float)
    m0 = -(R - Z) + r2 ** 2 + (R + 1.0 - L) ** 2 / 4.0
    m1 = 2.0 * r2 * d4 + (L - R - 1.0) * d4 * r2
    m2 = (L - R - 1.0) * d4 * d3
    m3 = np.full_like(R, 2.0 * r2 * d3 * d4 ** 2)
    m4 = np.full_like(R, d4 ** 2 * (r2 ** 2 + 1.0))
    m5 = np.full_like(R, d3 ** 2 * d4 ** 2)
    return m0, m1, m2, m3, m4, m5


def ik_coefficients_rz(params: DesignParams, R, Z):
    """(N, 5) quartic coefficients for arrays of R and Z."""
    return np.stack(half_angle_coefficients(*trig_coefficients_rz(params, R, Z)), axis=-1)


def trig_coeffs(params: DesignParams, p: CartesianPoint) -> TrigQuadraticForm:
    m = [float(v) for v in trig_coefficients_rz(params, p.R, p.z ** 2)]
    return TrigQuadraticForm(*m, R=p.R, L=params.L)


def ik_quartic_rz(params: DesignParams, R: float, Z: float) -> Quartic:
    m = [float(v) for v in trig_coefficients_rz(params, R, Z)]
    return Quartic.from_coefficients(half_angle_coefficients(*m))


def ik_quartic(params: DesignParams, p: CartesianPoint) -> Quartic:
    return trig_coeffs(params, p).quartic()


def solve_ik(params: DesignParams, p: CartesianPoint, *, eps_ik: float = 1e-8,
             cluster_tol: float = 1e-6, **root_options) -> list[JointConfig]:
    """
    All configurations reaching p, one per distinct real root of the quartic.

    Raises ContinuumOfSolutionsError when the quartic vanishes identically or
    when a root leaves θ1 or θ2 undetermined (point on the z axis, or
    d3 + d4 cosθ3 = 0).
    """
    quartic = ik_quartic(params, p)
    if quartic.is_zero:
        raise ContinuumOfSolutionsError()
    roots = real_roots(quartic, cluster_tol, **root_options)

    thetas3 = [2.0 * math.atan(t) for t in roots.values]
    if roots.degree_at_infinity:
        thetas3.append(math.pi)

    tol = eps_ik * (1.0 + p.norm())
    R = p.R
    solutions = []
    for theta3 in thetas3:
        a = params.d3 + params.d4 * math.cos(theta3)
        b = params.r2 + params.d4 * math.sin(theta3)
        if abs(a) <= tol:
            if abs(p.z) <= tol and abs(p.rho ** 2 - 1.0 - b ** 2) <= tol:
                raise ContinuumOfSolutionsError("continuum of solutions (θ2 undetermined)")
            continue
        a_c2 = (R - 1.0 - a * a - b * b) / 2.0
        sign = math.copysign(1.0, a)
        candidates = [math.atan2(-p.z * sign, a_c2 * sign)]
        if abs(p.z) <= tol:
            # z = 0: sinθ2 = 0, both branches are checked against the residual
            candidates += [0.0, math.pi]
        for theta2 in candidates:
            x0 = a * math.cos(theta2) + 1.0
            if math.hypot(x0, b) <= tol:
                raise ContinuumOfSolutionsError("continuum of solutions (θ1 undetermined)")
            theta1 = math.atan2(p.y, p.x) - math.atan2(b, x0)
            q = JointConfig(theta1, theta2, theta3)
            if np.linalg.norm(fk(params, q).as_array() - p.as_array()) > tol:
                continue
            if any(q.distance(other) < 1e-9 for other in solutions):
                continue
            solutions.append(q)
    return solutions
