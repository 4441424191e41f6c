"""
Real-root machinery for polynomials of degree at most four.

- Quartic / RootSet value types
- Real roots with multiplicities (companion-matrix eigenvalues + clustering)
- Horner evaluation of P and its first three derivatives
- Triple-root refinement over a one-parameter (or multi-parameter) family
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegeneratePolynomialError

# Falling factorials j!/(j-k)! for the powers 4..0, one row per derivative order.
_FALLING = np.array([
    [1, 1, 1, 1, 1],
    [4, 3, 2, 1, 0],
    [12, 6, 2, 0, 0],
    [24, 6, 0, 0, 0],
    [24, 0, 0, 0, 0],
], dtype=float)
_POWERS = np.array([4, 3, 2, 1, 0])


@dataclass(frozen=True)
class Quartic:
    """P(t) = a·t⁴ + b·t³ + c·t² + d·t + e."""

    a: float
    b: float
    c: float
    d: float
    e: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.coefficients):
            raise ValueError(f"non-finite quartic coefficient in {self.coefficients}")

    @classmethod
    def from_coefficients(cls, coeffs):
        a, b, c, d, e = (float(v) for v in coeffs)
        return cls(a, b, c, d, e)

    @property
    def coefficients(self):
        return (self.a, self.b, self.c, self.d, self.e)

    @property
    def is_zero(self):
        return not any(self.coefficients)

    @property
    def scale(self):
        return max(abs(v) for v in self.coefficients)

    def reversed(self):
        """t⁴·P(1/t): roots map t -> 1/t, multiplicities preserved."""
        return Quartic(self.e, self.d, self.c, self.b, self.a)

    def __call__(self, t):
        return derivative_values(self, t)[0]


@dataclass(frozen=True)
class RootSet:
    """Distinct real roots, ascending, with multiplicities."""

    roots: tuple[tuple[float, int], ...]
    degree_at_infinity: int = 0

    @property
    def values(self):
        return [r for r, _ in self.roots]

    @property
    def multiplicities(self):
        return [m for _, m in self.roots]

    @property
    def distinct_count(self):
        """Distinct real solutions, a root at infinity counted once."""
        return len(self.roots) + (1 if self.degree_at_infinity else 0)

    @property
    def total_multiplicity(self):
        return sum(self.multiplicities) + self.degree_at_infinity


def derivative_values(p: Quartic, t: float):
    """Returns (P, P′, P″, P‴) at t by Horner's scheme."""
    a, b, c, d, e = p.coefficients
    p0 = (((a * t + b) * t + c) * t + d) * t + e
    p1 = ((4.0 * a * t + 3.0 * b) * t + 2.0 * c) * t + d
    p2 = (12.0 * a * t + 6.0 * b) * t + 2.0 * c
    p3 = 24.0 * a * t + 6.0 * b
    return p0, p1, p2, p3


def derivative_scales(p: Quartic, t: float):
    """Natural magnitude of each derivative at t: Σ |c_j|·j!/(j-k)!·|t|^(j-k)."""
    coeffs = np.abs(np.asarray(p.coefficients, dtype=float))
    at = abs(t)
    scales = []
    for k in range(4):
        exps = np.clip(_POWERS - k, 0, None)
        scales.append(float(np.sum(coeffs * _FALLING[k] * at ** exps)))
    return tuple(max(s, np.finfo(float).tiny) for s in scales)


def _eval_derivative(coeffs, k, t):
    """k-th derivative of a descending-order coefficient list at t."""
    n = len(coeffs) - 1
    acc = 0.0
    for j, cj in enumerate(coeffs[: n - k + 1]):
        power = n - j
        acc = acc * t + cj * math.perm(power, k)
    return acc


def _derivative_scale(coeffs, k, t):
    n = len(coeffs) - 1
    return sum(abs(cj) * math.perm(n - j, k) * abs(t) ** (n - j - k)
               for j, cj in enumerate(coeffs[: n - k + 1])) or np.finfo(float).tiny


def _polish(coeffs, k, t, iterations=30):
    """Newton on the k-th derivative, which has a simple root at an m=(k+1)-fold root."""
    best = t
    best_val = abs(_eval_derivative(coeffs, k, t))
    for _ in range(iterations):
        f = _eval_derivative(coeffs, k, t)
        df = _eval_derivative(coeffs, k + 1, t)
        if df == 0.0 or not math.isfinite(f):
            break
        step = f / df
        t = t - step
        val = abs(_eval_derivative(coeffs, k, t))
        if val < best_val:
            best, best_val = t, val
        if abs(step) <= 4 * np.finfo(float).eps * (1.0 + abs(t)):
            break
    return best


def _link(values, radius):
    """Single-linkage clusters of complex values, |vi - vj| <= radius·(1 + max|v|)."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= radius * (1.0 + max(abs(values[i]), abs(values[j]))):
                parent[find(j)] = find(i)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(values[i])
    return list(groups.values())


def _verified_root(coeffs, members, multiplicity_tol):
    """Real root of multiplicity len(members) at the cluster centre, or None."""
    m = len(members)
    centre = complex(np.mean(members))
    if abs(centre.imag) > 1e-3 * (1.0 + abs(centre.real)):
        return None
    c = _polish(coeffs, m - 1, centre.real)
    for k in range(m):
        if abs(_eval_derivative(coeffs, k, c)) > multiplicity_tol * _derivative_scale(coeffs, k, c):
            return None
    return c


def real_roots(p: Quartic, cluster_tol: float = 1e-6, *,
               multiple_root_spread: float = 1e-2,
               multiplicity_tol: float = 1e-10,
               degeneracy: float = 1e-12) -> RootSet:
    """
    All real roots of p with multiplicities.

    Eigenvalues of the companion matrix are grouped first with the wide
    `multiple_root_spread` radius (a k-fold root splits by about eps^(1/k));
    a group is kept as one multiple root only if P, ..., P^(m-1) vanish at
    its polished centre. Groups that fail fall back to `cluster_tol`
    linkage and then to single roots. Leading coefficients that are
    negligible against the rest are deflated and counted in
    `degree_at_infinity` (t → ∞ is θ3 = π).
    """
    if p.is_zero:
        raise DegeneratePolynomialError()

    coeffs = list(p.coefficients)
    at_infinity = 0
    while len(coeffs) > 1 and abs(coeffs[0]) < degeneracy * max(abs(v) for v in coeffs[1:]):
        coeffs.pop(0)
        at_infinity += 1
    if len(coeffs) == 1:
        return RootSet((), at_infinity)

    eig = [complex(v) for v in np.roots(coeffs)]
    found = []
    for group in _link(eig, multiple_root_spread):
        if len(group) > 1:
            root = _verified_root(coeffs, group, multiplicity_tol)
            if root is not None:
                found.append((root, len(group)))
                continue
            subgroups = _link(group, cluster_tol)
        else:
            subgroups = [group]
        for sub in subgroups:
            if len(sub) > 1:
                root = _verified_root(coeffs, sub, multiplicity_tol)
                if root is not None:
                    found.append((root, len(sub)))
                    continue
            for v in sub:
                if abs(v.imag) <= cluster_tol * (1.0 + abs(v.real)):
                    found.append((_polish(coeffs, 0, v.real), 1))

    found.sort()
    merged = []
    for value, mult in found:
        if merged and abs(value - merged[-1][0]) <= cluster_tol * (1.0 + abs(value)):
            prev, prev_mult = merged[-1]
            merged[-1] = ((prev * prev_mult + value * mult) / (prev_mult + mult), prev_mult + mult)
        else:
            merged.append((value, mult))
    return RootSet(tuple((float(v), int(m)) for v, m in merged), at_infinity)


def count_real_roots(coeffs, *, imag_tol: float = 1e-7, degeneracy: float = 1e-12):
    """
    Vectorized posture counting: number of real roots of each row of an
    (N, 5) coefficient array, a deflated root at infinity counted once.
    Counts are taken on raw eigenvalues, so simple roots only; rows whose
    leading coefficient is degenerate go through `real_roots`.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    counts = np.zeros(len(coeffs), dtype=int)
    rest = np.max(np.abs(coeffs[:, 1:]), axis=1)
    regular = np.abs(coeffs[:, 0]) >= degeneracy * rest
    regular &= np.abs(coeffs[:, 0]) > 0

    if np.any(regular):
        monic = coeffs[regular, 1:] / coeffs[regular, :1]
        companion = np.zeros((len(monic), 4, 4))
        companion[:, 0, :] = -monic
        companion[:, 1, 0] = 1.0
        companion[:, 2, 1] = 1.0
        companion[:, 3, 2] = 1.0
        eig = np.linalg.eigvals(companion)
        is_real = np.abs(eig.imag) <= imag_tol * (1.0 + np.abs(eig.real))
        counts[regular] = np.sum(is_real, axis=1)

    for i in np.flatnonzero(~regular):
        quartic = Quartic.from_coefficients(coeffs[i])
        if quartic.is_zero:
            raise DegeneratePolynomialError()
        counts[i] = real_roots(quartic, degeneracy=degeneracy).distinct_count
    return counts


@dataclass(frozen=True)
class TripleRoot:
    """A certified solution of P = P′ = P″ = 0 with P‴ ≠ 0."""

    t: float
    params: tuple[float, ...]
    theta: float
    residuals: tuple[float, float, float]
    p3: float


QuarticFamily = Callable[[np.ndarray], Quartic]


def _inflection_near(q: Quartic, t_guess: float) -> Optional[float]:
    """Real root of P″ closest to t_guess; P″ is at most quadratic."""
    a, b, c, _, _ = q.coefficients
    coeffs = [12.0 * a, 6.0 * b, 2.0 * c]
    while coeffs and coeffs[0] == 0.0:
        coeffs.pop(0)
    if len(coeffs) < 2:
        return None
    roots = [complex(v) for v in np.roots(coeffs)]
    real = [v.real for v in roots if abs(v.imag) <= 1e-9 * (1.0 + abs(v.real))]
    if not real:
        return None
    return min(real, key=lambda v: abs(v - t_guess))


def triple_root_refine(family: QuarticFamily, seed: tuple[float, Sequence[float] | float], *,
                       eps_triple: float = 1e-10,
                       eps_nondeg: float = 1e-6,
                       trust_radius: float = 0.1,
                       max_iter: int = 60) -> Optional[TripleRoot]:
    """
    Solves {P, P′, P″} = 0 over (t, family parameters).

    t is pinned to the root of P″ nearest the current iterate, which is a
    simple root wherever P‴ ≠ 0. Damped Newton (least squares when the
    family has a single parameter) then drives (P, P′) at that t to zero
    over the parameters alone; the system {P″ = 0, P = P′ = 0} stays
    regular at a triple root, unlike the full one.

    Residuals are measured relative to the derivative scales at the seed.
    Iterates must stay within trust_radius·(1 + |seed|) of the seed in every
    coordinate; leaving that box or stagnating returns None. When |t| > 1 the
    reversed polynomial in u = 1/t is refined instead.
    """
    t0, params0 = seed
    params0 = np.atleast_1d(np.asarray(params0, dtype=float))
    reciprocal = abs(t0) > 1.0

    def quartic_at(p):
        q = family(p)
        return q.reversed() if reciprocal else q

    u0 = 1.0 / t0 if reciprocal else float(t0)
    scales = np.array(derivative_scales(quartic_at(params0), u0))
    box = trust_radius * (1.0 + np.abs(np.concatenate([[u0], params0])))

    def reduced(p, u_guess):
        """(u(p), scaled (P, P′, P″) at u(p)) or None when P″ has no real root."""
        q = quartic_at(p)
        u = _inflection_near(q, u_guess)
        if u is None:
            return None
        return u, np.array(derivative_values(q, u)[:3]) / scales[:3]

    def jacobian(p, u):
        cols = []
        for i in range(len(p)):
            h = 1e-6 * (1.0 + abs(p[i]))
            pp, pm = p.copy(), p.copy()
            pp[i] += h
            pm[i] -= h
            plus, minus = reduced(pp, u), reduced(pm, u)
            if plus is None or minus is None:
                return None
            cols.append((plus[1][:2] - minus[1][:2]) / (2.0 * h))
        return np.column_stack(cols)

    p = params0.copy()
    state = reduced(p, u0)
    if state is None:
        return None
    u, r = state
    for _ in range(max_iter):
        norm = np.max(np.abs(r))
        if norm < eps_triple:
            break
        jac = jacobian(p, u)
        if jac is None:
            return None
        step, *_ = np.linalg.lstsq(jac, -r[:2], rcond=None)
        lam = 1.0
        for _ in range(12):
            trial = reduced(p + lam * step, u)
            if trial is not None and np.max(np.abs(trial[1])) < norm:
                break
            lam *= 0.5
        else:
            logging.debug(f"triple_root_refine: stagnated at residual {norm:.3e}")
            return None
        p = p + lam * step
        u, r = trial
        if abs(u - u0) > box[0] or np.any(np.abs(p - params0) > box[1:]):
            logging.debug("triple_root_refine: left the trust region")
            return None
    else:
        return None

    if np.max(np.abs(r)) >= eps_triple:
        return None
    p3 = derivative_values(quartic_at(p), u)[3]
    if abs(p3) <= eps_nondeg * scales[3]:
        return None

    if reciprocal:
        t = math.inf if u == 0.0 else 1.0 / u
        theta = math.copysign(math.pi, u) - 2.0 * math.atan(u)
        if theta <= -math.pi:
            theta += 2.0 * math.pi
    else:
        t = u
        theta = 2.0 * math.atan(u)
    residuals = tuple(float(v) for v in np.abs(r) * scales[:3])
    return TripleRoot(float(t), tuple(float(v) for v in p), float(theta), residuals, float(p3))
