"""
Singularity topology on the (θ2, θ3) torus.

- Marching-squares tracing of det J = 0 with periodic chaining
- Aspect counting (connected singularity-free cells, wrap-aware)
- Numerical genericity test
- Homotopy signature n(n2, n3) from unwrapped curve increments
"""

import math
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage, optimize

from .errors import AspectCountUnstableError, CurveTracingError
from .kinematics import (DesignParams, TWO_PI, axial_lines, jacobian_det,
                         jacobian_factors)

BISECTION_STEPS = 60


@dataclass(frozen=True)
class TorusGrid:
    """resolution² nodes, θ = -π + offset + (i + ½)·h on both axes (axis 0 is θ2)."""

    resolution: int
    offset: tuple[float, float] = (0.0, 0.0)

    @property
    def step(self):
        return TWO_PI / self.resolution

    def axis(self, k):
        return -math.pi + self.offset[k] + (np.arange(self.resolution) + 0.5) * self.step

    def mesh(self):
        return np.meshgrid(self.axis(0), self.axis(1), indexing="ij")

    def cell_index(self, k, theta):
        """Index of the cell whose span [θ_i, θ_i + h) contains θ along axis k."""
        pos = (np.asarray(theta) + math.pi - self.offset[k]) / self.step - 0.5
        return np.floor(pos).astype(int) % self.resolution


@dataclass(frozen=True)
class SingularCurve:
    points: np.ndarray = field(repr=False)
    unwrapped_delta: tuple[float, float]
    closed: bool
    factor: str = "orientation"
    suspect: bool = False

    @classmethod
    def from_points(cls, points, closed=True, factor="orientation", suspect=False):
        """Accumulates minimal-image steps between consecutive vertices (and back to the start if closed)."""
        pts = np.asarray(points, dtype=float)
        path = np.vstack([pts, pts[:1]]) if closed else pts
        steps = _wrap(np.diff(path, axis=0))
        delta = tuple(float(v) for v in steps.sum(axis=0))
        return cls(_wrap(pts), delta, closed, factor, suspect)

    @property
    def wraps(self):
        """Whole turns around each joint axis, independent of traversal direction."""
        return tuple(abs(int(round(d / TWO_PI))) for d in self.unwrapped_delta)

    def __len__(self):
        return len(self.points)


@dataclass
class AspectMap:
    resolution: int
    labels: np.ndarray = field(repr=False)
    aspect_count: int
    signs: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class HomotopySignature:
    groups: tuple[tuple[int, tuple[int, int]], ...]

    @property
    def curve_count(self):
        return sum(n for n, _ in self.groups)

    def __str__(self):
        return "+".join(f"{n}({n2},{n3})" for n, (n2, n3) in self.groups)


def _wrap(values):
    return np.remainder(np.asarray(values) + math.pi, TWO_PI) - math.pi


def det_grid(params: DesignParams, grid: TorusGrid):
    theta2, theta3 = grid.mesh()
    return jacobian_det(params, theta2, theta3)


def det_gradient(params: DesignParams, theta2, theta3, step=1e-5):
    """Central-difference gradient (∂/∂θ2, ∂/∂θ3) of det J; accepts arrays."""
    g2 = (jacobian_det(params, theta2 + step, theta3) - jacobian_det(params, theta2 - step, theta3)) / (2 * step)
    g3 = (jacobian_det(params, theta2, theta3 + step) - jacobian_det(params, theta2, theta3 - step)) / (2 * step)
    return g2, g3


def _bisect_edges(params, lo2, lo3, hi2, hi3, f_lo):
    """Vectorized bisection of det J along straight edges from lo to hi."""
    a2, a3, b2, b3 = lo2.copy(), lo3.copy(), hi2.copy(), hi3.copy()
    sign_lo = f_lo > 0
    for _ in range(BISECTION_STEPS):
        m2, m3 = (a2 + b2) / 2, (a3 + b3) / 2
        fm = jacobian_det(params, m2, m3)
        same = (fm > 0) == sign_lo
        a2, a3 = np.where(same, m2, a2), np.where(same, m3, a3)
        b2, b3 = np.where(same, b2, m2), np.where(same, b3, m3)
    return (a2 + b2) / 2, (a3 + b3) / 2


def _classify_factor(params, pts, scale):
    axial, orientation = jacobian_factors(params, pts[:, 0], pts[:, 1])
    axial_scale = params.d3 + params.d4
    orientation_scale = 1.0 + math.hypot(params.r2, params.d3)
    if np.all(np.abs(axial) <= 1e-6 * axial_scale):
        return "axial"
    if np.all(np.abs(orientation) <= 1e-6 * orientation_scale):
        return "orientation"
    return "mixed"


def trace_zero_set(params: DesignParams, grid: TorusGrid, eps_curve=1e-9):
    """
    Marching squares on the periodic grid. Returns (curves, saddle_points, scale)
    where saddle_points are centres of four-crossing cells and scale is
    max |det J| on the grid.
    """
    n = grid.resolution
    h = grid.step
    values = det_grid(params, grid)
    scale = float(np.max(np.abs(values))) or 1.0
    positive = values > 0
    theta2, theta3 = grid.mesh()

    # crossing edges along θ2 (node (i,j) -> (i+1,j)) and along θ3 (node (i,j) -> (i,j+1))
    cross2 = positive != np.roll(positive, -1, axis=0)
    cross3 = positive != np.roll(positive, -1, axis=1)

    vertex = {}
    for axis, cross in ((0, cross2), (1, cross3)):
        idx = np.argwhere(cross)
        if len(idx) == 0:
            continue
        lo2 = theta2[idx[:, 0], idx[:, 1]]
        lo3 = theta3[idx[:, 0], idx[:, 1]]
        hi2 = lo2 + (h if axis == 0 else 0.0)
        hi3 = lo3 + (h if axis == 1 else 0.0)
        v2, v3 = _bisect_edges(params, lo2, lo3, hi2, hi3, values[idx[:, 0], idx[:, 1]])
        base = 0 if axis == 0 else n * n
        for (i, j), p2, p3 in zip(idx, v2, v3):
            vertex[base + i * n + j] = (p2, p3)

    def edge2(i, j):
        return (i % n) * n + (j % n)

    def edge3(i, j):
        return n * n + (i % n) * n + (j % n)

    links = {}
    saddles = []
    ambiguous = set()
    cells = np.argwhere(cross2 | np.roll(cross2, -1, axis=1) | cross3 | np.roll(cross3, -1, axis=0))
    for i, j in cells:
        bottom, top = edge2(i, j), edge2(i, j + 1)
        left, right = edge3(i, j), edge3(i + 1, j)
        present = [e for e in (bottom, right, top, left) if e in vertex]
        if len(present) == 2:
            pairs = [tuple(present)]
        elif len(present) == 4:
            c2, c3 = theta2[i, j] + h / 2, theta3[i, j] + h / 2
            centre = float(jacobian_det(params, c2, c3))
            saddles.append((c2, c3))
            if abs(centre) <= eps_curve * scale:
                ambiguous.update((bottom, right, top, left))
            if (centre > 0) == positive[i, j]:
                pairs = [(bottom, right), (top, left)]
            else:
                pairs = [(bottom, left), (right, top)]
        else:
            continue
        for a, b in pairs:
            links.setdefault(a, []).append(b)
            links.setdefault(b, []).append(a)

    curves = []
    visited = set()
    for start in links:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        prev, current = None, start
        closed = False
        while True:
            options = links[current]
            if len(options) != 2:
                break
            nxt = options[1] if prev is not None and options[0] == prev else options[0]
            if nxt == start:
                closed = True
                break
            if nxt in visited:
                break
            prev, current = current, nxt
            chain.append(current)
            visited.add(current)
        pts = np.array([vertex[e] for e in chain], dtype=float)
        suspect = any(e in ambiguous for e in chain)
        curves.append(SingularCurve.from_points(pts, closed, _classify_factor(params, _wrap(pts), scale),
                                                suspect))
    return curves, saddles, scale


def singular_curves(params: DesignParams, resolution: int = 256, *,
                    offset=(0.0, 0.0), eps_curve: float = 1e-9) -> list[SingularCurve]:
    """
    Closed curves of det J = 0 on the torus. Axial lines the grid cannot
    resolve (the tangent line θ3 = π when d4 = d3, or a pair closer than two
    grid steps) carry no sign change of det J; they are emitted from their
    closed form and flagged suspect.
    """
    if resolution < 64:
        raise ValueError(f"resolution must be at least 64, got {resolution}")
    grid = TorusGrid(resolution, tuple(offset))
    curves, _, _ = trace_zero_set(params, grid, eps_curve)
    return _with_unresolved_axial(params, grid, curves)


def _with_unresolved_axial(params, grid, curves):
    lines = axial_lines(params)
    unresolved = len(lines) == 1 or (len(lines) == 2 and abs(_wrap(lines[1] - lines[0])) < 2 * grid.step)
    if unresolved:
        theta2 = grid.axis(0)
        for theta3 in lines:
            traced = any(c.factor == "axial" and np.all(np.abs(_wrap(c.points[:, 1] - theta3)) < 1e-6)
                         for c in curves)
            if traced:
                continue
            pts = np.column_stack([theta2, np.full_like(theta2, _wrap(theta3))])
            curves.append(SingularCurve(pts, (TWO_PI, 0.0), True, "axial", True))
            logging.debug(f"{params.label()}: emitted unresolved axial line θ3={theta3:.6f}")
    curves.sort(key=lambda c: (c.factor, float(np.min(c.points[:, 1]))))
    return curves


class _UnionFind:
    def __init__(self, size):
        self.parents = list(range(size))

    def find(self, elem):
        p = elem
        while p != self.parents[p]:
            p = self.parents[p]
        while elem != p:
            self.parents[elem], elem = p, self.parents[elem]
        return p

    def union(self, a, b):
        pa, pb = self.find(a), self.find(b)
        if pa != pb:
            self.parents[max(pa, pb)] = min(pa, pb)


def _canonical(labels, uf, count):
    """Relabels components 1..n after unions, in order of first label."""
    roots = {}
    canonical = np.zeros(count + 1, dtype=int)
    for lab in range(1, count + 1):
        canonical[lab] = roots.setdefault(uf.find(lab), len(roots) + 1)
    return np.where(labels > 0, canonical[labels], 0), len(roots)


def _signs(labels, count, positive):
    signs = {}
    for lab in range(1, count + 1):
        cell = np.argwhere(labels == lab)[0]
        signs[lab] = 1 if positive[cell[0], cell[1]] else -1
    return signs


def _join_lenses(labels, count, signs, rows):
    """
    An axial line crossing an orientation curve cuts two lenses off it, one
    on each side of the line, meeting at the two crossing points. Lenses of
    the same det J sign are one aspect. Bands that wrap around θ2 are never
    joined.
    """
    n3 = labels.shape[1]
    wrapping = {lab for lab in range(1, count + 1) if np.all(np.any(labels == lab, axis=1))}

    def beside(k, side):
        found = set()
        for step in (1, 2):
            found |= set(np.unique(labels[:, (k + side * step) % n3]).tolist())
        return found - {0} - wrapping

    uf = _UnionFind(count + 1)
    for k in rows:
        for a in beside(k, -1):
            for b in beside(k, 1):
                if a != b and signs[a] == signs[b]:
                    uf.union(a, b)
    return _canonical(labels, uf, count)


def label_aspects(params: DesignParams, grid: TorusGrid):
    """One labelling pass at fixed resolution; returns (labels, count, signs)."""
    values = det_grid(params, grid)
    positive = values > 0
    # a cell is free when its four corners share the sign of det J
    corners = np.stack([positive, np.roll(positive, -1, 0), np.roll(positive, -1, 1),
                        np.roll(np.roll(positive, -1, 0), -1, 1)])
    uniform = np.all(corners, axis=0) | ~np.any(corners, axis=0)
    rows = sorted({int(grid.cell_index(1, theta3)) for theta3 in axial_lines(params)})
    for k in rows:
        uniform[:, k] = False

    labels, count = ndimage.label(uniform)
    uf = _UnionFind(count + 1)
    for a, b in ((labels[0, :], labels[-1, :]), (labels[:, 0], labels[:, -1])):
        for la, lb in zip(a, b):
            if la and lb:
                uf.union(int(la), int(lb))
    labels, count = _canonical(labels, uf, count)
    labels, joined = _join_lenses(labels, count, _signs(labels, count, positive), rows)
    if joined < count:
        logging.debug(f"{params.label()}: {count - joined} lens pairs joined across axial lines")
    return labels, joined, _signs(labels, joined, positive)


def count_aspects(params: DesignParams, *, start_resolution: int = 256,
                  max_resolution: int = 4096, offset=(0.0, 0.0)) -> AspectMap:
    """
    Connected components of free cells, resolution doubled until two
    successive counts agree.
    """
    resolution = start_resolution
    previous = None
    while resolution <= max_resolution:
        grid = TorusGrid(resolution, tuple(offset))
        labels, count, signs = label_aspects(params, grid)
        logging.debug(f"{params.label()}: {count} aspects at resolution {resolution}")
        if previous is not None and count == previous:
            return AspectMap(resolution, labels, count, signs)
        previous = count
        resolution *= 2
    raise AspectCountUnstableError(f"aspect count unstable up to resolution {max_resolution}")


def _stack_jacobians(params, theta2, theta3):
    """Jacobians at θ1 = 0 for arrays of (θ2, θ3)."""
    c2, s2 = np.cos(theta2), np.sin(theta2)
    c3, s3 = np.cos(theta3), np.sin(theta3)
    a = params.d3 + params.d4 * c3
    b = params.r2 + params.d4 * s3
    da, db = -params.d4 * s3, params.d4 * c3
    zeros = np.zeros_like(a)
    return np.stack([
        np.stack([-b, -a * s2, da * c2], axis=-1),
        np.stack([a * c2 + 1.0, zeros, db], axis=-1),
        np.stack([zeros, -a * c2, -da * s2], axis=-1),
    ], axis=-2)


def _local_minima(values):
    n = len(values)
    if n < 3:
        return list(range(n))
    prev, nxt = np.roll(values, 1), np.roll(values, -1)
    return list(np.flatnonzero((values <= prev) & (values <= nxt)))


def genericity(params: DesignParams, resolution: int = 256, *, eps_curve: float = 1e-9,
               eps_grad: float = 1e-4, eps_rank: float = 1e-6,
               gradient_step: float = 1e-5) -> tuple[bool, Optional[tuple[float, float]]]:
    """
    A manipulator is non-generic when some singular point has a vanishing
    det J gradient or a Jacobian of rank below 2. Candidates are the local
    minima of the gradient norm along traced curves and the saddle cells of
    the tracer, each refined by solving ∇det J = 0.
    """
    grid = TorusGrid(resolution)
    curves, saddles, scale = trace_zero_set(params, grid, eps_curve)
    curves = _with_unresolved_axial(params, grid, curves)

    for curve in curves:
        if curve.suspect:
            witness = tuple(float(v) for v in curve.points[0])
            logging.info(f"{params.label()}: non-generic, suspect curve at {witness}")
            return False, witness

    seeds = []
    for curve in curves:
        g2, g3 = det_gradient(params, curve.points[:, 0], curve.points[:, 1], gradient_step)
        norm = np.hypot(g2, g3) / scale
        if np.min(norm) < eps_grad:
            k = int(np.argmin(norm))
            return False, tuple(float(v) for v in curve.points[k])
        seeds.extend(curve.points[k] for k in _local_minima(norm))

        jac = _stack_jacobians(params, curve.points[:, 0], curve.points[:, 1])
        sv = np.linalg.svd(jac, compute_uv=False)
        low_rank = sv[:, 1] < eps_rank * sv[:, 0]
        if np.any(low_rank):
            k = int(np.argmax(low_rank))
            return False, tuple(float(v) for v in curve.points[k])

    seeds.extend(np.array(s) for s in saddles)

    def gradient(x):
        g2, g3 = det_gradient(params, x[0], x[1], gradient_step)
        return np.array([g2, g3]) / scale

    for seed in seeds:
        sol = optimize.root(gradient, np.asarray(seed, dtype=float), method="hybr")
        if not sol.success:
            continue
        x = _wrap(sol.x)
        if (abs(float(jacobian_det(params, x[0], x[1]))) <= 1e-6 * scale
                and np.linalg.norm(gradient(x)) < eps_grad):
            witness = (float(x[0]), float(x[1]))
            logging.info(f"{params.label()}: non-generic, singular critical point at {witness}")
            return False, witness
    return True, None


def homotopy_class(curves: list[SingularCurve], tol: float = 1e-6) -> HomotopySignature:
    """Groups closed curves by their absolute wrap counts (|n2|, |n3|)."""
    counts = Counter()
    for curve in curves:
        if not curve.closed:
            raise CurveTracingError("untraceable curve")
        wraps = []
        for delta in curve.unwrapped_delta:
            turns = delta / TWO_PI
            if abs(turns - round(turns)) > tol:
                raise CurveTracingError("tracing inconsistency")
            wraps.append(abs(int(round(turns))))
        counts[tuple(wraps)] += 1
    return HomotopySignature(tuple((n, wraps) for wraps, n in sorted(counts.items())))
