"""
Classification of one manipulator and of families of manipulators.

- classify: posture kind, genericity, aspects, cusps, homotopy class
- surface1 / surface2: the two separating surfaces of the parameter space
- transition_scan: signature changes along a parameter segment
- sweep: classification of a parameter grid
"""

import math
import logging
from collections import Counter
from typing import Callable, Iterable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator
from scipy import ndimage, optimize

from .app_config import RunConfig
from .errors import AtlasError, ClassificationError
from .joint_topology import count_aspects, genericity, homotopy_class, singular_curves
from .kinematics import DesignParams
from .workspace_analysis import (SECTION_CONVENTION, confirmed_regions, curve_images,
                                 sample_critical_curves, search_cusps, section_raster)

EXPECTED_GENERIC_QUATERNARY_CLASS = "2(1,0)"


class CuspRecord(BaseModel):
    rho: float
    z: float
    t: float
    theta3: float


class Signature(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["binary", "quaternary"]
    generic: bool
    n_aspects: int
    n_cusps: int
    homotopy: Optional[str] = None

    @property
    def class_label(self):
        """Class column: binary, n.g (non-generic) or the homotopy class."""
        if self.kind == "binary":
            return "binary"
        if not self.generic:
            return "n.g"
        return self.homotopy or "n.g"

    def __str__(self):
        return (f"{self.kind}/{'generic' if self.generic else 'non-generic'}/"
                f"{self.n_aspects} aspects/{self.n_cusps} cusps/{self.class_label}")


class ClassificationReport(BaseModel):
    params: DesignParams
    kind: Literal["binary", "quaternary"]
    generic: bool
    witness: Optional[tuple[float, float]] = None
    n_aspects: int = Field(ge=2)
    n_cusps: int = Field(ge=0)
    homotopy: Optional[str] = None
    cuspidal: bool
    max_postures: int
    cusps: list[CuspRecord] = Field(default_factory=list)
    dropped_cusp_candidates: int = 0
    section_convention: str = SECTION_CONVENTION
    meta_rule_violations: list[str] = Field(default_factory=list)
    tolerances: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self):
        if self.cuspidal != (self.n_cusps > 0):
            raise ValueError("cuspidal must hold exactly when cusps exist")
        if self.homotopy is not None and not (self.generic and self.kind == "quaternary"):
            raise ValueError("homotopy class only applies to generic quaternary manipulators")
        return self

    @property
    def signature(self):
        return Signature(kind=self.kind, generic=self.generic, n_aspects=self.n_aspects,
                         n_cusps=self.n_cusps, homotopy=self.homotopy)

    @property
    def class_label(self):
        return self.signature.class_label


def check_meta_rules(report: ClassificationReport) -> list[str]:
    """Structural rules every classification of this family satisfies."""
    violations = []
    if report.kind == "binary" and not (report.generic and report.n_cusps == 0):
        violations.append("binary manipulator must be generic with no cusp")
    if report.n_cusps == 2 and not (report.kind == "quaternary" and not report.generic
                                    and report.n_aspects == 4):
        violations.append("two-cusp manipulator must be quaternary, non-generic, with 4 aspects")
    if report.generic and report.kind == "quaternary" and not (
            report.n_aspects == 2 and report.homotopy == EXPECTED_GENERIC_QUATERNARY_CLASS):
        violations.append(f"generic quaternary manipulator must have 2 aspects and class "
                          f"{EXPECTED_GENERIC_QUATERNARY_CLASS}")
    if report.n_cusps not in (0, 2, 4):
        violations.append(f"cusp count {report.n_cusps} outside {{0, 2, 4}}")
    return violations


def classify(params: DesignParams, run_config: Optional[RunConfig] = None) -> ClassificationReport:
    cfg = run_config or RunConfig()
    logging.info(f"Classifying {params.label()}")
    try:
        raster = section_raster(params, cfg.section_resolution, degeneracy=cfg.degeneracy)
        curves = singular_curves(params, cfg.joint_resolution, eps_curve=cfg.eps_curve)
        search = search_cusps(params, curves, eps_axis=cfg.eps_axis, eps_dedup=cfg.eps_dedup,
                              eps_triple=cfg.eps_triple, eps_nondeg=cfg.eps_nondeg)

        # raster counts of 4 stand only where solve_ik confirms them
        ik_options = cfg.ik_options()
        max_postures = 4 if confirmed_regions(params, raster, 4, **ik_options) else min(raster.max_count, 2)
        if max_postures < 4:
            offset = 2.0 * max(raster.pixel_size)
            max_postures = max(max_postures, sample_critical_curves(
                params, curve_images(params, curves), offset, **ik_options))
        quaternary = max_postures >= 4 or bool(search.cusps)

        generic, witness = genericity(params, cfg.joint_resolution, eps_curve=cfg.eps_curve,
                                      eps_grad=cfg.eps_grad, eps_rank=cfg.eps_rank,
                                      gradient_step=cfg.gradient_step)
        aspects = count_aspects(params, start_resolution=cfg.joint_resolution,
                                max_resolution=cfg.max_joint_resolution)
        homotopy = str(homotopy_class(curves)) if generic and quaternary else None
    except AtlasError as e:
        logging.error(f"Classification of {params.label()} failed: {e}")
        raise ClassificationError(f"classification of {params.label()} failed: {e.args[0]}", e) from e

    report = ClassificationReport(
        params=params,
        kind="quaternary" if quaternary else "binary",
        generic=generic,
        witness=witness,
        n_aspects=aspects.aspect_count,
        n_cusps=len(search.cusps),
        homotopy=homotopy,
        cuspidal=bool(search.cusps),
        max_postures=max(max_postures, 4 if search.cusps else 0),
        cusps=[CuspRecord(rho=c.rho, z=c.z, t=c.t_triple, theta3=c.theta3) for c in search.cusps],
        dropped_cusp_candidates=search.dropped,
        tolerances=cfg.tolerances(),
    )
    report.meta_rule_violations = check_meta_rules(report)
    for violation in report.meta_rule_violations:
        logging.warning(f"{params.label()}: {violation}")
    logging.info(f"{params.label()}: {report.signature}")
    return report


def surface1(params: DesignParams) -> float:
    return params.d3 ** 2 - params.d4 ** 2 + params.r2 ** 2


def surface2(params: DesignParams) -> float:
    """The degree-8 separating polynomial, term by term."""
    d3, d4, r2 = params.d3, params.d4, params.r2
    return (d4**2 * d3**6 - d4**4 * d3**4 + 3 * d4**2 * d3**4 * r2**2 - 2 * d4**2 * d3**4
            + 2 * d4**4 * d3**2 - 2 * d4**4 * d3**2 * r2**2 + d4**2 * d3**2
            + 3 * d4**2 * d3**2 * r2**4 - d3**2 * r2**2 - 2 * d4**4 * r2**2 - d4**4
            + d4**2 * r2**6 + d4**2 * r2**2 + 2 * d4**2 * r2**4)


SURFACES = {"surface1": surface1, "surface2": surface2}


class ParamSegment(BaseModel):
    """Straight segment start -> end in (d3, d4, r2)."""

    start: DesignParams
    end: DesignParams

    @property
    def length(self):
        a = np.array([self.start.d3, self.start.d4, self.start.r2])
        b = np.array([self.end.d3, self.end.d4, self.end.r2])
        return float(np.linalg.norm(b - a))

    def at(self, s: float) -> DesignParams:
        lerp = lambda a, b: a + s * (b - a)
        return DesignParams(d3=lerp(self.start.d3, self.end.d3), d4=lerp(self.start.d4, self.end.d4),
                            r2=lerp(self.start.r2, self.end.r2))


class Transition(BaseModel):
    s: float
    params: DesignParams
    before: Signature
    after: Signature
    intermediate: list[Signature] = Field(default_factory=list)
    nearest_roots: dict[str, Optional[float]] = Field(default_factory=dict)
    distances: dict[str, Optional[float]] = Field(default_factory=dict)


class ScanPoint(BaseModel):
    s: float
    params: DesignParams
    signature: Optional[Signature] = None
    error: Optional[str] = None


class ScanResult(BaseModel):
    segment: ParamSegment
    points: list[ScanPoint]
    transitions: list[Transition]
    surface_roots: dict[str, list[float]]


def surface_roots(segment: ParamSegment, samples: int = 2001) -> dict[str, list[float]]:
    """Roots s ∈ [0, 1] of each separating surface along the segment."""
    s = np.linspace(0.0, 1.0, samples)
    roots = {}
    for name, surface in SURFACES.items():
        f = lambda u: surface(segment.at(float(u)))
        values = np.array([f(u) for u in s])
        found = [float(u) for u, v in zip(s, values) if v == 0.0]
        for k in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
            found.append(float(optimize.brentq(f, s[k], s[k + 1], xtol=1e-12)))
        roots[name] = sorted(found)
    return roots


def _signature_at(segment, s, classify_fn):
    params = segment.at(s)
    try:
        return ScanPoint(s=s, params=params, signature=classify_fn(params).signature)
    except AtlasError as e:
        logging.warning(f"scan: classification failed at s={s:.6f}: {e}")
        return ScanPoint(s=s, params=params, error=str(e))


def transition_scan(segment: ParamSegment, steps: int = 16, *, precision: float = 1e-4,
                    run_config: Optional[RunConfig] = None,
                    classify_fn: Optional[Callable[[DesignParams], ClassificationReport]] = None) -> ScanResult:
    """
    Classifies steps + 1 evenly spaced points, then bisects every signature
    change until the bracket is shorter than `precision` in parameter units.
    Bisection tracks where the far-side signature begins; any other signature
    met inside the bracket is kept in `intermediate`.
    Each transition carries the nearest root of both surfaces without
    attributing it to either.
    """
    if steps < 8:
        raise ValueError(f"steps must be at least 8, got {steps}")
    classify_fn = classify_fn or (lambda p: classify(p, run_config))
    length = segment.length or 1.0

    points = [_signature_at(segment, i / steps, classify_fn) for i in range(steps + 1)]
    roots = surface_roots(segment)
    transitions = []
    ok = [p for p in points if p.signature is not None]
    for lo, hi in zip(ok, ok[1:]):
        if lo.signature == hi.signature:
            continue
        a, b = lo, hi
        passed = []
        while (b.s - a.s) * length > precision:
            mid = _signature_at(segment, (a.s + b.s) / 2.0, classify_fn)
            if mid.signature is None:
                break
            if mid.signature == hi.signature:
                b = mid
            else:
                a = mid
                if mid.signature != lo.signature and mid.signature not in passed:
                    passed.append(mid.signature)
        s = (a.s + b.s) / 2.0
        nearest, distances = {}, {}
        for name, values in roots.items():
            best = min(values, key=lambda r: abs(r - s), default=None)
            nearest[name] = best
            distances[name] = None if best is None else abs(best - s) * length
        transitions.append(Transition(s=s, params=segment.at(s), before=lo.signature, after=hi.signature,
                                      intermediate=passed, nearest_roots=nearest, distances=distances))
        logging.info(f"scan: {lo.signature} -> {hi.signature} at s={s:.6f}")
        if passed:
            logging.warning(f"scan: passed {len(passed)} intermediate signatures before s={s:.6f}")
    return ScanResult(segment=segment, points=points, transitions=transitions, surface_roots=roots)


class SweepAxis(BaseModel):
    start: PositiveFloat
    stop: PositiveFloat
    step: PositiveFloat

    def values(self):
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 12) for k in range(max(n, 0))]


class SweepGrid(BaseModel):
    """A Cartesian grid over (d3, r2, d4), or an explicit list of points."""

    d3: Optional[SweepAxis] = None
    r2: Optional[SweepAxis] = None
    d4: Optional[SweepAxis] = None
    points: list[DesignParams] = Field(default_factory=list)

    def params(self) -> list[DesignParams]:
        if self.points:
            return list(self.points)
        if not (self.d3 and self.r2 and self.d4):
            return []
        return [DesignParams(d3=d3, r2=r2, d4=d4)
                for d3 in self.d3.values() for r2 in self.r2.values() for d4 in self.d4.values()]


class SweepRecord(BaseModel):
    index: int
    params: DesignParams
    signature: Optional[Signature] = None
    status: Literal["ok", "failed"] = "ok"
    diagnostic: Optional[str] = None


def classify_record(index: int, params: DesignParams, run_config: Optional[RunConfig] = None) -> SweepRecord:
    try:
        report = classify(params, run_config)
    except AtlasError as e:
        logging.warning(f"sweep: point {index} ({params.label()}) failed: {e}")
        return SweepRecord(index=index, params=params, status="failed", diagnostic=str(e))
    except Exception as e:
        logging.error(f"sweep: point {index} ({params.label()}) raised {type(e).__name__}: {e}")
        return SweepRecord(index=index, params=params, status="failed", diagnostic=f"{type(e).__name__}: {e}")
    diagnostic = "; ".join(report.meta_rule_violations) or None
    return SweepRecord(index=index, params=params, signature=report.signature, diagnostic=diagnostic)


def sweep(grid: SweepGrid, run_config: Optional[RunConfig] = None, *,
          map_fn: Callable = map) -> list[SweepRecord]:
    """Classifies every grid point; records come back in grid order whatever map_fn does."""
    points = grid.params()
    records = list(map_fn(lambda item: classify_record(item[0], item[1], run_config), enumerate(points)))
    return sorted(records, key=lambda r: r.index)


class SweepSummary(BaseModel):
    signatures: dict[str, int]
    failed: int
    zones_by_d4: dict[float, int]


def summarize(records: Iterable[SweepRecord]) -> SweepSummary:
    """
    Distinct signature counts and, for each d4 value, the number of
    signature-connected zones in the (d3, r2) plane.
    """
    records = list(records)
    counts = Counter(str(r.signature) for r in records if r.signature is not None)
    failed = sum(1 for r in records if r.status == "failed")

    zones = {}
    for d4 in sorted({r.params.d4 for r in records}):
        band = [r for r in records if r.params.d4 == d4 and r.signature is not None]
        d3s = sorted({r.params.d3 for r in band})
        r2s = sorted({r.params.r2 for r in band})
        if not band:
            continue
        ids = {}
        grid = np.full((len(d3s), len(r2s)), -1)
        for r in band:
            grid[d3s.index(r.params.d3), r2s.index(r.params.r2)] = ids.setdefault(str(r.signature), len(ids))
        zones[d4] = sum(ndimage.label(grid == k)[1] for k in ids.values())
    return SweepSummary(signatures=dict(sorted(counts.items())), failed=failed, zones_by_d4=zones)
