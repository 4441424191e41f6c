import math

import numpy as np
import pytest

from cuspidal_atlas import workspace_analysis
from cuspidal_atlas.app_config import RunConfig
from cuspidal_atlas.joint_topology import SingularCurve, singular_curves
from cuspidal_atlas.kinematics import CartesianPoint, DesignParams, ik_quartic_rz, section_map, solve_ik
from cuspidal_atlas.workspace_analysis import (SectionPoint, confirmed_regions, critical_value_curves,
                                               find_cusps, ik_posture_count, posture_count, posture_regions,
                                               sample_critical_curves, search_cusps, section_raster)

from conftest import orientation_roots, ref_params

FIG1 = DesignParams(d3=2.0, d4=1.5, r2=1.0)


def test_section_point_validation():
    with pytest.raises(ValueError, match="rho must be >= 0"):
        SectionPoint(-0.1, 0.0)
    with pytest.raises(ValueError):
        SectionPoint(math.nan, 0.0)


def test_far_point_has_no_posture():
    params = ref_params("a")
    assert posture_count(params, SectionPoint(10 * params.reach, 0.3)) == 0


def test_raster_resolution_floor():
    with pytest.raises(ValueError, match="resolution must be at least 128"):
        section_raster(FIG1, resolution=64)


def test_quaternary_raster():
    raster = section_raster(FIG1)
    assert raster.counts.shape == (256, 256)
    assert raster.max_count == 4
    histogram = raster.histogram()
    assert set(histogram) <= {0, 2, 4}
    assert histogram[2] > 0
    assert any(r.count == 4 for r in posture_regions(raster))


@pytest.mark.parametrize("key", ["a", "g"])
def test_binary_raster_never_exceeds_two(key):
    raster = section_raster(ref_params(key))
    assert raster.max_count == 2
    assert set(raster.histogram()) <= {0, 2}


def test_row_d_reaches_four_postures():
    params = ref_params("d")
    raster = section_raster(params)
    if raster.max_count < 4:
        images = critical_value_curves(params)
        assert sample_critical_curves(params, images, 0.5 * raster.pixel_size[0]) == 4
    else:
        assert raster.max_count == 4


def test_pixel_lookup_round_trips_axes():
    raster = section_raster(ref_params("a"), resolution=128)
    assert raster.pixel_of(raster.rho_axis[5], raster.z_axis[77]) == (5, 77)
    assert len(list(raster.rows())) == 128 * 128


def test_axial_lines_collapse_to_points():
    images = critical_value_curves(ref_params("b"))
    axial = [c for c in images if c.factor == "axial"]
    assert len(axial) == 2
    assert all(c.degenerate for c in axial)
    assert not any(c.degenerate for c in images if c.factor == "orientation")


@pytest.mark.parametrize("key, expected", [
    ("a", 0), ("b", 0), ("c", 4), ("d", 4), ("e", 2), ("f", 2), ("g", 0), ("h", 4),
])
def test_cusp_counts_match_closed_form(key, expected):
    params = ref_params(key)
    assert 2 * len(orientation_roots(params)) == expected
    cusps = find_cusps(params)
    assert len(cusps) == expected
    for cusp in cusps:
        assert min(abs(math.remainder(cusp.theta3 - r, 2 * math.pi)) for r in orientation_roots(params)) < 1e-4


def test_cusps_are_certified_mirror_pairs():
    cusps = find_cusps(FIG1)
    assert len(cusps) == 4
    for cusp in cusps:
        assert cusp.rho > 0
        assert max(cusp.residuals) < 1e-8
        assert cusp.p3 > 0
        assert any(abs(o.rho - cusp.rho) < 1e-6 and abs(o.z + cusp.z) < 1e-6 for o in cusps)
    assert np.all(np.diff([c.rho for c in cusps]) >= 0)


def test_cusp_positions_stable_under_resolution_doubling():
    coarse = find_cusps(FIG1, resolution=256)
    fine = find_cusps(FIG1, resolution=512)
    assert len(coarse) == len(fine) == 4
    for a in coarse:
        assert min(math.hypot(a.rho - b.rho, a.z - b.z) for b in fine) < 1e-3


def _upper_arc(params, curve):
    """The z > 0 part of a closed singular curve, as an open curve in tracing order."""
    _, z = section_map(params, curve.points[:, 0], curve.points[:, 1])
    upper = z > 0
    start = int(np.flatnonzero(upper & ~np.roll(upper, 1))[0])
    points = np.roll(curve.points, -start, axis=0)
    length = int(np.argmin(np.roll(upper, -start)))
    return SingularCurve.from_points(points[:length], closed=False)


def test_cusp_search_completes_mirror_pairs():
    curves = [c for c in singular_curves(FIG1) if c.factor == "orientation"]
    search = search_cusps(FIG1, [_upper_arc(FIG1, c) for c in curves])
    assert search.candidates == 2
    assert len(search.cusps) == 4
    for cusp in search.cusps:
        assert any(abs(o.rho - cusp.rho) < 1e-9 and abs(o.z + cusp.z) < 1e-9 for o in search.cusps)


def test_row_b_four_count_band_is_not_confirmed():
    # near z = 0 a complex root pair with a tiny imaginary part is counted twice by the raster
    params = ref_params("b")
    raster = section_raster(params)
    assert confirmed_regions(params, raster, 4) == []
    assert sample_critical_curves(params, critical_value_curves(params), 2.0 * max(raster.pixel_size)) <= 2


def test_quaternary_regions_are_confirmed():
    regions = confirmed_regions(FIG1, section_raster(FIG1), 4)
    assert regions
    for region in regions:
        assert ik_posture_count(FIG1, region.rho, region.z) == 4


def test_confirmation_uses_run_tolerances(monkeypatch):
    seen = []

    def recording_solve_ik(params, p, **options):
        seen.append(options)
        return []

    monkeypatch.setattr(workspace_analysis, "solve_ik", recording_solve_ik)
    options = RunConfig(eps_ik=1e-6, cluster_tol=1e-5).ik_options()
    assert confirmed_regions(FIG1, section_raster(FIG1), 4, **options) == []
    assert seen
    assert all(o["eps_ik"] == 1e-6 and o["cluster_tol"] == 1e-5 for o in seen)
    assert all(o["multiplicity_tol"] == 1e-10 for o in seen)


def test_three_postures_coalesce_at_each_cusp():
    for cusp in find_cusps(FIG1):
        quartic = ik_quartic_rz(FIG1, cusp.rho ** 2 + cusp.z ** 2, cusp.z ** 2)
        roots = np.roots(quartic.coefficients)
        assert np.sum(np.abs(roots - cusp.t_triple) < 1e-2 * (1 + abs(cusp.t_triple))) == 3
        configs = solve_ik(FIG1, CartesianPoint(cusp.rho, 0.0, cusp.z))
        assert min(abs(math.remainder(q.theta3 - cusp.theta3, 2 * math.pi)) for q in configs) < 1e-3


def test_cusps_lie_on_critical_curves_between_two_and_four_postures():
    raster = section_raster(FIG1)
    pixel = max(raster.pixel_size)
    vertices = np.vstack([c.points for c in critical_value_curves(FIG1) if c.factor == "orientation"])
    for cusp in find_cusps(FIG1):
        assert np.min(np.hypot(vertices[:, 0] - cusp.rho, vertices[:, 1] - cusp.z)) < 2 * pixel
        i, j = raster.pixel_of(cusp.rho, cusp.z)
        window = raster.counts[max(i - 6, 0):i + 7, max(j - 6, 0):j + 7]
        assert {2, 4} <= set(np.unique(window).tolist())


def test_posture_count_changes_by_two_across_critical_curves():
    raster = section_raster(FIG1)
    offset = 2.0 * max(raster.pixel_size)
    cusps = np.array([[c.rho, c.z] for c in find_cusps(FIG1)])
    changes = []
    for curve in critical_value_curves(FIG1):
        if curve.factor != "orientation":
            continue
        tangent = np.gradient(curve.points, axis=0)[::8]
        pts = curve.points[::8]
        norm = np.hypot(tangent[:, 0], tangent[:, 1])
        to_cusps = np.hypot(pts[:, None, 0] - cusps[:, 0], pts[:, None, 1] - cusps[:, 1])
        far_from_cusps = to_cusps.min(axis=1) > 8 * offset
        keep = (norm > 0) & far_from_cusps & (np.abs(pts[:, 1]) > 4 * offset) & (pts[:, 0] > 4 * offset)
        normal = np.column_stack([-tangent[keep, 1], tangent[keep, 0]]) / norm[keep, None]
        pts = pts[keep]
        one_side = workspace_analysis.posture_counts_rz(FIG1, *(pts + offset * normal).T)
        other_side = workspace_analysis.posture_counts_rz(FIG1, *(pts - offset * normal).T)
        changes.extend(np.abs(one_side - other_side).tolist())
    assert set(changes) <= {0, 2}
    assert changes.count(2) > 0.8 * len(changes)
