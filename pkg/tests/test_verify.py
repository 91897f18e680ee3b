"""Structural verification checks and their report plumbing."""

import json
import math

import numpy as np
import pytest

from stressfem.mesh import SimplexGeometry, generate_uniform_mesh
from stressfem.verify import (
    NORMAL_TRACE_DIMS,
    CheckResult,
    VerificationReport,
    check_conforming_trace_bound,
    check_direct_sum_patch,
    check_div_bubble_range,
    check_face_bubble_duality,
    check_local_decomposition,
    check_nc_moments,
    check_space_dimensions,
    check_trace_dimensions,
    check_unisolvency,
    default_trace_patch,
    perturbed_simplex,
    reference_simplex,
)


# ---------------------------------------------------------------------------
# geometry helpers


@pytest.mark.parametrize("n", [2, 3])
def test_perturbed_simplex_stays_nondegenerate(n):
    rng = np.random.default_rng(3)
    ref_vol = 1.0 / math.factorial(n)
    for _ in range(20):
        g = perturbed_simplex(n, rng)
        assert g.volume > 0.2 * ref_vol


def test_default_trace_patch_shares_a_face():
    for n in (2, 3):
        gA, gB = default_trace_patch(n)
        np.testing.assert_allclose(gA.vertices[1:], gB.vertices[1:])
        nu = gA.face_normals[0]
        shared = gA.vertices[1]
        assert (gA.vertices[0] - shared) @ nu < 0
        assert (gB.vertices[0] - shared) @ nu > 0


# ---------------------------------------------------------------------------
# local checks


@pytest.mark.parametrize("n,k", [(2, 0), (2, 1), (2, 2), (3, 0), (3, 1)])
def test_unisolvency_check(n, k):
    r = check_unisolvency(n, k, trials=2)
    assert r.passed
    npairs = n * (n + 1) // 2
    assert r.details["matrix_size"] == npairs * math.comb(n + k + 1, n)
    assert r.details["min_scaled_singular_value"] > 1e-3


@pytest.mark.parametrize("n,k", [(2, 1), (3, 0)])
def test_local_decomposition_check(n, k):
    r = check_local_decomposition(n, k, trials=2)
    assert r.passed
    assert r.computed == (n * (n + 1) // 2) * math.comb(n + k + 1, n)


@pytest.mark.parametrize("n,k", [(2, 0), (2, 2), (3, 1)])
def test_face_bubble_duality_check(n, k):
    r = check_face_bubble_duality(n, k)
    assert r.passed
    assert r.details["max_deviation"] < 1e-12


@pytest.mark.parametrize("n,k", [(2, 1), (3, 2)])
def test_nc_moment_check(n, k):
    r = check_nc_moments(n, k)
    assert r.passed


@pytest.mark.parametrize("n,k,expected", [
    (2, 0, 0), (2, 1, 3), (2, 2, 9), (3, 1, 6), (3, 2, 24),
])
def test_div_bubble_range_check(n, k, expected):
    r = check_div_bubble_range(n, k)
    assert r.passed
    assert r.computed == expected


@pytest.mark.parametrize("n,k", sorted(NORMAL_TRACE_DIMS))
def test_trace_dimension_check(n, k):
    r = check_trace_dimensions(n, k)
    assert r.passed
    assert tuple(r.computed) == NORMAL_TRACE_DIMS[(n, k)]


# ---------------------------------------------------------------------------
# the two-element conformity obstruction


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2)])
def test_conforming_trace_bound_holds(n, k):
    r = check_conforming_trace_bound(n, k)
    assert r.passed
    assert r.computed <= 1
    # too few independent moments to supply the linear vector family
    assert r.details["linear_moment_rank"] < n * n


def test_conforming_trace_bound_family_is_tangential():
    # the achievable traces are richer than one dimension, but the extra
    # members carry no normal component
    r = check_conforming_trace_bound(3, 1)
    assert r.details["trace_family_dim"] == 3
    assert r.computed == 0


def test_conforming_trace_bound_not_applicable_at_matching_order():
    r = check_conforming_trace_bound(2, 2)
    assert r.passed
    assert r.details["applicable"] is False
    assert r.computed >= r.details["rigid_trace_dim"]


def test_conforming_trace_bound_rejects_one_sided_patch():
    gA = SimplexGeometry([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    gB = SimplexGeometry([[0.1, 0.1], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        check_conforming_trace_bound(2, 1, patch=(gA, gB))


def test_conforming_trace_bound_rejects_mismatched_faces():
    gA = SimplexGeometry([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    gB = SimplexGeometry([[0.9, 0.8], [1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(ValueError):
        check_conforming_trace_bound(2, 1, patch=(gA, gB))


# ---------------------------------------------------------------------------
# global checks


@pytest.mark.parametrize("n", [2, 3])
def test_direct_sum_check(n):
    r = check_direct_sum_patch(n)
    assert r.passed
    assert r.details["bubble_rank"] + r.details["vertex_rank"] == r.computed


@pytest.mark.parametrize("dim,m,k,kind,stress_dim", [
    (2, 4, 0, "s1", 208),
    (2, 4, 0, "s2", 155),
    (2, 4, 1, "s1", 416),
    (3, 2, 0, "s2", 378),
])
def test_space_dimension_check(dim, m, k, kind, stress_dim):
    mesh = generate_uniform_mesh(dim, m)
    r = check_space_dimensions(mesh, k, kind)
    assert r.passed
    assert r.computed["stress"] == stress_dim
    assert r.details["face_identity"]


# ---------------------------------------------------------------------------
# report plumbing


def test_check_result_status_tag():
    ok = CheckResult(name="a", passed=True, expected=1, computed=1)
    bad = CheckResult(name="b", passed=False, expected=1, computed=2)
    assert ok.to_dict()["status"] == "pass"
    assert bad.to_dict()["status"] == "fail"


def test_report_aggregates_and_serializes():
    report = VerificationReport()
    report.add(CheckResult(name="a", passed=True, expected=1, computed=1))
    assert report.passed
    report.add(CheckResult(name="b", passed=False, expected=1, computed=2,
                           details={"why": "broken"}))
    assert not report.passed

    payload = json.loads(report.to_json())
    assert payload["passed"] is False
    assert [c["status"] for c in payload["checks"]] == ["pass", "fail"]

    text = report.to_text()
    assert "[PASS] a" in text
    assert "[FAIL] b" in text
    assert "why: broken" in text
    assert "1/2 checks passed" in text


def test_reference_simplex_volume():
    assert reference_simplex(2).volume == pytest.approx(0.5)
    assert reference_simplex(3).volume == pytest.approx(1.0 / 6.0)
