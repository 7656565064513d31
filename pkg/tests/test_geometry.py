"""Geometry primitives: exterior angle, root distance, apertures, cones."""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import radialign as ra
from radialign.geometry import DEGENERACY_TOL


def vectors(dim=3, max_norm=2.0):
    return st.lists(
        st.floats(-max_norm, max_norm, allow_nan=False, width=32),
        min_size=dim,
        max_size=dim,
    ).map(np.asarray)


class TestNormalizeAndSim:
    def test_normalize_unit_norm(self):
        v = ra.normalize([3.0, 4.0])
        npt.assert_allclose(np.linalg.norm(v), 1.0, rtol=0, atol=1e-15)
        npt.assert_allclose(v, [0.6, 0.8], atol=1e-15)

    def test_normalize_zero_raises(self):
        with pytest.raises(ra.ZeroVector):
            ra.normalize(np.zeros(4))

    def test_cosine_sim_known(self):
        assert ra.cosine_sim([1.0, 0.0], [0.0, 2.0]) == pytest.approx(0.0, abs=1e-15)
        assert ra.cosine_sim([1.0, 1.0], [2.0, 2.0]) == pytest.approx(1.0, abs=1e-15)
        assert ra.cosine_sim([1.0, 0.0], [-3.0, 0.0]) == pytest.approx(-1.0, abs=1e-15)

    def test_cosine_sim_clipped(self, rng):
        for _ in range(200):
            a = rng.standard_normal(5)
            b = a * rng.uniform(0.5, 2.0)
            assert -1.0 <= float(ra.cosine_sim(a, b)) <= 1.0

    def test_cosine_sim_broadcasts(self, rng):
        mat = rng.standard_normal((7, 4))
        v = rng.standard_normal(4)
        out = ra.cosine_sim(mat, v)
        assert out.shape == (7,)
        for i in range(7):
            assert out[i] == pytest.approx(float(ra.cosine_sim(mat[i], v)), abs=0)


class TestRootDistance:
    def test_known_value(self):
        assert ra.root_distance([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ra.DimensionMismatch):
            ra.root_distance([0.0, 0.0], [1.0, 2.0, 3.0])

    def test_broadcasts(self, rng):
        r = rng.standard_normal(6)
        mat = rng.standard_normal((11, 6))
        out = ra.root_distance(r, mat)
        npt.assert_allclose(out, np.linalg.norm(mat - r, axis=-1), rtol=0, atol=0)


class TestExteriorAngle:
    def test_collinear_outward_is_zero(self):
        # e2 continues straight past e: the turn angle vanishes
        r = np.zeros(3)
        e = np.array([1.0, 0.0, 0.0])
        e2 = np.array([2.5, 0.0, 0.0])
        assert ra.exterior_angle(r, e, e2) == pytest.approx(0.0, abs=1e-12)

    def test_backtracking_is_pi(self):
        r = np.zeros(2)
        e = np.array([1.0, 0.0])
        e2 = np.array([0.5, 0.0])
        assert ra.exterior_angle(r, e, e2) == pytest.approx(math.pi, abs=1e-12)

    def test_right_angle(self):
        r = np.zeros(2)
        e = np.array([1.0, 0.0])
        e2 = np.array([1.0, 1.0])
        assert ra.exterior_angle(r, e, e2) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_translation_invariance(self, rng):
        for _ in range(50):
            r, e, e2 = rng.standard_normal((3, 5))
            t = rng.standard_normal(5)
            a = ra.exterior_angle(r, e, e2)
            b = ra.exterior_angle(r + t, e + t, e2 + t)
            assert a == pytest.approx(b, abs=1e-9)

    def test_scale_invariance_about_anchor(self, rng):
        # scaling both offsets around e leaves the angle unchanged
        for _ in range(50):
            r, e, e2 = rng.standard_normal((3, 4))
            s, s2 = rng.uniform(0.1, 5.0, size=2)
            a = ra.exterior_angle(r, e, e2)
            b = ra.exterior_angle(e + (r - e) * s, e, e + (e2 - e) * s2)
            assert a == pytest.approx(b, abs=1e-9)

    def test_range(self, rng):
        r = rng.standard_normal((300, 6))
        e = rng.standard_normal((300, 6))
        e2 = rng.standard_normal((300, 6))
        out = ra.exterior_angle(r, e, e2)
        assert out.shape == (300,)
        assert np.all(out >= 0.0) and np.all(out <= math.pi)

    def test_anchor_at_root_degenerate(self):
        with pytest.raises(ra.DegenerateAngle):
            ra.exterior_angle([1.0, 2.0], [1.0, 2.0], [3.0, 4.0])

    def test_second_point_at_anchor_degenerate(self):
        with pytest.raises(ra.DegenerateAngle):
            ra.exterior_angle([0.0, 0.0], [1.0, 2.0], [1.0, 2.0])


class TestHalfAperture:
    def test_formula(self):
        r = np.zeros(2)
        e = np.array([0.5, 0.0])
        assert ra.half_aperture(r, e, eps=0.05) == pytest.approx(math.asin(0.1))

    def test_clamped_inside_epsilon(self):
        r = np.zeros(2)
        e = np.array([0.01, 0.0])
        assert ra.half_aperture(r, e, eps=0.05) == pytest.approx(math.pi / 2)

    def test_monotone_in_distance(self):
        r = np.zeros(3)
        apertures = [
            float(ra.half_aperture(r, np.array([d, 0.0, 0.0]))) for d in (0.2, 0.7, 1.9)
        ]
        assert apertures[0] > apertures[1] > apertures[2]

    def test_epsilon_validated(self):
        with pytest.raises(ValueError):
            ra.half_aperture(np.zeros(2), np.ones(2), eps=0.0)

    def test_at_root_degenerate(self):
        with pytest.raises(ra.DegenerateAngle):
            ra.half_aperture(np.ones(3), np.ones(3))


class TestConeContains:
    def test_matches_angle_aperture_comparison(self, rng):
        for _ in range(300):
            r = rng.standard_normal(4)
            e = rng.standard_normal(4)
            e2 = rng.standard_normal(4)
            xi = float(ra.exterior_angle(r, e, e2))
            theta = float(ra.half_aperture(r, e))
            assert bool(ra.cone_contains(r, e, e2)) == (xi <= theta)

    def test_radially_outward_point_inside(self):
        r = np.zeros(2)
        e = np.array([1.0, 0.0])
        e2 = np.array([2.0, 0.001])
        assert ra.cone_contains(r, e, e2)

    def test_opposite_point_outside(self):
        r = np.zeros(2)
        e = np.array([1.0, 0.0])
        assert not ra.cone_contains(r, e, np.array([0.2, 0.0]))


class TestEmbedding:
    def test_widens_to_float64(self):
        emb = ra.Embedding(id="a", values=np.array([1, 2, 3], dtype=np.float32))
        assert emb.values.dtype == np.float64
        assert emb.dim == 3

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ra.Embedding(id="a", values=np.array([1.0, np.nan]))

    def test_rejects_scalarlike(self):
        with pytest.raises(ra.DimensionMismatch):
            ra.Embedding(id="a", values=np.array([1.0]))

    def test_frozen(self):
        emb = ra.Embedding(id="a", values=np.array([1.0, 2.0]))
        with pytest.raises(Exception):
            emb.id = "b"


@settings(max_examples=200, deadline=None)
@given(vectors(), vectors(), vectors())
def test_exterior_angle_total_range_property(r, e, e2):
    try:
        angle = ra.exterior_angle(r, e, e2)
    except (ra.DegenerateAngle, ra.ZeroVector):
        return
    assert 0.0 <= float(angle) <= math.pi


@settings(max_examples=200, deadline=None)
@given(vectors(dim=4))
def test_normalize_idempotent_property(v):
    norm = np.linalg.norm(np.asarray(v, dtype=np.float64))
    if norm <= DEGENERACY_TOL or not np.isfinite(norm):
        return
    once = ra.normalize(v)
    twice = ra.normalize(once)
    npt.assert_allclose(once, twice, rtol=0, atol=1e-15)
    assert np.linalg.norm(once) == pytest.approx(1.0, abs=1e-12)
