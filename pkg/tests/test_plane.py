import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from feature_curves import synthetic
from feature_curves.errors import DegenerateCluster, SingularFit
from feature_curves.plane import PlanarSet, dump_points_csv, fit_plane, project_to_plane
from oracles import quadric_plane_oracle


def _on_plane(rng, n, b1, b2, noise=0.0):
    xy = rng.uniform(-1, 1, size=(n, 2))
    z = b1 * xy[:, 0] + b2 * xy[:, 1] + rng.normal(scale=noise, size=n)
    P = np.c_[xy, z]
    return P - P.mean(0)


def _check_rotation(R, tol=1e-10):
    assert np.abs(R @ R.T - np.eye(3)).max() <= tol
    assert np.linalg.det(R) == pytest.approx(1.0, abs=tol)


class TestFitPlane:
    def test_exact_plane(self):
        b = fit_plane(_on_plane(np.random.default_rng(0), 50, 2.0, 3.0))
        assert b == pytest.approx((2.0, 3.0), abs=1e-10)

    def test_horizontal(self):
        assert fit_plane(_on_plane(np.random.default_rng(0), 50, 0, 0)) == pytest.approx((0, 0))

    def test_noisy_matches_normal_equations(self):
        P = _on_plane(np.random.default_rng(1), 300, -0.4, 1.7, noise=0.05)
        assert fit_plane(P) == pytest.approx(quadric_plane_oracle(P), rel=1e-10)

    def test_vertical_plane_is_singular(self):
        rng = np.random.default_rng(2)
        P = np.c_[np.zeros(30), rng.uniform(size=30), rng.uniform(size=30)]
        with pytest.raises(SingularFit):
            fit_plane(P - P.mean(0))

    def test_too_few(self):
        with pytest.raises(DegenerateCluster):
            fit_plane(np.zeros((2, 3)))


class TestProjectToPlane:
    def test_planar_cluster_is_rigid(self):
        rng = np.random.default_rng(3)
        P = _on_plane(rng, 80, 1.0, 1.0) + [5, -2, 1]
        Z = project_to_plane(P)
        _check_rotation(Z.frame.rotation)
        assert Z.residuals.max() <= 1e-10
        assert np.abs(pdist(Z.points2d) - pdist(P)).max() <= 1e-9
        assert Z.frame.method == "regression" and Z.frame.flipped

    def test_tilted_noisy_ring(self):
        rng = np.random.default_rng(4)
        sigma = 0.01
        th = rng.uniform(0, 2 * np.pi, 400)
        ring = np.c_[3 * np.cos(th), 3 * np.sin(th), rng.normal(scale=sigma, size=400)]
        R = synthetic.rotation_matrix([1, 2, 0.5], 0.7)
        P = ring @ R.T + [1, 2, 3]
        Z = project_to_plane(P)
        assert Z.residuals.max() <= 4 * sigma
        assert np.abs(pdist(Z.points2d) - pdist(P)).max() <= 2 * Z.residuals.max()

    def test_vertical_plane_uses_pca(self):
        rng = np.random.default_rng(5)
        P = np.c_[np.full(40, 2.0), rng.uniform(size=40), rng.uniform(size=40)]
        Z = project_to_plane(P)
        assert Z.frame.method == "pca"
        assert Z.residuals.max() <= 1e-8
        _check_rotation(Z.frame.rotation)
        assert abs(Z.frame.normal[0]) == pytest.approx(1.0)

    def test_collinear_rejected(self):
        P = np.c_[np.arange(10.0), 2 * np.arange(10.0), np.zeros(10)]
        with pytest.raises(DegenerateCluster):
            project_to_plane(P)

    def test_too_few_points(self):
        with pytest.raises(DegenerateCluster):
            project_to_plane(np.eye(3)[:2])

    def test_accepts_cluster_like(self):
        class Holder:
            points = _on_plane(np.random.default_rng(6), 10, 0.2, 0.1)
        assert len(project_to_plane(Holder())) == 10

    def test_collision_warning(self, caplog):
        xy = np.repeat(np.random.default_rng(7).uniform(size=(10, 2)), 2, axis=0)
        P = np.c_[xy, np.zeros(20)]
        P[::2, 2] = 1e-12
        with caplog.at_level("WARNING"):
            project_to_plane(P)
        assert "collide" in caplog.text

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.floats(-20, 20), st.floats(-20, 20),
           st.floats(0.0, 0.1))
    def test_round_trip_and_rigidity(self, seed, b1, b2, noise):
        rng = np.random.default_rng(seed)
        P = _on_plane(rng, 40, b1, b2, noise) + rng.normal(size=3) * 10
        Z = project_to_plane(P)
        _check_rotation(Z.frame.rotation)
        np.testing.assert_allclose(Z.lift(), P, atol=1e-10 * max(1.0, np.abs(P).max()))
        gap = np.abs(pdist(Z.points2d) - pdist(P)).max()
        assert gap <= 2 * Z.residuals.max() + 1e-9


class TestPlanarSet:
    def test_from_2d_identity(self):
        Z = PlanarSet.from_2d([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(Z.lift(), [[1, 2, 0], [3, 4, 0]])

    def test_frame_round_trip(self):
        rng = np.random.default_rng(8)
        Z = project_to_plane(_on_plane(rng, 30, 0.3, -0.8) + 4)
        q = rng.normal(size=(5, 3))
        np.testing.assert_allclose(Z.frame.to_local(Z.frame.to_world(q)), q, atol=1e-12)

    def test_csv_dump(self, tmp_path):
        path = tmp_path / "z.csv"
        dump_points_csv(PlanarSet.from_2d([[0.5, 1.0]]), path)
        assert path.read_text().splitlines() == ["x,y", "0.5,1.0"]
