import numpy as np
import pytest

from elastobranch.assembly import Discretization
from elastobranch.materials import MooneyRivlin, NeoHookean
from elastobranch.mesh import build_box_mesh
from elastobranch.probes import (DivFreeField, flow_map, global_min_probe,
                                 quasiconvexity_probe, uniqueness_probe)


def test_field_is_divergence_free_and_compact():
    field = DivFreeField(amplitude=0.1)
    rng = np.random.default_rng(0)
    pts = rng.random((50, 3))
    g = field.grad(pts)
    assert np.abs(np.trace(g, axis1=-2, axis2=-1)).max() == 0.0
    # a zero band of width margin hugs every face of the unit cube
    edge = np.array([[0.05, 0.5, 0.5], [0.5, 0.97, 0.5], [0.5, 0.5, 0.02]])
    assert np.abs(field.value(edge)).max() == 0.0
    assert np.abs(field.grad(edge)).max() == 0.0
    center = np.array([0.5, 0.4, 0.6])
    assert np.abs(field.value(center)).max() > 1e-4


def test_field_gradient_matches_finite_differences():
    field = DivFreeField(amplitude=0.07)
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(10):
        x = 0.2 + 0.6 * rng.random(3)
        g = field.grad(x)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (field.value(x + e) - field.value(x - e)) / (2 * h)
            assert np.abs(g[:, j] - fd).max() < 1e-8


def test_flow_map_preserves_volume_at_fourth_order():
    field = DivFreeField(amplitude=0.08)
    rng = np.random.default_rng(2)
    pts = 0.15 + 0.7 * rng.random((40, 3))
    x_coarse, j_coarse = flow_map(field, pts, 100)
    x_fine, j_fine = flow_map(field, pts, 200)
    d_coarse = np.abs(np.linalg.det(j_coarse) - 1.0).max()
    d_fine = np.abs(np.linalg.det(j_fine) - 1.0).max()
    assert d_fine > 0.0
    # classical RK4: halving the step cuts the defect by about 2^4
    assert 10.0 < d_coarse / d_fine < 30.0
    # streamlines are closed level sets; nothing escapes the cube
    assert x_fine.min() >= 0.0 and x_fine.max() <= 1.0
    assert np.abs(x_fine - pts).max() > 1e-3


def test_global_min_probe_on_polyconvex_models():
    for mat in (NeoHookean(mu=1.0), MooneyRivlin(c1=0.5, c2=0.125)):
        rep = global_min_probe(mat, 2000, seed=0)
        assert rep.passed
        assert rep.min_value > -1e-12
        assert rep.n_samples == 2000
        assert rep.argmin_f.shape == (3, 3)
    with pytest.raises(ValueError):
        global_min_probe(NeoHookean(), 0)


def test_global_min_probe_negative_control():
    class Sunken:
        def energy(self, f):
            f = np.asarray(f)
            d = f - np.eye(3)
            return -np.einsum('...ij,...ij->...', d, d)

    rep = global_min_probe(Sunken(), 500, seed=1)
    assert not rep.passed
    assert rep.min_value < -1e-3


def test_quasiconvexity_probe_positive_and_monotone():
    mat = NeoHookean(mu=1.0)
    small = quasiconvexity_probe(mat, DivFreeField(amplitude=0.04),
                                 flow_steps=200, quad_divisions=4)
    large = quasiconvexity_probe(mat, DivFreeField(amplitude=0.08),
                                 flow_steps=200, quad_divisions=4)
    assert small.passed and large.passed
    assert 0.0 < small.integral < large.integral
    assert large.max_det_defect < 1e-8
    assert large.amplitude == 0.08


def test_quasiconvexity_probe_zero_amplitude_is_exact():
    rep = quasiconvexity_probe(NeoHookean(mu=1.0), DivFreeField(amplitude=0.0),
                               flow_steps=100, quad_divisions=2)
    assert rep.integral == 0.0
    assert rep.max_det_defect == 0.0
    assert rep.passed


def test_quasiconvexity_probe_validation():
    with pytest.raises(ValueError):
        quasiconvexity_probe(NeoHookean(), DivFreeField(amplitude=0.05),
                             flow_steps=50)

    class Drift(DivFreeField):
        def value(self, x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            out[..., 0] = 1.0
            return out

        def grad(self, x):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1] + (3, 3))

    with pytest.raises(ValueError):
        quasiconvexity_probe(NeoHookean(), Drift(amplitude=1.0),
                             flow_steps=100, quad_divisions=2)


def test_quasiconvexity_refinement_stability():
    mat = NeoHookean(mu=1.0)
    a = quasiconvexity_probe(mat, DivFreeField(amplitude=0.05),
                             flow_steps=100, quad_divisions=3)
    b = quasiconvexity_probe(mat, DivFreeField(amplitude=0.05),
                             flow_steps=200, quad_divisions=3)
    assert abs(a.integral - b.integral) < 1e-6 * max(1.0, abs(b.integral))


def test_uniqueness_probe_zero_load_certified():
    mesh = build_box_mesh((1.0, 1.0, 1.0), (2, 2, 2))
    rep = uniqueness_probe(NeoHookean(mu=1.0), mesh, n_starts=5,
                           start_radius=0.05, seed=0)
    assert rep.passed
    assert rep.certified
    assert "certified" in rep.note and "not certified" not in rep.note
    assert rep.n_converged == 5
    assert rep.n_failed == 0
    assert rep.max_norm < 1e-9


def test_uniqueness_probe_accepts_discretization_and_flags_bad_origin():
    mesh = build_box_mesh(
        (1.0, 1.0, 1.0), (2, 2, 2),
        keep_cell=lambda c: not (c[0] > 0.5 and c[1] > 0.5))
    disc = Discretization(mesh)
    rep = uniqueness_probe(NeoHookean(mu=1.0), disc, n_starts=3,
                           start_radius=0.02, seed=1,
                           origin=(0.75, 0.25, 0.5))
    assert not rep.certified
    assert "not certified" in rep.note
    assert rep.passed                 # the solve still lands on zero
    with pytest.raises(ValueError):
        uniqueness_probe(NeoHookean(), mesh, n_starts=0)
