import numpy as np
import pytest

from elastobranch.materials import (MooneyRivlin, NeoHookean, make_material,
                                    random_gl_plus, random_rotation,
                                    random_unimodular, solve_stress_free_k,
                                    verify_objectivity)
from elastobranch.tensor import EYE3, apply4, transpose4


def test_energy_reference_values():
    nh = NeoHookean(mu=1.0)
    assert nh.energy(EYE3) == 0.0
    # det = 1 kills the extension term, leaving (1/2)(4 + 1/4 + 1 - 3)
    assert abs(nh.energy(np.diag([2.0, 0.5, 1.0])) - 1.125) < 1e-14


def test_energy_vanishes_on_rotations():
    rng = np.random.default_rng(0)
    nh = NeoHookean(mu=1.0)
    mr = MooneyRivlin(c1=0.3, c2=0.2)
    for _ in range(20):
        q = random_rotation(rng)
        assert abs(nh.energy(q)) < 1e-12
        assert abs(mr.energy(q)) < 1e-12


def test_stress_free_reference():
    for mat in (NeoHookean(mu=2.0), MooneyRivlin(c1=0.7, c2=0.25)):
        assert np.abs(mat.stress(EYE3)).max() == 0.0


def test_extension_constant_closed_forms():
    assert NeoHookean(mu=3.0).k == 3.0
    mr = MooneyRivlin(c1=0.4, c2=0.15)
    assert abs(mr.k - (2 * 0.4 + 4 * 0.15)) < 1e-14
    assert abs(solve_stress_free_k(mr) - mr.k) < 1e-14


def test_extension_invisible_on_unimodular_matrices():
    """On det F = 1 the energy must equal the classical incompressible form."""
    rng = np.random.default_rng(1)
    nh = NeoHookean(mu=1.5)
    mr = MooneyRivlin(c1=0.5, c2=0.125)
    for _ in range(20):
        f = random_unimodular(rng)
        classical_nh = 0.5 * 1.5 * (np.sum(f * f) - 3.0)
        assert abs(nh.energy(f) - classical_nh) < 1e-12
        cf = np.linalg.det(f) * np.linalg.inv(f).T
        classical_mr = 0.5 * (np.sum(f * f) - 3.0) + 0.125 * (np.sum(cf * cf) - 3.0)
        assert abs(mr.energy(f) - classical_mr) < 1e-12


def test_stress_matches_energy_finite_differences():
    rng = np.random.default_rng(2)
    h = 1e-5
    for mat in (NeoHookean(mu=1.0), MooneyRivlin(c1=0.6, c2=0.2)):
        for _ in range(50):
            f = random_gl_plus(rng)
            d = rng.standard_normal((3, 3))
            fd = (mat.energy(f + h * d) - mat.energy(f - h * d)) / (2 * h)
            an = float(np.sum(mat.stress(f) * d))
            assert abs(an - fd) / max(1.0, abs(fd)) < 1e-5


def test_elasticity_matches_stress_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-5
    for mat in (NeoHookean(mu=1.0), MooneyRivlin(c1=0.6, c2=0.2)):
        for _ in range(50):
            f = random_gl_plus(rng)
            d = rng.standard_normal((3, 3))
            fd = (mat.stress(f + h * d) - mat.stress(f - h * d)) / (2 * h)
            an = apply4(mat.elasticity(f), d)
            assert np.abs(an - fd).max() / max(1.0, np.abs(fd).max()) < 1e-5


def test_elasticity_major_symmetry():
    rng = np.random.default_rng(4)
    for mat in (NeoHookean(mu=2.0), MooneyRivlin(c1=0.5, c2=0.3)):
        for _ in range(10):
            c = mat.elasticity(random_gl_plus(rng))
            assert np.abs(c - transpose4(c)).max() < 1e-10


def test_domain_errors_on_nonpositive_det():
    nh = NeoHookean(mu=1.0)
    bad = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        nh.energy(bad)
    with pytest.raises(ValueError):
        nh.stress(bad)
    with pytest.raises(ValueError):
        nh.elasticity(np.diag([1.0, 0.0, 1.0]))


def test_parameter_validation():
    with pytest.raises(ValueError):
        NeoHookean(mu=0.0)
    with pytest.raises(ValueError):
        MooneyRivlin(c1=-0.1, c2=0.2)
    with pytest.raises(ValueError):
        MooneyRivlin(c1=0.0, c2=0.0)


def test_make_material_ids():
    assert isinstance(make_material("neo-hookean", mu=2.0), NeoHookean)
    assert isinstance(make_material("mooney-rivlin", c1=0.5, c2=0.1), MooneyRivlin)
    with pytest.raises(ValueError):
        make_material("hencky")


def test_solve_stress_free_k_rejects_anisotropic_base():
    class Broken(NeoHookean):
        def base_stress(self, f):
            g = super().base_stress(f)
            return g + 0.1 * np.outer(EYE3[0], EYE3[1])

    with pytest.raises(ValueError):
        Broken(mu=1.0)


def test_objectivity_report():
    rng = np.random.default_rng(5)
    rep = verify_objectivity(NeoHookean(mu=1.0), trials=100, rng=rng)
    assert rep.passed
    assert rep.max_deviation < 1e-10
    assert rep.trials == 100


def test_objectivity_negative_control():
    """A frame-dependent energy term must be caught by the sampler."""
    class Tilted(NeoHookean):
        def energy(self, f):
            f = np.asarray(f, dtype=float)
            return super().energy(f) + f[..., 0, 1]

    rep = verify_objectivity(Tilted(mu=1.0), trials=100,
                             rng=np.random.default_rng(6))
    assert not rep.passed
    assert rep.max_deviation > 1e-3


def test_random_sampler_properties():
    rng = np.random.default_rng(7)
    for _ in range(20):
        q = random_rotation(rng)
        assert np.abs(q @ q.T - EYE3).max() < 1e-12
        assert abs(np.linalg.det(q) - 1.0) < 1e-12
        f = random_gl_plus(rng)
        assert np.linalg.det(f) > 0.1
        u = random_unimodular(rng)
        assert abs(np.linalg.det(u) - 1.0) < 1e-12


def test_batched_evaluation_matches_loop():
    rng = np.random.default_rng(8)
    nh = NeoHookean(mu=1.0)
    fs = np.array([random_gl_plus(rng) for _ in range(6)])
    batch = nh.energy(fs)
    loop = np.array([nh.energy(f) for f in fs])
    assert np.abs(batch - loop).max() == 0.0
    assert nh.stress(fs).shape == (6, 3, 3)
    assert nh.elasticity(fs).shape == (6, 3, 3, 3, 3)
