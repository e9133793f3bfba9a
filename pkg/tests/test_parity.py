import numpy as np
import pytest

from elastobranch.parity import (DegreeResult, OperatorPath,
                                 SingularOperatorError, absolute_degree,
                                 basepoint_degree, ls_index, parity_of_path,
                                 parity_via_parametrix)


def _segment(a, b):
    return OperatorPath(lambda t: (1.0 - t) * a + t * b, a.shape[0])


def test_ls_index_known_values():
    assert ls_index(np.diag([2.0, 0.5, 0.0])) == -1
    assert ls_index(np.zeros((3, 3))) == 1
    assert ls_index(np.diag([3.0, 2.0, 0.0])) == 1


def test_ls_index_matches_determinant_sign_on_random_matrices():
    rng = np.random.default_rng(0)
    for _ in range(200):
        kappa = rng.standard_normal((5, 5))
        det = np.linalg.det(np.eye(5) - kappa)
        assert ls_index(kappa) == int(np.sign(det))


def test_ls_index_rejects_singular_shift():
    with pytest.raises(SingularOperatorError):
        ls_index(np.eye(4))


def test_parity_of_path_known_values():
    crossing = OperatorPath(lambda t: np.diag([2.0 * t - 1.0, 1.0, 1.0]), 3)
    assert parity_of_path(crossing) == -1
    assert parity_of_path(OperatorPath(lambda t: np.eye(3), 3)) == 1

    def rot(t):
        a = np.pi * t
        return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])

    assert parity_of_path(OperatorPath(rot, 2)) == 1


def test_operator_path_validation():
    with pytest.raises(SingularOperatorError):
        parity_of_path(OperatorPath(lambda t: t * np.eye(2), 2))
    with pytest.raises(ValueError):
        parity_of_path(OperatorPath(lambda t: np.eye(3), 2))


def test_continuity_defect_shrinks_under_refinement():
    path = OperatorPath(lambda t: np.diag([np.exp(t), 1.0 + t * t]), 2)
    coarse = path.continuity_defect(n=16)
    fine = path.continuity_defect(n=32)
    assert coarse > 0.0
    # midpoint-vs-average gap is second order in the panel width
    assert fine < 0.3 * coarse


def test_parity_via_parametrix_known_values():
    crossing = OperatorPath(lambda t: np.diag([2.0 * t - 1.0, 1.0]), 2)
    assert parity_via_parametrix(crossing, lambda t: np.eye(2)) == -1

    m = np.array([[2.0, 1.0], [0.5, 3.0]])
    const = OperatorPath(lambda t: m, 2)
    assert parity_via_parametrix(const, lambda t: np.linalg.inv(m)) == 1


def test_parametrix_choice_is_immaterial():
    rng = np.random.default_rng(1)
    agree = 0
    for _ in range(50):
        a = rng.standard_normal((4, 4)) + 2.0 * np.eye(4)
        b = rng.standard_normal((4, 4))
        path = _segment(a, b)
        n0_inv = np.linalg.inv(path(0.0))
        assert parity_via_parametrix(path, lambda t: n0_inv) == parity_of_path(path)
        agree += 1
    assert agree == 50


def test_parity_multiplicative_over_concatenation():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b, c = (rng.standard_normal((3, 3)) + 1.5 * np.eye(3) for _ in range(3))
        first, second = _segment(a, b), _segment(b, c)
        whole = _segment(a, c)

        def glued(t, first=first, second=second):
            return first(2 * t) if t < 0.5 else second(2 * t - 1)

        glue_path = OperatorPath(glued, 3)
        assert parity_of_path(glue_path) == \
            parity_of_path(first) * parity_of_path(second)
        assert parity_of_path(whole) == parity_of_path(glue_path)


def test_basepoint_degree_identity_map():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])
    res = basepoint_degree(lambda w: w, region, base_point=(0.5, 0.5))
    assert res.degree == 1
    assert res.absolute == 1
    assert res.parities == [1]
    assert res.solutions.shape == (1, 2)
    assert np.abs(res.solutions[0]).max() < 1e-10


def test_basepoint_degree_folded_quadratic():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])

    def g(w):
        return np.array([w[0] ** 2 - 0.25, w[1]])

    res = basepoint_degree(g, region, base_point=(1.0, 0.0))
    assert res.degree == 0
    assert sorted(res.parities) == [-1, 1]
    assert np.abs(res.solutions - [[-0.5, 0.0], [0.5, 0.0]]).max() < 1e-8
    assert absolute_degree(res) == 0


def test_basepoint_degree_isolated_origin():
    region = np.array([[-1.0, 1.0]] * 3)

    def g(w):
        return w + 0.1 * w ** 3

    res = basepoint_degree(g, region, base_point=(0.4, 0.3, 0.2),
                           starts_per_axis=6)
    assert res.degree == 1
    assert res.parities == [1]


def test_basepoint_degree_empty_solution_set():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])
    res = basepoint_degree(lambda w: w, region, base_point=(0.5, 0.5),
                           y=np.array([5.0, 5.0]))
    assert res.degree == 0
    assert res.parities == []
    assert res.solutions.shape == (0, 2)


def test_basepoint_degree_with_analytic_jacobian():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])

    def g(w):
        return np.array([w[0] ** 2 - 0.25, w[1]])

    def jac(w):
        return np.array([[2.0 * w[0], 0.0], [0.0, 1.0]])

    res = basepoint_degree(g, region, base_point=(1.0, 0.0), jac=jac)
    assert res.degree == 0
    assert sorted(res.parities) == [-1, 1]


def test_basepoint_degree_flags_degenerate_root():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])

    def g(w):
        return np.array([w[0] ** 2, w[1]])

    with pytest.raises(SingularOperatorError):
        basepoint_degree(g, region, base_point=(1.0, 0.0))


def test_basepoint_degree_flags_boundary_root():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])
    with pytest.raises(ValueError):
        basepoint_degree(lambda w: w - np.array([1.0, 0.0]), region,
                         base_point=(0.0, 0.5))


def test_basepoint_degree_rejects_singular_base_point():
    region = np.array([[-1.0, 1.0], [-1.0, 1.0]])

    def g(w):
        return np.array([w[0] ** 2 - 0.25, w[1]])

    with pytest.raises(SingularOperatorError):
        basepoint_degree(g, region, base_point=(0.0, 0.0))


def test_absolute_degree_matches_parity_sum():
    res = DegreeResult(degree=-2, absolute=2, parities=[-1, -1])
    assert absolute_degree(res) == 2
    assert abs(sum(res.parities)) == res.absolute
