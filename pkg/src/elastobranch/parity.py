"""Finite-dimensional parity and base-point degree calculus.

Everything here works with square matrices, where each matrix is Fredholm of
index zero and the parity of a path reduces to determinant signs at the
endpoints.  The degree of a map on a box is the sum of per-solution parities
taken along straight parameter paths from a base point.
"""

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

_SING_TOL = 1e-12


class SingularOperatorError(ArithmeticError):
    """Raised when a construction requires invertibility that is absent."""


@dataclass
class OperatorPath:
    """Continuous family t in [0,1] -> square matrix with invertible endpoints."""
    evaluator: Callable[[float], np.ndarray]
    dim: int

    def __call__(self, t):
        m = np.asarray(self.evaluator(float(t)), dtype=float)
        if m.shape != (self.dim, self.dim):
            raise ValueError("path evaluator returned wrong shape")
        return m

    def endpoint_dets(self):
        d0 = np.linalg.det(self(0.0))
        d1 = np.linalg.det(self(1.0))
        scale = max(1.0, np.linalg.norm(self(0.0)), np.linalg.norm(self(1.0))) ** self.dim
        if abs(d0) <= _SING_TOL * scale or abs(d1) <= _SING_TOL * scale:
            raise SingularOperatorError("path endpoint is numerically singular")
        return d0, d1

    def continuity_defect(self, n=32):
        """Max midpoint-vs-average gap at resolution n; halves for C^2 paths."""
        ts = np.linspace(0.0, 1.0, n + 1)
        vals = [self(t) for t in ts]
        gap = 0.0
        for i in range(n):
            mid = self(0.5 * (ts[i] + ts[i + 1]))
            gap = max(gap, np.linalg.norm(mid - 0.5 * (vals[i] + vals[i + 1])))
        return gap


def ls_index(kappa):
    """(-1)^d with d the count of real eigenvalues of kappa above 1.

    Counted with algebraic multiplicity; cross-checked against
    sign(det(I - kappa)), which must agree whenever I - kappa is invertible.
    """
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[0]
    det = np.linalg.det(np.eye(n) - kappa)
    scale = max(1.0, np.linalg.norm(kappa)) ** n
    if abs(det) <= _SING_TOL * scale:
        raise SingularOperatorError("I - kappa is numerically singular")
    eig = np.linalg.eigvals(kappa)
    imag_tol = 1e-8 * max(1.0, np.linalg.norm(kappa))
    d = int(np.sum((np.abs(eig.imag) <= imag_tol) & (eig.real > 1.0)))
    idx = -1 if d % 2 else 1
    if idx != int(np.sign(det)):
        raise ArithmeticError("eigenvalue count disagrees with determinant sign; "
                              "an eigenvalue sits too close to 1")
    return idx


def parity_of_path(path: OperatorPath):
    """Product of endpoint determinant signs."""
    d0, d1 = path.endpoint_dets()
    return int(np.sign(d0) * np.sign(d1))


def parity_via_parametrix(path: OperatorPath, parametrix: Callable[[float], np.ndarray]):
    """Parity through kappa(t) = I - N(t) T(t); independent of the choice of N."""
    eye = np.eye(path.dim)
    out = 1
    for t in (0.0, 1.0):
        n_t = np.asarray(parametrix(float(t)), dtype=float)
        if abs(np.linalg.det(n_t)) <= _SING_TOL * max(1.0, np.linalg.norm(n_t)) ** path.dim:
            raise SingularOperatorError("parametrix is singular at an endpoint")
        out *= ls_index(eye - n_t @ path(t))
    return out


@dataclass
class DegreeResult:
    degree: int
    absolute: int
    parities: List[int]
    solutions: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))


def absolute_degree(result: DegreeResult):
    return abs(result.degree)


def _fd_jacobian(g, w, y_dim):
    w = np.asarray(w, dtype=float)
    jac = np.empty((y_dim, w.size))
    for k in range(w.size):
        h = 1e-6 * (1.0 + abs(w[k]))
        wp, wm = w.copy(), w.copy()
        wp[k] += h
        wm[k] -= h
        jac[:, k] = (np.asarray(g(wp)) - np.asarray(g(wm))) / (2.0 * h)
    return jac


def basepoint_degree(g, region, base_point, y=None, jac=None,
                     starts_per_axis=16, newton_steps=60, newton_tol=1e-12,
                     dedup_radius=1e-6, regular_tol=1e-5):
    """Degree of g relative to y on a box, anchored at a base point.

    Every solution found by dense multi-start Newton contributes the parity
    of t -> Dg((1-t) p + t w_j) along the straight segment, which in finite
    dimension is the product of the two Jacobian determinant signs.  With no
    solutions in the region the degree is zero.

    Parameters
    ----------
    g : callable, R^n -> R^n.
    region : (n, 2) array of [low, high] bounds.
    base_point : point with invertible Jacobian, the parity anchor.
    y : target value, default zero.
    jac : optional Jacobian callable; finite differences otherwise.

    regular_tol must exceed sqrt(newton_tol): a degenerate root only drives
    the residual to newton_tol once the Jacobian determinant has shrunk to
    that order, and it must still be flagged.
    """
    region = np.asarray(region, dtype=float)
    ndim = region.shape[0]
    base_point = np.asarray(base_point, dtype=float)
    y = np.zeros(ndim) if y is None else np.asarray(y, dtype=float)
    jac_of = jac if jac is not None else (lambda w: _fd_jacobian(g, w, ndim))

    jp = np.asarray(jac_of(base_point), dtype=float)
    det_p = np.linalg.det(jp)
    if abs(det_p) <= regular_tol:
        raise SingularOperatorError("base point has a singular Jacobian")
    sgn_p = int(np.sign(det_p))

    span = region[:, 1] - region[:, 0]
    axes = [region[k, 0] + span[k] * (np.arange(starts_per_axis) + 0.5) / starts_per_axis
            for k in range(ndim)]
    starts = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, ndim)

    roots = []
    lo, hi = region[:, 0], region[:, 1]
    wander = 0.5 * span
    for w0 in starts:
        w = w0.copy()
        ok = False
        for _ in range(newton_steps):
            r = np.asarray(g(w), dtype=float) - y
            if np.linalg.norm(r) < newton_tol:
                ok = True
                break
            j = np.asarray(jac_of(w), dtype=float)
            try:
                step = np.linalg.solve(j, r)
            except np.linalg.LinAlgError:
                break
            w = w - step
            if np.any(w < lo - wander) or np.any(w > hi + wander):
                break
        if not ok or np.any(w < lo) or np.any(w > hi):
            continue
        if any(np.linalg.norm(w - r0) < dedup_radius for r0 in roots):
            continue
        roots.append(w)

    if not roots:
        return DegreeResult(degree=0, absolute=0, parities=[],
                            solutions=np.empty((0, ndim)))

    edge_tol = 1e-8 * max(1.0, float(np.max(np.abs(region))))
    parities = []
    for w in roots:
        if np.any(np.abs(w - lo) < edge_tol) or np.any(np.abs(w - hi) < edge_tol):
            raise ValueError("solution on the region boundary; degree undefined")
        det_w = np.linalg.det(np.asarray(jac_of(w), dtype=float))
        if abs(det_w) <= regular_tol:
            raise SingularOperatorError("solution violates the regular-value "
                                        "hypothesis (near-singular Jacobian)")
        parities.append(sgn_p * int(np.sign(det_w)))

    order = np.lexsort(np.array(roots).T[::-1])
    roots_arr = np.array(roots)[order]
    parities = [parities[k] for k in order]
    deg = int(sum(parities))
    return DegreeResult(degree=deg, absolute=abs(deg), parities=parities,
                        solutions=roots_arr)
