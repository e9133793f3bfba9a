"""Isochoric stored-energy models extended to all of GL+ with analytic derivatives.

Each model is the classical incompressible energy plus a -k (det F - 1)
extension term.  The extension vanishes identically on det F = 1, so it does
not change the incompressible physics, and k is calibrated in closed form so
the reference configuration is exactly stress free.  Energies are evaluated
on batches: any input of shape (..., 3, 3) works.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor import EYE3, apply4, cof, dcof, det3, identity4

_I4 = identity4()

# Constant sixth-order coefficient table: _E6[a,b,i,j,k,l] is the (a,b,i,j)
# entry of dcof evaluated at the basis matrix e_k (x) e_l.  dcof is linear in
# its argument, so this table turns "dcof of a direction" into one contraction.
_E6 = np.empty((3, 3, 3, 3, 3, 3))
for _k in range(3):
    for _l in range(3):
        _E6[:, :, :, :, _k, _l] = dcof(np.outer(EYE3[_k], EYE3[_l]))
del _k, _l


def _require_orientation(f):
    d = det3(f)
    if np.any(d <= 0.0):
        raise ValueError("deformation gradient with det <= 0 is outside the model domain")
    return d


class MaterialModel:
    """Base class: stored energy W, stress dW/dF, elasticity d2W/dF2."""

    model_id = "abstract"

    def energy(self, f):
        raise NotImplementedError

    def stress(self, f):
        raise NotImplementedError

    def elasticity(self, f):
        raise NotImplementedError


class NeoHookean(MaterialModel):
    """W = (mu/2)(|F|^2 - 3) - k (det F - 1) with k = mu."""

    model_id = "neo-hookean"

    def __init__(self, mu=1.0):
        if mu <= 0:
            raise ValueError("shear modulus mu must be positive")
        self.mu = float(mu)
        self.k = solve_stress_free_k(self)

    def base_stress(self, f):
        return self.mu * np.asarray(f, dtype=float)

    def energy(self, f):
        f = np.asarray(f, dtype=float)
        d = _require_orientation(f)
        sq = np.einsum('...ij,...ij->...', f, f)
        return 0.5 * self.mu * (sq - 3.0) - self.k * (d - 1.0)

    def stress(self, f):
        f = np.asarray(f, dtype=float)
        _require_orientation(f)
        return self.mu * f - self.k * cof(f)

    def elasticity(self, f):
        f = np.asarray(f, dtype=float)
        _require_orientation(f)
        return self.mu * _I4 - self.k * dcof(f)


class MooneyRivlin(MaterialModel):
    """W = c1(|F|^2 - 3) + c2(|Cof F|^2 - 3) - k (det F - 1), k = 2 c1 + 4 c2."""

    model_id = "mooney-rivlin"

    def __init__(self, c1=0.5, c2=0.125):
        if c1 < 0 or c2 < 0 or c1 + c2 <= 0:
            raise ValueError("need c1, c2 >= 0 and c1 + c2 > 0")
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.k = solve_stress_free_k(self)

    def base_stress(self, f):
        f = np.asarray(f, dtype=float)
        return 2.0 * self.c1 * f + 2.0 * np.einsum(
            '...ab,...abkl->...kl', cof(f), dcof(f)) * self.c2

    def energy(self, f):
        f = np.asarray(f, dtype=float)
        d = _require_orientation(f)
        sq = np.einsum('...ij,...ij->...', f, f)
        cf = cof(f)
        csq = np.einsum('...ij,...ij->...', cf, cf)
        return self.c1 * (sq - 3.0) + self.c2 * (csq - 3.0) - self.k * (d - 1.0)

    def stress(self, f):
        f = np.asarray(f, dtype=float)
        _require_orientation(f)
        return self.base_stress(f) - self.k * cof(f)

    def elasticity(self, f):
        f = np.asarray(f, dtype=float)
        _require_orientation(f)
        df = dcof(f)
        # Hessian of |Cof F|^2 = 2 (dcof^T dcof + cof-contracted curvature term);
        # the second term uses the constant table because dcof is linear in F.
        quad = np.einsum('...abij,...abkl->...ijkl', df, df)
        curv = np.einsum('...ab,abijkl->...ijkl', cof(f), _E6)
        return (2.0 * self.c1 * _I4 + 2.0 * self.c2 * (quad + curv)
                - self.k * dcof(f))


def solve_stress_free_k(material):
    """Extension constant k making the reference stress vanish.

    The extension contributes -k Cof F to the stress and Cof I = I, so k is
    the isotropic factor of the base stress at the identity.  Closed form:
    mu for neo-Hookean, 2 c1 + 4 c2 for Mooney-Rivlin.
    """
    g = material.base_stress(EYE3)
    k = float(np.trace(g)) / 3.0
    if not np.allclose(g, k * EYE3, atol=1e-12):
        raise ValueError("base stress at identity is not isotropic; no scalar k fixes it")
    return k


def make_material(model_id, **params):
    """Construct a model by id ('neo-hookean' or 'mooney-rivlin')."""
    if model_id == "neo-hookean":
        return NeoHookean(**params)
    if model_id == "mooney-rivlin":
        return MooneyRivlin(**params)
    raise ValueError(f"unknown material model {model_id!r}")


# ---------------------------------------------------------------------------
# random sampling helpers shared by the self-checks and the probes
# ---------------------------------------------------------------------------

def random_rotation(rng):
    """Uniform random rotation from a normalized quaternion."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_gl_plus(rng, spread=0.4, min_det=0.1):
    """Random matrix with det above min_det, sampled as a perturbed identity."""
    while True:
        f = EYE3 + spread * rng.standard_normal((3, 3))
        if det3(f) > min_det:
            return f


def random_unimodular(rng, spread=0.4):
    """Random det-1 matrix: a GL+ sample rescaled by det^(-1/3)."""
    f = random_gl_plus(rng, spread=spread)
    return f / det3(f) ** (1.0 / 3.0)


@dataclass
class ObjectivityReport:
    max_deviation: float
    trials: int
    tolerance: float
    passed: bool
    worst_rotation: np.ndarray = field(repr=False, default=None)


def verify_objectivity(material, trials, rng=None, tolerance=1e-10):
    """Sample W(QF) - W(F) over random rotations Q and random GL+ F."""
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    worst_q = EYE3
    for _ in range(trials):
        f = random_gl_plus(rng)
        q = random_rotation(rng)
        dev = abs(float(material.energy(q @ f)) - float(material.energy(f)))
        if dev > worst:
            worst, worst_q = dev, q
    return ObjectivityReport(max_deviation=worst, trials=trials,
                             tolerance=tolerance, passed=worst < tolerance,
                             worst_rotation=worst_q)
