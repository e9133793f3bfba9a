"""Pointwise constitutive audits: rank-one convexity margins on the
incompressibility-tangent cone and the bordered acoustic-determinant test
for the linearized mixed system.

The complementing (boundary) condition is not checked anywhere: with
Dirichlet data it holds automatically once the margin is positive, and the
field audit records that assumption in its note instead of testing it.
"""

from dataclasses import dataclass

import numpy as np

from .tensor import cof, det3

_UNIT_TOL = 1e-12


def fibonacci_sphere(n):
    """n deterministic, roughly equidistributed unit vectors."""
    i = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + 5.0 ** 0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi),
                     np.sin(theta) * np.sin(phi),
                     np.cos(phi)], axis=-1)


def _check_unit(m):
    m = np.asarray(m, dtype=float)
    if abs(np.linalg.norm(m) - 1.0) > _UNIT_TOL:
        raise ValueError("direction must be a unit vector")
    return m


def acoustic(c, m):
    """Acoustic tensor Q with Q a = c[a (x) m] m; batched over leading axes of c."""
    m = _check_unit(m)
    return np.einsum('...ijkl,j,l->...ik', c, m, m)


def rank_one_energy(c, a, direction):
    """Quadratic form (a (x) direction) : c[a (x) direction]."""
    return np.einsum('...i,...j,...ijkl,...k,...l->...', a, direction, c, a, direction)


@dataclass
class EllipticityReport:
    min_margin: float
    a: np.ndarray
    c: np.ndarray
    samples: int
    refined: bool
    note: str = ""


def _project_unit(a, vhat):
    """Project rows of a onto the orthogonal complement of vhat and renormalize."""
    ap = a - np.einsum('...i,...i->...', a, vhat)[..., None] * vhat
    n = np.linalg.norm(ap, axis=-1)
    good = n > 1e-8
    ap = np.where(good[..., None], ap / np.where(good, n, 1.0)[..., None], np.nan)
    return ap, good


def se_margin(c, f, n_samples=1024, refine_steps=20, seed=0):
    """Minimum of the rank-one quadratic form subject to a . (Cof F) c = 0.

    Both unit vectors are sampled on Fibonacci grids; the first is projected
    onto the complement of (Cof F) c before evaluation, and the best grid
    point is polished by a shrinking random pattern search.  A negative
    margin is a finding, not an error.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples per sphere")
    f = np.asarray(f, dtype=float)
    if det3(f) <= 0:
        raise ValueError("deformation gradient must have positive determinant")
    cf = cof(f)
    cs = fibonacci_sphere(n_samples)
    avs = fibonacci_sphere(n_samples)

    qs = np.einsum('ijkl,cj,cl->cik', c, cs, cs)            # acoustic tensors, all c
    v = cs @ cf.T                                            # (Cof F) c
    vhat = v / np.linalg.norm(v, axis=-1, keepdims=True)
    ap, good = _project_unit(avs[None, :, :], vhat[:, None, :])
    vals = np.einsum('cai,cik,cak->ca', ap, qs, ap)
    vals = np.where(good, vals, np.inf)
    flat = np.argmin(vals)
    ci, ai = np.unravel_index(flat, vals.shape)
    best = float(vals[ci, ai])
    best_a, best_c = ap[ci, ai].copy(), cs[ci].copy()

    rng = np.random.default_rng(seed)
    scale = 2.0 / np.sqrt(n_samples)
    for _ in range(refine_steps):
        cand_c = best_c + scale * rng.standard_normal((8, 3))
        cand_c /= np.linalg.norm(cand_c, axis=-1, keepdims=True)
        vv = cand_c @ cf.T
        vv /= np.linalg.norm(vv, axis=-1, keepdims=True)
        cand_a, ok = _project_unit(best_a + scale * rng.standard_normal((8, 3)), vv)
        qq = np.einsum('ijkl,cj,cl->cik', c, cand_c, cand_c)
        cand = np.where(ok, np.einsum('ci,cik,ck->c', cand_a, qq, cand_a), np.inf)
        j = int(np.argmin(cand))
        if cand[j] < best:
            best, best_a, best_c = float(cand[j]), cand_a[j], cand_c[j]
        else:
            scale *= 0.6
    return EllipticityReport(min_margin=best, a=best_a, c=best_c,
                             samples=n_samples, refined=refine_steps > 0)


def margin_field(c_field, f_field, n_dirs=64):
    """Constraint-respecting margin over a batch of states.

    For every sampled second direction the minimum over the first is taken
    exactly: it is the smallest eigenvalue of the symmetrized acoustic tensor
    restricted to the plane orthogonal to (Cof F) c.  Returns the fieldwide
    minimum, its directions, and the index of the worst point.
    """
    c_field = np.asarray(c_field, dtype=float)
    f_field = np.asarray(f_field, dtype=float)
    cs = fibonacci_sphere(n_dirs)
    qs = np.einsum('nijkl,cj,cl->ncik', c_field, cs, cs)
    qs = 0.5 * (qs + np.swapaxes(qs, -1, -2))
    v = np.einsum('nij,cj->nci', cof(f_field), cs)
    vhat = v / np.linalg.norm(v, axis=-1, keepdims=True)

    # orthonormal basis of the plane orthogonal to vhat
    helper = np.zeros_like(vhat)
    helper[..., 0] = 1.0
    swap = np.abs(vhat[..., 0]) > 0.9
    helper[swap] = (0.0, 1.0, 0.0)
    b1 = np.cross(vhat, helper)
    b1 /= np.linalg.norm(b1, axis=-1, keepdims=True)
    b2 = np.cross(vhat, b1)

    m11 = np.einsum('nci,ncik,nck->nc', b1, qs, b1)
    m22 = np.einsum('nci,ncik,nck->nc', b2, qs, b2)
    m12 = np.einsum('nci,ncik,nck->nc', b1, qs, b2)
    half = 0.5 * (m11 - m22)
    lam = 0.5 * (m11 + m22) - np.sqrt(half * half + m12 * m12)

    ni, ci = np.unravel_index(int(np.argmin(lam)), lam.shape)
    w1, w2 = -m12[ni, ci], m11[ni, ci] - lam[ni, ci]
    if w1 == 0.0 and w2 == 0.0:
        w1 = 1.0
    a = w1 * b1[ni, ci] + w2 * b2[ni, ci]
    a /= np.linalg.norm(a)
    return float(lam[ni, ci]), a, cs[ci], int(ni)


def adn_matrix(c, f, m):
    """Bordered 4x4 principal-symbol matrix [[Q(m), -m_hat], [m_hat^T, 0]]."""
    m = _check_unit(m)
    f = np.asarray(f, dtype=float)
    if det3(f) <= 0:
        raise ValueError("deformation gradient must have positive determinant")
    q = acoustic(c, m)
    mhat = cof(f) @ m
    out = np.zeros((4, 4))
    out[:3, :3] = q
    out[:3, 3] = -mhat
    out[3, :3] = mhat
    return out


def adn_det(c, f, m):
    """Determinant of the bordered acoustic matrix (mixed-system ellipticity test)."""
    return float(np.linalg.det(adn_matrix(c, f, m)))


def adn_min_field(c_field, f_field, n_dirs=64):
    """Minimum |bordered determinant| over a batch of states and sampled directions."""
    c_field = np.asarray(c_field, dtype=float)
    f_field = np.asarray(f_field, dtype=float)
    ms = fibonacci_sphere(n_dirs)
    qs = np.einsum('nijkl,mj,ml->nmik', c_field, ms, ms)
    mhat = np.einsum('nij,mj->nmi', cof(f_field), ms)
    n, nm = qs.shape[:2]
    mats = np.zeros((n, nm, 4, 4))
    mats[..., :3, :3] = qs
    mats[..., :3, 3] = -mhat
    mats[..., 3, :3] = mhat
    dets = np.abs(np.linalg.det(mats))
    ni, mi = np.unravel_index(int(np.argmin(dets)), dets.shape)
    return float(dets[ni, mi]), ms[mi], int(ni)


@dataclass
class FieldAuditReport:
    se_margin: float
    se_a: np.ndarray
    se_c: np.ndarray
    se_worst_point: int
    adn_min_abs: float
    adn_m: np.ndarray
    adn_worst_point: int
    n_points: int
    note: str = ("complementing condition assumed satisfied "
                 "(Dirichlet data + positive margin), not tested")


def audit_state(material, f_field, se_dirs=48, adn_dirs=48, refine_worst=True):
    """Worst-case margin and bordered-determinant magnitude over a field of
    deformation gradients (one per quadrature point)."""
    f_field = np.asarray(f_field, dtype=float)
    if f_field.size == 0:
        raise ValueError("empty field")
    f_field = f_field.reshape(-1, 3, 3)
    if np.any(det3(f_field) <= 0):
        raise ValueError("field contains a deformation gradient with det <= 0")
    c_field = material.elasticity(f_field)
    margin, a, cdir, pt = margin_field(c_field, f_field, n_dirs=se_dirs)
    if refine_worst:
        rep = se_margin(c_field[pt], f_field[pt], n_samples=max(100, 4 * se_dirs),
                        refine_steps=12)
        if rep.min_margin < margin:
            margin, a, cdir = rep.min_margin, rep.a, rep.c
    adn_abs, mdir, apt = adn_min_field(c_field, f_field, n_dirs=adn_dirs)
    return FieldAuditReport(se_margin=margin, se_a=a, se_c=cdir, se_worst_point=pt,
                            adn_min_abs=adn_abs, adn_m=mdir, adn_worst_point=apt,
                            n_points=f_field.shape[0])
