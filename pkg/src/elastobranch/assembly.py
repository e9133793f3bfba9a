"""Mixed finite-element assembly for incompressible equilibrium.

Discretizes the weak equilibrium system on Q2/Q1 Taylor-Hood hexahedra:

    momentum:    int [ W_F(A+grad u) - p Cof(A+grad u) ] : grad v - b.v = 0
    constraint:  int q (det(A+grad u) - 1) + mu_p int q = 0
    mean row:    int p = 0

for all test fields v vanishing on the boundary and all pressure tests q.
Boundary displacement dofs are eliminated (u = 0 there after the change of
variables that moves the boundary data into A); the scalar multiplier mu_p
pins the pressure mean through a symmetric border row/column.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .tensor import det3, cof, dcof
from .mesh import Mesh


class InvertedElementError(RuntimeError):
    """det(A + grad u) <= 0 at a quadrature point."""

    def __init__(self, element, lam, min_det):
        super().__init__("inverted element %d at lambda=%.6g (det=%.3e)"
                         % (element, lam, min_det))
        self.element = element
        self.lam = lam
        self.min_det = min_det


class SingularMatrixError(RuntimeError):
    pass


def _lagrange2(x):
    """1D quadratic Lagrange values/derivatives on nodes {-1, 0, 1}."""
    v = np.stack([0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)], axis=-1)
    d = np.stack([x - 0.5, -2.0 * x, x + 0.5], axis=-1)
    return v, d


def _lagrange1(x):
    v = np.stack([0.5 * (1.0 - x), 0.5 * (1.0 + x)], axis=-1)
    d = np.stack([-0.5 * np.ones_like(x), 0.5 * np.ones_like(x)], axis=-1)
    return v, d


_CELL_FACES = {  # axis, side -> lattice offsets of the face in cell units
    (0, 0): lambda a, b: (0, a, b), (0, 1): lambda a, b: (2, a, b),
    (1, 0): lambda a, b: (a, 0, b), (1, 1): lambda a, b: (a, 2, b),
    (2, 0): lambda a, b: (a, b, 0), (2, 1): lambda a, b: (a, b, 2),
}


class Discretization:
    """Taylor-Hood Q2/Q1 spaces on a structured hex mesh.

    Parameters
    ----------
    mesh : Mesh
        Structured box mesh (possibly cell-masked) from the mesh module.

    Attributes
    ----------
    n_u, n_p, n_total : int
        Free displacement dofs, pressure dofs, and the full bordered size
        n_u + n_p + 1.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        cells = mesh.cells_ijk
        active = set(map(tuple, cells))

        # Q2 lattice nodes touched by active cells
        q2_map = {}
        conn2 = np.empty((len(cells), 27), dtype=int)
        for e, (i, j, k) in enumerate(cells):
            for l, (a, b, c) in enumerate(np.ndindex(3, 3, 3)):
                key = (2 * i + a, 2 * j + b, 2 * k + c)
                conn2[e, l] = q2_map.setdefault(key, len(q2_map))
        self.q2_lattice = np.array(sorted(q2_map, key=q2_map.get))
        self.conn2 = conn2
        self.q2_nodes = mesh.origin + 0.5 * mesh.spacing * self.q2_lattice

        # Q1 connectivity in lexicographic local order
        vmap = {}
        scaled = np.rint((mesh.nodes - mesh.origin) / mesh.spacing).astype(int)
        for idx, key in enumerate(map(tuple, scaled)):
            vmap[key] = idx
        conn1 = np.empty((len(cells), 8), dtype=int)
        for e, (i, j, k) in enumerate(cells):
            for l, (a, b, c) in enumerate(np.ndindex(2, 2, 2)):
                conn1[e, l] = vmap[(i + a, j + b, k + c)]
        self.conn1 = conn1

        # boundary Q2 nodes: faces whose neighbor cell is absent
        bset = set()
        nbr = {0: (1, 0, 0), 1: (0, 1, 0), 2: (0, 0, 1)}
        for (i, j, k) in active:
            for axis in range(3):
                for side in (0, 1):
                    step = nbr[axis]
                    n_cell = (i + (2 * side - 1) * step[0],
                              j + (2 * side - 1) * step[1],
                              k + (2 * side - 1) * step[2])
                    if n_cell in active:
                        continue
                    off = _CELL_FACES[(axis, side)]
                    for a in range(3):
                        for b in range(3):
                            oa, ob, oc = off(a, b)
                            bset.add((2 * i + oa, 2 * j + ob, 2 * k + oc))
        lattice_index = {tuple(p): n for n, p in enumerate(self.q2_lattice)}
        self.q2_boundary = np.array(sorted(lattice_index[p] for p in bset), dtype=int)

        interior = -np.ones(len(q2_map), dtype=int)
        mask = np.ones(len(q2_map), dtype=bool)
        mask[self.q2_boundary] = False
        interior[mask] = np.arange(mask.sum())
        self.q2_interior = interior          # q2 node -> free index or -1
        self.n_u = 3 * int(mask.sum())
        self.n_p = mesh.nodes.shape[0]
        self.n_total = self.n_u + self.n_p + 1

        # shape tables at the 27 quadrature points
        ref = mesh.qp_ref
        v0, d0 = _lagrange2(ref[:, 0])
        v1, d1 = _lagrange2(ref[:, 1])
        v2, d2 = _lagrange2(ref[:, 2])
        n2 = np.einsum('qa,qb,qc->qabc', v0, v1, v2).reshape(27, 27)
        g2 = np.stack([np.einsum('qa,qb,qc->qabc', d0, v1, v2),
                       np.einsum('qa,qb,qc->qabc', v0, d1, v2),
                       np.einsum('qa,qb,qc->qabc', v0, v1, d2)],
                      axis=-1).reshape(27, 27, 3)
        self.n2 = n2
        # physical gradients per element and point
        self.dndx = np.einsum('qld,eqdi->eqli', g2, mesh.qp_jac_inv)

        w0, _ = _lagrange1(ref[:, 0])
        w1, _ = _lagrange1(ref[:, 1])
        w2, _ = _lagrange1(ref[:, 2])
        self.n1 = np.einsum('qa,qb,qc->qabc', w0, w1, w2).reshape(27, 8)

        # element dof tables
        comp = np.arange(3)
        udof = 3 * interior[conn2][..., None] + comp
        udof[interior[conn2] < 0] = -1
        self.udof = udof.reshape(len(cells), 81)       # (E, 81), -1 = fixed
        self.pdof = self.n_u + conn1                   # (E, 8)
        self.mdof = self.n_total - 1

        # pressure mass row (border): int N1_m dx
        w = mesh.qp_weight
        self.p_mass = np.zeros(self.n_p)
        np.add.at(self.p_mass, conn1,
                  np.einsum('eq,qm->em', w, self.n1))

    # field evaluation -------------------------------------------------

    def u_elem(self, u):
        """Element-local displacement values (E, 27, 3); fixed dofs are 0."""
        full = np.zeros((self.q2_interior.size, 3))
        free = self.q2_interior >= 0
        full[free] = u.reshape(-1, 3)
        return full[self.conn2]

    def grad_u(self, u):
        """Displacement gradient at quadrature points, (E, 27, 3, 3)."""
        ue = self.u_elem(u)
        return np.einsum('eli,eqlj->eqij', ue, self.dndx)

    def u_at_qp(self, u):
        return np.einsum('eli,ql->eqi', self.u_elem(u), self.n2)

    def p_at_qp(self, p):
        return np.einsum('qm,em->eq', self.n1, p[self.conn1])


@dataclass
class State:
    """Point on the solution branch: load parameter and coefficient arrays."""
    lam: float
    u: np.ndarray
    p: np.ndarray
    mu_p: float = 0.0

    @classmethod
    def zero(cls, disc: Discretization, lam=0.0):
        return cls(lam=lam, u=np.zeros(disc.n_u), p=np.zeros(disc.n_p), mu_p=0.0)

    def pack(self):
        return np.concatenate([self.u, self.p, [self.mu_p]])

    def with_increment(self, delta, dlam=0.0):
        n_u, n_p = self.u.size, self.p.size
        return State(lam=self.lam + dlam,
                     u=self.u + delta[:n_u],
                     p=self.p + delta[n_u:n_u + n_p],
                     mu_p=self.mu_p + delta[-1])

    def copy(self):
        return State(self.lam, self.u.copy(), self.p.copy(), self.mu_p)


@dataclass
class LoadProgram:
    """Boundary family A(lambda) plus body-force family b.

    a_family: 'identity' | 'shear' | 'stretch' (isochoric); a_rate scales
    the lambda-dependence.  b_family: 'none' | 'dead' | 'live_centering' |
    'live_gradient'; b_scale is the magnitude, b_direction the direction
    (dead and live_gradient).  All families satisfy A(0) = I, det A = 1,
    b(0, .) = 0.
    """
    a_family: str = 'identity'
    a_rate: float = 1.0
    b_family: str = 'none'
    b_scale: float = 1.0
    b_direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    # dead-load magnitude ramp: b = lam * scale * (1 + ramp . x) * direction.
    # A zero ramp makes the load a gradient field, which the pressure absorbs
    # exactly (u stays 0); a transverse ramp makes it non-conservative and
    # produces a genuine first-order displacement response.
    b_ramp: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def a_matrix(self, lam):
        a = np.eye(3)
        if self.a_family == 'identity':
            return a
        if self.a_family == 'shear':
            a[0, 1] = self.a_rate * lam
            return a
        if self.a_family == 'stretch':
            s = np.exp(self.a_rate * lam)
            return np.diag([s, s ** -0.5, s ** -0.5])
        raise ValueError("unknown boundary family %r" % self.a_family)

    def a_dot(self, lam):
        if self.a_family == 'identity':
            return np.zeros((3, 3))
        if self.a_family == 'shear':
            d = np.zeros((3, 3))
            d[0, 1] = self.a_rate
            return d
        if self.a_family == 'stretch':
            s = np.exp(self.a_rate * lam)
            r = self.a_rate
            return np.diag([r * s, -0.5 * r * s ** -0.5, -0.5 * r * s ** -0.5])
        raise ValueError("unknown boundary family %r" % self.a_family)

    def body(self, lam, x, f, grad_f):
        """Body force b at quadrature points; x, f are (..., 3)."""
        if self.b_family == 'none':
            return np.zeros_like(x)
        if self.b_family == 'dead':
            mag = lam * self.b_scale * (1.0 + x @ self.b_ramp)
            return mag[..., None] * self.b_direction
        if self.b_family == 'live_centering':
            return lam * self.b_scale * (f - x)
        if self.b_family == 'live_gradient':
            return lam * self.b_scale * ((grad_f - np.eye(3)) @ self.b_direction)
        raise ValueError("unknown body-force family %r" % self.b_family)

    def body_du(self, lam):
        """d b / d u, a constant 3x3 (zero unless live_centering)."""
        if self.b_family == 'live_centering':
            return lam * self.b_scale * np.eye(3)
        return np.zeros((3, 3))

    def body_dgradu(self, lam):
        """d b_i / d(grad u)_km as a (3, 3, 3) array."""
        out = np.zeros((3, 3, 3))
        if self.b_family == 'live_gradient':
            c = lam * self.b_scale
            for i in range(3):
                out[i, i, :] = c * self.b_direction
        return out

    def body_dlam(self, lam, x, f, grad_f):
        if self.b_family == 'none':
            return np.zeros_like(x)
        if self.b_family == 'dead':
            mag = self.b_scale * (1.0 + x @ self.b_ramp)
            return mag[..., None] * self.b_direction
        da = self.a_dot(lam)
        if self.b_family == 'live_centering':
            return self.b_scale * (f - x) + lam * self.b_scale * (x @ da.T)
        if self.b_family == 'live_gradient':
            return self.b_scale * ((grad_f - np.eye(3)) @ self.b_direction) \
                + lam * self.b_scale * (da @ self.b_direction)
        raise ValueError("unknown body-force family %r" % self.b_family)

    def validate(self, lam_samples=(0.0, 0.25, 0.5, 1.0)):
        if not np.allclose(self.a_matrix(0.0), np.eye(3), atol=1e-14):
            raise ValueError("A(0) must be the identity")
        for lam in lam_samples:
            if abs(det3(self.a_matrix(lam)) - 1.0) > 1e-12:
                raise ValueError("boundary family is not volume preserving "
                                 "at lambda=%g" % lam)
            h = 1e-6
            fd = (self.a_matrix(lam + h) - self.a_matrix(lam - h)) / (2 * h)
            if np.abs(fd - self.a_dot(lam)).max() > 1e-6:
                raise ValueError("boundary family derivative mismatch")
        x = np.array([[0.3, 0.4, 0.5]])
        if np.abs(self.body(0.0, x, x + 0.1, np.eye(3) * 1.1)).max() > 1e-14:
            raise ValueError("body force must vanish at lambda=0")
        return self


def _kinematics(state: State, program: LoadProgram, disc: Discretization):
    a = program.a_matrix(state.lam)
    gradu = disc.grad_u(state.u)
    f = a + gradu
    detf = det3(f)
    if np.any(detf <= 0.0):
        e = int(np.argmin(detf.min(axis=1)))
        raise InvertedElementError(e, state.lam, float(detf.min()))
    return a, gradu, f, detf


def residual(state: State, program: LoadProgram, material, disc: Discretization):
    """Stacked weak-form residual [momentum, constraint, mean row]."""
    mesh = disc.mesh
    a, gradu, fgrad, detf = _kinematics(state, program, disc)
    w = mesh.qp_weight

    stress = material.stress(fgrad) - disc.p_at_qp(state.p)[..., None, None] * cof(fgrad)
    uq = np.einsum('eli,ql->eqi', disc.u_elem(state.u), disc.n2)
    fq = mesh.qp_phys @ a.T + uq
    b = program.body(state.lam, mesh.qp_phys, fq, fgrad)

    r_u_elem = np.einsum('eq,eqij,eqlj->eli', w, stress, disc.dndx) \
        - np.einsum('eq,eqi,ql->eli', w, b, disc.n2)
    r_p_elem = np.einsum('eq,qm,eq->em', w, disc.n1, detf - 1.0)

    out = np.zeros(disc.n_total)
    dofs = disc.udof
    vals = r_u_elem.reshape(len(dofs), 81)
    keep = dofs >= 0
    np.add.at(out, dofs[keep], vals[keep])
    np.add.at(out, disc.pdof, r_p_elem)
    out[disc.n_u:disc.n_u + disc.n_p] += state.mu_p * disc.p_mass
    out[disc.mdof] = disc.p_mass @ state.p
    return out


def _scatter_coo(disc, kuu, kup, kpu):
    """Assemble element blocks into one bordered COO matrix."""
    rows, cols, vals = [], [], []
    ud, pd = disc.udof, disc.pdof
    e_count = ud.shape[0]

    iu = np.broadcast_to(ud[:, :, None], (e_count, 81, 81))
    ju = np.broadcast_to(ud[:, None, :], (e_count, 81, 81))
    m = (iu >= 0) & (ju >= 0)
    rows.append(iu[m]); cols.append(ju[m]); vals.append(kuu[m])

    ip = np.broadcast_to(ud[:, :, None], (e_count, 81, 8))
    jp = np.broadcast_to(pd[:, None, :], (e_count, 81, 8))
    m = ip >= 0
    rows.append(ip[m]); cols.append(jp[m]); vals.append(kup[m])
    rows.append(jp[m]); cols.append(ip[m]); vals.append(kpu.transpose(0, 2, 1)[m])

    mrow = np.full(disc.n_p, disc.mdof)
    pidx = np.arange(disc.n_u, disc.n_u + disc.n_p)
    rows.append(mrow); cols.append(pidx); vals.append(disc.p_mass)
    rows.append(pidx); cols.append(mrow); vals.append(disc.p_mass)

    mat = sp.coo_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(disc.n_total, disc.n_total))
    return mat.tocsc()


def _element_blocks(disc, w, c_eff, cof_f, body_du, body_dg):
    """Per-element Jacobian blocks from pointwise moduli."""
    e_count = disc.dndx.shape[0]
    kuu = np.zeros((e_count, 81, 81))
    kup = np.zeros((e_count, 81, 8))
    kpu = np.zeros((e_count, 8, 81))
    n2, n1, dndx = disc.n2, disc.n1, disc.dndx
    for q in range(27):
        g = dndx[:, q]                       # (E, 27, 3)
        wq = w[:, q]
        t = np.einsum('elj,eijkm->elikm', g, c_eff[:, q])
        blk = np.einsum('e,elikm,enm->elikn', wq, t, g)   # (E,27,3,3,27)
        kuu += blk.transpose(0, 1, 2, 4, 3).reshape(e_count, 81, 81)
        if body_du is not None:
            low = np.einsum('e,l,ik,n->elikn', wq, n2[q], body_du, n2[q])
            kuu -= low.transpose(0, 1, 2, 4, 3).reshape(e_count, 81, 81)
        if body_dg is not None:
            low = np.einsum('e,l,ikm,enm->elikn', wq, n2[q], body_dg, g)
            kuu -= low.transpose(0, 1, 2, 4, 3).reshape(e_count, 81, 81)
        cup = np.einsum('e,eij,elj,m->elim', wq, cof_f[:, q], g, n1[q])
        kup -= cup.reshape(e_count, 81, 8)
        kpu += cup.reshape(e_count, 81, 8).transpose(0, 2, 1)
    return kuu, kup, kpu


def jacobian(state: State, program: LoadProgram, material, disc: Discretization):
    """Bordered tangent matrix at the given state (sparse CSC)."""
    mesh = disc.mesh
    a, gradu, fgrad, detf = _kinematics(state, program, disc)
    w = mesh.qp_weight

    c_eff = material.elasticity(fgrad) \
        - disc.p_at_qp(state.p)[..., None, None, None, None] * dcof(fgrad)
    cof_f = cof(fgrad)
    bdu = program.body_du(state.lam)
    bdg = program.body_dgradu(state.lam)
    kuu, kup, kpu = _element_blocks(
        disc, w, c_eff, cof_f,
        bdu if np.any(bdu) else None,
        bdg if np.any(bdg) else None)
    return _scatter_coo(disc, kuu, kup, kpu)


def residual_dlam(state: State, program: LoadProgram, material, disc: Discretization):
    """Partial derivative of the residual in lambda at fixed coefficients."""
    mesh = disc.mesh
    a, gradu, fgrad, detf = _kinematics(state, program, disc)
    w = mesh.qp_weight
    da = program.a_dot(state.lam)

    # stress and constraint change through A(lambda)
    dstress = np.einsum('eqijkl,kl->eqij', material.elasticity(fgrad), da) \
        - disc.p_at_qp(state.p)[..., None, None] \
        * np.einsum('eqijkl,kl->eqij', dcof(fgrad), da)
    uq = np.einsum('eli,ql->eqi', disc.u_elem(state.u), disc.n2)
    fq = mesh.qp_phys @ a.T + uq
    db = program.body_dlam(state.lam, mesh.qp_phys, fq, fgrad)

    r_u = np.einsum('eq,eqij,eqlj->eli', w, dstress, disc.dndx) \
        - np.einsum('eq,eqi,ql->eli', w, db, disc.n2)
    r_p = np.einsum('eq,qm,eqij,ij->em', w, disc.n1, cof(fgrad), da)

    out = np.zeros(disc.n_total)
    keep = disc.udof >= 0
    np.add.at(out, disc.udof[keep], r_u.reshape(len(disc.udof), 81)[keep])
    np.add.at(out, disc.pdof, r_p)
    return out


def homotopy_operator(mu, disc: Discretization, material):
    """Bordered operator with moduli mu*I4 + (1-mu)*C(I) at F = I.

    mu = 1 is the discrete Stokes matrix; mu = 0 reproduces the equilibrium
    Jacobian at the origin when the body force has no state dependence.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValueError("homotopy parameter must lie in [0, 1]")
    eye4 = np.einsum('ik,jl->ijkl', np.eye(3), np.eye(3))
    c_mu = mu * eye4 + (1.0 - mu) * material.elasticity(np.eye(3))
    e_count, nq = disc.dndx.shape[:2]
    c_eff = np.broadcast_to(c_mu, (e_count, nq, 3, 3, 3, 3))
    cof_i = np.broadcast_to(np.eye(3), (e_count, nq, 3, 3))
    kuu, kup, kpu = _element_blocks(disc, disc.mesh.qp_weight, c_eff, cof_i,
                                    None, None)
    return _scatter_coo(disc, kuu, kup, kpu)


@dataclass
class SolveInfo:
    min_pivot: float
    det_sign: int


def _perm_parity(perm):
    perm = np.asarray(perm)
    seen = np.zeros(perm.size, dtype=bool)
    parity = 1
    for start in range(perm.size):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def solve_bordered(matrix, rhs):
    """Direct sparse solve; reports smallest pivot and determinant sign.

    The sign comes from the LU factors: product of U-diagonal signs times
    the parities of the row and column permutations.
    """
    matrix = sp.csc_matrix(matrix)
    try:
        lu = splu(matrix)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    diag = lu.U.diagonal()
    min_pivot = float(np.abs(diag).min())
    if min_pivot == 0.0:
        raise SingularMatrixError("zero pivot at position %d"
                                  % int(np.argmin(np.abs(diag))))
    sign = int(np.prod(np.sign(diag))) \
        * _perm_parity(lu.perm_r) * _perm_parity(lu.perm_c)
    x = lu.solve(np.asarray(rhs, dtype=float))
    return x, SolveInfo(min_pivot=min_pivot, det_sign=sign)
