"""Branch tracing: Newton corrector, natural and pseudo-arclength
predictor-corrector loop, and the per-step monitors (injectivity,
incompressibility, ellipticity margins, Jacobian determinant sign).

The loop starts from the exactly-known solution at lambda = 0 and walks
toward the target.  Failures halve the step; steps below ds_min stop the
trace with a diagnostic status rather than an exception, so partial
branches always come back with their records.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp

from .tensor import det3
from .assembly import (Discretization, State, LoadProgram, residual, jacobian,
                       residual_dlam, solve_bordered, InvertedElementError,
                       SingularMatrixError)
from .ellipticity import audit_state


@dataclass
class ContinuationSettings:
    lam_target: float = 1.0
    ds0: float = 0.05
    ds_min: float = 1e-6
    ds_max: float = 0.25
    newton_tol: float = 1e-11
    newton_max_iter: int = 12
    mode: str = 'natural'          # 'natural' | 'arclength'
    se_dirs: int = 32
    adn_dirs: int = 32
    grow_iters: int = 3            # grow the step when Newton finished this fast

    def validate(self):
        if not (0.0 < self.ds_min <= self.ds0 <= self.ds_max):
            raise ValueError("need 0 < ds_min <= ds0 <= ds_max")
        if self.newton_tol <= 0.0:
            raise ValueError("Newton tolerance must be positive")
        if self.mode not in ('natural', 'arclength'):
            raise ValueError("mode must be 'natural' or 'arclength'")
        return self


@dataclass
class BranchRecord:
    lam: float
    norm_u_inf: float
    norm_gradu_inf: float
    norm_p_inf: float
    min_detF: float
    max_det_dev: float
    se_margin: float
    adn_min_abs: float
    jac_det_sign: int
    newton_iters: int
    ds: float

    CSV_COLUMNS = ("lambda", "norm_u_inf", "norm_gradu_inf", "norm_p_inf",
                   "min_detF", "max_det_dev", "se_margin", "adn_min_abs",
                   "jac_det_sign", "newton_iters", "ds")

    def csv_row(self):
        floats = (self.lam, self.norm_u_inf, self.norm_gradu_inf,
                  self.norm_p_inf, self.min_detF, self.max_det_dev,
                  self.se_margin, self.adn_min_abs)
        return ",".join(["%.17g" % v for v in floats]
                        + [str(self.jac_det_sign), str(self.newton_iters),
                           "%.17g" % self.ds])


@dataclass
class NewtonResult:
    state: State
    converged: bool
    iters: int
    residual_norms: List[float]


def newton_correct(initial: State, program: LoadProgram, material,
                   disc: Discretization, settings: ContinuationSettings,
                   constraint=None):
    """Newton iteration at fixed lambda, or with an arclength row.

    constraint, when given, is (t_w, t_lam, ref_state, ds): the corrector
    then solves the bordered system augmented by
    t_w . (w - w_ref) + t_lam (lam - lam_ref) = ds, updating lambda too.
    """
    state = initial.copy()
    norms = []
    for it in range(settings.newton_max_iter + 1):
        r = residual(state, program, material, disc)
        if constraint is None:
            rn = float(np.linalg.norm(r))
            norms.append(rn)
            if rn <= settings.newton_tol:
                return NewtonResult(state, True, it, norms)
            if it == settings.newton_max_iter:
                break
            j = jacobian(state, program, material, disc)
            delta, _ = solve_bordered(j, -r)
            state = state.with_increment(delta)
        else:
            t_w, t_lam, ref, ds = constraint
            arc = t_w @ (state.pack() - ref.pack()) \
                + t_lam * (state.lam - ref.lam) - ds
            rn = float(np.hypot(np.linalg.norm(r), arc))
            norms.append(rn)
            if rn <= settings.newton_tol:
                return NewtonResult(state, True, it, norms)
            if it == settings.newton_max_iter:
                break
            j = jacobian(state, program, material, disc)
            f_lam = residual_dlam(state, program, material, disc)
            aug = sp.bmat([[j, f_lam[:, None]],
                           [sp.csr_matrix(t_w[None, :]), sp.csr_matrix([[t_lam]])]],
                          format='csc')
            delta, _ = solve_bordered(aug, -np.concatenate([r, [arc]]))
            state = state.with_increment(delta[:-1], dlam=float(delta[-1]))
    return NewtonResult(state, False, settings.newton_max_iter, norms)


def _tangent_from_jacobian(state, program, material, disc):
    """d w / d lambda at the state, from the bordered solve J t = -F_lambda."""
    j = jacobian(state, program, material, disc)
    f_lam = residual_dlam(state, program, material, disc)
    t, _ = solve_bordered(j, -f_lam)
    return t


@dataclass
class InjectivityReport:
    min_det: float
    det_positive: bool
    min_pairwise: float
    mean_pairwise: float
    passed: bool


def injectivity_monitor(state: State, program: LoadProgram, disc: Discretization):
    """Orientation condition det(A + grad u) > 0 at quadrature points, plus a
    coarse pairwise-distance check of deformed vertex images.

    Positive determinant with injective affine boundary data is the working
    injectivity certificate; the point-cloud check only guards against gross
    folding between quadrature points.  Failure is reported, never raised.
    """
    a = program.a_matrix(state.lam)
    fgrad = a + disc.grad_u(state.u)
    min_det = float(det3(fgrad).min())

    verts = disc.mesh.nodes
    full = np.zeros((disc.q2_interior.size, 3))
    full[disc.q2_interior >= 0] = state.u.reshape(-1, 3)
    vert_lattice = {tuple(p): i for i, p in enumerate(disc.q2_lattice)}
    scaled = np.rint(2 * (verts - disc.mesh.origin) / disc.mesh.spacing).astype(int)
    uv = full[[vert_lattice[tuple(s)] for s in scaled]]
    images = verts @ a.T + uv
    d = np.linalg.norm(images[:, None, :] - images[None, :, :], axis=-1)
    iu = np.triu_indices(len(images), k=1)
    pair = d[iu]
    ref = np.linalg.norm(verts[:, None, :] - verts[None, :, :], axis=-1)[iu]
    min_pair = float(pair.min())
    collapse = float((pair / ref).min())
    return InjectivityReport(min_det=min_det, det_positive=min_det > 0.0,
                             min_pairwise=min_pair, mean_pairwise=float(pair.mean()),
                             passed=min_det > 0.0 and collapse > 1e-6)


def incompressibility_monitor(state: State, program: LoadProgram,
                              disc: Discretization):
    """Max |det(A + grad u) - 1| over quadrature points."""
    a = program.a_matrix(state.lam)
    return float(np.abs(det3(a + disc.grad_u(state.u)) - 1.0).max())


def parity_tracker(records: List[BranchRecord]):
    """Intervals between consecutive records with opposite determinant sign.

    Each event marks a possible singular point; no bifurcation claim is made.
    """
    events = []
    for a, b in zip(records, records[1:]):
        if a.jac_det_sign * b.jac_det_sign < 0:
            events.append((a.lam, b.lam))
    return events


@dataclass
class BranchTrace:
    records: List[BranchRecord]
    status: str                    # 'completed' | 'stall' | 'inverted'
    detail: str
    final_state: Optional[State]
    states: List[State] = field(default_factory=list)


def _make_record(state, program, material, disc, settings, iters, ds):
    a = program.a_matrix(state.lam)
    gradu = disc.grad_u(state.u)
    fgrad = a + gradu
    detf = det3(fgrad)
    audit = audit_state(material, fgrad.reshape(-1, 3, 3),
                        se_dirs=settings.se_dirs, adn_dirs=settings.adn_dirs,
                        refine_worst=False)
    j = jacobian(state, program, material, disc)
    _, info = solve_bordered(j, np.zeros(disc.n_total))
    return BranchRecord(
        lam=state.lam,
        norm_u_inf=float(np.abs(state.u).max()) if state.u.size else 0.0,
        norm_gradu_inf=float(np.abs(gradu).max()),
        norm_p_inf=float(np.abs(state.p).max()) if state.p.size else 0.0,
        min_detF=float(detf.min()),
        max_det_dev=float(np.abs(detf - 1.0).max()),
        se_margin=audit.se_margin,
        adn_min_abs=audit.adn_min_abs,
        jac_det_sign=info.det_sign,
        newton_iters=iters,
        ds=ds)


def trace_branch(program: LoadProgram, settings: ContinuationSettings,
                 material, disc: Discretization,
                 on_accept: Optional[Callable] = None,
                 keep_states: bool = False):
    """Predictor-corrector walk from (0, 0) toward settings.lam_target.

    Natural mode steps in lambda with a secant predictor (bordered-Jacobian
    tangent on the first step); arclength mode adds the constraint row once
    two points are known.  Accepted steps are recorded with full monitors
    and streamed through on_accept(state, record).
    """
    settings.validate()
    if settings.lam_target == 0.0:
        raise ValueError("lam_target must be nonzero")
    program.validate()

    direction = 1.0 if settings.lam_target > 0 else -1.0
    target = settings.lam_target

    state = State.zero(disc)
    res = newton_correct(state, program, material, disc, settings)
    if not res.converged:
        return BranchTrace([], 'stall', "origin solve failed", None)
    state = res.state
    records = [_make_record(state, program, material, disc, settings,
                            res.iters, 0.0)]
    states = [state.copy()] if keep_states else []
    if on_accept:
        on_accept(state, records[0])

    prev = None                    # previous accepted state, for secants
    ds = settings.ds0
    last_failure = ""
    while direction * (target - state.lam) > 1e-14:
        dlam = direction * min(ds, abs(target - state.lam))
        use_arc = settings.mode == 'arclength' and prev is not None \
            and abs(target - state.lam) > ds
        try:
            if use_arc:
                dw = state.pack() - prev.pack()
                dl = state.lam - prev.lam
                uscale = max(np.linalg.norm(state.pack()), 1.0)
                t_w = dw / uscale ** 2
                t_lam = dl
                nrm = np.sqrt(t_w @ dw + t_lam * dl)
                t_w, t_lam = t_w / nrm, t_lam / nrm
                step = direction * ds * np.sign(t_lam) if t_lam != 0 else ds
                pred = state.with_increment(dw / nrm * step, dlam=t_lam * step)
                res = newton_correct(pred, program, material, disc, settings,
                                     constraint=(t_w, t_lam, state, step))
            else:
                if prev is None:
                    t = _tangent_from_jacobian(state, program, material, disc)
                    pred = state.with_increment(t * dlam, dlam=dlam)
                else:
                    scale = dlam / (state.lam - prev.lam)
                    pred = state.with_increment(
                        (state.pack() - prev.pack()) * scale, dlam=dlam)
                res = newton_correct(pred, program, material, disc, settings)
            failed = not res.converged
            if not failed and res.state.lam * direction > abs(target) + 1e-12:
                failed = True      # arclength overshoot; retry smaller
        except InvertedElementError as exc:
            failed = True
            last_failure = str(exc)
        except SingularMatrixError as exc:
            failed = True
            last_failure = "singular Jacobian: %s" % exc

        if failed:
            ds *= 0.5
            if ds < settings.ds_min:
                status = 'inverted' if 'inverted' in last_failure else 'stall'
                detail = ("step underflow at lambda=%.6g after: %s"
                          % (state.lam, last_failure or "Newton non-convergence"))
                return BranchTrace(records, status, detail, state, states)
            continue

        prev = state
        state = res.state
        try:
            rec = _make_record(state, program, material, disc, settings,
                               res.iters, ds)
        except InvertedElementError as exc:
            return BranchTrace(records, 'inverted', str(exc), state, states)
        records.append(rec)
        if keep_states:
            states.append(state.copy())
        if on_accept:
            on_accept(state, rec)
        if res.iters <= settings.grow_iters:
            ds = min(ds * 1.5, settings.ds_max)
    return BranchTrace(records, 'completed', "reached lambda=%.6g" % state.lam,
                       state, states)
