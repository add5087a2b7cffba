"""Embedded primal-dual interior-point solver for ModelIR instances.

One engine covers the linear approximation (an LP), the lifted relaxation
(a convex QCQP) and the polar formulation (a non-convex NLP): a logarithmic
barrier on bounds and slacks, a Newton step on the perturbed KKT system
factored by :mod:`opfbench.kkt`, a backtracking line search on an l1
exact-penalty merit function, the fraction-to-the-boundary rule, and
monotone barrier reduction with inertia-corrected primal regularization.

Inequality rows are converted to equalities with range-bounded slacks at
intake, and variables fixed through equal bounds become free variables
pinned by an extra equality row, so the barrier only ever sees strictly
feasible gaps.  Solves are deterministic functions of (model, options).
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .kkt import FactorizationError, factorize
from .modelir import (
    ModelIR,
    SolveResult,
    SolveStatus,
    eval_jacobian,
    eval_lagrangian_hessian,
)

INF = math.inf

# Internal algorithm constants.
_OBJ_GRAD_TARGET = 100.0     # objective gradient scaled down to this magnitude
_BOUND_PUSH = 1e-2           # relative push of the start point off its bounds
_KAPPA_EPS = 10.0            # barrier subproblem tolerance factor
_MU_FACTOR = 0.2             # monotone barrier reduction factor
_KAPPA_SIGMA = 1e10          # bound-multiplier safeguard corridor
_ARMIJO_ETA = 1e-4
_MAX_BACKTRACKS = 40
_MAX_LS_FAILURES = 20
_REG_MAX = 1e12
_DENSE_VAR_LIMIT = 200       # below this many internal variables use dense LDL^T
_DUAL_BLOWUP = 1e10
_STALL_WINDOW = 30           # iterations of no feasibility progress => infeasible
_STALL_FEAS = 1e-3           # only declare infeasibility above this violation


@dataclass
class SolverOptions:
    """Interior-point options; defaults terminate at a 1e-6 KKT max-norm."""

    tol: float = 1e-6
    max_iter: int = 500
    barrier_strategy: str = "monotone"  # "monotone" or "adaptive"
    mu_init: float = 0.1
    reg_floor: float = 1e-8
    tau: float = 0.995
    time_limit: float | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not (0.0 < self.tau < 1.0):
            raise ValueError("tau must be in (0, 1)")
        if self.barrier_strategy not in ("monotone", "adaptive"):
            raise ValueError(
                f"unknown barrier strategy {self.barrier_strategy!r}"
            )
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.mu_init > 0:
            raise ValueError("mu_init must be positive")


@dataclass
class IterationRecord:
    iteration: int
    mu: float
    primal_inf: float
    dual_inf: float
    compl: float
    alpha_primal: float
    alpha_dual: float
    reg: float
    inertia_corrections: int


@dataclass
class IterationLog:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([
            "iter", "mu", "primal_inf", "dual_inf", "compl",
            "alpha_primal", "alpha_dual", "reg",
        ])
        for r in self.records:
            writer.writerow([
                r.iteration, repr(r.mu), repr(r.primal_inf),
                repr(r.dual_inf), repr(r.compl), repr(r.alpha_primal),
                repr(r.alpha_dual), repr(r.reg),
            ])
        return buf.getvalue()


@dataclass
class KktReport:
    """Scaled KKT residual components recomputed from a model and a result."""

    stationarity: float
    feasibility: float
    complementarity: float
    denominator: float
    raw_feasibility: float

    @property
    def max_residual(self) -> float:
        return max(self.stationarity, self.feasibility, self.complementarity)


def _audit_components(m: ModelIR, x, y, zl, zu, jac=None) -> KktReport:
    """KKT residuals of (x, y, zl, zu) against the model, dual-scaled."""
    if jac is None:
        jac = eval_jacobian(m, x)
    stat = m.obj_coeffs + jac.T @ y - zl + zu
    raw = m.eval_raw_rows(x)
    lo, up = m.row_lower, m.row_upper
    with np.errstate(invalid="ignore"):
        row_viol = np.maximum(np.maximum(lo - raw, raw - up), 0.0)
    xlo, xup = m.variable_bounds()
    bnd_viol = np.maximum(np.maximum(xlo - x, x - xup), 0.0)
    raw_feas = float(max(
        row_viol.max() if len(row_viol) else 0.0,
        bnd_viol.max() if len(bnd_viol) else 0.0,
    ))

    compl_terms = [0.0]
    ineq = ~m.row_is_eq
    if ineq.any():
        yi = y[ineq]
        gap_up = up[ineq] - raw[ineq]
        gap_lo = raw[ineq] - lo[ineq]
        pos = yi > 0
        up_fin = np.isfinite(gap_up)
        lo_fin = np.isfinite(gap_lo)
        term = np.where(
            pos,
            np.where(up_fin, np.abs(yi * np.where(up_fin, gap_up, 0.0)),
                     np.abs(yi)),
            np.where(lo_fin, np.abs(yi * np.where(lo_fin, gap_lo, 0.0)),
                     np.abs(yi)),
        )
        if len(term):
            compl_terms.append(float(term.max()))
    lo_fin = np.isfinite(xlo)
    up_fin = np.isfinite(xup)
    if lo_fin.any():
        compl_terms.append(float(np.abs(
            zl[lo_fin] * (x[lo_fin] - xlo[lo_fin])
        ).max()))
    if (~lo_fin).any():
        compl_terms.append(float(np.abs(zl[~lo_fin]).max()))
    if up_fin.any():
        compl_terms.append(float(np.abs(
            zu[up_fin] * (xup[up_fin] - x[up_fin])
        ).max()))
    if (~up_fin).any():
        compl_terms.append(float(np.abs(zu[~up_fin]).max()))

    denom = 1.0 + max(
        float(np.abs(y).max()) if len(y) else 0.0,
        float(np.abs(zl).max()) if len(zl) else 0.0,
        float(np.abs(zu).max()) if len(zu) else 0.0,
    )
    return KktReport(
        stationarity=float(np.abs(stat).max()) / denom if len(stat) else 0.0,
        feasibility=raw_feas / denom,
        complementarity=max(compl_terms) / denom,
        denominator=denom,
        raw_feasibility=raw_feas,
    )


def kkt_check(m: ModelIR, result: SolveResult) -> KktReport:
    """Audit a solve result by recomputing the scaled KKT residuals.

    Uses only the public model evaluations and the primal/dual vectors in
    the result, independently of the solver's internal state.
    """
    m.finalize()
    return _audit_components(
        m, np.asarray(result.x, dtype=float),
        np.asarray(result.y, dtype=float),
        np.asarray(result.zl, dtype=float),
        np.asarray(result.zu, dtype=float),
    )


class _Intake:
    """Reformulation of a ModelIR into the internal equality-only shape."""

    def __init__(self, m: ModelIR):
        self.m = m
        xlo, xup = m.variable_bounds()
        self.nx = m.nvars
        fixed = np.isfinite(xlo) & (xlo == xup)
        self.fixed_idx = np.nonzero(fixed)[0]
        self.fix_vals = xlo[self.fixed_idx]
        self.ineq_rows = np.nonzero(~m.row_is_eq)[0]
        self.ns = len(self.ineq_rows)
        self.nz = self.nx + self.ns
        self.n_fix = len(self.fixed_idx)
        self.m_int = m.nrows + self.n_fix
        zlo = np.concatenate([xlo, m.row_lower[self.ineq_rows]])
        zup = np.concatenate([xup, m.row_upper[self.ineq_rows]])
        zlo[self.fixed_idx] = -INF
        zup[self.fixed_idx] = INF
        self.zlo, self.zup = zlo, zup
        self.has_lo = np.isfinite(zlo)
        self.has_up = np.isfinite(zup)
        self.eq_rhs = np.where(m.row_is_eq, m.row_lower, 0.0)
        # constant Jacobian entries: -1 on slack columns, +1 on fix rows
        rows = np.concatenate([
            self.ineq_rows,
            m.nrows + np.arange(self.n_fix),
        ])
        cols = np.concatenate([
            self.nx + np.arange(self.ns),
            self.fixed_idx,
        ])
        vals = np.concatenate([-np.ones(self.ns), np.ones(self.n_fix)])
        self._extra = sp.coo_matrix(
            (vals, (rows, cols)), shape=(self.m_int, self.nz)
        ).tocsr()

    def residual(self, z, raw):
        res = raw - self.eq_rhs
        res[self.ineq_rows] -= z[self.nx:]
        if self.n_fix:
            res = np.concatenate([res, z[self.fixed_idx] - self.fix_vals])
        return res

    def jacobian(self, jac_model):
        jm = sp.csr_matrix(jac_model)
        body = sp.hstack(
            [jm, sp.csr_matrix((self.m.nrows, self.ns))], format="csr"
        )
        if self.n_fix:
            body = sp.vstack(
                [body, sp.csr_matrix((self.n_fix, self.nz))], format="csr"
            )
        return body + self._extra

    def map_duals(self, y_int, zl_int, zu_int, obj_scale):
        """Internal duals back to model-shape (row duals, bound duals)."""
        y = y_int[:self.m.nrows] / obj_scale
        zl = zl_int[:self.nx] / obj_scale
        zu = zu_int[:self.nx] / obj_scale
        if self.n_fix:
            y_fix = y_int[self.m.nrows:] / obj_scale
            zl = zl.copy()
            zu = zu.copy()
            zl[self.fixed_idx] = np.maximum(-y_fix, 0.0)
            zu[self.fixed_idx] = np.maximum(y_fix, 0.0)
        return y, zl, zu


def _initial_point(intake: _Intake, raw0, mu0):
    zlo, zup = intake.zlo, intake.zup
    z0 = np.zeros(intake.nz)
    z0[:intake.nx] = intake.m.initial_point()
    z0[intake.nx:] = raw0[intake.ineq_rows]
    lo_f, up_f = intake.has_lo, intake.has_up
    width = np.where(lo_f & up_f, zup - zlo, INF)
    push_lo = np.where(
        lo_f,
        np.minimum(_BOUND_PUSH * np.maximum(1.0, np.abs(zlo)),
                   _BOUND_PUSH * width),
        0.0,
    )
    push_up = np.where(
        up_f,
        np.minimum(_BOUND_PUSH * np.maximum(1.0, np.abs(zup)),
                   _BOUND_PUSH * width),
        0.0,
    )
    z0 = np.where(lo_f, np.maximum(z0, zlo + push_lo), z0)
    z0 = np.where(up_f, np.minimum(z0, zup - push_up), z0)
    z0[intake.fixed_idx] = intake.fix_vals
    zl0 = np.zeros(intake.nz)
    zu0 = np.zeros(intake.nz)
    zl0[lo_f] = np.clip(mu0 / (z0[lo_f] - zlo[lo_f]), 1e-10, 1e10)
    zu0[up_f] = np.clip(mu0 / (zup[up_f] - z0[up_f]), 1e-10, 1e10)
    return z0, zl0, zu0


def _barrier_value(intake, z, obj_lin, mu):
    gl = z[intake.has_lo] - intake.zlo[intake.has_lo]
    gu = intake.zup[intake.has_up] - z[intake.has_up]
    if len(gl) and gl.min() <= 0.0:
        return INF
    if len(gu) and gu.min() <= 0.0:
        return INF
    val = float(obj_lin @ z)
    if len(gl):
        val -= mu * float(np.log(gl).sum())
    if len(gu):
        val -= mu * float(np.log(gu).sum())
    return val


def _barrier_gradient(intake, z, obj_lin, mu):
    grad = obj_lin.copy()
    lo_f, up_f = intake.has_lo, intake.has_up
    grad[lo_f] -= mu / (z[lo_f] - intake.zlo[lo_f])
    grad[up_f] += mu / (intake.zup[up_f] - z[up_f])
    return grad


def _max_step(vals, step, lower, upper, tau, mask_lo, mask_up):
    """Largest alpha in (0, 1] keeping vals + alpha*step a tau-fraction
    inside its bounds."""
    alpha = 1.0
    neg = mask_lo & (step < 0)
    if neg.any():
        alpha = min(alpha, float(np.min(
            -tau * (vals[neg] - lower[neg]) / step[neg]
        )))
    pos = mask_up & (step > 0)
    if pos.any():
        alpha = min(alpha, float(np.min(
            tau * (upper[pos] - vals[pos]) / step[pos]
        )))
    return max(alpha, 0.0)


def solve(m: ModelIR, opts: SolverOptions | None = None):
    """Minimize a ModelIR, returning (SolveResult, IterationLog).

    The result status is Optimal once the scaled KKT residuals (max-norms of
    stationarity, feasibility and complementarity, each divided by one plus
    the largest dual magnitude) and the raw constraint violation all fall
    below opts.tol.  Exceeding the time limit reports IterationLimit.
    """
    if opts is None:
        opts = SolverOptions()
    m.finalize()
    t_start = time.perf_counter()
    log = IterationLog()

    intake = _Intake(m)
    nx, ns, nz, m_int = intake.nx, intake.ns, intake.nz, intake.m_int

    def finish(status, z, y_int, zl_int, zu_int, kkt_res):
        x = z[:nx]
        y, zl, zu = intake.map_duals(y_int, zl_int, zu_int, obj_scale)
        return SolveResult(
            status=status,
            objective=m.eval_objective(x),
            x=x.copy(), y=y, zl=zl, zu=zu,
            kkt_residual=kkt_res,
            iterations=len(log.records),
            wall_time=time.perf_counter() - t_start,
        ), log

    grad_norm = float(np.abs(m.obj_coeffs).max()) if m.nvars else 0.0
    obj_scale = min(1.0, _OBJ_GRAD_TARGET / grad_norm) if grad_norm > 0 else 1.0
    obj_lin = np.zeros(nz)
    obj_lin[:nx] = obj_scale * m.obj_coeffs

    if np.any(m.row_lower > m.row_upper):
        return finish(
            SolveStatus.INFEASIBLE,
            np.zeros(nz), np.zeros(m_int), np.zeros(nz), np.zeros(nz),
            INF,
        )

    mu = opts.mu_init
    # barrier floor in internal units so the true-unit duality gap can
    # reach tol/10 despite objective scaling
    mu_min = max(opts.tol / 10.0 * obj_scale, 1e-16)
    x0 = np.array([v.initial for v in m.variables])
    raw0 = m.eval_raw_rows(x0)
    z, zl, zu = _initial_point(intake, raw0, mu)
    y = np.zeros(m_int)
    dense = nz < _DENSE_VAR_LIMIT
    is_lp = all(blk.kind in ("LinearEq", "LinearIneq") for blk in m.blocks)

    nu = 1.0
    ls_failures = 0
    force_reg = 0.0
    status = SolveStatus.ITERATION_LIMIT
    kkt_res = INF
    feas_history: list[float] = []
    dual_history: list[float] = []
    mu_history: list[float] = []

    for it in range(opts.max_iter):
        x = z[:nx]
        raw = m.eval_raw_rows(x)
        jac_model = eval_jacobian(m, x)
        J = intake.jacobian(jac_model)
        h = intake.residual(z, raw)
        h_inf = float(np.abs(h).max()) if len(h) else 0.0

        y_true, zl_true, zu_true = intake.map_duals(y, zl, zu, obj_scale)
        report = _audit_components(m, x, y_true, zl_true, zu_true,
                                   jac=jac_model)
        kkt_res = report.max_residual
        if kkt_res <= opts.tol and report.raw_feasibility <= opts.tol:
            status = SolveStatus.OPTIMAL
            break
        # dual unboundedness on LPs: either outright blow-up, or growing
        # duals with primal infeasibility and the barrier stalled across a
        # window; nonlinear models fail through the line search instead
        feas_history.append(report.raw_feasibility)
        dual_history.append(report.denominator)
        mu_history.append(mu)
        if is_lp and report.raw_feasibility > opts.tol:
            if report.denominator > _DUAL_BLOWUP:
                status = SolveStatus.INFEASIBLE
                break
            if (len(feas_history) > _STALL_WINDOW
                    and report.raw_feasibility > _STALL_FEAS):
                back = -_STALL_WINDOW - 1
                if (report.raw_feasibility > 0.99 * feas_history[back]
                        and report.denominator >= dual_history[back]
                        and mu == mu_history[back]):
                    status = SolveStatus.INFEASIBLE
                    break
        if (opts.time_limit is not None
                and time.perf_counter() - t_start > opts.time_limit):
            status = SolveStatus.ITERATION_LIMIT
            break

        # internal barrier-problem residuals
        gap_lo = np.where(intake.has_lo, z - intake.zlo, 1.0)
        gap_up = np.where(intake.has_up, intake.zup - z, 1.0)
        denom_int = 1.0 + max(
            float(np.abs(y).max()) if len(y) else 0.0,
            float(zl.max()) if len(zl) else 0.0,
            float(zu.max()) if len(zu) else 0.0,
        )
        compl_vec = np.concatenate([
            (gap_lo * zl - mu)[intake.has_lo],
            (gap_up * zu - mu)[intake.has_up],
        ])
        compl_mu = (float(np.abs(compl_vec).max()) / denom_int
                    if len(compl_vec) else 0.0)
        # barrier-KKT error of the mu-subproblem; stationarity measured in
        # the primal-dual form, which is what the Newton step drives to zero
        stat_pd = (float(np.abs(obj_lin + J.T @ y - zl + zu).max())
                   / denom_int)
        e_mu = max(stat_pd, h_inf / denom_int, compl_mu)

        if opts.barrier_strategy == "monotone":
            reductions = 0
            while e_mu <= _KAPPA_EPS * mu and mu > mu_min \
                    and reductions < 8:
                mu = max(mu_min, _MU_FACTOR * mu)
                compl_vec = np.concatenate([
                    (gap_lo * zl - mu)[intake.has_lo],
                    (gap_up * zu - mu)[intake.has_up],
                ])
                compl_mu = (float(np.abs(compl_vec).max()) / denom_int
                            if len(compl_vec) else 0.0)
                e_mu = max(stat_pd, h_inf / denom_int, compl_mu)
                reductions += 1
            grad_phi = _barrier_gradient(intake, z, obj_lin, mu)
        else:
            compl_terms = np.concatenate([
                (gap_lo * zl)[intake.has_lo], (gap_up * zu)[intake.has_up]
            ])
            if len(compl_terms):
                avg = float(compl_terms.mean())
                if avg > 0:
                    xi = float(compl_terms.min()) / avg
                    sigma = 0.1 * min(0.05 * (1.0 - xi) / max(xi, 1e-12),
                                      2.0) ** 3
                    mu = max(mu_min, sigma * avg)
            grad_phi = _barrier_gradient(intake, z, obj_lin, mu)

        # Newton system on the perturbed KKT conditions
        W = eval_lagrangian_hessian(m, x, y[:m.nrows])
        sigma = np.zeros(nz)
        sigma[intake.has_lo] += (zl / gap_lo)[intake.has_lo]
        sigma[intake.has_up] += (zu / gap_up)[intake.has_up]
        r1 = -(grad_phi + J.T @ y)
        r2 = -h
        rhs = np.concatenate([r1, r2])

        W_full = sp.bmat([
            [W, None],
            [None, sp.csr_matrix((ns, ns))],
        ], format="csr") if ns else sp.csr_matrix(W)

        delta_w = 0.0 if force_reg == 0.0 else force_reg
        delta_c = 0.0 if dense else 1e-10
        factor = None
        sol = None
        corrections = 0
        rhs_scale = 1.0 + float(np.abs(rhs).max()) if len(rhs) else 1.0
        while True:
            K = sp.bmat([
                [W_full + sp.diags(sigma + delta_w, shape=(nz, nz)),
                 J.T],
                [J, -sp.identity(m_int) * delta_c if m_int else None],
            ], format="csc") if m_int else sp.csc_matrix(
                W_full + sp.diags(sigma + delta_w, shape=(nz, nz))
            )
            try:
                cand = factorize(K, dense=dense)
                if cand.inertia[0] == nz and cand.inertia[1] == m_int \
                        and cand.inertia[2] == 0:
                    candidate = cand.solve(rhs)
                    if float(np.abs(K @ candidate - rhs).max()) \
                            <= 1e-6 * rhs_scale:
                        factor, sol = cand, candidate
                        break
                    singular = True
                else:
                    singular = cand.inertia[2] > 0
            except FactorizationError:
                singular = True
            corrections += 1
            if singular:
                delta_c = max(delta_c * 10.0, 1e-8)
            delta_w = opts.reg_floor if delta_w == 0.0 else delta_w * 10.0
            if delta_w > _REG_MAX:
                break
        if factor is None:
            status = SolveStatus.NUMERICAL_ERROR
            break

        dz = sol[:nz]
        dy = sol[nz:]
        dzl = np.zeros(nz)
        dzu = np.zeros(nz)
        lo_f, up_f = intake.has_lo, intake.has_up
        dzl[lo_f] = (mu / gap_lo - zl - (zl / gap_lo) * dz)[lo_f]
        dzu[up_f] = (mu / gap_up - zu + (zu / gap_up) * dz)[up_f]

        alpha_max = _max_step(z, dz, intake.zlo, intake.zup, opts.tau,
                              lo_f, up_f)
        alpha_dual = min(
            _max_step(zl, dzl, np.zeros(nz), np.full(nz, INF), opts.tau,
                      lo_f, np.zeros(nz, dtype=bool)),
            _max_step(zu, dzu, np.zeros(nz), np.full(nz, INF), opts.tau,
                      up_f, np.zeros(nz, dtype=bool)),
        )
        if alpha_max <= 0.0:
            status = SolveStatus.NUMERICAL_ERROR
            break

        h_l1 = float(np.abs(h).sum())
        slope_obj = float(grad_phi @ dz)
        if h_l1 > 1e-12:
            nu_req = max(
                1.1 * float(np.abs(y + dy).max()) if m_int else 0.0,
                slope_obj / (0.5 * h_l1) if slope_obj > 0 else 0.0,
            )
            if nu > 10.0 * (nu_req + 1e-6):
                nu = max(nu_req + 1e-6, nu / 10.0)
            nu = max(nu, nu_req + 1e-6)
        merit_slope = slope_obj - nu * h_l1

        def merit_at(z_pt):
            raw_pt = m.eval_raw_rows(z_pt[:nx])
            h_pt = intake.residual(z_pt, raw_pt)
            return (_barrier_value(intake, z_pt, obj_lin, mu)
                    + nu * float(np.abs(h_pt).sum()), h_pt)

        phi0 = _barrier_value(intake, z, obj_lin, mu) + nu * h_l1
        alpha = alpha_max
        accepted = False
        z_try = z
        for trial in range(_MAX_BACKTRACKS):
            z_try = z + alpha * dz
            phi_try, h_try = merit_at(z_try)
            if math.isfinite(phi_try) and (
                    phi_try <= phi0 + _ARMIJO_ETA * alpha * merit_slope
                    or phi_try <= phi0 + 1e-10 * (1.0 + abs(phi0))):
                accepted = True
                break
            if trial == 0 and m_int:
                # second-order correction: re-center the constraint residual
                # at the rejected trial point to step around merit rejection
                # of pure Newton steps caused by constraint curvature
                rhs_soc = np.concatenate([r1, -(alpha * h + h_try)])
                sol_soc = factor.solve(rhs_soc)
                dz_soc = sol_soc[:nz]
                alpha_soc = _max_step(z, dz_soc, intake.zlo, intake.zup,
                                      opts.tau, lo_f, up_f)
                z_soc = z + alpha_soc * dz_soc
                phi_soc, _ = merit_at(z_soc)
                if math.isfinite(phi_soc) and phi_soc <= (
                        phi0 + _ARMIJO_ETA * alpha_soc * merit_slope):
                    z_try = z_soc
                    alpha = alpha_soc
                    dz = dz_soc
                    dy = sol_soc[nz:]
                    dzl = np.zeros(nz)
                    dzu = np.zeros(nz)
                    dzl[lo_f] = (mu / gap_lo - zl
                                 - (zl / gap_lo) * dz_soc)[lo_f]
                    dzu[up_f] = (mu / gap_up - zu
                                 + (zu / gap_up) * dz_soc)[up_f]
                    alpha_dual = min(
                        _max_step(zl, dzl, np.zeros(nz), np.full(nz, INF),
                                  opts.tau, lo_f, np.zeros(nz, dtype=bool)),
                        _max_step(zu, dzu, np.zeros(nz), np.full(nz, INF),
                                  opts.tau, up_f, np.zeros(nz, dtype=bool)),
                    )
                    accepted = True
                    break
            alpha *= 0.5

        if not accepted:
            ls_failures += 1
            if ls_failures >= _MAX_LS_FAILURES:
                status = SolveStatus.NUMERICAL_ERROR
                break
            force_reg = max(
                opts.reg_floor, 10.0 * max(force_reg, delta_w, opts.reg_floor)
            )
            log.records.append(IterationRecord(
                iteration=it, mu=mu, primal_inf=h_inf,
                dual_inf=report.stationarity, compl=report.complementarity,
                alpha_primal=0.0, alpha_dual=0.0, reg=delta_w,
                inertia_corrections=corrections,
            ))
            continue

        ls_failures = 0
        force_reg = 0.0
        z = z_try
        y = y + alpha * dy
        zl = np.maximum(zl + alpha_dual * dzl, 0.0)
        zu = np.maximum(zu + alpha_dual * dzu, 0.0)
        # safeguard corridor keeps bound multipliers consistent with mu
        gl = np.where(lo_f, z - intake.zlo, 1.0)
        gu = np.where(up_f, intake.zup - z, 1.0)
        zl[lo_f] = np.clip(
            zl[lo_f], (mu / (_KAPPA_SIGMA * gl))[lo_f],
            (_KAPPA_SIGMA * mu / gl)[lo_f],
        )
        zu[up_f] = np.clip(
            zu[up_f], (mu / (_KAPPA_SIGMA * gu))[up_f],
            (_KAPPA_SIGMA * mu / gu)[up_f],
        )

        log.records.append(IterationRecord(
            iteration=it, mu=mu, primal_inf=h_inf,
            dual_inf=report.stationarity, compl=report.complementarity,
            alpha_primal=alpha, alpha_dual=alpha_dual, reg=delta_w,
            inertia_corrections=corrections,
        ))

    return finish(status, z, y, zl, zu, kkt_res)
