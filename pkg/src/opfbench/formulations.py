"""Builders for the optimal power flow formulation grid.

Three power-flow structures (non-convex polar AC, lifted second-order-cone
relaxation, linear active-power approximation) are crossed with five cost
attachments (four equivalent piecewise linear encodings plus the quadratic
baseline) to produce ModelIR instances, and solver output is mapped back to
physical dispatch, voltage and flow quantities.

Flow variables exist for both orientations of every branch; Ohm's-law rows
pin each oriented flow to the network physics.  The reference-bus angle is
pinned to zero in the AC and DC structures.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvexityError, ModelBuildError, RecoveryMismatchError
from .modelir import (
    INF,
    AcFlowPolarBlock,
    ApparentPowerLimitBlock,
    LinearBlock,
    ModelIR,
    QuadraticBlock,
    SocConeBlock,
    SolveResult,
    SolveStatus,
)
from .netdata import ComplexPU, Network, branch_admittance, validate_network
from .pwlcost import (
    PiecewiseCost,
    PolynomialCost,
    PwlCurve,
    evaluate,
    evaluate_polynomial,
    preprocess,
)

RECOVERY_RTOL = 1e-6


class PowerFlowKind(enum.Enum):
    AC = "ac"
    SOC = "soc"
    DC = "dc"


class CostKind(enum.Enum):
    PSI = "psi"
    LAMBDA = "lambda"
    DELTA = "delta"
    PHI = "phi"
    POLYNOMIAL = "poly"


PWL_COST_KINDS = (CostKind.PSI, CostKind.LAMBDA, CostKind.DELTA, CostKind.PHI)


@dataclass(frozen=True)
class BranchFlowValue:
    from_bus: int
    to_bus: int
    p: float
    q: float


@dataclass(frozen=True)
class OpfSolution:
    """Physical quantities recovered from a solved formulation."""

    pf_kind: PowerFlowKind
    cost_kind: CostKind
    bus_ids: tuple[int, ...]
    dispatch: tuple[ComplexPU, ...]
    voltage: tuple         # (vm, angle) pairs for AC, w_ii for SOC, angle for DC
    flows: tuple[BranchFlowValue, ...]
    gen_costs: tuple[float, ...]
    objective: float


def _oriented_branches(network: Network):
    """(branch index, from, to, forward) tuples: all forward orientations
    followed by all reverse ones."""
    out = []
    for e, br in enumerate(network.branches):
        out.append((e, br.from_bus, br.to_bus, True))
    for e, br in enumerate(network.branches):
        out.append((e, br.to_bus, br.from_bus, False))
    return out


def _admittance_coefficients(network: Network, e: int, forward: bool):
    """Admittance-matrix entries (gff, bff, gft, bft) for one orientation."""
    br = network.branches[e]
    y = branch_admittance(br)
    t = br.effective_tap
    bc = br.charging
    gft = -y.re / t
    bft = -y.im / t
    if forward:
        gff = y.re / (t * t)
        bff = (y.im + bc / 2.0) / (t * t)
    else:
        gff = y.re
        bff = y.im + bc / 2.0
    return gff, bff, gft, bft


def _require_clean(network: Network):
    errors = [f for f in validate_network(network) if f.severity == "error"]
    if errors:
        raise ModelBuildError(
            "network rejected: " + "; ".join(f.message for f in errors)
        )


def build_power_flow(network: Network, kind: PowerFlowKind,
                     validate: bool = True) -> ModelIR:
    """Power-flow structure of the chosen kind as a cost-less ModelIR.

    The returned model carries variable index maps in ``meta`` so the
    attach_cost_* functions and :func:`recover_solution` can address
    generators, voltages and flows.  No objective is set.
    """
    if validate:
        _require_clean(network)
    if kind == PowerFlowKind.AC:
        return _build_ac(network)
    if kind == PowerFlowKind.SOC:
        return _build_soc(network)
    if kind == PowerFlowKind.DC:
        return _build_dc(network)
    raise ValueError(f"unknown power flow kind {kind}")


def _add_generator_vars(m, network, reactive):
    pg_idx, qg_idx = [], []
    for k, g in enumerate(network.generators):
        pg_idx.append(m.add_variable(
            f"pg[{k}]", g.pmin, g.pmax, 0.5 * (g.pmin + g.pmax)
        ))
        if reactive:
            qg_idx.append(m.add_variable(
                f"qg[{k}]", g.qmin, g.qmax, 0.5 * (g.qmin + g.qmax)
            ))
    return pg_idx, qg_idx


def _balance_rows(network, oriented, pg_idx, qg_idx, flow_p, flow_q):
    """Per-bus power balance entries: generation minus outgoing flows."""
    p_entries, q_entries = [], []
    p_rhs, q_rhs = [], []
    for r, bus in enumerate(network.buses):
        for k in network.gens_at_bus.get(bus.id, ()):
            p_entries.append((r, pg_idx[k], 1.0))
            if qg_idx:
                q_entries.append((r, qg_idx[k], 1.0))
        for a, (_, f, _, _) in enumerate(oriented):
            if f == bus.id:
                p_entries.append((r, flow_p[a], -1.0))
                if flow_q:
                    q_entries.append((r, flow_q[a], -1.0))
        p_rhs.append(bus.demand.re)
        q_rhs.append(bus.demand.im)
    return p_entries, p_rhs, q_entries, q_rhs


def _thermal_block(network, oriented, flow_p, flow_q):
    idx_p, idx_q, limits = [], [], []
    for a, (e, _, _, _) in enumerate(oriented):
        rate = network.branches[e].rate
        if rate > 0.0:
            idx_p.append(flow_p[a])
            idx_q.append(flow_q[a])
            limits.append(rate * rate)
    if not idx_p:
        return None
    return ApparentPowerLimitBlock("thermal", idx_p, idx_q, limits)


def _build_ac(network: Network) -> ModelIR:
    m = ModelIR("ac-opf")
    v_idx, th_idx = {}, {}
    for bus in network.buses:
        v_idx[bus.id] = m.add_variable(
            f"v[{bus.id}]", bus.vmin, bus.vmax, 1.0
        )
        th_idx[bus.id] = m.add_variable(f"th[{bus.id}]", -INF, INF, 0.0)
    pg_idx, qg_idx = _add_generator_vars(m, network, reactive=True)
    oriented = _oriented_branches(network)
    flow_p = [m.add_variable(f"p[{f}->{t}]", -INF, INF, 0.0)
              for _, f, t, _ in oriented]
    flow_q = [m.add_variable(f"q[{f}->{t}]", -INF, INF, 0.0)
              for _, f, t, _ in oriented]

    rows = {"flow": [], "vf": [], "vt": [], "thf": [], "tht": [],
            "a1": [], "kc": [], "ks": []}
    for a, (e, f, t, fwd) in enumerate(oriented):
        gff, bff, gft, bft = _admittance_coefficients(network, e, fwd)
        # active row: p = gff*vf^2 + vf*vt*(gft*cos + bft*sin)
        rows["flow"].append(flow_p[a])
        rows["vf"].append(v_idx[f])
        rows["vt"].append(v_idx[t])
        rows["thf"].append(th_idx[f])
        rows["tht"].append(th_idx[t])
        rows["a1"].append(gff)
        rows["kc"].append(gft)
        rows["ks"].append(bft)
        # reactive row: q = -bff*vf^2 + vf*vt*(gft*sin - bft*cos)
        rows["flow"].append(flow_q[a])
        rows["vf"].append(v_idx[f])
        rows["vt"].append(v_idx[t])
        rows["thf"].append(th_idx[f])
        rows["tht"].append(th_idx[t])
        rows["a1"].append(-bff)
        rows["kc"].append(-bft)
        rows["ks"].append(gft)
    if oriented:
        m.add_block(AcFlowPolarBlock(
            "ohm-polar", rows["flow"], rows["vf"], rows["vt"],
            rows["thf"], rows["tht"], rows["a1"], rows["kc"], rows["ks"],
        ))

    p_ent, p_rhs, q_ent, q_rhs = _balance_rows(
        network, oriented, pg_idx, qg_idx, flow_p, flow_q
    )
    nb = len(network.buses)
    m.add_block(LinearBlock("balance-p", nb, p_ent, p_rhs, p_rhs, True))
    m.add_block(LinearBlock("balance-q", nb, q_ent, q_rhs, q_rhs, True))

    thermal = _thermal_block(network, oriented, flow_p, flow_q)
    if thermal is not None:
        m.add_block(thermal)

    ang_entries, ang_lo, ang_up = [], [], []
    for r, br in enumerate(network.branches):
        ang_entries.append((r, th_idx[br.from_bus], 1.0))
        ang_entries.append((r, th_idx[br.to_bus], -1.0))
        ang_lo.append(br.angmin)
        ang_up.append(br.angmax)
    if network.branches:
        m.add_block(LinearBlock(
            "angle-diff", len(network.branches), ang_entries,
            ang_lo, ang_up, False,
        ))

    ref = network.reference_bus
    m.add_block(LinearBlock(
        "angle-reference", 1, [(0, th_idx[ref], 1.0)], [0.0], [0.0], True
    ))

    m.meta.update(
        pf_kind=PowerFlowKind.AC, network=network, oriented=oriented,
        v_idx=v_idx, th_idx=th_idx, pg_idx=pg_idx, qg_idx=qg_idx,
        flow_p=flow_p, flow_q=flow_q,
    )
    return m


def _build_soc(network: Network) -> ModelIR:
    m = ModelIR("soc-opf")
    w_idx = {}
    for bus in network.buses:
        w_idx[bus.id] = m.add_variable(
            f"w[{bus.id}]", bus.vmin ** 2, bus.vmax ** 2, 1.0
        )
    wr_idx, wi_idx = [], []
    for e, br in enumerate(network.branches):
        wr_idx.append(m.add_variable(
            f"wr[{br.from_bus},{br.to_bus}]", -INF, INF, 1.0
        ))
        wi_idx.append(m.add_variable(
            f"wi[{br.from_bus},{br.to_bus}]", -INF, INF, 0.0
        ))
    pg_idx, qg_idx = _add_generator_vars(m, network, reactive=True)
    oriented = _oriented_branches(network)
    flow_p = [m.add_variable(f"p[{f}->{t}]", -INF, INF, 0.0)
              for _, f, t, _ in oriented]
    flow_q = [m.add_variable(f"q[{f}->{t}]", -INF, INF, 0.0)
              for _, f, t, _ in oriented]

    ohm_entries = []
    nrows = 0
    for a, (e, f, t, fwd) in enumerate(oriented):
        gff, bff, gft, bft = _admittance_coefficients(network, e, fwd)
        wii = w_idx[f]
        wr, wi = wr_idx[e], wi_idx[e]
        im_sign = 1.0 if fwd else -1.0  # reverse rows see conj(W_ij)
        rp = nrows
        ohm_entries += [
            (rp, flow_p[a], 1.0),
            (rp, wii, -gff),
            (rp, wr, -gft),
            (rp, wi, -im_sign * bft),
        ]
        rq = nrows + 1
        ohm_entries += [
            (rq, flow_q[a], 1.0),
            (rq, wii, bff),
            (rq, wi, -im_sign * gft),
            (rq, wr, bft),
        ]
        nrows += 2
    if oriented:
        m.add_block(LinearBlock(
            "ohm-lifted", nrows, ohm_entries,
            [0.0] * nrows, [0.0] * nrows, True,
        ))

    p_ent, p_rhs, q_ent, q_rhs = _balance_rows(
        network, oriented, pg_idx, qg_idx, flow_p, flow_q
    )
    nb = len(network.buses)
    m.add_block(LinearBlock("balance-p", nb, p_ent, p_rhs, p_rhs, True))
    m.add_block(LinearBlock("balance-q", nb, q_ent, q_rhs, q_rhs, True))

    thermal = _thermal_block(network, oriented, flow_p, flow_q)
    if thermal is not None:
        m.add_block(thermal)

    ang_entries, ang_lo, ang_up = [], [], []
    for e, br in enumerate(network.branches):
        # tan(angmin)*Re(W) <= Im(W) <= tan(angmax)*Re(W), split at zero:
        # row 2e:   Im(W) - tan(angmax)*Re(W) in (-inf, 0]
        # row 2e+1: Im(W) - tan(angmin)*Re(W) in [0, inf)
        ang_entries.append((2 * e, wi_idx[e], 1.0))
        ang_entries.append((2 * e, wr_idx[e], -math.tan(br.angmax)))
        ang_lo.append(-INF)
        ang_up.append(0.0)
        ang_entries.append((2 * e + 1, wi_idx[e], 1.0))
        ang_entries.append((2 * e + 1, wr_idx[e], -math.tan(br.angmin)))
        ang_lo.append(0.0)
        ang_up.append(INF)
    if network.branches:
        m.add_block(LinearBlock(
            "angle-diff", 2 * len(network.branches), ang_entries,
            ang_lo, ang_up, False,
        ))

    m.add_block(SocConeBlock(
        "voltage-product-cone",
        wr_idx, wi_idx,
        [w_idx[br.from_bus] for br in network.branches],
        [w_idx[br.to_bus] for br in network.branches],
    ))

    m.meta.update(
        pf_kind=PowerFlowKind.SOC, network=network, oriented=oriented,
        w_idx=w_idx, wr_idx=wr_idx, wi_idx=wi_idx,
        pg_idx=pg_idx, qg_idx=qg_idx, flow_p=flow_p, flow_q=flow_q,
    )
    return m


def _build_dc(network: Network) -> ModelIR:
    m = ModelIR("dc-opf")
    th_idx = {}
    for bus in network.buses:
        th_idx[bus.id] = m.add_variable(f"th[{bus.id}]", -INF, INF, 0.0)
    pg_idx, _ = _add_generator_vars(m, network, reactive=False)
    oriented = _oriented_branches(network)
    flow_p = []
    for a, (e, f, t, _) in enumerate(oriented):
        rate = network.branches[e].rate
        lim = rate if rate > 0.0 else INF
        flow_p.append(m.add_variable(f"p[{f}->{t}]", -lim, lim, 0.0))

    ohm_entries = []
    for a, (e, f, t, _) in enumerate(oriented):
        br = network.branches[e]
        y = branch_admittance(br)
        # first-order flow around the flat start: p = (-b/t)*(th_f - th_t)
        coef = -y.im / br.effective_tap
        ohm_entries.append((a, flow_p[a], 1.0))
        ohm_entries.append((a, th_idx[f], -coef))
        ohm_entries.append((a, th_idx[t], coef))
    if oriented:
        m.add_block(LinearBlock(
            "ohm-dc", len(oriented), ohm_entries,
            [0.0] * len(oriented), [0.0] * len(oriented), True,
        ))

    p_ent, p_rhs, _, _ = _balance_rows(
        network, oriented, pg_idx, [], flow_p, []
    )
    nb = len(network.buses)
    m.add_block(LinearBlock("balance-p", nb, p_ent, p_rhs, p_rhs, True))

    ang_entries, ang_lo, ang_up = [], [], []
    for r, br in enumerate(network.branches):
        ang_entries.append((r, th_idx[br.from_bus], 1.0))
        ang_entries.append((r, th_idx[br.to_bus], -1.0))
        ang_lo.append(br.angmin)
        ang_up.append(br.angmax)
    if network.branches:
        m.add_block(LinearBlock(
            "angle-diff", len(network.branches), ang_entries,
            ang_lo, ang_up, False,
        ))

    ref = network.reference_bus
    m.add_block(LinearBlock(
        "angle-reference", 1, [(0, th_idx[ref], 1.0)], [0.0], [0.0], True
    ))

    m.meta.update(
        pf_kind=PowerFlowKind.DC, network=network, oriented=oriented,
        th_idx=th_idx, pg_idx=pg_idx, flow_p=flow_p,
    )
    return m


# -- cost attachments ----------------------------------------------------


def _ready_curves(m: ModelIR, gens, strict: bool):
    """Validated curves for every generator, preprocessing unless strict."""
    curves = []
    for k, g in enumerate(gens):
        if not isinstance(g.cost, PiecewiseCost):
            raise ModelBuildError(
                f"generator {k} has no piecewise cost curve; "
                f"use the polynomial attachment"
            )
        curve = g.cost.curve
        if strict:
            if not curve.validated:
                raise ModelBuildError(
                    f"generator {k} curve is not validated and strict "
                    f"mode forbids preprocessing"
                )
        elif not curve.validated:
            curve = preprocess(curve, g.pmin, g.pmax)
        curves.append(curve)
    m.meta["cost_curves"] = curves
    return curves


def attach_cost_psi(m: ModelIR, gens, strict: bool = False) -> ModelIR:
    """Epigraph encoding: one cost variable per generator bounded by its
    curve's cost range, one inequality row per segment."""
    curves = _ready_curves(m, gens, strict)
    pg_idx = m.meta["pg_idx"]
    entries, lo, up = [], [], []
    row = 0
    for k, curve in enumerate(curves):
        cg = m.add_variable(
            f"cg[{k}]", curve.costs[0], curve.costs[-1],
            evaluate(curve, m.variables[pg_idx[k]].initial),
        )
        for s, b in zip(curve.slopes, curve.intercepts):
            entries.append((row, cg, 1.0))
            entries.append((row, pg_idx[k], -s))
            lo.append(b)
            up.append(INF)
            row += 1
        m.add_objective_term(cg, 1.0)
    m.add_block(LinearBlock("cost-epigraph", row, entries, lo, up, False))
    m.meta["cost_kind"] = CostKind.PSI
    return m


def attach_cost_lambda(m: ModelIR, gens, strict: bool = False) -> ModelIR:
    """Convex-combination encoding: interpolation weights over breakpoints
    tied to dispatch and summing to one."""
    curves = _ready_curves(m, gens, strict)
    pg_idx = m.meta["pg_idx"]
    entries, rhs = [], []
    row = 0
    for k, curve in enumerate(curves):
        x0 = m.variables[pg_idx[k]].initial
        powers = curve.powers
        l0 = 0
        while l0 < len(powers) - 2 and powers[l0 + 1] <= x0:
            l0 += 1
        w = (x0 - powers[l0]) / (powers[l0 + 1] - powers[l0])
        lam_idx = []
        for l, (p, c) in enumerate(curve.points):
            init = {l0: 1.0 - w, l0 + 1: w}.get(l, 0.0)
            lam_idx.append(m.add_variable(f"lam[{k},{l}]", 0.0, 1.0, init))
            m.add_objective_term(lam_idx[-1], c)
        for l, p in enumerate(powers):
            entries.append((row, lam_idx[l], p))
        entries.append((row, pg_idx[k], -1.0))
        rhs.append(0.0)
        row += 1
        for l in range(len(powers)):
            entries.append((row, lam_idx[l], 1.0))
        rhs.append(1.0)
        row += 1
    m.add_block(LinearBlock("cost-interpolation", row, entries, rhs, rhs, True))
    m.meta["cost_kind"] = CostKind.LAMBDA
    return m


def attach_cost_delta(m: ModelIR, gens, strict: bool = False) -> ModelIR:
    """Generation-bin encoding: one bounded bin per segment, dispatch equal
    to the first breakpoint plus the filled bins."""
    curves = _ready_curves(m, gens, strict)
    pg_idx = m.meta["pg_idx"]
    entries, rhs = [], []
    row = 0
    for k, curve in enumerate(curves):
        x0 = m.variables[pg_idx[k]].initial
        powers = curve.powers
        entries.append((row, pg_idx[k], 1.0))
        for l, s in enumerate(curve.slopes):
            width = powers[l + 1] - powers[l]
            init = min(max(x0 - powers[l], 0.0), width)
            d = m.add_variable(f"dpg[{k},{l}]", 0.0, width, init)
            m.add_objective_term(d, s)
            entries.append((row, d, -1.0))
        m.add_objective_offset(curve.costs[0])
        rhs.append(powers[0])
        row += 1
    m.add_block(LinearBlock("cost-bins", row, entries, rhs, rhs, True))
    m.meta["cost_kind"] = CostKind.DELTA
    return m


def attach_cost_phi(m: ModelIR, gens, strict: bool = False) -> ModelIR:
    """Marginal-excess encoding: first-segment line plus slope-difference
    terms over the excess above each interior breakpoint.

    Two-point curves contribute only their linear term; this is noted in
    the model's build log.
    """
    curves = _ready_curves(m, gens, strict)
    pg_idx = m.meta["pg_idx"]
    notes = m.meta.setdefault("build_notes", [])
    entries, lo, up = [], [], []
    row = 0
    for k, (g, curve) in enumerate(zip(gens, curves)):
        x0 = m.variables[pg_idx[k]].initial
        powers = curve.powers
        m.add_objective_term(pg_idx[k], curve.slopes[0])
        m.add_objective_offset(curve.intercepts[0])
        if len(powers) == 2:
            notes.append(
                f"generator {k}: 2-point curve, excess encoding reduces "
                f"to a pure linear cost"
            )
            continue
        for l in range(1, len(curve.slopes)):
            pb = powers[l]
            ph = m.add_variable(
                f"phi[{k},{l}]", 0.0, g.pmax - pb, max(0.0, x0 - pb)
            )
            m.add_objective_term(ph, curve.slopes[l] - curve.slopes[l - 1])
            entries.append((row, ph, 1.0))
            entries.append((row, pg_idx[k], -1.0))
            lo.append(-pb)
            up.append(INF)
            row += 1
    if row:
        m.add_block(LinearBlock("cost-excess", row, entries, lo, up, False))
    m.meta["cost_kind"] = CostKind.PHI
    return m


def attach_cost_polynomial(m: ModelIR, gens) -> ModelIR:
    """Quadratic baseline lowered to a linear objective plus one epigraph
    row per generator with curvature; pure linear costs stay in the
    objective."""
    pg_idx = m.meta["pg_idx"]
    lin_entries, quad_entries, const, lo, up = [], [], [], [], []
    row = 0
    for k, g in enumerate(gens):
        if not isinstance(g.cost, PolynomialCost):
            raise ModelBuildError(
                f"generator {k} has no polynomial cost; "
                f"use a piecewise attachment"
            )
        a, b, c = g.cost.a, g.cost.b, g.cost.c
        if c < 0:
            raise ConvexityError(
                f"generator {k} has negative quadratic coefficient {c}"
            )
        if c == 0.0:
            m.add_objective_term(pg_idx[k], b)
            m.add_objective_offset(a)
            continue
        ends = [evaluate_polynomial(a, b, c, g.pmin),
                evaluate_polynomial(a, b, c, g.pmax)]
        vertex = -b / (2.0 * c)
        cg_lo = min(ends)
        if g.pmin < vertex < g.pmax:
            cg_lo = min(cg_lo, evaluate_polynomial(a, b, c, vertex))
        x0 = m.variables[pg_idx[k]].initial
        cg = m.add_variable(
            f"cg[{k}]", cg_lo, max(ends), evaluate_polynomial(a, b, c, x0)
        )
        m.add_objective_term(cg, 1.0)
        quad_entries.append((row, pg_idx[k], pg_idx[k], c))
        lin_entries.append((row, pg_idx[k], b))
        lin_entries.append((row, cg, -1.0))
        const.append(a)
        lo.append(-INF)
        up.append(0.0)
        row += 1
    if row:
        m.add_block(QuadraticBlock(
            "cost-quadratic-epigraph", row, lin_entries, quad_entries,
            const, lo, up,
        ))
    m.meta["cost_kind"] = CostKind.POLYNOMIAL
    return m


def build_opf(network: Network, pf_kind: PowerFlowKind, cost_kind: CostKind,
              strict_curves: bool = False, validate: bool = True) -> ModelIR:
    """Complete formulation: power-flow structure plus cost encoding."""
    m = build_power_flow(network, pf_kind, validate=validate)
    gens = network.generators
    if cost_kind == CostKind.PSI:
        attach_cost_psi(m, gens, strict_curves)
    elif cost_kind == CostKind.LAMBDA:
        attach_cost_lambda(m, gens, strict_curves)
    elif cost_kind == CostKind.DELTA:
        attach_cost_delta(m, gens, strict_curves)
    elif cost_kind == CostKind.PHI:
        attach_cost_phi(m, gens, strict_curves)
    elif cost_kind == CostKind.POLYNOMIAL:
        attach_cost_polynomial(m, gens)
    else:
        raise ValueError(f"unknown cost kind {cost_kind}")
    m.name = f"{pf_kind.value}-opf-{cost_kind.value}"
    return m.finalize()


def recover_solution(m: ModelIR, pf_kind: PowerFlowKind, cost_kind: CostKind,
                     result: SolveResult) -> OpfSolution:
    """Extract dispatch, voltages and flows, recomputing costs from dispatch.

    The recomputed total cost must match the solver objective to within
    1e-6 relative; a mismatch signals a modeling bug and raises
    RecoveryMismatchError.
    """
    if result.status != SolveStatus.OPTIMAL:
        raise ModelBuildError(
            f"cannot recover from a {result.status.value} result"
        )
    network: Network = m.meta["network"]
    x = result.x
    pg_idx = m.meta["pg_idx"]
    qg_idx = m.meta.get("qg_idx") or []
    dispatch = tuple(
        ComplexPU(float(x[pg_idx[k]]),
                  float(x[qg_idx[k]]) if qg_idx else 0.0)
        for k in range(len(network.generators))
    )

    gen_costs = []
    for k, g in enumerate(network.generators):
        p = dispatch[k].re
        if cost_kind == CostKind.POLYNOMIAL:
            assert isinstance(g.cost, PolynomialCost)
            gen_costs.append(evaluate_polynomial(
                g.cost.a, g.cost.b, g.cost.c, p
            ))
        else:
            curve: PwlCurve = m.meta["cost_curves"][k]
            domain_lo, domain_hi = curve.powers[0], curve.powers[-1]
            gen_costs.append(evaluate(
                curve, min(max(p, domain_lo), domain_hi)
            ))
    total = float(np.sum(gen_costs))
    scale = max(1.0, abs(result.objective))
    if abs(total - result.objective) > RECOVERY_RTOL * scale:
        raise RecoveryMismatchError(
            f"recomputed cost {total} differs from solver objective "
            f"{result.objective} beyond {RECOVERY_RTOL} relative"
        )

    bus_ids = tuple(b.id for b in network.buses)
    if pf_kind == PowerFlowKind.AC:
        v_idx, th_idx = m.meta["v_idx"], m.meta["th_idx"]
        voltage = tuple(
            (float(x[v_idx[b]]), float(x[th_idx[b]])) for b in bus_ids
        )
    elif pf_kind == PowerFlowKind.SOC:
        w_idx = m.meta["w_idx"]
        voltage = tuple(float(x[w_idx[b]]) for b in bus_ids)
    else:
        th_idx = m.meta["th_idx"]
        voltage = tuple(float(x[th_idx[b]]) for b in bus_ids)

    flow_p = m.meta["flow_p"]
    flow_q = m.meta.get("flow_q")
    flows = tuple(
        BranchFlowValue(
            from_bus=f, to_bus=t, p=float(x[flow_p[a]]),
            q=float(x[flow_q[a]]) if flow_q else 0.0,
        )
        for a, (_, f, t, _) in enumerate(m.meta["oriented"])
    )
    return OpfSolution(
        pf_kind=pf_kind, cost_kind=cost_kind, bus_ids=bus_ids,
        dispatch=dispatch, voltage=voltage, flows=flows,
        gen_costs=tuple(gen_costs), objective=result.objective,
    )
