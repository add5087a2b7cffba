import numpy as np
import pytest

from opfbench.ipm import IterationLog, SolverOptions, kkt_check, solve
from opfbench.modelir import (
    INF,
    LinearBlock,
    ModelIR,
    QuadraticBlock,
    SolveResult,
    SolveStatus,
)

from helpers import enumerate_lp_vertices


def lp_min_x_geq_1():
    m = ModelIR("lp1")
    m.add_variable("x", 1.0, INF, 5.0)
    m.add_objective_term(0, 1.0)
    return m.finalize()


def lp_two_var():
    # min -x - 2y s.t. x + y <= 4, x in [0, 3], y in [0, 3]
    m = ModelIR("lp2")
    m.add_variable("x", 0.0, 3.0, 1.0)
    m.add_variable("y", 0.0, 3.0, 1.0)
    m.add_block(LinearBlock("cap", 1, [(0, 0, 1.0), (0, 1, 1.0)],
                            [-INF], [4.0], False))
    m.add_objective_term(0, -1.0)
    m.add_objective_term(1, -2.0)
    return m.finalize()


def qp_epigraph():
    # min t s.t. (x-1)^2 - t <= 0  ->  x = 1, t = 0
    m = ModelIR("qp")
    m.add_variable("x", -5.0, 5.0, 3.0)
    m.add_variable("t", 0.0, 100.0, 10.0)
    m.add_block(QuadraticBlock(
        "epi", 1, [(0, 0, -2.0), (0, 1, -1.0)], [(0, 0, 0, 1.0)],
        [1.0], [-INF], [0.0],
    ))
    m.add_objective_term(1, 1.0)
    return m.finalize()


def infeasible_lp():
    # x >= 0 but row forces x = -1
    m = ModelIR("bad")
    m.add_variable("x", 0.0, INF, 1.0)
    m.add_block(LinearBlock("pin", 1, [(0, 0, 1.0)], [-1.0], [-1.0], True))
    m.add_objective_term(0, 1.0)
    return m.finalize()


class TestToyProblems:
    def test_lp_bound_active(self):
        res, log = solve(lp_min_x_geq_1())
        assert res.status == SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(1.0, abs=1e-5)
        assert res.x[0] == pytest.approx(1.0, abs=1e-5)
        assert len(log) == res.iterations

    def test_lp_two_var_against_vertex_oracle(self):
        m = lp_two_var()
        res, _ = solve(m, SolverOptions(tol=1e-9))
        assert res.status == SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(
            enumerate_lp_vertices(m), abs=1e-8
        )

    def test_qp_epigraph(self):
        res, _ = solve(qp_epigraph())
        assert res.status == SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(0.0, abs=1e-5)
        assert res.x[0] == pytest.approx(1.0, abs=1e-3)

    def test_fixed_variable_via_equal_bounds(self):
        m = ModelIR("fix")
        m.add_variable("x", 2.0, 2.0, 2.0)
        m.add_variable("y", 0.0, 10.0, 5.0)
        m.add_block(LinearBlock("link", 1, [(0, 0, 1.0), (0, 1, -1.0)],
                                [0.0], [0.0], True))
        m.add_objective_term(1, 3.0)
        m.finalize()
        res, _ = solve(m)
        assert res.status == SolveStatus.OPTIMAL
        assert res.x[0] == 2.0
        assert res.x[1] == pytest.approx(2.0, abs=1e-7)
        assert res.objective == pytest.approx(6.0, abs=1e-6)

    def test_infeasible_detected(self):
        res, _ = solve(infeasible_lp())
        assert res.status == SolveStatus.INFEASIBLE

    def test_iteration_limit(self):
        res, log = solve(lp_two_var(), SolverOptions(max_iter=2))
        assert res.status == SolveStatus.ITERATION_LIMIT
        assert res.iterations == len(log.records) <= 2

    def test_unconstrained_bounded_lp(self):
        m = ModelIR("box")
        m.add_variable("x", -1.0, 2.0, 0.0)
        m.add_objective_term(0, -1.0)
        m.finalize()
        res, _ = solve(m)
        assert res.status == SolveStatus.OPTIMAL
        assert res.x[0] == pytest.approx(2.0, abs=1e-5)


class TestSolverContracts:
    def test_determinism_bit_identical(self):
        m1, m2 = lp_two_var(), lp_two_var()
        res1, log1 = solve(m1)
        res2, log2 = solve(m2)
        assert np.array_equal(res1.x, res2.x)
        assert np.array_equal(res1.y, res2.y)
        assert res1.objective == res2.objective
        assert len(log1) == len(log2)
        for r1, r2 in zip(log1.records, log2.records):
            assert (r1.mu, r1.primal_inf, r1.dual_inf, r1.compl,
                    r1.alpha_primal, r1.alpha_dual) == \
                   (r2.mu, r2.primal_inf, r2.dual_inf, r2.compl,
                    r2.alpha_primal, r2.alpha_dual)

    def test_monotone_mu_nonincreasing(self):
        _, log = solve(qp_epigraph(),
                       SolverOptions(barrier_strategy="monotone"))
        mus = [r.mu for r in log.records]
        assert all(a >= b for a, b in zip(mus, mus[1:]))

    def test_adaptive_strategy_solves(self):
        res, _ = solve(qp_epigraph(),
                       SolverOptions(barrier_strategy="adaptive"))
        assert res.status == SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(0.0, abs=1e-5)

    def test_steps_stay_interior(self):
        _, log = solve(lp_two_var())
        for r in log.records:
            assert 0.0 <= r.alpha_primal <= 1.0
            assert 0.0 <= r.alpha_dual <= 1.0

    def test_option_validation(self):
        with pytest.raises(ValueError):
            SolverOptions(tol=0.0)
        with pytest.raises(ValueError):
            SolverOptions(tau=1.0)
        with pytest.raises(ValueError):
            SolverOptions(barrier_strategy="wild")

    def test_time_limit_reports_iteration_limit(self):
        res, _ = solve(lp_two_var(), SolverOptions(time_limit=0.0))
        assert res.status == SolveStatus.ITERATION_LIMIT

    def test_csv_log_columns(self):
        _, log = solve(lp_two_var())
        text = log.to_csv()
        header = text.splitlines()[0]
        assert header == ("iter,mu,primal_inf,dual_inf,compl,"
                          "alpha_primal,alpha_dual,reg")
        assert len(text.splitlines()) == len(log.records) + 1


class TestBackendEquivalence:
    def test_dense_and_sparse_agree(self, monkeypatch):
        import opfbench.ipm as ipm_mod

        m1 = lp_two_var()
        monkeypatch.setattr(ipm_mod, "_DENSE_VAR_LIMIT", 10**9)
        res_dense, _ = solve(m1, SolverOptions(tol=1e-9))
        monkeypatch.setattr(ipm_mod, "_DENSE_VAR_LIMIT", 0)
        m2 = lp_two_var()
        res_sparse, _ = solve(m2, SolverOptions(tol=1e-9))
        assert res_dense.status == res_sparse.status == SolveStatus.OPTIMAL
        assert res_dense.objective == pytest.approx(
            res_sparse.objective, abs=1e-9
        )
        assert res_dense.x == pytest.approx(res_sparse.x, abs=1e-7)


class TestKktCheck:
    def test_optimal_result_passes(self):
        m = lp_two_var()
        res, _ = solve(m)
        report = kkt_check(m, res)
        assert report.max_residual <= 1e-6
        assert report.max_residual == pytest.approx(res.kkt_residual)

    def test_perturbed_point_fails(self):
        m = lp_two_var()
        res, _ = solve(m)
        res.x = res.x.copy()
        res.x[0] += 1e-3
        report = kkt_check(m, res)
        assert report.max_residual > 1e-6

    def test_hand_built_kkt_point(self):
        # epigraph form of min x^2 over free x: t free lower-bounded,
        # row x^2 - t <= 0 active at the origin with unit row dual
        m = ModelIR("minsq")
        ix = m.add_variable("x", -INF, INF, 1.0)
        it = m.add_variable("t", 0.0, INF, 1.0)
        m.add_block(QuadraticBlock(
            "epi", 1, [(0, it, -1.0)], [(0, ix, ix, 1.0)],
            [0.0], [-INF], [0.0],
        ))
        m.add_objective_term(it, 1.0)
        m.finalize()
        result = SolveResult(
            status=SolveStatus.OPTIMAL, objective=0.0,
            x=np.array([0.0, 0.0]), y=np.array([1.0]),
            zl=np.zeros(2), zu=np.zeros(2),
            kkt_residual=0.0, iterations=0, wall_time=0.0,
        )
        report = kkt_check(m, result)
        assert report.max_residual <= 1e-12


class TestRandomLpsAgainstOracle:
    def test_small_random_lps(self):
        rng = np.random.default_rng(2024)
        solved = 0
        for trial in range(20):
            n = int(rng.integers(2, 5))
            m = ModelIR(f"rand{trial}")
            for j in range(n):
                m.add_variable(f"x{j}", 0.0, float(rng.uniform(1.0, 3.0)), 0.5)
            n_rows = int(rng.integers(1, 3))
            entries, lo, up = [], [], []
            for r in range(n_rows):
                for j in range(n):
                    entries.append((r, j, float(rng.uniform(-1.0, 1.0))))
                lo.append(-INF)
                up.append(float(rng.uniform(0.5, 2.0)))
            m.add_block(LinearBlock("rows", n_rows, entries, lo, up, False))
            for j in range(n):
                m.add_objective_term(j, float(rng.uniform(-2.0, 2.0)))
            m.finalize()
            res, _ = solve(m, SolverOptions(tol=1e-9))
            assert res.status == SolveStatus.OPTIMAL
            oracle = enumerate_lp_vertices(m)
            assert res.objective == pytest.approx(oracle, abs=1e-7)
            solved += 1
        assert solved == 20
