import numpy as np
import pytest

from dfokit.drivers import (LEGAL_STATUSES, Status, Termination, TrConfig, criticality_measure,
                            noise_radius_floor, run_classical_tr, run_convex_constrained,
                            run_ibo_first_order, run_ibo_inaccurate, run_ibo_second_order,
                            run_noisy_deterministic, run_self_correcting, run_storm, termination_check)
from dfokit.drivers.common import Evaluator
from dfokit.drivers.storm import storm_sample_size
from dfokit.errors import ConfigError, InfeasibleStart
from dfokit.interp import ModelKind
from dfokit.noise import required_samples
from dfokit.problem_model import (BoundedDeterministic, Box, ObjectiveOracle, Stochastic, WholeSpace)

from driver_checks import check_report, delta_ratio_violations

S = Status


def bowl(n=5, mode=None, record=False):
    return ObjectiveOracle(lambda x: 0.5 * float(x @ x), n, mode, gradient=lambda x: np.array(x, dtype=float),
                           hessian=lambda x: np.eye(n), record=record)


def rosenbrock(record=False):
    f = lambda x: 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
    res = lambda x: np.sqrt(2) * np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])
    return ObjectiveOracle(f, 2, residual=res, record=record)


def constant(n=2):
    return ObjectiveOracle(lambda x: 3.0, n)


class TestConfig:
    def test_defaults(self):
        c = TrConfig()
        assert (c.gamma_dec, c.gamma_inc, c.eta_u, c.eta_s, c.mu_c) == (0.5, 2.0, 0.1, 0.7, 1.0)
        assert (c.beta, c.lambda_threshold, c.delta_min) == (2.0, 10.0, 1e-8)

    @pytest.mark.parametrize("bad", [dict(gamma_dec=1.0), dict(gamma_inc=1.0), dict(eta_u=0.8, eta_s=0.7),
                                     dict(delta0=0.0), dict(beta=1.0), dict(lambda_threshold=1.0),
                                     dict(mu_c=0.0), dict(r=-1.0), dict(hessian="bfgs")])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            TrConfig(**bad)

    def test_from_mapping(self):
        c = TrConfig.from_mapping({"delta0": "0.5", "max_evals": "300", "sigma": "none"})
        assert c.delta0 == 0.5 and c.max_evals == 300 and c.sigma is None
        with pytest.raises(ConfigError, match="valid keys"):
            TrConfig.from_mapping({"delta_zero": 1})
        with pytest.raises(ConfigError):
            TrConfig.from_mapping({"delta0": "abc"})


class TestTermination:
    def test_delta_min(self):
        c = TrConfig()
        assert termination_check(c.delta_min / 2, c) == Termination.DELTA_MIN

    def test_budget(self):
        assert termination_check(1.0, TrConfig(max_evals=10), evals=10) == Termination.MAX_EVALS

    def test_certificate(self):
        c = TrConfig(grad_tol=1e-8, mu_c=1.0)
        assert termination_check(1.0, c, certified=True, norm_g=1e-9, delta=1e-10) == Termination.GRADIENT_TOL
        assert termination_check(1.0, c, certified=False, norm_g=1e-9, delta=1e-10) is None
        assert termination_check(1.0, c, certified=True, norm_g=1e-9, delta=1e-8) is None

    def test_budget_exhausted_mid_build(self):
        o = bowl()
        rep = run_ibo_first_order(o, np.ones(5), TrConfig(max_evals=8))
        assert rep.reason == Termination.MAX_EVALS and rep.evals <= 8 and o.eval_count == rep.evals


class TestCriticality:
    def test_whole_space(self):
        assert criticality_measure([3.0, 4.0], np.zeros(2), WholeSpace()) == 5.0

    def test_box_corner(self):
        box = Box([0, 0], [np.inf, np.inf])
        assert criticality_measure([1.0, 1.0], np.zeros(2), box) == 0.0
        assert criticality_measure([1.0, -1.0], np.zeros(2), box) == pytest.approx(1.0, abs=1e-8)

    def test_interior_point(self):
        box = Box([-5, -5], [5, 5])
        assert criticality_measure([0.3, 0.4], np.zeros(2), box) == pytest.approx(0.5, rel=1e-8)

    def test_against_extreme_points(self, rng):
        # a linear function on the convex set C ∩ B(x, 1) is minimized at an extreme point:
        # a corner (face/face or face/circle) or a point on a feasible circle arc
        lo, hi = np.array([0.0, -0.2]), np.array([np.inf, 0.2])
        box = Box(lo, hi)
        th = np.linspace(0, 2 * np.pi, 400001)
        circle = np.column_stack([np.cos(th), np.sin(th)])
        for _ in range(10):
            x = np.array([rng.uniform(0, 0.5), rng.uniform(-0.2, 0.2)])
            g = rng.normal(size=2)
            cand = [x + circle]
            for b in (lo[1], hi[1]):
                h = b - x[1]
                w = np.sqrt(max(1 - h * h, 0.0))
                cand.append(np.array([[x[0] - w, b], [x[0] + w, b], [lo[0], b]]))
            h = lo[0] - x[0]
            w = np.sqrt(max(1 - h * h, 0.0))
            cand.append(np.array([[lo[0], x[1] - w], [lo[0], x[1] + w]]))
            P = np.vstack(cand)
            P = P[box.contains_many(P) & (np.linalg.norm(P - x, axis=1) <= 1 + 1e-12)]
            exact = abs(min(0.0, float(((P - x) @ g).min())))
            assert criticality_measure(g, x, box) == pytest.approx(exact, abs=1e-6)

    def test_slow_face(self):
        slab = Box([-np.inf, -0.1], [np.inf, 0.1])
        assert criticality_measure([-1e-4, -1.8], np.array([0.9, 0.1]), slab) == pytest.approx(1e-4, rel=1e-6)


class TestEvaluator:
    def test_cache_budget_and_feasibility(self):
        o = bowl(2)
        ev = Evaluator(o, 2, Box([0, 0], [1, 1]))
        ev([0.5, 0.5])
        ev([0.5, 0.5])
        assert o.eval_count == 1
        with pytest.raises(InfeasibleStart):
            ev([2.0, 0.0])
        ev([0.1, 0.1])
        from dfokit.drivers.common import BudgetExhausted
        with pytest.raises(BudgetExhausted):
            ev([0.2, 0.2])
        assert ev.best_f == pytest.approx(0.01)


class TestClassical:
    def test_quadratic_newton(self):
        o = bowl()
        c = TrConfig(grad_tol=1e-8, delta0=10.0)
        rep = run_classical_tr(o, np.arange(1.0, 6.0), c)
        assert rep.reason == Termination.GRADIENT_TOL and len(rep.trace) <= 30
        assert np.linalg.norm(rep.x) <= 1e-8
        assert rep.trace[0].rho == pytest.approx(1.0) and rep.trace[0].status == S.VERY_SUCCESSFUL
        check_report(rep, c, o)

    def test_always_reject_halves(self):
        o = ObjectiveOracle(lambda x: 0.0, 2, gradient=lambda x: np.ones(2), hessian=lambda x: np.zeros((2, 2)))
        c = TrConfig(max_iters=6)
        rep = run_classical_tr(o, np.zeros(2), c)
        assert [r.delta for r in rep.trace] == [0.5**k for k in range(6)]
        assert all(r.status == S.UNSUCCESSFUL for r in rep.trace)

    def test_sr1(self):
        o = bowl(3)
        c = TrConfig(hessian="sr1", grad_tol=1e-8)
        rep = run_classical_tr(o, np.ones(3), c)
        assert np.linalg.norm(rep.x) <= 1e-8
        check_report(rep, c, o)

    def test_needs_gradient(self):
        with pytest.raises(ConfigError):
            run_classical_tr(constant(), np.zeros(2))


class TestFirstOrder:
    def test_bowl(self):
        o = bowl(2)
        c = TrConfig(max_evals=500)
        rep = run_ibo_first_order(o, np.ones(2), c)
        assert np.linalg.norm(rep.x) <= 1e-4 and rep.evals < 500
        check_report(rep, c, o)

    def test_skip_costs_only_model_build(self):
        o = bowl(2)
        c = TrConfig()
        rep = run_ibo_first_order(o, np.ones(2), c)
        prev = 1  # evaluation at x0
        for r in rep.trace:
            if r.status == S.CRITICALITY_SKIP:
                assert r.evals - prev <= 3 and r.rho is None
            prev = r.evals

    def test_rosenbrock_composite(self):
        o = rosenbrock()
        c = TrConfig(max_evals=2000)
        rep = run_ibo_first_order(o, np.array([-1.2, 1.0]), c, ModelKind.COMPOSITE)
        assert rep.f <= 1e-10
        check_report(rep, c, o)

    def test_rosenbrock_min_frobenius(self):
        o = rosenbrock()
        c = TrConfig(max_evals=2000)
        rep = run_ibo_first_order(o, np.array([-1.2, 1.0]), c, ModelKind.MIN_FROBENIUS, n_points=6)
        assert rep.f < 1e-6
        check_report(rep, c, o)

    def test_constant_objective_shrinks_every_iteration(self):
        c = TrConfig()
        rep = run_ibo_first_order(constant(), np.zeros(2), c)
        assert rep.reason == Termination.DELTA_MIN
        # round-off gradients grow like eps/delta, so late iterations may try a step and reject it
        assert {r.status for r in rep.trace} <= {S.CRITICALITY_SKIP, S.UNSUCCESSFUL}
        assert rep.trace[0].status == S.CRITICALITY_SKIP
        assert all(r.delta == 0.5**k for k, r in enumerate(rep.trace))

    def test_deterministic(self):
        a = run_ibo_first_order(bowl(3), np.ones(3))
        b = run_ibo_first_order(bowl(3), np.ones(3))
        assert [(r.status, r.delta, r.f) for r in a.trace] == [(r.status, r.delta, r.f) for r in b.trace]

    def test_monotone_values(self):
        rep = run_ibo_first_order(bowl(4), np.ones(4))
        fs = [r.f for r in rep.trace]
        assert all(b <= a for a, b in zip(fs, fs[1:]))

    def test_rejects_unsupported_kind(self):
        with pytest.raises(ConfigError):
            run_ibo_first_order(bowl(2), np.ones(2), model_kind=ModelKind.FULL_QUADRATIC)
        with pytest.raises(ConfigError):
            run_ibo_first_order(bowl(2), np.ones(2), model_kind=ModelKind.COMPOSITE)


class TestSecondOrder:
    def test_leaves_saddle(self):
        o = ObjectiveOracle(lambda x: x[0] ** 2 - x[1] ** 2, 2)
        rep = run_ibo_second_order(o, np.zeros(2), TrConfig(max_iters=3))
        assert rep.trace[0].measure > 0
        assert np.linalg.norm(rep.x) > 0 or rep.trace[0].status != S.UNSUCCESSFUL

    def test_bilinear_escape(self):
        o = ObjectiveOracle(lambda x: x[0] * x[1], 2)
        c = TrConfig(max_evals=200, delta_max=50.0)
        rep = run_ibo_second_order(o, np.zeros(2), c)
        assert rep.f < -0.5 and rep.trace[0].status == S.VERY_SUCCESSFUL
        assert all(r.delta <= c.delta_max for r in rep.trace) and rep.delta <= c.delta_max
        check_report(rep, c, o)

    def test_convex_measure_is_gradient_norm(self):
        rep = run_ibo_second_order(bowl(2), np.ones(2), TrConfig(max_iters=5))
        for r in rep.trace:
            assert r.measure == pytest.approx(r.norm_g, rel=1e-6)


class TestInaccurate:
    def test_invariants_and_savings(self):
        c = TrConfig(max_evals=2000)
        o1, o2 = bowl(), bowl()
        a = run_ibo_first_order(o1, np.ones(5), c)
        b = run_ibo_inaccurate(o2, np.ones(5), c)
        check_report(b, c, o2)
        assert np.linalg.norm(b.x) <= 1e-4
        assert b.evals <= 0.7 * a.evals

    def test_no_consecutive_model_improving(self):
        rep = run_ibo_inaccurate(rosenbrock(), np.array([-1.2, 1.0]), TrConfig(max_evals=600))
        st_ = [r.status for r in rep.trace]
        assert S.MODEL_IMPROVING in st_
        assert not any(a == b == S.MODEL_IMPROVING for a, b in zip(st_, st_[1:]))

    def test_rejection_rules(self):
        rep = run_ibo_inaccurate(rosenbrock(), np.array([-1.2, 1.0]), TrConfig(max_evals=600))
        for r, nxt in zip(rep.trace, rep.trace[1:]):
            if r.status == S.UNSUCCESSFUL:
                assert nxt.delta == 0.5 * r.delta
            if r.status == S.MODEL_IMPROVING:
                assert nxt.delta == r.delta and np.array_equal(nxt.x, r.x)

    def test_constant_objective(self):
        c = TrConfig()
        rep = run_ibo_inaccurate(constant(), np.zeros(2), c)
        for K_, r in enumerate(rep.trace):
            assert r.delta <= 0.5 ** (K_ // 2) * c.delta0


class TestSelfCorrecting:
    def test_bowl_delta_min(self):
        o = bowl()
        c = TrConfig(delta_min=1e-6, max_evals=5000)
        rep = run_self_correcting(o, np.ones(5), c)
        assert rep.reason == Termination.DELTA_MIN and np.linalg.norm(rep.x) <= 1e-3
        check_report(rep, c, o)

    def test_replacement_iterations(self):
        o = rosenbrock()
        c = TrConfig(max_evals=2000)
        rep = run_self_correcting(o, np.array([-1.2, 1.0]), c, ModelKind.MIN_FROBENIUS, n_points=6)
        assert rep.f < 1e-6
        check_report(rep, c, o)
        kinds = {S.REPLACE_DISTANT, S.REPLACE_BAD}
        run = 0
        for r, nxt in zip(rep.trace, rep.trace[1:]):
            if r.status in kinds:
                assert np.array_equal(nxt.x, r.x) and nxt.delta == r.delta
                assert nxt.evals - r.evals <= 2
                run += 1
                assert run <= 5 * 6
            else:
                run = 0

    def test_distant_branch_taken(self):
        rep = run_self_correcting(bowl(2), np.array([5.0, 5.0]), TrConfig(max_evals=300))
        assert S.REPLACE_DISTANT in {r.status for r in rep.trace}


class TestConstrained:
    def test_whole_space_matches_first_order(self):
        a = run_ibo_first_order(bowl(3), np.ones(3))
        b = run_convex_constrained(bowl(3), np.ones(3), WholeSpace())
        assert [r.status for r in a.trace] == [r.status for r in b.trace]
        assert a.evals == b.evals

    def test_box_shifted_quadratic(self):
        f = lambda x: float(np.sum((x + 1) ** 2))
        o = ObjectiveOracle(f, 2, record=True)
        box = Box([0, 0], [np.inf, np.inf])
        c = TrConfig()
        rep = run_convex_constrained(o, np.ones(2), box, c)
        assert np.allclose(rep.x, 0, atol=1e-6)
        assert criticality_measure(2 * (rep.x + 1), rep.x, box) <= 1e-3
        assert all(box.contains(y) for y in o.history)
        check_report(rep, c, o)

    def test_slab_face(self):
        f = lambda x: float(np.sum((x - 1) ** 2))
        slab = Box([-np.inf, -0.1], [np.inf, 0.1])
        o = ObjectiveOracle(f, 2, record=True)
        rep = run_convex_constrained(o, np.zeros(2), slab)
        assert rep.reason == Termination.DELTA_MIN and np.allclose(rep.x, [1, 0.1], atol=1e-5)
        assert all(slab.contains(y) for y in o.history)

    def test_infeasible_start(self):
        with pytest.raises(InfeasibleStart):
            run_convex_constrained(bowl(2), -np.ones(2), Box([0, 0], [1, 1]))


class TestNoisy:
    def test_tolerance_check(self):
        o = bowl(2, BoundedDeterministic(1e-3))
        with pytest.raises(ConfigError):
            run_noisy_deterministic(o, np.ones(2), TrConfig(r=1e-3))

    def test_noise_floor_formula(self):
        assert noise_radius_floor(3, 0.0) == 0.0
        n, eps = 4, 1e-6
        # coordinate stencil: ||M^-1|| = 2, beta = 1
        kmg = 2 * (0.5 * (1 + np.sqrt(n)) * 2 + 0.5)
        tmg = 2 * (1 + np.sqrt(n)) * 2
        assert noise_radius_floor(n, eps) == pytest.approx(np.sqrt(tmg * eps / kmg))

    def test_exact_equivalence(self):
        c = TrConfig(eta_u=0.7, eta_s=0.7)
        a = run_ibo_first_order(bowl(3), np.ones(3), c)
        b = run_noisy_deterministic(bowl(3), np.ones(3), c)
        assert [r.delta for r in a.trace] == [r.delta for r in b.trace]
        relabel = {S.VERY_SUCCESSFUL: S.SUCCESSFUL}
        assert [relabel.get(r.status, r.status) for r in a.trace] == [r.status for r in b.trace]

    def test_plateau(self):
        eps = 1e-6
        o = bowl(5, BoundedDeterministic(eps, phase=1))
        c = TrConfig(max_evals=2000, r=2 * eps)
        rep = run_noisy_deterministic(o, np.ones(5), c)
        check_report(rep, c, o)
        assert np.linalg.norm(rep.x) <= 2.5 * np.sqrt(eps)


class TestStorm:
    def test_zero_noise_single_samples(self):
        o = bowl(2)
        c = TrConfig(max_evals=2000)
        rep = run_storm(o, np.ones(2), c)
        check_report(rep, c, o)
        for r in rep.trace:
            assert r.samples == (3 if r.rho is None else 5)

    def test_sample_sizes(self):
        o = bowl(2, Stochastic(0.01))
        c = TrConfig(eps_f=0.1, max_iters=1, max_evals=10**7)
        rep = run_storm(o, np.ones(2), c)
        n_m = required_samples(0.01, 0.1, 0.9 ** (1 / 3), 1.0)
        n_f = required_samples(0.01, 0.1, 0.9 ** 0.5, 1.0)
        assert rep.trace[0].samples == 3 * n_m + (2 * n_f if rep.trace[0].rho is not None else 0)

    def test_alpha_one_uses_cap(self):
        assert storm_sample_size(1.0, 1.0, 1.0, 1.0) == 10**7 and storm_sample_size(0.0, 1.0, 1.0, 1.0) == 1

    def test_needs_eps(self):
        with pytest.raises(ConfigError):
            run_storm(bowl(2, Stochastic(0.1)), np.ones(2), TrConfig())

    def test_reproducible_and_ratios(self):
        c = TrConfig(eps_f=0.1, mu_c=0.1, max_evals=200_000, j_max=3)
        runs = [run_storm(bowl(2, Stochastic(0.01)), np.ones(2), c, ModelKind.MIN_FROBENIUS) for _ in range(2)]
        a, b = runs
        assert [(r.delta, r.f, r.samples) for r in a.trace] == [(r.delta, r.f, r.samples) for r in b.trace]
        assert np.array_equal(a.x, b.x)
        assert delta_ratio_violations(a, c) == []
        assert all(r.delta <= 2.0**3 for r in a.trace)

    def test_seed_changes_path(self):
        c1 = TrConfig(eps_f=0.1, mu_c=0.1, max_evals=100_000, seed=1)
        c2 = c1.replace(seed=2)
        a = run_storm(bowl(2, Stochastic(0.01)), np.ones(2), c1)
        b = run_storm(bowl(2, Stochastic(0.01)), np.ones(2), c2)
        assert [r.f for r in a.trace] != [r.f for r in b.trace]


def test_legal_status_table_covers_all_algorithms():
    assert set(LEGAL_STATUSES) == {"classical", "first-order", "second-order", "inaccurate",
                                   "self-correcting", "constrained", "noisy", "storm"}
