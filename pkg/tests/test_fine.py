import math

import numpy as np
import pytest
from scipy.optimize import linprog

from spinbench.bell import (
    ALL_STRATEGIES,
    _MARGINALIZE,
    Behavior,
    JointDistribution16,
    behavior_from_strategy,
    fine_equivalence_scan,
    fine_feasibility,
    mixture_behavior,
    pr_box_behavior,
    singlet_behavior,
)
from spinbench.errors import InvalidInputError
from spinbench.quantum import Direction

CHSH_ANGLES = tuple(Direction(math.radians(d)) for d in (0.0, 90.0, 45.0, 135.0))


def linprog_feasible(behavior: Behavior, tol: float = 1e-9) -> bool:
    """Independent oracle: scipy phase-1 LP for the same feasibility question."""
    res = linprog(
        c=np.zeros(16),
        A_eq=_MARGINALIZE,
        b_eq=behavior.tables.reshape(-1),
        bounds=[(0.0, None)] * 16,
        method="highs",
    )
    return res.status == 0


class TestJointDistribution16:
    def test_strategy_is_point_mass(self):
        w = np.zeros(16)
        w[3] = 1.0
        b = JointDistribution16(w).marginal_behavior()
        b.validate()
        assert np.allclose(b.tables, behavior_from_strategy(ALL_STRATEGIES[3]).tables)

    def test_rejects_wrong_size(self):
        with pytest.raises(InvalidInputError):
            JointDistribution16(np.ones(8))

    def test_marginalization_matrix_consistency(self):
        rng = np.random.Generator(np.random.Philox(key=3))
        w = rng.dirichlet(np.ones(16))
        via_matrix = (_MARGINALIZE @ w).reshape(2, 2, 2, 2)
        assert np.allclose(via_matrix, JointDistribution16(w).marginal_behavior().tables)


class TestFineFeasibility:
    def test_strategies_feasible_with_witness(self):
        for strat in ALL_STRATEGIES:
            res = fine_feasibility(behavior_from_strategy(strat))
            assert res.feasible
            w = res.witness.weights
            b = res.witness.marginal_behavior()
            assert np.allclose(b.tables, behavior_from_strategy(strat).tables, atol=1e-9)
            assert w.sum() == pytest.approx(1.0, abs=1e-9)

    def test_mixture_feasible(self):
        rng = np.random.Generator(np.random.Philox(key=4))
        for _ in range(10):
            res = fine_feasibility(mixture_behavior(rng.dirichlet(np.ones(16))))
            assert res.feasible

    def test_singlet_infeasible_with_certificate(self):
        res = fine_feasibility(singlet_behavior(*CHSH_ANGLES))
        assert not res.feasible
        cert = res.certificate
        assert cert["bound"] == 2.0
        assert abs(cert["value"]) == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-9)
        signs = np.array(cert["inequality"], dtype=float)
        assert abs(np.prod(signs)) == 1.0 and np.prod(signs) == -1.0

    def test_pr_box_infeasible(self):
        res = fine_feasibility(pr_box_behavior())
        assert not res.feasible
        assert abs(res.certificate["value"]) == pytest.approx(4.0)

    def test_agrees_with_scipy_oracle(self):
        rng = np.random.Generator(np.random.Philox(key=6))
        pr = pr_box_behavior()
        cases = [singlet_behavior(*CHSH_ANGLES), pr]
        for _ in range(20):
            mix = mixture_behavior(rng.dirichlet(np.ones(16)))
            cases.append(mix)
            t = rng.random()
            cases.append(Behavior((1.0 - t) * mix.tables + t * pr.tables))
        for behavior in cases:
            mine = fine_feasibility(behavior).feasible
            oracle = linprog_feasible(behavior)
            assert mine == oracle

    def test_certificate_inequality_is_violated_one(self):
        res = fine_feasibility(singlet_behavior(*CHSH_ANGLES))
        signs = np.array(res.certificate["inequality"], dtype=float)
        corr = singlet_behavior(*CHSH_ANGLES).correlations()
        assert float(np.sum(signs * corr)) == pytest.approx(res.certificate["value"])


class TestEquivalenceScan:
    def test_no_disagreements(self):
        report = fine_equivalence_scan(n_random=150, seed=9)
        assert report.disagreements == []
        assert report.n_checked >= 166
        assert report.n_feasible > 0 and report.n_infeasible > 0

    def test_rejects_bad_count(self):
        with pytest.raises(InvalidInputError):
            fine_equivalence_scan(n_random=0, seed=0)
