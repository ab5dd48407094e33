"""Tests for the structural condition checker.

Covers the kernel-dimension helper, the sampled hypothesis checks with
deliberately corrupted assemblers, the shifted-block degeneracy verdicts
in both coordinate forms, and report serialization.
"""

import json

import numpy as np
import pytest

from shocklayer import (
    Box,
    GasModel,
    State,
    assemble_A,
    assemble_B,
    assemble_E,
    check_block_linear_degeneracy,
    check_structure,
    eulerian_block_evals,
    kernel_dimension,
    lagrangian_block_evals,
    suggest_sigmas,
)


class TestKernelDimension:
    def test_zero_matrix_full_kernel(self):
        assert kernel_dimension(np.zeros((3, 3))) == 3
        assert kernel_dimension(np.zeros((1, 3))) == 3

    def test_identity_trivial_kernel(self):
        assert kernel_dimension(np.eye(4)) == 0

    def test_rank_one(self):
        M = np.outer([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        assert kernel_dimension(M) == 2

    def test_scale_invariance(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((3, 3))
        M[2] = M[0] + M[1]  # force rank 2
        for s in (1.0, 1e8, 1e-8):
            assert kernel_dimension(s * M) == 1

    def test_rectangular(self):
        M = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert kernel_dimension(M) == 1

    def test_scalar_input(self):
        assert kernel_dimension(np.array(0.0)) == 1
        assert kernel_dimension(np.array(2.5)) == 0


class TestBlockEvals:
    def test_eulerian_values(self, gas):
        a11_eval, e11_eval = eulerian_block_evals(gas)
        st = State(2.0, 0.5, 1.0)
        # E11 = p_rho / (rho theta) = R / rho; the convective entry carries v
        assert e11_eval(st) == pytest.approx(0.5, rel=1e-14)
        assert a11_eval(st) == pytest.approx(0.25, rel=1e-14)

    def test_lagrangian_values(self, gas):
        a11_eval, e11_eval = lagrangian_block_evals(gas)
        for st in (State(1.0, 0.0, 1.0), State(0.3, -2.0, 4.0)):
            assert a11_eval(st) == 0.0
            assert e11_eval(st) == 1.0


class TestDegeneracy:
    def _samples_with_critical(self, sigma):
        # a generic spread plus one state whose velocity equals sigma
        return [
            State(1.0, -0.7, 1.0),
            State(1.5, 0.6, 0.8),
            State(0.8, sigma, 1.2),
            State(1.2, 0.9, 1.5),
        ]

    def test_eulerian_violated_at_interior_sigma(self, gas):
        a11_eval, e11_eval = eulerian_block_evals(gas)
        sigma = 0.0
        verdict = check_block_linear_degeneracy(
            a11_eval, e11_eval, sigma, self._samples_with_critical(sigma)
        )
        assert verdict.verdict == "violated"
        assert not verdict.satisfied
        assert sorted(set(verdict.dims)) == [0, 1]
        # one witness per distinct kernel dimension, sorted by dimension
        assert [dim for _, dim in verdict.witnesses] == [0, 1]
        crit, dim = verdict.witnesses[1]
        assert crit.v == sigma and dim == 1

    def test_eulerian_violated_at_nonzero_sigma(self, gas):
        a11_eval, e11_eval = eulerian_block_evals(gas)
        sigma = 0.6
        verdict = check_block_linear_degeneracy(
            a11_eval, e11_eval, sigma, self._samples_with_critical(sigma)
        )
        assert verdict.verdict == "violated"
        assert 1 in verdict.dims

    def test_eulerian_satisfied_when_sigma_avoids_flow(self, gas):
        a11_eval, e11_eval = eulerian_block_evals(gas)
        verdict = check_block_linear_degeneracy(
            a11_eval, e11_eval, 5.0, self._samples_with_critical(0.0)
        )
        assert verdict.satisfied
        assert set(verdict.dims) == {0}
        assert len(verdict.witnesses) == 1

    def test_lagrangian_satisfied_everywhere(self, gas):
        # mass-coordinate block is -sigma identically: kernel dim constant
        a11_eval, e11_eval = lagrangian_block_evals(gas)
        for sigma in (0.0, 0.6, -1.3):
            verdict = check_block_linear_degeneracy(
                a11_eval, e11_eval, sigma, self._samples_with_critical(sigma)
            )
            assert verdict.satisfied, f"sigma={sigma}"
            expected = 1 if sigma == 0.0 else 0
            assert set(verdict.dims) == {expected}

    def test_sigma_recorded(self, gas):
        a11_eval, e11_eval = eulerian_block_evals(gas)
        verdict = check_block_linear_degeneracy(a11_eval, e11_eval, 0.25, [State(1.0, 0.9, 1.0)])
        assert verdict.sigma == 0.25


class TestCheckStructure:
    def test_clean_gas_passes(self, gas, box):
        report = check_structure(gas, box, n_samples=200, seed=0)
        assert report.structural_pass()
        assert report.e_spd.passed and report.e_spd.worst > 0.0
        assert report.a0_symmetric.passed and report.a0_symmetric.worst <= 1e-12
        assert report.b_rank.passed and report.b_rank.r == 2
        assert report.b_coercivity.passed and report.b_coercivity.worst > 0.0
        assert report.degeneracy == []

    def test_power_law_gas_passes(self, power_gas, box):
        report = check_structure(power_gas, box, n_samples=100, seed=3)
        assert report.structural_pass()
        assert report.b_rank.r == 2

    def test_seed_determinism(self, gas, box):
        r1 = check_structure(gas, box, n_samples=50, seed=11)
        r2 = check_structure(gas, box, n_samples=50, seed=11)
        assert r1.e_spd.worst == r2.e_spd.worst
        assert r1.b_coercivity.worst == r2.b_coercivity.worst

    def test_detects_indefinite_e(self, gas, box):
        def bad_e(g, state):
            E = assemble_E(g, state)
            E = E.copy()
            E[0, 0] = -E[0, 0]
            return E

        report = check_structure(gas, box, n_samples=50, seed=0, assemble_e=bad_e)
        assert not report.e_spd.passed
        assert report.e_spd.worst < 0.0
        assert report.e_spd.witness is not None
        assert not report.structural_pass()

    def test_detects_asymmetric_e(self, gas, box):
        def bad_e(g, state):
            E = assemble_E(g, state).copy()
            E[0, 1] += 1e-6
            return E

        report = check_structure(gas, box, n_samples=50, seed=0, assemble_e=bad_e)
        assert not report.e_spd.passed

    def test_detects_asymmetric_a(self, gas, box):
        def bad_a(g, state, grad):
            A = assemble_A(g, state, grad).copy()
            A[0, 2] += 1e-6
            return A

        report = check_structure(gas, box, n_samples=50, seed=0, assemble_a=bad_a)
        assert not report.a0_symmetric.passed
        assert report.a0_symmetric.worst >= 1e-6
        assert not report.structural_pass()

    def test_detects_rank_jump(self, gas, box):
        def bad_b(g, state):
            B = assemble_B(g, state).copy()
            if state.v > 0.0:
                B[2, 2] = 0.0
            return B

        report = check_structure(gas, box, n_samples=100, seed=0, assemble_b=bad_b)
        assert not report.b_rank.passed
        assert report.b_rank.r is None
        assert set(report.b_rank.ranks) == {1, 2}
        assert report.b_rank.witness is not None
        assert not report.structural_pass()

    def test_detects_noncoercive_block(self, gas, box):
        def bad_b(g, state):
            B = assemble_B(g, state).copy()
            B[2, 2] = -B[2, 2]
            return B

        report = check_structure(gas, box, n_samples=50, seed=0, assemble_b=bad_b)
        assert report.b_rank.passed  # rank is still 2
        assert not report.b_coercivity.passed
        assert report.b_coercivity.worst < 0.0
        assert not report.structural_pass()

    def test_bad_box_rejected(self, gas):
        from shocklayer import DomainError

        with pytest.raises(DomainError):
            check_structure(gas, Box(rho=(0.0, 1.0), v=(-1.0, 1.0), theta=(0.5, 2.0)))


class TestSuggestSigmas:
    def test_single_state_speeds(self, gas):
        c = np.sqrt(1.4)
        out = suggest_sigmas(gas, [State(1.0, 0.0, 1.0)])
        assert len(out) == 3
        np.testing.assert_allclose(out, [-c, 0.0, c], atol=1e-10)

    def test_sorted_and_deduplicated(self, gas):
        out = suggest_sigmas(gas, [State(1.0, 0.0, 1.0), State(2.0, 0.0, 1.0)])
        # same theta means same speeds regardless of rho
        assert len(out) == 3
        assert out == sorted(out)

    def test_two_velocities(self, gas):
        out = suggest_sigmas(gas, [State(1.0, 0.0, 1.0), State(1.0, 0.5, 1.0)])
        assert len(out) == 6
        assert 0.5 in [round(x, 12) for x in out]


class TestReportSerialization:
    def test_json_dict_round_trips(self, gas, box):
        report = check_structure(gas, box, n_samples=30, seed=1)
        a11_eval, e11_eval = eulerian_block_evals(gas)
        report.degeneracy.append(
            check_block_linear_degeneracy(a11_eval, e11_eval, 0.0, [State(1.0, 0.0, 1.0)])
        )
        d = report.to_json_dict()
        text = json.dumps(d, sort_keys=True)
        back = json.loads(text)
        assert back["structural_pass"] is True
        assert back["b_rank"]["r"] == 2
        assert back["degeneracy"][0]["sigma"] == 0.0
        assert back["degeneracy"][0]["verdict"] == "satisfied"
        assert back["degeneracy"][0]["witnesses"][0]["kernel_dim"] == 1

    def test_text_report_mentions_outcomes(self, gas, box):
        report = check_structure(gas, box, n_samples=30, seed=1)
        a11_eval, e11_eval = eulerian_block_evals(gas)
        report.degeneracy.append(
            check_block_linear_degeneracy(
                a11_eval, e11_eval, 0.0, [State(1.0, -0.5, 1.0), State(1.0, 0.0, 1.0)]
            )
        )
        txt = report.to_text()
        assert "structural hypotheses: pass" in txt
        assert "sigma=0" in txt and "violated" in txt
        assert "witness" in txt

    def test_structural_pass_requires_all_parts(self, gas, box):
        report = check_structure(gas, box, n_samples=10, seed=0)
        report.b_coercivity = None
        assert not report.structural_pass()
