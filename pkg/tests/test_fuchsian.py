import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isomono import (INF, DegenerateResidue, FuchsianSystem, InconsistentRow, InputError, PoleEvaluation,
                     Residue, complete_residue, eigenline, eval_L, laurent_coefficients, validate)
from isomono.fuchsian import null_vector

from conftest import traceless

finite = st.floats(-2, 2, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def _generic(lam, seed=0):
    """Random residues with eigenvalues +-lam[0..2] at finite points and the implied one at infinity."""
    rng = np.random.default_rng(seed)
    res = [traceless(rng, l) for l in lam[:3]]
    b_inf = -sum(res)
    lam_inf = np.sqrt(-np.linalg.det(b_inf))
    return FuchsianSystem([0, 1, 2 + 1j, INF], res + [b_inf], list(lam[:3]) + [lam_inf])


def _kinds(report):
    return {v.kind for v in report}


class TestValidate:
    def test_generic_system_is_valid(self):
        from isomono import SeparatedData, reconstruct
        sep = SeparatedData(np.eye(2), ((0.4 + 0.7j, 0.2 - 0.1j),), 1.0)
        sys = reconstruct(sep, [0, 1, 2 + 1j, INF], [0.31, 0.27, 0.19, 0.22])
        assert validate(sys) == []
        np.testing.assert_allclose(sys.residues.sum(axis=0), 0, atol=1e-12)

    def test_sign_enumeration_oracle(self):
        # 0.31 - 0.27 + 0.19 - 0.23 = 0, so this eigenvalue set is reducible
        lam = np.array([0.31, 0.27, 0.19, 0.23])
        sums = [np.dot(e, lam) for e in itertools.product((1, -1), repeat=4)]
        assert min(abs(s - round(s)) for s in sums) < 1e-12
        from isomono import SeparatedData, reconstruct
        sep = SeparatedData(np.eye(2), ((0.4 + 0.7j, 0.2 - 0.1j),), 1.0)
        sys = reconstruct(sep, [0, 1, 2 + 1j, INF], list(lam))
        assert _kinds(validate(sys)) == {"stability"}

    def test_stability_violation(self):
        sys = _generic([0.5, 0.25, 0.125])
        sys = sys.with_residues(sys.residues, [0.5, 0.25, 0.125, 0.125])
        assert "stability" in _kinds(validate(sys))

    def test_residue_sum_violation_without_infinity(self):
        rng = np.random.default_rng(3)
        res = [traceless(rng, l) for l in (0.2, 0.3, 0.15)]
        sys = FuchsianSystem([0, 1, 1j], res, [0.2, 0.3, 0.15])
        assert "residue_sum" in _kinds(validate(sys))

    def test_infinity_residue_must_match(self):
        sys = _generic([0.21, 0.33, 0.17])
        bad = sys.residues.copy()
        bad[-1] += 1e-3 * np.array([[0, 1], [0, 0]])
        assert "residue_sum" in _kinds(validate(sys.with_residues(bad)))

    def test_trace_and_eigenvalue_violations(self):
        sys = _generic([0.21, 0.33, 0.17])
        bad = sys.residues.copy()
        bad[0] = bad[0] + 0.01 * np.eye(2)
        bad[-1] = bad[-1] - 0.01 * np.eye(2)
        assert "trace" in _kinds(validate(sys.with_residues(bad)))
        wrong = list(sys.lambdas)
        wrong[1] = 0.4
        assert "eigenvalue" in _kinds(validate(sys.with_residues(sys.residues, wrong)))

    def test_resonance(self):
        rng = np.random.default_rng(4)
        res = [traceless(rng, 0.5), traceless(rng, 0.2)]
        res.append(-sum(res))
        lam = [0.5, 0.2, np.sqrt(-np.linalg.det(res[-1]))]
        assert "resonance" in _kinds(validate(FuchsianSystem([0, 1, INF], res, lam)))

    def test_distinct_points(self):
        sys = _generic([0.21, 0.33, 0.17])
        clash = FuchsianSystem([0, 0, 2 + 1j, INF], sys.residues, sys.lambdas)
        assert "distinct" in _kinds(validate(clash))

    def test_two_infinities_rejected(self):
        with pytest.raises(InputError):
            FuchsianSystem([INF, INF], np.zeros((2, 2, 2)), [0.1, 0.1])


class TestEvalL:
    def test_single_pole(self):
        sys = FuchsianSystem([0], [np.diag([0.3, -0.3])], [0.3])
        np.testing.assert_allclose(eval_L(sys, 2), np.diag([0.15, -0.15]))

    def test_decay_at_infinity(self):
        sys = _generic([0.21, 0.33, 0.17])
        norms = [np.linalg.norm(eval_L(sys, r * np.exp(0.3j))) * r for r in (1e3, 1e5, 1e7)]
        assert abs(norms[-1] - np.linalg.norm(sys.residues[-1])) < 1e-5

    def test_pole_evaluation(self):
        sys = _generic([0.21, 0.33, 0.17])
        with pytest.raises(PoleEvaluation):
            eval_L(sys, 1.0)

    @given(alpha=cplx, z=cplx)
    def test_linearity(self, alpha, z):
        sys = _generic([0.21, 0.33, 0.17])
        if np.abs(sys.poles - z).min() < 1e-2:
            return
        scaled = sys.with_residues(alpha * sys.residues)
        np.testing.assert_allclose(eval_L(scaled, z), alpha * eval_L(sys, z), atol=1e-12)


class TestEigenline:
    def test_diagonal(self):
        v = eigenline(Residue(np.diag([0.5, -0.5]), 0.5), "+").v
        np.testing.assert_allclose(v, [1, 0])

    def test_null_space_oracle(self):
        m = np.array([[0, 1], [0.25, 0]])
        v = eigenline(Residue(m, 0.5), "+").v
        # null space of m - 0.5 I solved by hand: (1, 0.5)
        np.testing.assert_allclose(v, np.array([1, 0.5]) / np.sqrt(1.25), atol=1e-15)

    def test_nilpotent(self):
        with pytest.raises(DegenerateResidue):
            eigenline(Residue([[0, 1], [0, 0]], 0), "+")

    def test_normalization_first_entry_positive(self):
        v = null_vector(np.array([[1j, 0], [0, 0]]))
        assert abs(v[0]) < 1e-15 and abs(v[1] - 1) < 1e-15

    @given(lam=st.floats(0.05, 0.45), seed=st.integers(0, 10_000))
    def test_independent_eigenlines(self, lam, seed):
        rng = np.random.default_rng(seed)
        m = traceless(rng, lam)
        r = Residue(m, lam)
        vp, vm = eigenline(r, "+").v, eigenline(r, "-").v
        assert abs(np.linalg.det(np.column_stack([vp, vm]))) > 1e-8
        np.testing.assert_allclose(m @ vp, lam * vp, atol=1e-10)
        np.testing.assert_allclose(m @ vm, -lam * vm, atol=1e-10)
        assert abs(np.linalg.norm(vp) - 1) < 1e-14
        first = vp[np.argmax(np.abs(vp) > 1e-10)]
        assert abs(first.imag) < 1e-14 and first.real > 0


class TestCompleteResidue:
    def test_example(self):
        r = complete_residue(0.3, 2.0, 0.5)
        assert abs(r.m[1, 0] - 0.08) < 1e-15
        np.testing.assert_allclose(sorted(np.linalg.eigvals(r.m).real), [-0.5, 0.5], atol=1e-14)

    def test_triangular(self):
        r = complete_residue(0.5, 1.0, 0.5)
        assert r.m[1, 0] == 0

    def test_degenerate_branch_flagged(self):
        r = complete_residue(0.5, 0.0, 0.5)
        assert r.degenerate

    def test_inconsistent(self):
        with pytest.raises(InconsistentRow):
            complete_residue(0.3, 0.0, 0.5)

    @given(a=cplx, b=cplx, lam=cplx)
    def test_algebraic_identities(self, a, b, lam):
        if abs(b) < 1e-3:
            return
        m = complete_residue(a, b, lam).m
        assert np.trace(m) == 0
        scale = max(1.0, abs(lam) ** 2, abs(a) ** 2)
        assert abs(np.linalg.det(m) + lam * lam) <= 1e-14 * scale * 10


class TestLaurent:
    def test_simple_pole(self):
        B = np.array([[0.2, 1], [0.3, -0.2]])
        sys = FuchsianSystem([0.5, INF], [B, -B], [np.sqrt(0.34)] * 2)
        c2, c1, c0 = laurent_coefficients(sys, 0.5)
        assert not c2.any()
        np.testing.assert_array_equal(c1, B)
        assert not c0.any()

    def test_regular_point(self):
        sys = _generic([0.21, 0.33, 0.17])
        c2, c1, c0 = laurent_coefficients(sys, 3 - 2j)
        assert not c2.any() and not c1.any()
        np.testing.assert_allclose(c0, eval_L(sys, 3 - 2j), atol=1e-14)
