import numpy as np
import pytest

from isomono import (INF, ClearanceViolation, FuchsianSystem, InputError, Loop, PathPlan, monodromy,
                     monodromy_rep, transport)
from isomono.generate import random_system
from isomono.transport import auto_base, loop_order

TOL_MON = 1e-6


def _abelian(lams, poles, z0, z1):
    """Closed-form transport for diagonal residues along a straight segment."""
    s = sum(l * np.log((z1 - a) / (z0 - a)) for l, a in zip(lams, poles))
    return np.diag([np.exp(s), np.exp(-s)])


@pytest.fixture(scope="module")
def generic():
    return random_system(11, 4)


def test_diagonal_closed_form(diagonal_system):
    z0, z1 = -0.5 - 0.7j, 1.6 + 1.3j
    Y = transport(diagonal_system, PathPlan((z0, z1)), np.eye(2), 1e-11)
    np.testing.assert_allclose(Y, _abelian([0.2, 0.15, 0.1], [0, 1, 1j], z0, z1), atol=1e-9)


def test_diagonal_polyline_composes(diagonal_system):
    verts = (-0.5 - 0.7j, 0.5 - 0.5j, 1.6 + 1.3j)
    Y = transport(diagonal_system, PathPlan(verts), np.eye(2), 1e-11)
    ref = _abelian([0.2, 0.15, 0.1], [0, 1, 1j], verts[1], verts[2]) @ \
        _abelian([0.2, 0.15, 0.1], [0, 1, 1j], verts[0], verts[1])
    np.testing.assert_allclose(Y, ref, atol=1e-9)


def test_zero_field_is_identity_map():
    empty = FuchsianSystem([], np.zeros((0, 2, 2)), [])
    Y0 = np.array([[1, 2], [3, 4j]])
    np.testing.assert_array_equal(transport(empty, PathPlan((0, 1 + 1j, 3))), np.eye(2))
    np.testing.assert_allclose(transport(empty, PathPlan((0, 1 + 1j)), Y0), Y0)


def test_clearance_violation(generic):
    a = generic.poles[0]
    with pytest.raises(ClearanceViolation):
        transport(generic, PathPlan((a - 0.5, a + 0.5)))


def test_singular_initial_matrix(generic):
    with pytest.raises(InputError):
        transport(generic, PathPlan((0, 0.1)), np.zeros((2, 2)))


def test_determinant_preserved(generic):
    path = PathPlan((0, 0.3 + 0.2j, -0.4 + 0.5j))
    Y0 = np.array([[2, 1], [0.5j, 1]])
    Y = transport(generic, path, Y0, 1e-9)
    assert abs(np.linalg.det(Y) - np.linalg.det(Y0)) < 10 * 1e-9 * path.length


def test_diagonal_monodromy(diagonal_system):
    M = monodromy(diagonal_system, Loop(-0.5 - 0.5j, 0, 0.2), 1e-10)
    np.testing.assert_allclose(M, np.diag(np.exp([2j * np.pi * 0.2, -2j * np.pi * 0.2])), atol=TOL_MON)


def test_diagonal_rep(diagonal_system):
    rep = monodromy_rep(diagonal_system, -0.5 - 0.5j, 1e-10)
    for M, lam in zip(rep.matrices, [0.2, 0.15, 0.1, 0.45]):
        assert abs(M[0, 1]) < TOL_MON and abs(M[1, 0]) < TOL_MON
        assert min(abs(M[0, 0] - np.exp(s * 2j * np.pi * lam)) for s in (1, -1)) < TOL_MON


def test_contractible_loop(generic):
    square = PathPlan((3 + 3j, 4 + 3j, 4 + 4j, 3 + 4j, 3 + 3j))
    np.testing.assert_allclose(transport(generic, square, tol_ode=1e-10), np.eye(2), atol=TOL_MON)


def test_rep_invariants(generic):
    rep = monodromy_rep(generic, 0j)
    assert rep.est_error < TOL_MON
    assert np.abs(rep.product() @ rep.matrices[generic.infinity_index] - np.eye(2)).max() < 1e-12
    for M, lam in zip(rep.matrices, generic.lambdas):
        assert abs(np.linalg.det(M) - 1) < TOL_MON
        for e in np.exp([2j * np.pi * lam, -2j * np.pi * lam]):
            assert np.abs(np.linalg.eigvals(M) - e).min() < TOL_MON


def test_conjugated_system_same_traces(generic):
    g = np.array([[1.2, 0.3 - 0.1j], [-0.2j, 0.9]])
    conj = generic.with_residues(np.einsum("ij,njk,kl->nil", g, generic.residues, np.linalg.inv(g)))
    t1 = monodromy_rep(generic, 0j).traces()
    t2 = monodromy_rep(conj, 0j).traces()
    np.testing.assert_allclose(t1, t2, atol=1e-8)


def test_traces_independent_of_base(generic):
    t1 = monodromy_rep(generic, 0j).traces()
    t2 = monodromy_rep(generic, auto_base([generic.poles])).traces()
    np.testing.assert_allclose(t1, t2, atol=5 * TOL_MON)


def test_halving_tolerance_converges(generic):
    # successive differences are only monotone while the step count is large relative to
    # its jitter, so this fixed case sits in the smooth regime
    loop = Loop(0j, 0, 0.25 * min(abs(generic.poles[0] - generic.poles[j]) for j in (1, 2)))
    Ms = [monodromy(generic, loop, tol) for tol in (1e-5, 5e-6, 2.5e-6)]
    d1 = np.abs(Ms[0] - Ms[1]).max()
    d2 = np.abs(Ms[1] - Ms[2]).max()
    assert d2 / d1 < 0.9


def test_loop_order_by_argument():
    poles = np.array([1j, -1, 1, -1j, 2])
    # arguments lie in (-pi, pi], so -1 comes last
    assert loop_order(poles, 0j) == [3, 2, 4, 0, 1]


def test_threads_are_deterministic(generic, monkeypatch):
    a = monodromy_rep(generic, 0j)
    monkeypatch.setenv("ISOMONO_THREADS", "3")
    b = monodromy_rep(generic, 0j)
    for m1, m2 in zip(a.matrices, b.matrices):
        np.testing.assert_array_equal(m1, m2)


def test_base_on_pole_rejected(generic):
    with pytest.raises(ClearanceViolation):
        monodromy_rep(generic, generic.poles[0])


def test_infinity_generator_relation():
    sys = random_system(5, 5)
    rep = monodromy_rep(sys, 0j)
    assert rep.est_error < TOL_MON
    assert sys.points[-1] is INF
