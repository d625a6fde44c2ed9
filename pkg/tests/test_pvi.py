import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isomono import (INF, DegeneratePoles, FuchsianSystem, InputError, SeparatedData, UndefinedCrossRatio,
                     cross_ratio, monodromy_rep, normalize_moebius, pvi_flow, reconstruct, s4_orbit,
                     separated_variables, validate)
from isomono.io import system_from_dict
from isomono.pvi import Moebius, QuadConfig, pvi_parameters, pvi_residual
from isomono.generate import random_system

coord = st.floats(-3, 3, allow_nan=False)
generic_x = st.builds(complex, coord, coord).filter(lambda z: min(abs(z), abs(z - 1)) > 1e-2)


@pytest.fixture(scope="module")
def fixture_sys():
    text = resources.files("isomono").joinpath("fixtures/pvi_fixture.json").read_text()
    return system_from_dict(json.loads(text))


def _random_moebius(rng):
    while True:
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(m)) > 0.1:
            return Moebius(m)


class TestCrossRatio:
    @given(generic_x)
    def test_standard_position(self, X):
        assert cross_ratio((X, 1, 0, INF)) == X

    @given(generic_x)
    def test_swap_14(self, X):
        assert cross_ratio((INF, 1, 0, X)) == 1 - X

    def test_two_coincide(self):
        q = QuadConfig((0, 1, 0, INF))
        assert cross_ratio(q) == 0 and q.degenerate and q.coincidences == 1

    def test_three_coincide(self):
        with pytest.raises(UndefinedCrossRatio):
            cross_ratio((0, 0, 0, 1))

    def test_infinite_value(self):
        assert cross_ratio((0, 1, 1, 2)) is INF

    def test_moebius_invariance(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            pts = list(rng.normal(size=4) + 1j * rng.normal(size=4))
            M = _random_moebius(rng)
            r0 = cross_ratio(pts)
            r1 = cross_ratio([M(p) for p in pts])
            assert abs(r1 - r0) < 1e-12 * max(1.0, abs(r0))

    def test_moebius_invariance_with_infinity(self):
        M = Moebius(np.array([[1, 2], [1, -1j]]))
        pts = [0.3 + 0.1j, 1, 2j, INF]
        assert abs(cross_ratio([M(p) for p in pts]) - cross_ratio(pts)) < 1e-12


class TestOrbit:
    def test_special_point(self):
        vals = [v for _, v in s4_orbit(2.0)]
        for target in (2, -1, 0.5):
            assert sum(abs(v - target) < 1e-15 for v in vals) == 2

    def test_generic_point(self):
        vals = [v for _, v in s4_orbit(0.3)]
        assert len({round(v.real, 12) for v in vals}) == 6
        expected = {0.3, 0.7, 1 / 0.3, 1 - 1 / 0.3, 1 / 0.7, 0.3 / (0.3 - 1)}
        for e in expected:
            assert min(abs(v - e) for v in vals) < 1e-15

    def test_labels(self):
        assert [label for label, _ in s4_orbit(0.3)] == ["e", "(12)", "(23)", "(13)", "(123)", "(132)"]

    @given(generic_x.filter(lambda z: abs(z) > 0.05 and abs(z - 1) > 0.05))
    def test_closure(self, X):
        vals = [v for _, v in s4_orbit(X)]
        for v in vals:
            for image in (1 - v, 1 / v):
                assert min(abs(image - w) for w in vals) < 1e-9 * max(1.0, abs(image))


class TestNormalize:
    def test_identity(self, fixture_sys):
        out, t, M = normalize_moebius(fixture_sys)
        np.testing.assert_array_equal(M.matrix, np.eye(2))
        assert t == fixture_sys.points[2]

    def test_generic(self):
        sys = random_system(71, 4)
        a1, a2, a3, a4 = sys.points
        moved = FuchsianSystem([a1, a2, a3, 0.5 - 2j], sys.residues, sys.lambdas)
        out, t, M = normalize_moebius(moved)
        assert out.points[:2] == (0, 1) and out.points[3] is INF
        assert abs(t - cross_ratio((a3, a2, a1, 0.5 - 2j))) < 1e-12
        assert validate(out) == []
        t0 = monodromy_rep(sys).traces()
        t1 = monodromy_rep(out).traces()
        np.testing.assert_allclose(np.sort_complex(t1), np.sort_complex(t0), atol=1e-6)

    def test_degenerate(self, fixture_sys):
        bad = FuchsianSystem([0, 0, 1, INF], fixture_sys.residues, fixture_sys.lambdas)
        with pytest.raises(DegeneratePoles):
            normalize_moebius(bad)


PATH = [0.5 + 0.5j, 0.6 + 0.45j, 0.7 + 0.55j]


@pytest.fixture(scope="module")
def traj(fixture_sys):
    return pvi_flow(fixture_sys, PATH)


class TestFlow:
    PATH = PATH

    def test_conservation(self, traj):
        assert max(r.eigen_drift for r in traj.rows) < 1e-8
        assert traj.monodromy_drift < 1e-6
        assert all(r.x is not None for r in traj.rows)
        assert traj.rows[-1].t == pytest.approx(self.PATH[-1])

    def test_one_pair_throughout(self, traj):
        for _, snap in traj.trajectory.samples[:: max(1, len(traj.trajectory.samples) // 5)]:
            assert len(separated_variables(snap).pairs) == 1

    def test_homotopic_paths_agree(self, fixture_sys, traj):
        other = pvi_flow(fixture_sys, [self.PATH[0], 0.55 + 0.6j, self.PATH[-1]], check_monodromy=False)
        assert abs(other.rows[-1].x - traj.rows[-1].x) < 1e-6
        assert abs(other.rows[-1].p - traj.rows[-1].p) < 1e-6

    def test_painleve_residual(self, traj):
        # the separated coordinate obeys the sixth Painleve equation; error is O(eps^2)
        start = traj.trajectory.initial
        end = traj.trajectory.final
        assert pvi_residual(start, eps=1e-3) < 1e-5
        assert pvi_residual(end, eps=1e-3) < 1e-5
        wrong = list(pvi_parameters(start.lambdas))
        wrong[0] += 0.5
        assert pvi_residual(start, params=wrong) > 1e-3

    def test_collision_with_t(self):
        t, lam, s = 0.5 + 0.5j, [0.21, 0.33, 0.27, 0.17], 0.7
        x = t + 1e-5
        p = (lam[2] + s * (x - t)) / (x - t)
        sys = reconstruct(SeparatedData(np.eye(2), ((x, p),), 1.0), [0, 1, t, INF], lam)
        out = pvi_flow(sys, [t, t + 0.01], check_monodromy=False)
        row = out.rows[0]
        assert "D" in row.flags and "C" in row.flags
        chart = row.charts[0]
        assert chart.index == 2 and chart.branch == "+" and chart.divisor
        assert abs(chart.s - s) < 1e-6

    def test_requires_normalized(self):
        with pytest.raises(InputError):
            pvi_flow(random_system(1, 4), [0, 1])

    def test_path_must_avoid_singular_values(self, fixture_sys):
        with pytest.raises(InputError):
            pvi_flow(fixture_sys, [0.5 + 0.5j, -0.5 - 0.5j])
