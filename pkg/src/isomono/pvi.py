"""Four-point specialization: cross-ratio geometry and the flow in ``t``.

Points of the projective line are handled in homogeneous coordinates, so
infinity enters the cross-ratio without any large-number surrogate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfiguration, DegeneratePoles, InputError, UndefinedCrossRatio
from .fuchsian import INF, FuchsianSystem, as_point, is_inf
from .schlesinger import DEFAULT_TOL_FLOW, RELATIVE_CLEARANCE, DeformationPath, conserved_report, flow
from .sov import _separate, boundary_chart
from .transport import auto_base, monodromy_rep, segment_distance

BOUNDARY_REL = 1e-4
P_LARGE = 1e6
CHART_RADIUS = 0.1


def _hom(p):
    return (1.0, 0.0) if is_inf(p) else (complex(p), 1.0)


def _det(p, q) -> complex:
    return p[0] * q[1] - p[1] * q[0]


@dataclass(frozen=True)
class QuadConfig:
    points: tuple

    def __post_init__(self):
        if len(self.points) != 4:
            raise InputError("a configuration has exactly four points")
        object.__setattr__(self, "points", tuple(as_point(p) for p in self.points))

    @property
    def coincidences(self) -> int:
        """Number of coinciding pairs."""
        h = [_hom(p) for p in self.points]
        return sum(1 for a, b in itertools.combinations(h, 2) if _det(a, b) == 0)

    @property
    def degenerate(self) -> bool:
        return self.coincidences > 0


def cross_ratio(q) -> complex:
    """``(l1 - l3)(l2 - l4) / ((l1 - l4)(l2 - l3))``; returns ``INF`` for a zero denominator."""
    q = q if isinstance(q, QuadConfig) else QuadConfig(tuple(q))
    h1, h2, h3, h4 = (_hom(p) for p in q.points)
    num = _det(h1, h3) * _det(h2, h4)
    den = _det(h1, h4) * _det(h2, h3)
    if den == 0:
        if num == 0:
            raise UndefinedCrossRatio("three or more points coincide")
        return INF
    return complex(num / den)


_S3 = [((0, 1, 2, 3), "e"), ((1, 0, 2, 3), "(12)"), ((0, 2, 1, 3), "(23)"),
       ((2, 1, 0, 3), "(13)"), ((1, 2, 0, 3), "(123)"), ((2, 0, 1, 3), "(132)")]


def s4_orbit(X) -> list[tuple[str, complex]]:
    """Cross-ratios of the six reorderings of ``(X, 1, 0, inf)`` by coset representatives.

    The Klein four-group acts trivially, so these six labels exhaust the
    values taken over all 24 permutations.
    """
    base = (X, 1.0, 0.0, INF)
    return [(label, cross_ratio(tuple(base[k] for k in perm))) for perm, label in _S3]


# ---------------------------------------------------------------- normalization


@dataclass(frozen=True)
class Moebius:
    """``z -> (a z + b) / (c z + d)`` acting on sphere points."""

    matrix: np.ndarray

    def __call__(self, p):
        (a, b), (c, d) = self.matrix
        h = _hom(p)
        num = a * h[0] + b * h[1]
        den = c * h[0] + d * h[1]
        if den == 0:
            return INF
        return complex(num / den)


def moebius_to_standard(a1, a2, a4) -> Moebius:
    """The map with ``a1 -> 0``, ``a2 -> 1``, ``a4 -> inf``."""
    h1, h2, h4 = _hom(a1), _hom(a2), _hom(a4)
    # M(p) = det(p, h1) det(h2, h4) / (det(p, h4) det(h2, h1))
    k1, k4 = _det(h2, h4), _det(h2, h1)
    mat = np.array([[k1 * h1[1], -k1 * h1[0]], [k4 * h4[1], -k4 * h4[0]]], dtype=complex)
    return Moebius(mat)


def normalize_moebius(sys: FuchsianSystem):
    """Move the four poles to ``(0, 1, t, inf)`` in stored order.

    Returns ``(system, t, map)``. Residue matrices are unchanged; ``t`` is the
    image of the third pole, equal to ``cross_ratio((a3, a2, a1, a4))``.
    """
    if sys.n != 4:
        raise InputError("normalization needs exactly four marked points")
    q = QuadConfig(sys.points)
    if q.degenerate:
        raise DegeneratePoles("two marked points coincide")
    a1, a2, a3, a4 = sys.points
    if (not is_inf(a1) and not is_inf(a2) and is_inf(a4) and a1 == 0 and a2 == 1):
        M = Moebius(np.eye(2, dtype=complex))
    else:
        M = moebius_to_standard(a1, a2, a4)
    pts = [0j, 1 + 0j, M(a3), INF]
    t = pts[2]
    return FuchsianSystem(pts, sys.residues, sys.lambdas, sys.tol_alg), t, M


# ---------------------------------------------------------------- flow in t


@dataclass
class PVIRow:
    s: float
    t: complex
    x: complex | None
    p: complex | None
    eigen_drift: float
    flags: str
    charts: list = field(default_factory=list)


@dataclass
class PVITrajectory:
    rows: list
    trajectory: object
    monodromy_drift: float | None = None
    base: complex | None = None


def _is_normalized(sys: FuchsianSystem) -> bool:
    p = sys.points
    return sys.n == 4 and not is_inf(p[0]) and p[0] == 0 and not is_inf(p[1]) and p[1] == 1 \
        and not is_inf(p[2]) and is_inf(p[3])


def _pair_traces(rep) -> np.ndarray:
    mats = rep.matrices
    single = [np.trace(m) for m in mats]
    pairs = [np.trace(mats[i] @ mats[j]) for i, j in itertools.combinations(range(len(mats)), 2)]
    return np.array(single + pairs)


def pvi_flow(sys: FuchsianSystem, t_path, tol: float = DEFAULT_TOL_FLOW, check_monodromy: bool = True,
             base: complex | None = None, tol_ode: float | None = None) -> PVITrajectory:
    """Move the pole ``t`` of a normalized system along ``t_path``, tracking ``(x, p)``.

    Charts are emitted whenever ``x`` comes within the chart radius of a
    finite pole; the chart momentum is ``(x - a) p``, which tends to
    ``+-lambda_a`` as ``x -> a``. Flags: ``D`` divisor proximity, ``P`` large
    momentum, ``I`` separated point near infinity, ``C`` chart emitted.
    """
    if not _is_normalized(sys):
        raise InputError("pvi_flow needs a system normalized to poles (0, 1, t, inf)")
    verts = tuple(complex(v) for v in t_path)
    if abs(verts[0] - sys.points[2]) > 1e-12 * max(1.0, abs(verts[0])):
        raise InputError("the t-path must start at the current value of t")
    clearance = RELATIVE_CLEARANCE * min(1.0, abs(verts[0]), abs(verts[0] - 1))
    for v0, v1 in zip(verts[:-1], verts[1:]):
        for a in (0, 1):
            if segment_distance(v0, v1, a) < clearance:
                raise InputError("the t-path must keep away from 0 and 1")
    traj = flow(sys, DeformationPath(((2, verts),)), tol)
    drift = conserved_report(traj)
    lam_inf = complex(sys.lambdas[3])
    rows = []
    history: list = []
    for (s, snap), rep in zip(traj.samples, drift):
        poles = snap.poles
        scale = max(1.0, float(np.abs(poles).max()))
        flags = ""
        charts = []
        try:
            _, xs, ps, _ = _separate(poles, np.array(snap.finite_residues), lam_inf, sys.tol_alg)
            x, p = complex(xs[0]), complex(ps[0])
        except DegenerateConfiguration:
            x = p = None
            flags += "D"
        if x is not None:
            history.append((x, p))
            if abs(x) > scale / BOUNDARY_REL:
                flags += "I"
            if abs(p) > P_LARGE:
                flags += "P"
            for idx in range(3):
                a = poles[idx]
                if abs(x - a) < CHART_RADIUS * scale:
                    hist = [(hx, (hx - a) * hp) for hx, hp in history[-2:]]
                    ch = boundary_chart(snap, (x, (x - a) * p), idx, tol_boundary=BOUNDARY_REL * scale,
                                        chart_radius=CHART_RADIUS * scale, history=hist)
                    charts.append(ch)
                    flags += "C"
                    if ch.divisor and "D" not in flags:
                        flags += "D"
        rows.append(PVIRow(s, complex(poles[2]), x, p, rep.eigenvalue_drift, flags, charts))
    out = PVITrajectory(rows, traj)
    if check_monodromy:
        b = base if base is not None else auto_base([sys.poles, traj.final.poles])
        kw = {} if tol_ode is None else {"tol_ode": tol_ode}
        m0 = monodromy_rep(sys, b, **kw)
        m1 = monodromy_rep(traj.final, b, **kw)
        out.monodromy_drift = float(np.abs(_pair_traces(m0) - _pair_traces(m1)).max())
        out.base = b
    return out


# ---------------------------------------------------------------- optional residual check


def pvi_parameters(lambdas) -> tuple:
    """``(alpha, beta, gamma, delta)`` from eigenvalues at ``(0, 1, t, inf)``, using ``theta = 2 lambda``."""
    th0, th1, tht, thi = (2 * complex(v) for v in lambdas)
    return ((thi - 1) ** 2 / 2, -th0 ** 2 / 2, th1 ** 2 / 2, (1 - tht ** 2) / 2)


def pvi_rhs(t, x, dx, params) -> complex:
    """Second derivative of ``x`` prescribed by the sixth Painleve equation."""
    a, b, c, d = params
    return (0.5 * (1 / x + 1 / (x - 1) + 1 / (x - t)) * dx ** 2
            - (1 / t + 1 / (t - 1) + 1 / (x - t)) * dx
            + x * (x - 1) * (x - t) / (t ** 2 * (t - 1) ** 2)
            * (a + b * t / x ** 2 + c * (t - 1) / (x - 1) ** 2 + d * t * (t - 1) / (x - t) ** 2))


def pvi_residual(sys: FuchsianSystem, params=None, eps: float = 1e-3) -> float:
    """Relative residual of ``x(t)`` in the sixth Painleve equation at a normalized system.

    ``x`` at ``t +- eps`` comes from single classical Runge-Kutta steps of the
    Schlesinger flow, and the derivatives from central differences.
    """
    from .schlesinger import _rhs

    if not _is_normalized(sys):
        raise InputError("the residual check needs poles (0, 1, t, inf)")
    params = pvi_parameters(sys.lambdas) if params is None else params
    lam_inf = complex(sys.lambdas[3])
    a0 = sys.poles
    adot = np.array([0, 0, 1], dtype=complex)
    B0 = np.array(sys.finite_residues)

    def f(B, t):
        return _rhs(np.array([0, 1, t]), adot, B, 0.0)

    def step(h):
        t = a0[2]
        k1 = f(B0, t)
        k2 = f(B0 + h / 2 * k1, t + h / 2)
        k3 = f(B0 + h / 2 * k2, t + h / 2)
        k4 = f(B0 + h * k3, t + h)
        return B0 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4), t + h

    def xval(B, t):
        return complex(_separate(np.array([0, 1, t]), B, lam_inf, sys.tol_alg)[1][0])

    xm = xval(*step(-eps))
    x0 = xval(B0, a0[2])
    xp = xval(*step(eps))
    dx = (xp - xm) / (2 * eps)
    ddx = (xp - 2 * x0 + xm) / eps ** 2
    rhs = pvi_rhs(complex(a0[2]), x0, dx, params)
    return float(abs(ddx - rhs) / max(1.0, abs(ddx), abs(rhs)))
