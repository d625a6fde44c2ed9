"""Parallel transport of fundamental solutions and monodromy generators.

Generators are lassos: a straight approach from the base point towards the
encircled pole, a counterclockwise polygonal circle, and the same approach
back. Finite poles are ordered by ``arg(a - base)`` (ties by modulus); with
that order the product ``M_n ... M_1`` is the monodromy of a large
counterclockwise circle, i.e. the inverse of the loop around infinity.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ClearanceViolation, InputError
from .integrate import StepStats, integrate

DEFAULT_TOL_ODE = 1e-9
DEFAULT_TOL_MON = 1e-6
DEFAULT_CLEARANCE = 1e-3
CIRCLE_SEGMENTS = 64


@dataclass(frozen=True)
class PathPlan:
    vertices: tuple
    clearance: float = DEFAULT_CLEARANCE

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(complex(v) for v in self.vertices))

    @property
    def length(self) -> float:
        v = np.array(self.vertices)
        return float(np.abs(np.diff(v)).sum())


@dataclass(frozen=True)
class Loop:
    """Counterclockwise lasso around the marked point ``target_index``.

    The index refers to ``points`` for a system, or to ``poles`` for a
    rational matrix function.
    """

    base: complex
    target_index: int
    radius: float


def loop_target(fld, index: int) -> complex:
    pts = getattr(fld, "points", None)
    p = pts[index] if pts is not None else fld.poles[index]
    if not isinstance(p, (complex, float, int, np.number)):
        raise InputError("a loop target must be a finite point")
    return complex(p)


@dataclass
class MonodromyRep:
    base: complex
    points: tuple
    matrices: list  # aligned with ``points``
    loop_order: list  # point indices, first loop first
    est_error: float
    stats: dict = field(default_factory=dict)

    def product(self) -> np.ndarray:
        """``M_last ... M_first`` over the finite loops."""
        acc = np.eye(2, dtype=complex)
        for i in self.loop_order:
            acc = self.matrices[i] @ acc
        return acc

    def traces(self) -> np.ndarray:
        return np.array([np.trace(m) for m in self.matrices])


def _fast_field(fld):
    """Return a callable ``z -> L(z)`` for a FuchsianSystem or rational function."""
    poles = getattr(fld, "poles", None)
    res = getattr(fld, "finite_residues", None)
    if res is not None:
        poles = np.asarray(poles, complex)
        res = np.asarray(res)
        if poles.size == 0:
            return lambda z: np.zeros((2, 2), complex)
        return lambda z: np.tensordot(1.0 / (z - poles), res, axes=1)
    return fld.evaluate


def segment_distance(p: complex, q: complex, c: complex) -> float:
    d = q - p
    if d == 0:
        return abs(c - p)
    s = ((c - p) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(p + s * d - c)


def check_clearance(fld, path: PathPlan) -> None:
    poles = np.asarray(fld.poles, complex)
    verts = path.vertices
    for k in range(len(verts) - 1):
        if verts[k] == verts[k + 1]:
            raise ClearanceViolation(f"consecutive vertices {k} and {k + 1} coincide")
        for a in poles:
            if segment_distance(verts[k], verts[k + 1], a) < path.clearance:
                raise ClearanceViolation(
                    f"segment {k} passes within {path.clearance:g} of the pole {a}")


def transport(fld, path: PathPlan, Y0=None, tol_ode: float = DEFAULT_TOL_ODE,
              stats: StepStats | None = None) -> np.ndarray:
    """Continue the solution ``Y0`` of ``Y' = L Y`` along the polyline."""
    check_clearance(fld, path)
    Lf = _fast_field(fld)
    Y = np.eye(2, dtype=complex) if Y0 is None else np.array(Y0, dtype=complex)
    if abs(np.linalg.det(Y)) == 0:
        raise InputError("initial matrix must be invertible")
    verts = path.vertices
    for z0, z1 in zip(verts[:-1], verts[1:]):
        dz = z1 - z0
        Y = integrate(lambda s, y, z0=z0, dz=dz: dz * (Lf(z0 + s * dz) @ y), 0.0, 1.0, Y, tol_ode,
                      stats=stats)
    return Y


def default_radius(poles: np.ndarray, target: complex, base: complex) -> float:
    others = [abs(target - a) for a in poles if a != target]
    r = 0.25 * min(others) if others else 0.25 * abs(target - base)
    return min(r, 0.5 * abs(target - base))


def loop_path(poles: np.ndarray, a: complex, loop: Loop,
              clearance: float = DEFAULT_CLEARANCE) -> PathPlan:
    b, r = complex(loop.base), loop.radius
    u = (b - a) / abs(b - a)
    others = [abs(a - p) for p in poles if p != a]
    if others and r >= 0.5 * min(others):
        raise ClearanceViolation("loop radius must be below half the distance to other poles")
    ring = [a + r * u * np.exp(2j * np.pi * k / CIRCLE_SEGMENTS) for k in range(CIRCLE_SEGMENTS)]
    verts = [b] + ring + [ring[0], b]
    return PathPlan(tuple(verts), clearance)


def monodromy(fld, loop: Loop, tol_ode: float = DEFAULT_TOL_ODE,
              clearance: float = DEFAULT_CLEARANCE, stats: StepStats | None = None) -> np.ndarray:
    """Monodromy ``Y(end) Y(start)^-1`` of the lasso around the loop target."""
    path = loop_path(np.asarray(fld.poles, complex), loop_target(fld, loop.target_index), loop, clearance)
    return transport(fld, path, None, tol_ode, stats)


def loop_order(poles: np.ndarray, base: complex) -> list[int]:
    d = np.asarray(poles, complex) - base
    return sorted(range(len(d)), key=lambda i: (np.angle(d[i]), abs(d[i])))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ISOMONO_THREADS", "1")))
    except ValueError:
        return 1


def infinity_path(poles: np.ndarray, base: complex, clearance: float = DEFAULT_CLEARANCE,
                  clockwise: bool = True) -> PathPlan:
    """Big circle around all finite poles, reached through the widest angular gap after the last loop."""
    order = loop_order(poles, base)
    ang = np.angle(np.asarray(poles) - base)
    first, last = ang[order[0]], ang[order[-1]]
    phi = 0.5 * (first + last - 2 * np.pi)
    R = 2.0 * np.abs(np.asarray(poles) - base).max() + 1.0
    start = base + R * np.exp(1j * phi)
    sgn = -1 if clockwise else 1
    ring = [base + R * np.exp(1j * (phi + sgn * 2 * np.pi * k / CIRCLE_SEGMENTS))
            for k in range(CIRCLE_SEGMENTS)]
    return PathPlan(tuple([base] + ring + [start, base]), clearance)


def auto_base(pole_sets, candidates: int = 48, radius: float | None = None) -> complex:
    """Base point whose radial approach rays stay farthest from the other poles."""
    allp = np.concatenate([np.asarray(ps, complex) for ps in pole_sets])
    center = allp.mean()
    R = radius or (np.abs(allp - center).max() + 1.0)
    best, best_val = None, -1.0
    for k in range(candidates):
        b = center + R * np.exp(2j * np.pi * (k + 0.5) / candidates)
        worst = np.inf
        for ps in pole_sets:
            ps = np.asarray(ps, complex)
            for a in ps:
                for c in ps:
                    if c != a:
                        worst = min(worst, segment_distance(b, a, c) / max(1e-300, abs(a - c)))
        if worst > best_val:
            best, best_val = b, worst
    return complex(best)


def monodromy_rep(sys, base: complex | None = None, tol_ode: float = DEFAULT_TOL_ODE,
                  clearance: float = DEFAULT_CLEARANCE, radii: dict | None = None) -> MonodromyRep:
    """One generator per marked point of ``sys`` with a shared base point.

    Without ``base`` a point is chosen by :func:`auto_base`.
    """
    base = auto_base([sys.poles]) if base is None else complex(base)
    poles = sys.poles
    if poles.size and np.abs(poles - base).min() < clearance:
        raise ClearanceViolation("base point too close to a pole")
    fin_idx = sys.finite_indices
    order = loop_order(poles, base)
    radii = radii or {}

    def run(k):
        a = poles[k]
        r = radii.get(fin_idx[k], default_radius(poles, a, base))
        st = StepStats()
        m = monodromy(sys, Loop(base, fin_idx[k], r), tol_ode, clearance, st)
        return m, st

    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(run, range(len(poles))))
    mats: list = [None] * sys.n
    steps = 0
    for k, (m, st) in enumerate(results):
        mats[fin_idx[k]] = m
        steps += st.accepted
    prod = np.eye(2, dtype=complex)
    for k in order:
        prod = results[k][0] @ prod
    inf = sys.infinity_index
    if inf is None:
        est = float(np.abs(prod - np.eye(2)).max())
    else:
        mats[inf] = np.linalg.inv(prod)
        st = StepStats()
        direct = transport(sys, infinity_path(poles, base, clearance), None, tol_ode, st)
        steps += st.accepted
        est = float(np.abs(direct @ prod - np.eye(2)).max())
    return MonodromyRep(base, sys.points, mats, [fin_idx[k] for k in order], est,
                        {"accepted_steps": steps})
