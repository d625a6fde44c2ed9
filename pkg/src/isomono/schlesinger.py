"""Schlesinger isomonodromic flow.

Moving poles follow polylines, each parameterized uniformly on ``t in [0, 1]``.
Positions of moving poles and all finite residues form one state vector that
a single adaptive integrator advances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InputError, PointCollision
from .fuchsian import INF, FuchsianSystem
from .integrate import StepStats, integrate

DEFAULT_TOL_FLOW = 1e-9
RELATIVE_CLEARANCE = 1e-2


@dataclass(frozen=True)
class DeformationPath:
    moving: tuple  # ((point index, vertices), ...)
    collision_clearance: float | None = None

    def __post_init__(self):
        mv = tuple((int(i), tuple(complex(v) for v in verts)) for i, verts in self.moving)
        for i, verts in mv:
            if len(verts) < 2:
                raise InputError(f"polyline for point {i} needs at least two vertices")
        if len({i for i, _ in mv}) != len(mv):
            raise InputError("each point may appear once in a deformation path")
        object.__setattr__(self, "moving", mv)

    def reversed(self) -> "DeformationPath":
        return DeformationPath(tuple((i, v[::-1]) for i, v in self.moving), self.collision_clearance)

    def breakpoints(self) -> list[float]:
        ts = {0.0, 1.0}
        for _, verts in self.moving:
            m = len(verts) - 1
            ts.update(k / m for k in range(m + 1))
        return sorted(ts)

    def position(self, k: int, t: float) -> complex:
        verts = self.moving[k][1]
        m = len(verts) - 1
        seg = min(int(t * m), m - 1)
        s = t * m - seg
        return verts[seg] + s * (verts[seg + 1] - verts[seg])

    def velocity(self, k: int, t: float) -> complex:
        """Velocity on the segment containing ``t`` (right-continuous)."""
        verts = self.moving[k][1]
        m = len(verts) - 1
        seg = min(int(t * m + 1e-12), m - 1)
        return m * (verts[seg + 1] - verts[seg])


@dataclass
class FlowTrajectory:
    samples: list  # [(t, FuchsianSystem), ...]
    tol_flow: float
    stats: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    @property
    def initial(self) -> FuchsianSystem:
        return self.samples[0][1]

    @property
    def final(self) -> FuchsianSystem:
        return self.samples[-1][1]


def _min_distance(a: np.ndarray) -> float:
    if a.size < 2:
        return np.inf
    d = np.abs(a[:, None] - a[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def _rhs(a: np.ndarray, adot: np.ndarray, B: np.ndarray, clearance: float) -> np.ndarray:
    diff = a[:, None] - a[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.abs(diff).min() < clearance:
        i, j = np.unravel_index(np.abs(diff).argmin(), diff.shape)
        raise PointCollision(f"points {i} and {j} within {clearance:g} of each other")
    W = (adot[:, None] - adot[None, :]) / diff
    np.fill_diagonal(W, 0.0)
    C = np.einsum("ij,jkl->ikl", W, B)
    dB = C @ B - B @ C
    tr = 0.5 * (dB[:, 0, 0] + dB[:, 1, 1])
    dB[:, 0, 0] -= tr
    dB[:, 1, 1] -= tr
    return dB


def schlesinger_rhs(sys: FuchsianSystem, velocities: dict, collision_clearance: float = 0.0) -> list:
    """Time derivatives of the residues, aligned with ``sys.points``.

    The residue at infinity (if marked) is constant, so its entry is zero.
    """
    fin = sys.finite_indices
    pos = {i: k for k, i in enumerate(fin)}
    adot = np.zeros(len(fin), complex)
    for i, v in velocities.items():
        if i not in pos:
            raise InputError(f"point {i} is not a finite marked point")
        adot[pos[i]] = v
    dB = _rhs(sys.poles, adot, np.array(sys.finite_residues), collision_clearance)
    out = [np.zeros((2, 2), complex) for _ in range(sys.n)]
    for k, i in enumerate(fin):
        out[i] = dB[k]
    return out


def flow(sys: FuchsianSystem, dpath: DeformationPath, tol_flow: float = DEFAULT_TOL_FLOW) -> FlowTrajectory:
    """Integrate the Schlesinger equations along ``dpath``."""
    fin = sys.finite_indices
    pos = {i: k for k, i in enumerate(fin)}
    for i, verts in dpath.moving:
        if i not in pos:
            raise InputError(f"point {i} cannot move (infinity or out of range)")
        if abs(verts[0] - sys.points[i]) > sys.tol_alg * max(1.0, abs(verts[0])):
            raise InputError(f"polyline for point {i} must start at its current position")
    a0 = sys.poles
    clearance = dpath.collision_clearance
    if clearance is None:
        clearance = RELATIVE_CLEARANCE * _min_distance(a0) if a0.size > 1 else 0.0
    mov = [pos[i] for i, _ in dpath.moving]
    nf = len(fin)
    nm = len(mov)
    inf = sys.infinity_index
    b_inf = sys.residues[inf] if inf is not None else None
    sample_tol = max(sys.tol_alg, 10 * tol_flow)

    def unpack(y):
        a = a0.copy()
        a[mov] = y[:nm]
        return a, y[nm:].reshape(nf, 2, 2)

    def snapshot(y) -> FuchsianSystem:
        a, B = unpack(y)
        pts = list(sys.points)
        res = np.array(sys.residues)
        for k, i in enumerate(fin):
            pts[i] = complex(a[k])
            res[i] = B[k]
        if inf is not None:
            pts[inf] = INF
            res[inf] = b_inf
        return FuchsianSystem(pts, res, sys.lambdas, sample_tol)

    y = np.concatenate([a0[mov], np.asarray(sys.finite_residues).ravel()])
    samples = [(0.0, snapshot(y))]
    stats = StepStats()
    ts = dpath.breakpoints()
    for t0, t1 in zip(ts[:-1], ts[1:]):
        tm = 0.5 * (t0 + t1)
        adot_m = np.array([dpath.velocity(k, tm) for k in range(nm)], complex)
        adot = np.zeros(nf, complex)
        adot[mov] = adot_m

        def f(t, y, adot=adot, adot_m=adot_m):
            a, B = unpack(y)
            return np.concatenate([adot_m, _rhs(a, adot, B, clearance).ravel()])

        h0 = stats.h_last or None
        y = integrate(f, t0, t1, y, tol_flow, h0=h0,
                      on_accept=lambda t, yy: samples.append((float(t), snapshot(yy))), stats=stats)
        if nm:
            # positions are piecewise linear; pin them to the polyline at breakpoints
            y[:nm] = [dpath.position(k, t1) for k in range(nm)]
            samples[-1] = (float(t1), snapshot(y))
    return FlowTrajectory(samples, tol_flow, {"accepted": stats.accepted, "rejected": stats.rejected})


class ConservedRow(NamedTuple):
    time: float
    eigenvalue_drift: float
    trace_drift: float
    residue_sum_drift: float


def _eigs(B: np.ndarray) -> np.ndarray:
    tr = 0.5 * (B[:, 0, 0] + B[:, 1, 1])
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    return np.sqrt(tr * tr - det)


def conserved_report(traj: FlowTrajectory) -> list[ConservedRow]:
    """Drift of residue eigenvalues, traces and the finite residue sum against the first sample."""
    B0 = np.array(traj.initial.finite_residues)
    mu0 = _eigs(B0)
    tr0 = B0[:, 0, 0] + B0[:, 1, 1]
    s0 = B0.sum(axis=0)
    rows = []
    for t, s in traj.samples:
        B = np.array(s.finite_residues)
        mu = _eigs(B)
        eig = np.minimum(np.abs(mu - mu0), np.abs(mu + mu0))
        tr = B[:, 0, 0] + B[:, 1, 1]
        rows.append(ConservedRow(t, float(eig.max(initial=0.0)), float(np.abs(tr - tr0).max(initial=0.0)),
                                 float(np.abs(B.sum(axis=0) - s0).max())))
    return rows
