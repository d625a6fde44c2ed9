"""Hecke modifications as singular gauge transformations.

For ``Y' = L Y`` and ``Y~ = G Y`` the new field is ``G L G^-1 + G' G^-1``.
A lower move at ``x`` keeps the direction line and multiplies the
complementary line by ``(z - x)``; an upper move divides the direction line
by ``(z - x)``. Everything is computed on
:class:`~isomono.rational.RationalMatrixFunction`, so pole orders are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError, NonInvariantDirection, ResidueCheckFailed
from .fuchsian import FuchsianSystem, _sign, eigenline, is_inf
from .rational import RationalMatrixFunction
from .transport import DEFAULT_TOL_ODE, monodromy_rep

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class HeckeMove:
    """A single modification at the finite point ``point``.

    ``complement`` fixes the second basis vector; by default it is the other
    eigenline of the residue at ``point`` when the direction is an eigenline,
    and the orthogonal complement otherwise.
    """

    point: complex
    kind: str  # "lower" | "upper"
    direction: np.ndarray
    complement: np.ndarray | None = None
    shift_record: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("lower", "upper"):
            raise InputError("kind must be 'lower' or 'upper'")
        if is_inf(self.point):
            raise InputError("modifications act at finite points")
        object.__setattr__(self, "point", complex(self.point))
        d = getattr(self.direction, "v", self.direction)
        object.__setattr__(self, "direction", np.asarray(d, dtype=complex).reshape(2))
        if self.complement is not None:
            c = getattr(self.complement, "v", self.complement)
            object.__setattr__(self, "complement", np.asarray(c, dtype=complex).reshape(2))
        if not self.shift_record:
            object.__setattr__(self, "shift_record", {self.point: 1 if self.kind == "lower" else -1})


@dataclass
class ModifyResult:
    function: RationalMatrixFunction
    residue: np.ndarray  # order -1 coefficient at the move point
    eigenvalues: np.ndarray
    trace_shift: int
    order2_norm: float
    non_invariant: bool
    complement: np.ndarray


def _as_rmf(f) -> RationalMatrixFunction:
    return f if isinstance(f, RationalMatrixFunction) else RationalMatrixFunction.from_system(f)


def _complement(f: RationalMatrixFunction, x: complex, d: np.ndarray, tol: float) -> np.ndarray:
    B = f.laurent(x)[1]
    Bd = B @ d
    mu = (d.conj() @ Bd) / (d.conj() @ d)
    if np.abs(Bd - mu * d).max() <= tol * max(1.0, np.abs(B).max()) and np.abs(B).max() > tol:
        w = np.linalg.eigvals(B)
        other = w[np.argmax(np.abs(w - mu))]
        if abs(other - mu) > tol:
            from .fuchsian import null_vector
            return null_vector(B - other * np.eye(2), tol)
    c = np.array([-np.conj(d[1]), np.conj(d[0])])
    return c / np.linalg.norm(c)


def gauge(f, G: RationalMatrixFunction, G_inv: RationalMatrixFunction) -> RationalMatrixFunction:
    """``G L G^-1 + G' G^-1`` in exact partial fractions."""
    L = _as_rmf(f)
    return G @ L @ G_inv + G.derivative() @ G_inv


def modify(f, move: HeckeMove, tol: float = 1e-10) -> ModifyResult:
    """Apply one lower or upper modification to a system or rational function."""
    L = _as_rmf(f)
    x = move.point
    d = move.direction / np.linalg.norm(move.direction)
    c = move.complement if move.complement is not None else _complement(L, x, d, tol)
    V = np.column_stack([d, c])
    if abs(np.linalg.det(V)) < tol * np.linalg.norm(c):
        raise InputError("direction and complement must be independent")
    Vi = np.linalg.inv(V)
    Pd = np.outer(V[:, 0], Vi[0])
    Pc = np.outer(V[:, 1], Vi[1])
    if move.kind == "lower":
        G = RationalMatrixFunction(poly=[Pd - x * Pc, Pc])
        Gi = RationalMatrixFunction({(x, 1): Pc}, [Pd])
        shift = 1
    else:
        G = RationalMatrixFunction({(x, 1): Pd}, [Pc])
        Gi = RationalMatrixFunction(poly=[Pc - x * Pd, Pd])
        shift = -1
    out = gauge(L, G, Gi)
    c2, c1, _ = out.laurent(x)
    n2 = float(np.abs(c2).max())
    scale = max(1.0, float(np.abs(c1).max()))
    return ModifyResult(out, c1, np.linalg.eigvals(c1), shift, n2, n2 > tol * scale, c)


# ---------------------------------------------------------------- paired moves


@dataclass(frozen=True)
class PairedMove:
    i: int
    j: int
    dirs: tuple  # ("-" | "+", "-" | "+")

    def shifts(self) -> dict:
        """Eigenvalue shift per point index."""
        d1, d2 = (_sign(s) for s in self.dirs)
        out: dict = {}
        out[self.i] = out.get(self.i, 0) + (-HALF if d1 > 0 else HALF)
        out[self.j] = out.get(self.j, 0) + (-HALF if d2 > 0 else HALF)
        return {k: v for k, v in out.items() if v != 0}


def _to_system(sys: FuchsianSystem, out: RationalMatrixFunction, lambdas, tol: float) -> FuchsianSystem:
    scale = sys.scale()
    for (c, m), mat in out.terms.items():
        if m >= 2 and np.abs(mat).max() > tol * scale:
            raise NonInvariantDirection(f"order-{m} pole of size {np.abs(mat).max():.3e} at {c}")
    if out.polynomial_norm() > tol * scale:
        raise ResidueCheckFailed("modified field has a polynomial part")
    fin = sys.finite_indices
    res = np.array(sys.residues)
    known = set()
    for k in fin:
        res[k] = out.terms.get((complex(sys.points[k]), 1), np.zeros((2, 2)))
        known.add(complex(sys.points[k]))
    for (c, m), mat in out.terms.items():
        if c not in known and np.abs(mat).max() > tol * scale:
            raise ResidueCheckFailed(f"modified field has a new pole at {c}")
    inf = sys.infinity_index
    if inf is not None:
        total = res[fin].sum(axis=0)
        if np.abs(total + res[inf]).max() > 1e3 * tol * scale:
            raise ResidueCheckFailed("residue at infinity changed")
        res[inf] = -total
    new = FuchsianSystem(sys.points, res, lambdas, sys.tol_alg)
    for k in range(sys.n):
        m = new.residues[k]
        lam = new.lambdas[k]
        err = max(abs(np.trace(m)), abs(-np.linalg.det(m) - lam * lam))
        if err > 1e3 * tol * max(1.0, abs(lam)) * scale:
            raise ResidueCheckFailed(f"residue {k} does not have eigenvalues +-{lam:.6g} (error {err:.3e})")
    return new


def _same_point(sys: FuchsianSystem, k: int, sign: int, tol: float) -> RationalMatrixFunction:
    a = complex(sys.points[k])
    B = sys.residues[k]
    lam = sign * sys.lambdas[k]
    f0 = eigenline(sys.residue(k), sign, tol).v
    others = [i for i in sys.finite_indices if i != k]
    H0 = sum((sys.residues[i] / (a - sys.points[i]) for i in others), np.zeros((2, 2), complex))
    f1 = -np.linalg.solve(B - (lam + 1) * np.eye(2), H0 @ f0)
    w = np.array([f0[1], -f0[0]])
    wf1 = w @ f1
    if abs(wf1) < tol * max(1.0, np.linalg.norm(f1)):
        raise NonInvariantDirection("regular part preserves the eigenline; no shift gauge exists")
    w = w / wf1
    A = -np.outer(f0, w)
    G = RationalMatrixFunction({(a, 1): A}, [np.eye(2)])
    Gi = RationalMatrixFunction({(a, 1): -A}, [np.eye(2)])
    return gauge(sys, G, Gi)


def paired_modify(sys: FuchsianSystem, i: int, j: int, dirs=("-", "+"), tol: float = 1e-10) -> FuchsianSystem:
    """Lower move at ``a_i`` and upper move at ``a_j``, twisted back to trace zero.

    ``dirs = (d1, d2)`` name the eigenlines: the lower move multiplies
    ``l_i^{-d1}`` by ``(z - a_i)`` and the upper move keeps ``l_j^{-d2}``
    regular, so that ``lambda_i`` moves by ``+1/2`` for ``d1 = '-'`` and
    ``lambda_j`` by ``-1/2`` for ``d2 = '+'``.
    """
    move = PairedMove(i, j, tuple(dirs))
    for k in (i, j):
        if not 0 <= k < sys.n or is_inf(sys.points[k]):
            raise InputError(f"point {k} must be a finite marked point")
    d1, d2 = (_sign(s) for s in dirs)
    lam = np.array(sys.lambdas)
    for k, v in move.shifts().items():
        lam[k] += float(v)
    if i == j:
        if d1 != d2:
            return FuchsianSystem(sys.points, sys.residues, sys.lambdas, sys.tol_alg)
        # lower then upper in the same eigenline: a unimodular gauge with a nilpotent pole
        out = _same_point(sys, i, -d1, tol)
        return _to_system(sys, out, lam, tol)
    ai, aj = complex(sys.points[i]), complex(sys.points[j])
    li = eigenline(sys.residue(i), -d1, tol).v
    lj = eigenline(sys.residue(j), -d2, tol).v
    V = np.column_stack([lj, li])
    if abs(np.linalg.det(V)) < 1e-8:
        raise NonInvariantDirection("the two eigenlines are parallel")
    Vi = np.linalg.inv(V)
    Q = np.outer(V[:, 1], Vi[1])  # onto l_i^{-d1} along l_j^{-d2}
    G = RationalMatrixFunction({(aj, 1): (aj - ai) * Q}, [np.eye(2)])
    Gi = RationalMatrixFunction({(ai, 1): (ai - aj) * Q}, [np.eye(2)])
    twist = RationalMatrixFunction({(aj, 1): 0.5 * np.eye(2), (ai, 1): -0.5 * np.eye(2)})
    out = gauge(sys, G, Gi) + twist
    return _to_system(sys, out, lam, tol)


@dataclass
class WeylResult:
    shift: list  # Fractions, one per point
    system: FuchsianSystem


def weyl_compose(sys: FuchsianSystem, moves, tol: float = 1e-10) -> WeylResult:
    """Apply paired moves in order and accumulate their shift records."""
    shift = [Fraction(0)] * sys.n
    cur = sys
    for mv in moves:
        mv = mv if isinstance(mv, PairedMove) else PairedMove(*mv)
        cur = paired_modify(cur, mv.i, mv.j, mv.dirs, tol)
        for k, v in mv.shifts().items():
            shift[k] += v
    return WeylResult(shift, cur)


@dataclass(frozen=True)
class TraceComparison:
    index: int
    trace: complex
    trace_modified: complex
    modified: bool

    @property
    def difference(self) -> float:
        return abs(self.trace_modified - self.trace)

    @property
    def abs_difference(self) -> float:
        return abs(abs(self.trace_modified) - abs(self.trace))


def monodromy_effect(sys: FuchsianSystem, sys_modified: FuchsianSystem, base: complex | None = None,
                     tol_ode: float = DEFAULT_TOL_ODE, tol: float = 1e-12) -> list[TraceComparison]:
    """Compare monodromy traces point by point before and after a modification."""
    if list(map(repr, sys.points)) != list(map(repr, sys_modified.points)):
        raise InputError("both systems must share their marked points")
    m0 = monodromy_rep(sys, base, tol_ode)
    m1 = m0 if sys_modified is sys else monodromy_rep(sys_modified, base, tol_ode)
    out = []
    for k in range(sys.n):
        changed = bool(abs(sys.lambdas[k] - sys_modified.lambdas[k]) > tol)
        out.append(TraceComparison(k, complex(np.trace(m0.matrices[k])),
                                   complex(np.trace(m1.matrices[k])), changed))
    return out
