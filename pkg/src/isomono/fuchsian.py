"""Rank-2 Fuchsian systems on the Riemann sphere.

A system is ``dY/dz = L(z) Y`` with ``L(z) = sum_i B_i / (z - a_i)`` over the
finite marked points. Infinity may be listed as a marked point; its residue is
then ``-sum(finite residues)``, stored explicitly and checked by
:func:`validate`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DegenerateResidue, InconsistentRow, InputError, PoleEvaluation

DEFAULT_TOL_ALG = 1e-10
MAX_POINTS = 12


class _Infinity:
    """The point at infinity of the Riemann sphere (a singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

SpherePoint = Union[complex, _Infinity]


def is_inf(p) -> bool:
    return p is INF


def as_point(p) -> SpherePoint:
    if p is INF or (isinstance(p, str) and p.lower() in ("inf", "infinity")):
        return INF
    z = complex(p)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise InputError(f"finite point expected, got {p!r}; use INF for infinity")
    return z


@dataclass(frozen=True)
class Residue:
    """A traceless 2x2 residue ``m`` with chosen "+" eigenvalue ``lam``."""

    m: np.ndarray
    lam: complex
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "m", np.asarray(self.m, dtype=complex).reshape(2, 2))
        object.__setattr__(self, "lam", complex(self.lam))


@dataclass(frozen=True)
class EigenLine:
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=complex).reshape(2))


@dataclass(frozen=True)
class Violation:
    kind: str  # trace | eigenvalue | residue_sum | resonance | stability | size | distinct
    index: int | None
    detail: str


class FuchsianSystem:
    """Immutable container for marked points, residues and eigenvalue data."""

    def __init__(self, points: Sequence, residues, lambdas: Iterable, tol_alg: float = DEFAULT_TOL_ALG):
        pts = tuple(as_point(p) for p in points)
        res = np.array(residues, dtype=complex).reshape(len(pts), 2, 2)
        lam = np.array(list(lambdas), dtype=complex).reshape(len(pts))
        if sum(1 for p in pts if p is INF) > 1:
            raise InputError("at most one point may be infinity")
        if not tol_alg > 0:
            raise InputError("tol_alg must be positive")
        res.setflags(write=False)
        lam.setflags(write=False)
        self._points = pts
        self._residues = res
        self._lambdas = lam
        self.tol_alg = float(tol_alg)

    @classmethod
    def from_finite(cls, points, finite_residues, lambdas, tol_alg=DEFAULT_TOL_ALG):
        """Build a system whose infinity residue (if INF is listed) is implied."""
        pts = [as_point(p) for p in points]
        finite = iter(np.asarray(finite_residues, dtype=complex).reshape(-1, 2, 2))
        res = []
        for p in pts:
            res.append(np.zeros((2, 2), complex) if p is INF else next(finite))
        res = np.array(res)
        if any(p is INF for p in pts):
            k = next(i for i, p in enumerate(pts) if p is INF)
            res[k] = -sum(res[i] for i, p in enumerate(pts) if p is not INF)
        return cls(pts, res, lambdas, tol_alg)

    @property
    def points(self):
        return self._points

    @property
    def residues(self) -> np.ndarray:
        return self._residues

    @property
    def lambdas(self) -> np.ndarray:
        return self._lambdas

    @property
    def n(self) -> int:
        return len(self._points)

    @property
    def infinity_index(self) -> int | None:
        for i, p in enumerate(self._points):
            if p is INF:
                return i
        return None

    @property
    def finite_indices(self) -> list[int]:
        return [i for i, p in enumerate(self._points) if p is not INF]

    @property
    def poles(self) -> np.ndarray:
        """Finite pole positions, in stored order."""
        return np.array([self._points[i] for i in self.finite_indices], dtype=complex)

    @property
    def finite_residues(self) -> np.ndarray:
        return self._residues[self.finite_indices]

    def residue(self, i: int) -> Residue:
        return Residue(self._residues[i], self._lambdas[i])

    def with_residues(self, residues, lambdas=None) -> "FuchsianSystem":
        return FuchsianSystem(self._points, residues,
                              self._lambdas if lambdas is None else lambdas, self.tol_alg)

    def evaluate(self, z: complex) -> np.ndarray:
        return eval_L(self, z)

    def scale(self) -> float:
        return float(max(1.0, np.abs(self._residues).max(initial=0.0)))

    def __repr__(self):
        return f"FuchsianSystem(points={list(self._points)!r}, lambdas={list(self._lambdas)!r})"


def _dist_to_int(s: complex) -> float:
    return abs(s - round(s.real))


def validate(sys: FuchsianSystem) -> list[Violation]:
    tol = sys.tol_alg
    out: list[Violation] = []
    if sys.n > MAX_POINTS:
        out.append(Violation("size", None, f"n={sys.n} exceeds the cap of {MAX_POINTS}"))
    fin = sys.poles
    for i, j in itertools.combinations(range(len(fin)), 2):
        if abs(fin[i] - fin[j]) < tol:
            out.append(Violation("distinct", i, f"points {i} and {j} coincide"))
    for i in range(sys.n):
        m, lam = sys.residues[i], sys.lambdas[i]
        tr = np.trace(m)
        if abs(tr) > tol:
            out.append(Violation("trace", i, f"|trace|={abs(tr):.3e}"))
        # eigenvalues of a traceless matrix are +-sqrt(-det)
        mu2 = -np.linalg.det(m) + tr * tr / 4
        if abs(mu2 - lam * lam) > tol * max(1.0, abs(lam)):
            out.append(Violation("eigenvalue", i, f"|mu^2-lambda^2|={abs(mu2 - lam * lam):.3e}"))
        two = 2 * lam
        if _dist_to_int(two) < tol and abs(round(two.real)) > 0:
            out.append(Violation("resonance", i, f"2*lambda={two:.6g} is a nonzero integer"))
    inf = sys.infinity_index
    total = sys.finite_residues.sum(axis=0)
    if inf is not None:
        total = total + sys.residues[inf]
    if np.abs(total).max() > tol:
        out.append(Violation("residue_sum", inf, f"residue sum deviates by {np.abs(total).max():.3e}"))
    if sys.n <= MAX_POINTS:
        lam = sys.lambdas
        for eps in itertools.product((1, -1), repeat=sys.n - 1):
            # the first sign is fixed: eps and -eps give the same integrality test
            s = lam[0] + np.dot(eps, lam[1:])
            if _dist_to_int(complex(s)) < tol:
                out.append(Violation("stability", None,
                                     f"signs {(1,) + eps} give sum {complex(s):.6g}"))
                break
    return out


def eval_L(sys, z: complex) -> np.ndarray:
    """Sum of ``B_i / (z - a_i)`` over finite points."""
    z = complex(z)
    poles = sys.poles
    d = z - poles
    if poles.size and np.abs(d).min() < sys.tol_alg:
        raise PoleEvaluation(f"z={z} is a pole")
    if not poles.size:
        return np.zeros((2, 2), complex)
    return np.tensordot(1.0 / d, sys.finite_residues, axes=1)


def _normalize(v: np.ndarray, tol: float) -> np.ndarray:
    v = v / np.linalg.norm(v)
    for c in v:
        if abs(c) > tol:
            return v * (abs(c) / c)
    return v


def eigenline(r: Residue, sign: int | str, tol: float = DEFAULT_TOL_ALG) -> EigenLine:
    """Unit eigenvector of ``r.m`` for eigenvalue ``sign * r.lam``."""
    s = _sign(sign)
    if abs(2 * r.lam) < tol:
        raise DegenerateResidue("eigenlines need distinct eigenvalues")
    return EigenLine(null_vector(r.m - s * r.lam * np.eye(2), tol))


def null_vector(a: np.ndarray, tol: float = DEFAULT_TOL_ALG) -> np.ndarray:
    """Normalized kernel vector of a (numerically) rank-1 2x2 matrix."""
    rows = a if np.linalg.norm(a[0]) >= np.linalg.norm(a[1]) else a[::-1]
    x, y = rows[0]
    if abs(x) < tol and abs(y) < tol:
        return np.array([1.0 + 0j, 0.0])
    return _normalize(np.array([-y, x], dtype=complex), tol)


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise InputError(f"sign must be + or -, got {sign!r}")


def complete_residue(row11: complex, row12: complex, lam: complex,
                     tol: float = DEFAULT_TOL_ALG) -> Residue:
    """Traceless residue with first row ``(row11, row12)`` and eigenvalues ``+-lam``."""
    row11, row12, lam = complex(row11), complex(row12), complex(lam)
    if abs(row12) > tol:
        row21 = (lam * lam - row11 * row11) / row12
        return Residue(np.array([[row11, row12], [row21, -row11]]), lam)
    if min(abs(row11 - lam), abs(row11 + lam)) > tol:
        raise InconsistentRow("zero 12-entry requires row11 = +-lambda")
    return Residue(np.array([[row11, 0], [0, -row11]], dtype=complex), lam, degenerate=True)


def laurent_coefficients(f, center: complex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orders -2, -1 and 0 of the Laurent expansion of ``f`` at ``center``.

    ``f`` is a :class:`FuchsianSystem` or a
    :class:`~isomono.rational.RationalMatrixFunction`; extraction is exact.
    """
    from .rational import RationalMatrixFunction

    if isinstance(f, FuchsianSystem):
        f = RationalMatrixFunction.from_system(f)
    return f.laurent(center)
