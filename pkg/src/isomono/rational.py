"""Exact partial-fraction arithmetic for 2x2 rational matrix functions.

A function is stored as polar terms ``M / (z - c)**m`` keyed by ``(c, m)``
plus a matrix polynomial ``sum_k P_k z**k``. Products are re-expanded into
this basis symbolically, so pole orders are never estimated numerically.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np


@lru_cache(maxsize=4096)
def _pole_pole(a: complex, m: int, b: complex, n: int) -> tuple:
    """Partial fractions of ``(z-a)^-m (z-b)^-n`` for a != b."""
    if m == 0:
        return ((("q", b, n), 1.0 + 0j),)
    if n == 0:
        return ((("q", a, m), 1.0 + 0j),)
    inv = 1.0 / (a - b)
    acc: dict = {}
    for key, c in _pole_pole(a, m, b, n - 1):
        acc[key] = acc.get(key, 0) + inv * c
    for key, c in _pole_pole(a, m - 1, b, n):
        acc[key] = acc.get(key, 0) - inv * c
    return tuple(acc.items())


def _pole_mono(c: complex, m: int, k: int) -> dict:
    """Expansion of ``z^k (z-c)^-m``."""
    acc: dict = {}
    for r in range(k + 1):
        coef = comb(k, r) * c ** (k - r)
        if r < m:
            key = ("q", c, m - r)
            acc[key] = acc.get(key, 0) + coef
        else:
            s = r - m
            for u in range(s + 1):
                key = ("p", u)
                acc[key] = acc.get(key, 0) + coef * comb(s, u) * (-c) ** (s - u)
    return acc


def _mul_basis(x: tuple, y: tuple) -> dict:
    if x[0] == "p" and y[0] == "p":
        return {("p", x[1] + y[1]): 1.0}
    if x[0] == "p":
        x, y = y, x
    if y[0] == "p":
        return _pole_mono(x[1], x[2], y[1])
    if x[1] == y[1]:
        return {("q", x[1], x[2] + y[2]): 1.0}
    return dict(_pole_pole(x[1], x[2], y[1], y[2]))


class RationalMatrixFunction:
    """Sum of matrix polar terms and a matrix polynomial."""

    def __init__(self, terms: dict | None = None, poly=None):
        self.terms: dict[tuple[complex, int], np.ndarray] = {}
        for (c, m), mat in (terms or {}).items():
            self._add(("q", complex(c), int(m)), np.asarray(mat, dtype=complex))
        self.poly: list[np.ndarray] = []
        for k, mat in enumerate(poly or []):
            self._add(("p", k), np.asarray(mat, dtype=complex))

    def _add(self, key, mat):
        if key[0] == "p":
            k = key[1]
            while len(self.poly) <= k:
                self.poly.append(np.zeros((2, 2), complex))
            self.poly[k] = self.poly[k] + mat
        else:
            ck = (key[1], key[2])
            self.terms[ck] = self.terms.get(ck, np.zeros((2, 2), complex)) + mat

    def _items(self):
        for (c, m), mat in self.terms.items():
            yield ("q", c, m), mat
        for k, mat in enumerate(self.poly):
            yield ("p", k), mat

    @classmethod
    def from_system(cls, sys) -> "RationalMatrixFunction":
        return cls({(a, 1): b for a, b in zip(sys.poles, sys.finite_residues)})

    @classmethod
    def constant(cls, mat) -> "RationalMatrixFunction":
        return cls(poly=[mat])

    def copy(self) -> "RationalMatrixFunction":
        return RationalMatrixFunction(dict(self.terms), list(self.poly))

    def __add__(self, other):
        out = self.copy()
        for key, mat in other._items():
            out._add(key, mat)
        return out

    def __neg__(self):
        return RationalMatrixFunction({k: -v for k, v in self.terms.items()}, [-p for p in self.poly])

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, s: complex):
        return RationalMatrixFunction({k: s * v for k, v in self.terms.items()}, [s * p for p in self.poly])

    def __matmul__(self, other):
        out = RationalMatrixFunction()
        for kx, mx in self._items():
            for ky, my in other._items():
                prod = mx @ my
                if not prod.any():
                    continue
                for key, c in _mul_basis(kx, ky).items():
                    out._add(key, c * prod)
        return out

    def derivative(self):
        out = RationalMatrixFunction()
        for (c, m), mat in self.terms.items():
            out._add(("q", c, m + 1), -m * mat)
        for k, mat in enumerate(self.poly[1:], start=1):
            out._add(("p", k - 1), k * mat)
        return out

    def evaluate(self, z: complex) -> np.ndarray:
        z = complex(z)
        acc = np.zeros((2, 2), complex)
        for (c, m), mat in self.terms.items():
            acc += mat / (z - c) ** m
        for k, mat in enumerate(self.poly):
            acc += mat * z ** k
        return acc

    __call__ = evaluate

    @property
    def poles(self) -> np.ndarray:
        """Centers carrying a nonzero polar term."""
        cs = []
        for (c, _), mat in self.terms.items():
            if mat.any() and c not in cs:
                cs.append(c)
        return np.array(cs, dtype=complex)

    def max_order(self, center: complex) -> int:
        orders = [m for (c, m), mat in self.terms.items() if c == center and mat.any()]
        return max(orders, default=0)

    def laurent(self, center: complex):
        """Coefficients of orders -2, -1, 0 at ``center``."""
        center = complex(center)
        zero = np.zeros((2, 2), complex)
        c2 = self.terms.get((center, 2), zero).copy()
        c1 = self.terms.get((center, 1), zero).copy()
        c0 = zero.copy()
        for (c, m), mat in self.terms.items():
            if c != center:
                c0 += mat / (center - c) ** m
        for k, mat in enumerate(self.poly):
            c0 += mat * center ** k
        return c2, c1, c0

    def polynomial_norm(self) -> float:
        return float(max((np.abs(p).max() for p in self.poly), default=0.0))

    def canonical(self, tol: float = 0.0) -> "RationalMatrixFunction":
        """Drop terms whose largest entry is at most ``tol``."""
        terms = {k: v for k, v in self.terms.items() if np.abs(v).max() > tol}
        poly = list(self.poly)
        while poly and np.abs(poly[-1]).max() <= tol:
            poly.pop()
        return RationalMatrixFunction(terms, poly)

    def __repr__(self):
        keys = sorted(self.terms, key=lambda k: (k[0].real, k[0].imag, k[1]))
        return f"RationalMatrixFunction(terms={keys}, poly_degree={len(self.poly) - 1})"
