"""Separated variables, spectral curve, reconstruction and Poisson brackets.

Gauge convention: all residues are conjugated by one constant matrix so that
the residue at infinity becomes ``diag(lam_inf, -lam_inf)``, and the torus
freedom is fixed by making the numerator of ``L_12`` monic. The separated
coordinates are then ``x_k``, the zeros of ``L_12``, and ``p_k = L_11(x_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (ChartMismatch, DegenerateConfiguration, DegenerateInfinity, InputError,
                     NonInvariantDirection, NumericalNoise, ResidueMismatch, SingularLinearSystem)
from .fuchsian import INF, FuchsianSystem, complete_residue, is_inf, validate
from .rational import RationalMatrixFunction

COND_LIMIT = 1e12
COLLISION_REL = 1e-8
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SeparatedData:
    gauge: np.ndarray
    pairs: tuple  # ((x, p), ...) sorted by (Re x, Im x)
    scale: complex
    lam_inf: complex = 0j

    @property
    def x(self) -> np.ndarray:
        return np.array([x for x, _ in self.pairs], dtype=complex)

    @property
    def p(self) -> np.ndarray:
        return np.array([p for _, p in self.pairs], dtype=complex)


@dataclass(frozen=True)
class SpectralCurveData:
    """``det L(z) * prod (z - a_i)^2`` with coefficients in increasing powers of z."""

    numerator: np.ndarray
    poles: np.ndarray
    double_pole: np.ndarray  # coefficient of (z - a_i)^-2 in det L

    def det_L(self, z: complex) -> complex:
        return complex(np.polyval(self.numerator[::-1], z) / np.prod((z - self.poles) ** 2))

    def R(self, z: complex, lam: complex) -> complex:
        return lam * lam + self.det_L(z)


@dataclass(frozen=True)
class BoundaryChart:
    point: complex
    index: int
    branch: str
    lam: complex
    s: complex | None
    divisor: bool
    distance: float


# ---------------------------------------------------------------- gauge


def _infinity_data(sys: FuchsianSystem):
    inf = sys.infinity_index
    if inf is None:
        raise DegenerateInfinity("infinity must be a marked point")
    return inf, complex(sys.lambdas[inf])


def _diagonalizer(b_inf: np.ndarray, lam_ref: complex, tol: float):
    """Matrix ``g`` with ``g b_inf g^-1`` diagonal, eigenvalue nearest ``lam_ref`` first."""
    w, V = np.linalg.eig(b_inf)
    if abs(w[0] - w[1]) < tol * max(1.0, abs(w).max()):
        raise DegenerateInfinity("the residue at infinity has a repeated eigenvalue")
    if abs(w[1] - lam_ref) < abs(w[0] - lam_ref):
        w, V = w[::-1], V[:, ::-1]
    # deterministic column normalization
    for k in range(2):
        col = V[:, k] / np.linalg.norm(V[:, k])
        j = 0 if abs(col[0]) > tol else 1
        V[:, k] = col * abs(col[j]) / col[j]
    if abs(np.linalg.det(V)) < 1e-8:
        raise DegenerateInfinity("the residue at infinity is not diagonalizable")
    return np.linalg.inv(V), w


def _numerator(poles: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients (highest power first) of ``sum_i b_i prod_{j != i} (z - a_j)``."""
    m = len(poles)
    out = np.zeros(m, complex)
    for i in range(m):
        out += b[i] * np.poly(np.delete(poles, i))
    return out


def _scale(poles: np.ndarray, B: np.ndarray) -> complex:
    return complex(np.dot(B[:, 0, 1], poles))


def gauge_normalize(sys: FuchsianSystem):
    """Conjugate so that the residue at infinity is diagonal and ``L_12`` has a monic numerator.

    Returns
    -------
    (FuchsianSystem, ndarray)
        The normalized system and the total gauge matrix ``G`` with
        ``B_i -> G B_i G^-1``.
    """
    inf, lam_inf = _infinity_data(sys)
    if abs(2 * lam_inf) < sys.tol_alg:
        raise DegenerateInfinity("lambda at infinity vanishes")
    g, _ = _diagonalizer(sys.residues[inf], lam_inf, sys.tol_alg)
    gi = np.linalg.inv(g)
    res = np.einsum("ij,njk,kl->nil", g, sys.residues, gi)
    fin = sys.finite_indices
    scale = _scale(sys.poles, res[fin])
    size = np.abs(res[fin][:, 0, 1]).dot(np.abs(sys.poles)) + 1e-300
    if abs(scale) > sys.tol_alg * size:
        d = np.diag([1.0, scale])
        res = np.einsum("ij,njk,kl->nil", d, res, np.linalg.inv(d))
        g = d @ g
    res[inf] = np.diag([lam_inf, -lam_inf])
    return sys.with_residues(res), g


def _separate(poles: np.ndarray, B: np.ndarray, lam_inf: complex, tol: float, ref_x=None):
    """Raw separation on finite residues ``B``; no validation.

    With ``ref_x`` given, roots are matched to the nearest reference root
    instead of being sorted (used under small perturbations).
    """
    b_inf = -B.sum(axis=0)
    g, _ = _diagonalizer(b_inf, lam_inf, tol)
    Bg = np.einsum("ij,njk,kl->nil", g, B, np.linalg.inv(g))
    scale = _scale(poles, Bg)
    size = np.abs(Bg[:, 0, 1]).dot(np.abs(poles)) + np.abs(Bg[:, 0, 1]).sum() + 1e-300
    m = len(poles)
    if m < 2:
        return g, np.zeros(0, complex), np.zeros(0, complex), scale
    if abs(scale) < 1e-9 * size:
        raise DegenerateConfiguration("the L12 numerator drops degree (a separated point at infinity)")
    num = _numerator(poles, Bg[:, 0, 1])[1:] / scale
    d = np.diag([1.0, scale])
    g = d @ g
    x = np.roots(num) if m > 2 else np.zeros(0, complex)
    x = np.asarray(x, dtype=complex)
    spread = max(1.0, float(np.abs(poles).max()))
    for xk in x:
        if np.abs(xk - poles).min() < COLLISION_REL * spread:
            raise DegenerateConfiguration(f"separated point {xk} collides with a pole")
    if ref_x is not None:
        ref_x = np.asarray(ref_x)
        order = [int(np.abs(x - r).argmin()) for r in ref_x]
        if len(set(order)) != len(order):
            raise DegenerateConfiguration("root matching under perturbation is ambiguous")
        x = x[order]
    else:
        x = np.array(sorted(x, key=lambda z: (z.real, z.imag)), dtype=complex)
        for k in range(len(x) - 1):
            if abs(x[k + 1] - x[k]) < max(TIE_TOL, COLLISION_REL * spread):
                raise DegenerateConfiguration("separated points collide")
    alpha = Bg[:, 0, 0]
    p = np.array([np.sum(alpha / (xk - poles)) for xk in x], dtype=complex)
    return g, x, p, scale


def separated_variables(sys: FuchsianSystem) -> SeparatedData:
    """Separated coordinates ``(x_k, p_k)``, ``n - 3`` pairs."""
    inf, lam_inf = _infinity_data(sys)
    bad = [v for v in validate(sys) if v.kind in ("trace", "residue_sum", "distinct")]
    if bad:
        raise InputError("; ".join(v.detail for v in bad))
    if abs(2 * lam_inf) < sys.tol_alg:
        raise DegenerateInfinity("lambda at infinity vanishes")
    g, x, p, scale = _separate(sys.poles, np.array(sys.finite_residues), lam_inf, sys.tol_alg)
    if len(x) != sys.n - 3:
        raise DegenerateConfiguration(f"expected {sys.n - 3} pairs, found {len(x)}")
    return SeparatedData(g, tuple((complex(a), complex(b)) for a, b in zip(x, p)), scale, lam_inf)


# ---------------------------------------------------------------- spectral curve


def spectral_curve(sys: FuchsianSystem) -> SpectralCurveData:
    poles = sys.poles
    B = np.array(sys.finite_residues)
    P = [[_numerator(poles, B[:, k, l]) for l in range(2)] for k in range(2)]
    num = np.polysub(np.polymul(P[0][0], P[1][1]), np.polymul(P[0][1], P[1][0]))
    dbl = np.array([np.polyval(num, a) / np.prod(np.delete(a - poles, i)) ** 2
                    for i, a in enumerate(poles)], dtype=complex)
    return SpectralCurveData(np.asarray(num, complex)[::-1].copy(), poles, dbl)


# ---------------------------------------------------------------- boundary charts


def boundary_chart(sys: FuchsianSystem, pair, a_index: int, branch: str | None = None, *,
                   tol_boundary: float = 1e-4, chart_radius: float = 0.1, slope_bound: float = 10.0,
                   history=None) -> BoundaryChart:
    """Blow-up coordinate ``s = (p - lam_a^branch) / (x - a)`` near the marked point ``a``.

    ``pair`` holds the position and the momentum compared with ``lam_a``.
    When ``x == a`` exactly, ``s`` is the one-sided limit taken from the last
    two entries of ``history`` (a sequence of ``(x, p)``).
    """
    a = sys.points[a_index]
    if is_inf(a):
        raise InputError("charts are defined at finite marked points")
    x, p = complex(pair[0]), complex(pair[1])
    lam = complex(sys.lambdas[a_index])
    dist = abs(x - a)
    if dist >= chart_radius:
        raise ChartMismatch(f"|x - a| = {dist:.3g} lies outside the chart radius {chart_radius:g}")
    branches = {"+": lam, "-": -lam}
    if branch is None:
        branch = min(branches, key=lambda k: abs(p - branches[k]))
    elif branch not in branches:
        raise InputError("branch must be '+' or '-'")
    lb = branches[branch]
    if abs(p - lb) >= chart_radius * slope_bound:
        raise ChartMismatch(f"p = {p:.6g} is near neither +-lambda_a = +-{lam:.6g}")
    if dist > 0:
        s = (p - lb) / (x - a)
    elif history is not None and len(history) >= 2:
        (x1, p1), (x2, p2) = history[-2], history[-1]
        s = (complex(p2) - complex(p1)) / (complex(x2) - complex(x1))
    else:
        s = None
    divisor = dist < tol_boundary or abs(p) > 1.0 / tol_boundary
    return BoundaryChart(complex(a), a_index, branch, lb, s, bool(divisor), float(dist))


# ---------------------------------------------------------------- reconstruction


def _solve(A: np.ndarray, rhs: np.ndarray, what: str):
    cond = float(np.linalg.cond(A)) if A.size else 1.0
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularLinearSystem(f"{what} system has condition number {cond:.3e}")
    return np.linalg.solve(A, rhs), cond


def reconstruct_with_report(sep: SeparatedData, poles, lambdas, tol_alg: float = 1e-10):
    """Like :func:`reconstruct`; also returns the conditioning of both linear solves."""
    pts = list(poles)
    lam = np.asarray(list(lambdas), dtype=complex)
    if len(lam) != len(pts):
        raise InputError("one lambda per pole is required")
    inf = next((i for i, p in enumerate(pts) if is_inf(p)), None)
    if inf is None:
        raise InputError("infinity must be among the poles")
    fin = [i for i in range(len(pts)) if i != inf]
    a = np.array([complex(pts[i]) for i in fin])
    lf = lam[fin]
    lam_inf = lam[inf]
    m = len(a)
    K = m - 2
    x, p = sep.x, sep.p
    if len(x) != K:
        raise InputError(f"{K} separated pairs expected for {len(pts)} poles, got {len(x)}")
    for xk in x:
        if np.abs(xk - a).min() == 0:
            raise SingularLinearSystem("a separated point coincides with a pole")
    # L12 = prod (z - x_k) / prod (z - a_i)
    beta = np.array([np.prod(a[i] - x) / np.prod(np.delete(a[i] - a, i)) for i in range(m)])
    # det L = sum -lam_i^2/(z-a_i)^2 + c_i/(z-a_i)
    A = np.zeros((m, m), complex)
    r = np.zeros(m, complex)
    A[0] = 1.0
    A[1] = a
    r[1] = -lam_inf ** 2 + np.sum(lf ** 2)
    for k in range(K):
        A[2 + k] = 1.0 / (x[k] - a)
        r[2 + k] = -p[k] ** 2 + np.sum(lf ** 2 / (x[k] - a) ** 2)
    c, cond_c = _solve(A, r, "accessory-parameter")
    # L11 = sum alpha_i/(z-a_i); the z^-3 term of det L + L11^2 must vanish
    A2 = np.zeros((m, m), complex)
    r2 = np.zeros(m, complex)
    A2[0] = 1.0
    r2[0] = -lam_inf
    A2[1] = 2 * lam_inf * a
    r2[1] = np.sum(-2 * lf ** 2 * a + c * a ** 2)
    for k in range(K):
        A2[2 + k] = 1.0 / (x[k] - a)
        r2[2 + k] = p[k]
    alpha, cond_a = _solve(A2, r2, "L11 interpolation")
    res = np.zeros((len(pts), 2, 2), complex)
    scale = max(1.0, float(np.abs(alpha).max()), float(np.abs(beta).max()))
    for k, i in enumerate(fin):
        rr = complete_residue(alpha[k], beta[k], lf[k], tol_alg)
        if rr.degenerate:
            raise ResidueMismatch(f"residue at pole {i} has a vanishing 12-entry")
        res[i] = rr.m
    gamma_sum = res[fin][:, 1, 0].sum()
    if abs(gamma_sum) > 1e-6 * scale * max(1.0, float(np.abs(res[fin][:, 1, 0]).max())):
        raise ResidueMismatch(f"completed residues do not sum to a diagonal matrix (|sum gamma|={abs(gamma_sum):.3e})")
    res[inf] = -res[fin].sum(axis=0)
    out = FuchsianSystem(pts, res, lam, tol_alg)
    for k in range(K):
        L = out.evaluate(x[k])
        det = np.linalg.det(L)
        if abs(det + p[k] ** 2) > 1e-6 * max(1.0, abs(p[k]) ** 2, float(np.abs(L).max()) ** 2):
            raise ResidueMismatch(f"det L(x_{k}) = {det:.6g} differs from -p_{k}^2")
    return out, {"cond_accessory": cond_c, "cond_l11": cond_a, "accessory_count": K}


def reconstruct(sep: SeparatedData, poles, lambdas, tol_alg: float = 1e-10) -> FuchsianSystem:
    """Rebuild the gauge-normalized system with the given separated data."""
    return reconstruct_with_report(sep, poles, lambdas, tol_alg)[0]


# ---------------------------------------------------------------- apparent singularities


def _regular_part(L, x: complex) -> np.ndarray:
    if isinstance(L, RationalMatrixFunction):
        return L.laurent(x)[2]
    return L.evaluate(x)


def apparent_connection(theta, pairs, tol: float = 1e-8):
    """``L_theta - sum_k P_k / (z - x_k)`` with rank-one projectors ``P_k = v w^T / (w^T v)``.

    ``pairs`` holds ``(x, v)`` or ``(x, v, w)``. Without ``w`` the left
    eigenvector of the regular part at ``x`` is used. Each ``v`` must be an
    eigenvector of the regular part of the result at ``x``.
    """
    pairs = list(pairs)
    if not pairs:
        return theta
    base = theta if isinstance(theta, RationalMatrixFunction) else RationalMatrixFunction.from_system(theta)
    xs = [complex(pr[0]) for pr in pairs]
    if len(set(xs)) != len(xs):
        raise InputError("apparent points must be distinct")
    for x in xs:
        if base.poles.size and np.abs(base.poles - x).min() < tol:
            raise InputError(f"apparent point {x} coincides with a pole")
    projs = []
    for pr in pairs:
        x, v = complex(pr[0]), np.asarray(pr[1], dtype=complex)
        if len(pr) > 2 and pr[2] is not None:
            w = np.asarray(pr[2], dtype=complex)
        else:
            R = base.evaluate(x)
            mu = (v.conj() @ R @ v) / (v.conj() @ v)
            w = np.linalg.svd((R - mu * np.eye(2)).T)[2][-1].conj()
        wv = w @ v
        if abs(wv) < tol * np.linalg.norm(w) * np.linalg.norm(v):
            raise NonInvariantDirection("covector annihilates the direction")
        projs.append(np.outer(v, w) / wv)
    out = base - RationalMatrixFunction({(x, 1): P for x, P in zip(xs, projs)})
    for k, (x, P) in enumerate(zip(xs, projs)):
        R = _regular_part(out, x)
        obstruction = (np.eye(2) - P) @ R @ P
        if np.abs(obstruction).max() > tol * max(1.0, float(np.abs(R).max())):
            raise NonInvariantDirection(
                f"direction at x_{k}={x} is not invariant (obstruction {np.abs(obstruction).max():.3e})")
    return out


# ---------------------------------------------------------------- Poisson brackets


def _raw(sys: FuchsianSystem):
    _, lam_inf = _infinity_data(sys)
    return _separate(sys.poles, np.array(sys.finite_residues), lam_inf, sys.tol_alg)


def x_extractor(k: int):
    """Observable ``sys -> x_k`` (no validation, so it tolerates off-orbit perturbations)."""
    return lambda sys: _raw(sys)[1][k]


def p_extractor(k: int):
    """Observable ``sys -> p_k``."""
    return lambda sys: _raw(sys)[2][k]


def _separated_vector(sys: FuchsianSystem):
    sep = separated_variables(sys)
    poles = sys.poles

    def F(B):
        _, x, p, _ = _separate(poles, B, sep.lam_inf, sys.tol_alg, ref_x=sep.x)
        return np.concatenate([x, p])

    return F, np.concatenate([sep.x, sep.p])


def _gradients(F, B0: np.ndarray, h_scale: float):
    """Central-difference gradients ``grad f`` with ``df = tr(grad f . dB)``.

    Shape (outputs, residues, 2, 2); entry ``[.., l, k]`` holds the partial
    derivative with respect to ``B[k, l]``.
    """
    nres = len(B0)
    out = None
    for i in range(nres):
        h = h_scale * (1.0 + np.linalg.norm(B0[i]))
        for k in range(2):
            for l in range(2):
                Bp = B0.copy()
                Bm = B0.copy()
                Bp[i, k, l] += h
                Bm[i, k, l] -= h
                d = (F(Bp) - F(Bm)) / (2 * h)
                if out is None:
                    out = np.zeros((len(d), nres, 2, 2), complex)
                out[:, i, l, k] = d
    return out


def _bracket_from_gradients(G: np.ndarray, B0: np.ndarray) -> np.ndarray:
    """Matrix of ``sum_i tr(B_i [G_f,i, G_g,i])`` over all output pairs."""
    GB = np.einsum("fikl,ilm->fikm", G, B0)  # G_f B
    BG = np.einsum("ikl,film->fikm", B0, G)  # B G_f
    # tr(B [Gf, Gg]) = tr(B Gf Gg) - tr(B Gg Gf) = tr((B Gf) Gg) - tr((Gf B) Gg)
    return np.einsum("fikm,gimk->fg", BG - GB, G)


def _richardson(values_h, values_h2, what: str, rel: float = 1e-3):
    diff = np.abs(values_h - values_h2)
    ref = np.maximum(1.0, np.abs(values_h2))
    if np.any(diff > rel * ref):
        raise NumericalNoise(f"{what}: step halving changed the result by {diff.max():.3e}")
    return (4 * values_h2 - values_h) / 3


def bracket_matrix(sys: FuchsianSystem, h: float = 1e-6) -> np.ndarray:
    """All brackets among ``(x_1..x_K, p_1..p_K)`` as a ``2K x 2K`` matrix."""
    F, _ = _separated_vector(sys)
    B0 = np.array(sys.finite_residues)
    vals = []
    for hh in (h, h / 2):
        vals.append(_bracket_from_gradients(_gradients(F, B0, hh), B0))
    return _richardson(vals[0], vals[1], "bracket matrix")


def poisson_bracket(sys: FuchsianSystem, f, g, h: float = 1e-6) -> complex:
    """Kirillov-Kostant bracket ``{f, g}`` of two observables of the finite residues.

    ``f`` and ``g`` map a :class:`FuchsianSystem` to a complex number. The
    residue at infinity of the perturbed systems is recomputed from the
    finite ones.
    """
    B0 = np.array(sys.finite_residues)
    fin = sys.finite_indices
    inf = sys.infinity_index

    def wrap(B):
        res = np.array(sys.residues)
        res[fin] = B
        if inf is not None:
            res[inf] = -B.sum(axis=0)
        s = FuchsianSystem(sys.points, res, sys.lambdas, sys.tol_alg)
        return np.array([f(s), g(s)], dtype=complex)

    if f is g:
        return 0j
    vals = []
    for hh in (h, h / 2):
        vals.append(_bracket_from_gradients(_gradients(wrap, B0, hh), B0)[0, 1])
    return complex(_richardson(np.array(vals[0]), np.array(vals[1]), "poisson bracket"))
