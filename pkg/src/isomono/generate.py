"""Seeded random systems and deformation paths for tests and the CLI.

Systems are built from random separated data, so they are generic by
construction: finite poles sit in disjoint angular sectors around the origin
(the default base point) and infinity is always the last marked point.
"""

from __future__ import annotations

import numpy as np

from .errors import IsomonoError
from .fuchsian import INF, FuchsianSystem, validate
from .schlesinger import DeformationPath
from .sov import SeparatedData, reconstruct_with_report
from .transport import monodromy_rep

MAX_TRIES = 200


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _sector_poles(rng, m: int) -> np.ndarray:
    width = 2 * np.pi / m
    ang = width * np.arange(m) + rng.uniform(-0.2, 0.2, m) * width - np.pi + width / 2
    return rng.uniform(1.0, 2.0, m) * np.exp(1j * ang)


def _far_points(rng, k: int, avoid: np.ndarray, radius: float, gap: float) -> np.ndarray:
    out: list = []
    while len(out) < k:
        z = radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        others = np.concatenate([avoid, out]) if out else avoid
        if np.abs(others - z).min() > gap:
            out.append(z)
    return np.array(out)


def random_system(seed, n: int = 4, lam_range=(0.1, 0.45), lam_imag: float = 0.0,
                  conjugate: bool = True, max_cond: float = 1e8, max_residue: float = 3.0,
                  max_monodromy: float | None = 30.0, tol_alg: float = 1e-10) -> FuchsianSystem:
    """Random valid non-resonant stable system with ``n`` marked points, infinity last.

    Eigenvalues are drawn uniformly from ``lam_range`` (plus an imaginary
    part of at most ``lam_imag``); candidates are rejected until the system
    validates and its reconstruction is well conditioned. With
    ``max_monodromy`` set, systems whose generators at base point 0 have an
    entry larger than that are rejected too, which keeps transport errors
    small.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    rng = _rng(seed)
    m = n - 1
    for _ in range(MAX_TRIES):
        poles = _sector_poles(rng, m)
        lam = rng.uniform(*lam_range, n) + 1j * rng.uniform(-lam_imag, lam_imag, n)
        x = _far_points(rng, n - 3, poles, 2.0, 0.3)
        p = rng.normal(0, 0.5, n - 3) + 1j * rng.normal(0, 0.5, n - 3)
        sep = SeparatedData(np.eye(2), tuple(zip(x, p)), 1.0)
        try:
            sys, info = reconstruct_with_report(sep, list(poles) + [INF], lam, tol_alg)
        except IsomonoError:
            continue
        if max(info["cond_accessory"], info["cond_l11"]) > max_cond:
            continue
        res = np.array(sys.residues)
        if conjugate:
            g = np.eye(2) + 0.2 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
            if np.linalg.cond(g) > 3:
                continue
            res = np.einsum("ij,njk,kl->nil", g, res, np.linalg.inv(g))
        if np.abs(res).max() > max_residue:
            continue
        res[-1] = -res[:-1].sum(axis=0)
        out = FuchsianSystem(list(poles) + [INF], res, lam, tol_alg)
        if validate(out):
            continue
        if max_monodromy is not None:
            rep = monodromy_rep(out, 0j, 1e-7)
            if max(np.abs(m).max() for m in rep.matrices) > max_monodromy:
                continue
        return out
    raise RuntimeError("no valid random system found")


def random_path(seed, sys: FuchsianSystem, index: int, length: float = 0.5,
                segments: int = 3) -> DeformationPath:
    """Polyline of total ``length`` for pole ``index`` that stays in the pole's own sector."""
    rng = _rng(seed)
    a0 = complex(sys.points[index])
    others = np.array([p for i, p in enumerate(sys.poles) if p != a0])
    step = length / segments
    for _ in range(MAX_TRIES):
        verts = [a0]
        ok = True
        for _ in range(segments):
            z = verts[-1] + step * np.exp(2j * np.pi * rng.uniform())
            if not (0.8 < abs(z) < 2.4) or abs(np.angle(z / a0)) > 0.45 * np.pi / len(sys.poles) \
                    or (others.size and np.abs(others - z).min() < 0.4):
                ok = False
                break
            verts.append(z)
        if ok:
            return DeformationPath(((index, tuple(verts)),))
    raise RuntimeError("no admissible path found")
