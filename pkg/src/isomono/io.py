"""JSON and CSV formats.

Floats go through ``json``'s shortest round-trip repr, so a system written
and read back is bit-identical. CSV numbers use 17 significant digits.
"""

from __future__ import annotations

import csv
import io as _io
import json

import numpy as np

from .errors import InputError
from .fuchsian import INF, FuchsianSystem, is_inf
from .schlesinger import DeformationPath
from .sov import SeparatedData

SCHEMA_VERSION = 1


def cnum(z) -> dict:
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def parse_complex(obj, where: str) -> complex:
    if isinstance(obj, dict):
        try:
            return complex(float(obj["re"]), float(obj.get("im", 0.0)))
        except (KeyError, TypeError, ValueError):
            raise InputError(f"{where}: expected {{'re': float, 'im': float}}") from None
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return complex(float(obj[0]), float(obj[1]))
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    raise InputError(f"{where}: cannot read a complex number from {obj!r}")


def parse_point(obj, where: str):
    if isinstance(obj, str):
        if obj.lower() in ("inf", "infinity"):
            return INF
        raise InputError(f"{where}: unknown point {obj!r}")
    return parse_complex(obj, where)


def _matrix(obj, where: str) -> np.ndarray:
    if not (isinstance(obj, list) and len(obj) == 2 and all(isinstance(r, list) and len(r) == 2 for r in obj)):
        raise InputError(f"{where}: expected a 2x2 array")
    return np.array([[parse_complex(obj[r][c], f"{where}[{r}][{c}]") for c in range(2)] for r in range(2)])


def matrix_json(m) -> list:
    return [[cnum(m[r][c]) for c in range(2)] for r in range(2)]


def system_to_dict(sys: FuchsianSystem) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "points": ["inf" if is_inf(p) else cnum(p) for p in sys.points],
        "residues": [matrix_json(m) for m in sys.residues],
        "lambda": [cnum(v) for v in sys.lambdas],
        "tol_alg": sys.tol_alg,
    }


def system_from_dict(d: dict) -> FuchsianSystem:
    if not isinstance(d, dict):
        raise InputError("system: expected a JSON object")
    for key in ("points", "residues", "lambda"):
        if key not in d:
            raise InputError(f"system: missing field '{key}'")
    pts = [parse_point(p, f"points[{k}]") for k, p in enumerate(d["points"])]
    res = [_matrix(m, f"residues[{k}]") for k, m in enumerate(d["residues"])]
    lam = [parse_complex(v, f"lambda[{k}]") for k, v in enumerate(d["lambda"])]
    if not (len(pts) == len(res) == len(lam)):
        raise InputError("system: points, residues and lambda must have equal lengths")
    tol = d.get("tol_alg", 1e-10)
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise InputError("tol_alg: expected a positive number")
    return FuchsianSystem(pts, res, lam, float(tol))


def sep_to_dict(sep: SeparatedData) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "gauge": matrix_json(sep.gauge),
        "pairs": [{"x": cnum(x), "p": cnum(p)} for x, p in sep.pairs],
        "scale": cnum(sep.scale),
        "lambda_inf": cnum(sep.lam_inf),
    }


def sep_from_dict(d: dict) -> SeparatedData:
    if not isinstance(d, dict) or "pairs" not in d:
        raise InputError("separated data: missing field 'pairs'")
    pairs = tuple((parse_complex(pr.get("x"), f"pairs[{k}].x"), parse_complex(pr.get("p"), f"pairs[{k}].p"))
                  for k, pr in enumerate(d["pairs"]))
    gauge = _matrix(d["gauge"], "gauge") if "gauge" in d else np.eye(2, dtype=complex)
    scale = parse_complex(d.get("scale", 1.0), "scale")
    lam_inf = parse_complex(d.get("lambda_inf", 0.0), "lambda_inf")
    return SeparatedData(gauge, pairs, scale, lam_inf)


def poles_from_dict(d: dict):
    """Points and eigenvalues for reconstruction."""
    if not isinstance(d, dict) or "points" not in d or "lambda" not in d:
        raise InputError("poles file: fields 'points' and 'lambda' are required")
    pts = [parse_point(p, f"points[{k}]") for k, p in enumerate(d["points"])]
    lam = [parse_complex(v, f"lambda[{k}]") for k, v in enumerate(d["lambda"])]
    return pts, lam, float(d.get("tol_alg", 1e-10))


def path_from_dict(d: dict) -> DeformationPath:
    if not isinstance(d, dict) or "moving" not in d:
        raise InputError("path: missing field 'moving'")
    mv = []
    for k, item in enumerate(d["moving"]):
        if "index" not in item or "vertices" not in item:
            raise InputError(f"moving[{k}]: fields 'index' and 'vertices' are required")
        verts = [parse_complex(v, f"moving[{k}].vertices[{j}]") for j, v in enumerate(item["vertices"])]
        mv.append((int(item["index"]), verts))
    return DeformationPath(tuple(mv), d.get("collision_clearance"))


def vertices_from_dict(d, index: int = 2) -> list:
    """A bare polyline: ``{"vertices": [...]}``, a list, or a path with ``index``."""
    if isinstance(d, list):
        return [parse_complex(v, f"vertices[{j}]") for j, v in enumerate(d)]
    if isinstance(d, dict) and "vertices" in d:
        return [parse_complex(v, f"vertices[{j}]") for j, v in enumerate(d["vertices"])]
    if isinstance(d, dict) and "moving" in d:
        for i, verts in path_from_dict(d).moving:
            if i == index:
                return list(verts)
    raise InputError("t-path: expected 'vertices' or a 'moving' entry for the t pole")


def read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def csv_text(header: list, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()
