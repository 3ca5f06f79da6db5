"""Problem/model file parsing and deterministic artifact serialization.

Problem file layout (JSON, UTF-8):

    {"A": {"rows": m, "cols": n, "data": [row-major reals]},
     "b": [reals],
     "W": {"kind": "diagonal", "data": [...]}
        | {"kind": "dense", "rows": m, "cols": m, "data": [...]},
     "T": {"kind": "identity_scaled", "rho": r}
        | {"kind": "dense", "rows": p, "cols": n, "data": [...]},
     "origin": {...}}            # optional

Non-finite entries are rejected with the offending field named.  All floats
are emitted with 17 significant digits so identical inputs produce byte-
identical artifacts.
"""

from __future__ import annotations

import json

import numpy as np

from .model import (
    ProblemFormatError,
    ProblemSpec,
    RegularizerSpec,
    WeightOperator,
)


def _format_float(x):
    if x != x:
        raise ProblemFormatError("refusing to serialize NaN")
    return format(float(x), ".17g")


def canonical_json(obj, indent=0):
    """Serialize dict/list/scalars with fixed float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {canonical_json(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        values = list(obj)
        if not values:
            return "[]"
        scalars = all(isinstance(v, (int, float, np.floating, np.integer)) for v in values)
        parts = [canonical_json(v, indent + 1) for v in values]
        if scalars:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(inner + s for s in parts) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path, obj):
    text = canonical_json(obj) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(_format_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------


def _matrix_from_spec(obj, name):
    if not isinstance(obj, dict):
        raise ProblemFormatError(f"field '{name}' must be an object")
    for key in ("rows", "cols", "data"):
        if key not in obj:
            raise ProblemFormatError(f"field '{name}.{key}' is missing")
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = np.asarray(obj["data"], dtype=float)
    if data.size != rows * cols:
        raise ProblemFormatError(
            f"field '{name}.data' has {data.size} entries, expected {rows * cols}"
        )
    if not np.all(np.isfinite(data)):
        raise ProblemFormatError(f"non-finite value in field '{name}.data'")
    return data.reshape(rows, cols)


def problem_from_dict(obj):
    if not isinstance(obj, dict):
        raise ProblemFormatError("problem file must contain a JSON object")
    unknown = set(obj) - {"A", "b", "W", "T", "origin"}
    if unknown:
        raise ProblemFormatError(f"unknown problem keys {sorted(unknown)!r}")
    for key in ("A", "b", "W", "T"):
        if key not in obj:
            raise ProblemFormatError(f"field '{key}' is missing")

    a_mat = _matrix_from_spec(obj["A"], "A")
    b = np.asarray(obj["b"], dtype=float)
    if not np.all(np.isfinite(b)):
        raise ProblemFormatError("non-finite value in field 'b'")

    w_spec = obj["W"]
    kind = w_spec.get("kind") if isinstance(w_spec, dict) else None
    if kind == "diagonal":
        data = np.asarray(w_spec.get("data", []), dtype=float)
        if not np.all(np.isfinite(data)):
            raise ProblemFormatError("non-finite value in field 'W.data'")
        weight = WeightOperator.diagonal(data)
    elif kind == "dense":
        weight = WeightOperator.dense(_matrix_from_spec(w_spec, "W"))
    else:
        raise ProblemFormatError("field 'W.kind' must be 'diagonal' or 'dense'")

    t_spec = obj["T"]
    kind = t_spec.get("kind") if isinstance(t_spec, dict) else None
    if kind == "identity_scaled":
        if "rho" not in t_spec:
            raise ProblemFormatError("field 'T.rho' is missing")
        reg = RegularizerSpec.identity_scaled(t_spec["rho"])
    elif kind == "dense":
        reg = RegularizerSpec.dense(_matrix_from_spec(t_spec, "T"))
    else:
        raise ProblemFormatError("field 'T.kind' must be 'identity_scaled' or 'dense'")

    origin = obj.get("origin")
    if origin is not None and not isinstance(origin, dict):
        raise ProblemFormatError("field 'origin' must be an object")
    return ProblemSpec(a_mat, b, weight, reg, origin=origin)


def load_problem(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON in {path}: {exc}") from exc
    return problem_from_dict(obj)


def problem_to_dict(p):
    m, n = p.shape
    if p.W.kind == "diagonal":
        w_obj = {"kind": "diagonal", "data": [float(v) for v in p.W.data]}
    else:
        w_obj = {
            "kind": "dense",
            "rows": m,
            "cols": m,
            "data": [float(v) for v in p.W.data.ravel()],
        }
    if p.T.kind == "identity_scaled":
        t_obj = {"kind": "identity_scaled", "rho": float(p.T.rho)}
    else:
        rows, cols = p.T.matrix.shape
        t_obj = {
            "kind": "dense",
            "rows": rows,
            "cols": cols,
            "data": [float(v) for v in p.T.matrix.ravel()],
        }
    out = {
        "A": {"rows": m, "cols": n, "data": [float(v) for v in p.A.ravel()]},
        "b": [float(v) for v in p.b],
        "W": w_obj,
        "T": t_obj,
    }
    if p.origin is not None:
        out["origin"] = p.origin
    return out


def save_problem(path, p):
    return write_json(path, problem_to_dict(p))


# ---------------------------------------------------------------------------
# artifact serializers
# ---------------------------------------------------------------------------


def pair_report_to_dict(report):
    return {
        "x": [float(v) for v in report.x],
        "correction_vector": [float(v) for v in report.lift.correction_vector],
        "objective": float(report.objective),
        "data_term": float(report.data_term),
        "reg_term": float(report.reg_term),
        "residual_normal_eq": float(report.residual_normal_eq),
        "residual_rank_one": float(report.residual_rank_one),
        "status": report.status,
    }


def trace_to_dict(trace):
    return {
        "iterates": [
            {
                "t": float(it.t),
                "r": float(it.r),
                "x": [float(v) for v in it.x],
                "phi": float(it.phi),
            }
            for it in trace.iterates
        ],
        "t_star": float(trace.t_star),
        "x_star": [float(v) for v in trace.x_star],
        "verdict": trace.verdict,
    }


def certificate_to_dict(cert, keep_c=False):
    out = {
        "t": float(cert.t),
        "alpha": float(cert.alpha),
        "beta": float(cert.beta),
        "lambda_min": float(cert.lambda_min),
    }
    if keep_c and cert.C is not None:
        out["C"] = [[float(v) for v in row] for row in cert.C]
    return out


def sequence_result_to_dict(result):
    return {
        "direction_value": float(result.direction_value),
        "points": [
            {
                "eps": float(pt.eps),
                "objective": float(pt.objective),
                "bound": float(pt.bound),
                "interp_residual": float(pt.interp_residual),
                "x_scaled": [float(v) for v in pt.x_scaled],
            }
            for pt in result.points
        ],
        "skipped": [
            {"eps": float(eps), "reason": reason} for eps, reason in result.skipped
        ],
    }


def sequence_result_rows(result):
    header = ["eps", "objective", "bound", "interp_residual"]
    rows = [
        (pt.eps, pt.objective, pt.bound, pt.interp_residual) for pt in result.points
    ]
    return header, rows


def sweep_rows(rows):
    header = ["N", "t_star", "x_norm", "objective", "status"]
    table = [(r.n, r.t_star, r.x_norm, r.objective, r.status) for r in rows]
    return header, table


def sweep_to_dict(rows):
    return {
        "rows": [
            {
                "N": int(r.n),
                "t_star": float(r.t_star),
                "x_norm": float(r.x_norm),
                "objective": float(r.objective),
                "status": r.status,
            }
            for r in rows
        ]
    }


def weakcont_rows(rows):
    header = ["n", "integral", "limit_integral"]
    table = [(r.n, r.integral, r.limit_integral) for r in rows]
    return header, table


def weakcont_to_dict(rows):
    return {
        "rows": [
            {
                "n": int(r.n),
                "integral": float(r.integral),
                "limit_integral": float(r.limit_integral),
            }
            for r in rows
        ]
    }


def load_model_file(path):
    from .lab import model_from_dict

    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON in {path}: {exc}") from exc
    return model_from_dict(obj)
