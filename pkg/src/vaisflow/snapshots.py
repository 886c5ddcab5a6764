"""JSON snapshot files for fields, metrics, and charts.

Snapshot schema: a JSON object with keys ``spec`` (n, resolutions, periods),
``basic``, ``kind`` and ``values``.  Values are flat lists in row-major
order over the documented axis order (x^1, y^1, ..., x^n, y^n, x, y);
complex numbers are stored as [re, im] pairs.  Hermitian snapshots flatten
the n x n matrix row-major at each point.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import SnapshotError
from .grid import GridSpec, ScalarField
from .transverse import HermitianField

__all__ = [
    "spec_to_dict",
    "spec_from_dict",
    "field_to_dict",
    "field_from_dict",
    "save_snapshot",
    "load_snapshot",
    "load_metric_bundle",
    "chart_to_dict",
]


def spec_to_dict(spec: GridSpec) -> dict:
    return {
        "n": spec.n,
        "transverse_resolution": list(spec.transverse_resolution),
        "transverse_periods": list(spec.transverse_periods),
        "leaf_resolution": list(spec.leaf_resolution) if spec.has_leaf else None,
        "leaf_periods": list(spec.leaf_periods) if spec.has_leaf else None,
    }


def spec_from_dict(d: dict) -> GridSpec:
    try:
        return GridSpec(
            n=int(d["n"]),
            transverse_resolution=tuple(d["transverse_resolution"]),
            transverse_periods=tuple(d["transverse_periods"]),
            leaf_resolution=tuple(d["leaf_resolution"]) if d.get("leaf_resolution") else None,
            leaf_periods=tuple(d["leaf_periods"]) if d.get("leaf_periods") else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed grid spec: {exc}") from exc


def _encode_values(values: np.ndarray) -> list:
    flat = values.reshape(-1)
    if np.iscomplexobj(flat):
        return [[float(v.real), float(v.imag)] for v in flat]
    return [float(v) for v in flat]


def _decode_values(raw: list, complex_: bool) -> np.ndarray:
    try:
        if complex_:
            arr = np.array([complex(re, im) for re, im in raw], dtype=np.complex128)
        else:
            arr = np.array([float(v) for v in raw], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed values array: {exc}") from exc
    return arr


def field_to_dict(field: ScalarField | HermitianField) -> dict:
    if isinstance(field, ScalarField):
        return {
            "kind": "scalar",
            "spec": spec_to_dict(field.spec),
            "basic": field.basic,
            "values": _encode_values(field.values),
        }
    if isinstance(field, HermitianField):
        return {
            "kind": "hermitian",
            "spec": spec_to_dict(field.spec),
            "basic": field.basic,
            "values": _encode_values(field.matrices),
        }
    raise SnapshotError(f"cannot snapshot a {type(field).__name__}")


def field_from_dict(d: dict) -> ScalarField | HermitianField:
    try:
        kind = d["kind"]
        spec = spec_from_dict(d["spec"])
        basic = bool(d["basic"])
        raw = d["values"]
    except KeyError as exc:
        raise SnapshotError(f"snapshot is missing key {exc}") from exc
    shape = spec.shape(basic)
    if kind == "scalar":
        complex_ = bool(raw) and isinstance(raw[0], list)
        values = _decode_values(raw, complex_).reshape(shape)
        return ScalarField(spec, values, basic)
    if kind == "hermitian":
        n = spec.n
        values = _decode_values(raw, True).reshape(shape + (n, n))
        return HermitianField(spec, values, basic)
    raise SnapshotError(f"unknown snapshot kind {kind!r}")


def save_snapshot(field, path: str | Path):
    Path(path).write_text(json.dumps(field_to_dict(field)))


def load_snapshot(path: str | Path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SnapshotError("snapshot must be a JSON object")
    return field_from_dict(data)


def load_metric_bundle(path: str | Path) -> tuple[HermitianField, HermitianField | None]:
    """A metric snapshot, either bare or as {"metric": ..., "ricci": ...}.

    The optional explicit Ricci field supports synthetic transversally
    Einstein data, which cannot arise from differentiating any periodic
    metric on the chart.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SnapshotError("snapshot must be a JSON object")
    if "metric" in data:
        metric = field_from_dict(data["metric"])
        ricci_f = field_from_dict(data["ricci"]) if data.get("ricci") else None
    else:
        metric = field_from_dict(data)
        ricci_f = None
    if not isinstance(metric, HermitianField) or (
        ricci_f is not None and not isinstance(ricci_f, HermitianField)
    ):
        raise SnapshotError("metric snapshots must hold Hermitian fields")
    return metric, ricci_f


def chart_to_dict(chart) -> dict:
    """Chart snapshot: potential, form components, and per-point J matrices."""

    def form_dict(form):
        return {
            "degree": form.degree,
            "components": {
                ",".join(map(str, idx)): _encode_values(f.values)
                for idx, f in sorted(form.components.items())
            },
            "linear": {
                ",".join(map(str, idx)): [float(v) for v in lin]
                for idx, lin in sorted(form.linear.items())
            },
        }

    return {
        "kind": "vaisman_chart",
        "spec": spec_to_dict(chart.spec),
        "h": field_to_dict(chart.h),
        "base": _encode_values(chart.base),
        "metric": field_to_dict(chart.metric),
        "theta": form_dict(chart.theta),
        "theta_c": form_dict(chart.theta_c),
        "omega": form_dict(chart.omega),
        "J": _encode_values(chart.jmat),
    }
