"""JSON channel files.

A file holds ``format_version``, ``kind``, ``alphabets`` (name -> symbol list),
``tensors`` (name -> {"dims": [...], "data": [...]}) and optional
``metadata``.  Tensor data is flat, row-major in the order of ``dims``, which
follows the declared variable order of the kind:

=============  ==========================================================
kind           tensors
=============  ==========================================================
wtgf           kernel [X, Y, Yhat, Z]
wiretap_pair   kernel [X, Y, Z]; ``feedback`` is "none" or "output"
parallel       main [Xc, Yc, Zc], source [Ys, Yhats, Zs]
state_channel  kernel [X, S, Y, Z], state [S]
erasure        no tensors; ``delta`` and ``delta_e``
=============  ==========================================================
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import (
    ErasureParams,
    ParallelSourcesChannel,
    StateChannel,
    WtgfChannel,
    has_perfect_feedback,
    make_erasure_wtgf,
    make_perfect_feedback,
    make_wiretap,
)

FORMAT_VERSION = 1
KINDS = {
    "wtgf": {"kernel": ("X", "Y", "Yhat", "Z")},
    "wiretap_pair": {"kernel": ("X", "Y", "Z")},
    "parallel": {"main": ("Xc", "Yc", "Zc"), "source": ("Ys", "Yhats", "Zs")},
    "state_channel": {"kernel": ("X", "S", "Y", "Z"), "state": ("S",)},
    "erasure": {},
}
# leading axes of each tensor that index rows (the rest must sum to 1)
ROW_AXES = {"kernel": {"wtgf": 1, "wiretap_pair": 1, "state_channel": 2}, "main": 1, "source": 0, "state": 0}


class SpecError(ValueError):
    """A channel file cannot be parsed or fails validation."""


def _symbol(s):
    return tuple(_symbol(v) for v in s) if isinstance(s, list) else s


def _jsonable(s):
    return [_jsonable(v) for v in s] if isinstance(s, tuple) else s


def _tensor(doc: dict, name: str, variables: tuple, kind: str, tol: float) -> np.ndarray:
    tensors = doc.get("tensors", {})
    if name not in tensors:
        raise SpecError(f"missing tensor {name!r} for kind {kind!r}")
    t = tensors[name]
    try:
        dims = [int(d) for d in t["dims"]]
        data = np.asarray(t["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"tensor {name!r} needs numeric 'dims' and 'data': {exc}") from None
    expect = [len(doc["alphabets"][v]) for v in variables]
    if dims != expect:
        raise SpecError(f"tensor {name!r} dims {dims} do not match alphabet sizes {expect} of {list(variables)}")
    if data.ndim != 1 or data.size != int(np.prod(dims)):
        raise SpecError(f"tensor {name!r} has {data.size} entries, dims need {int(np.prod(dims))}")
    if np.any(~np.isfinite(data)) or np.any(data < 0):
        raise SpecError(f"tensor {name!r} has negative or non-finite entries")
    arr = data.reshape(dims)
    lead = ROW_AXES[name][kind] if isinstance(ROW_AXES[name], dict) else ROW_AXES[name]
    rows = arr.reshape(int(np.prod(dims[:lead], dtype=int)), -1)
    sums = rows.sum(axis=1)
    for r, s in enumerate(sums):
        if abs(s - 1.0) > tol:
            raise SpecError(f"tensor {name!r} row {r} sums to {float(s)!r}, not 1 (tol {tol})")
    return arr


def channel_from_dict(doc: dict, tol: float = 1e-9):
    if not isinstance(doc, dict):
        raise SpecError("channel file must hold a JSON object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise SpecError(f"unsupported format_version {version!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {sorted(KINDS)}, got {kind!r}")
    if kind == "erasure":
        try:
            return make_erasure_wtgf(ErasureParams(float(doc["delta"]), float(doc["delta_e"])))
        except KeyError as exc:
            raise SpecError(f"erasure channel needs {exc.args[0]!r}") from None
        except ValueError as exc:
            raise SpecError(str(exc)) from None
    alph = doc.get("alphabets")
    need = {v for vs in KINDS[kind].values() for v in vs}
    if not isinstance(alph, dict) or not need <= set(alph):
        raise SpecError(f"kind {kind!r} needs alphabets {sorted(need)}")
    a = {k: tuple(_symbol(s) for s in v) for k, v in alph.items()}
    for k in need:
        if len(a[k]) < 1 or len(set(a[k])) != len(a[k]):
            raise SpecError(f"alphabet {k!r} must be nonempty with distinct symbols")
    t = {name: _tensor(doc, name, vs, kind, tol) for name, vs in KINDS[kind].items()}
    try:
        if kind == "wtgf":
            return WtgfChannel.from_table(t["kernel"], a["X"], a["Y"], a["Yhat"], a["Z"])
        if kind == "wiretap_pair":
            fb = doc.get("feedback", "none")
            if fb == "output":
                return make_perfect_feedback(t["kernel"], a["X"], a["Y"], a["Z"])
            if fb != "none":
                raise SpecError("feedback must be 'none' or 'output'")
            return make_wiretap(t["kernel"], a["X"], a["Y"], a["Z"])
        if kind == "parallel":
            return ParallelSourcesChannel.from_tables(t["main"], t["source"], a["Xc"], a["Yc"], a["Zc"],
                                                      a["Ys"], a["Yhats"], a["Zs"])
        return StateChannel.from_tables(t["kernel"], t["state"], a["X"], a["S"], a["Y"], a["Z"])
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def parse_channel_spec(path, tol: float = 1e-9):
    """Read and validate a channel file; errors are :class:`SpecError`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SpecError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return channel_from_dict(doc, tol)


def _t(arr) -> dict:
    arr = np.asarray(arr, dtype=float)
    return {"dims": list(arr.shape), "data": arr.reshape(-1).tolist()}


def serialize(channel, metadata: dict | None = None) -> dict:
    """Channel file content for ``channel`` (the inverse of :func:`channel_from_dict`)."""
    out = {"format_version": FORMAT_VERSION}
    if isinstance(channel, WtgfChannel):
        out.update(kind="wtgf", alphabets={n: [_jsonable(s) for s in al] for n, al in
                                           zip(("X", "Y", "Yhat", "Z"), (channel.x, channel.y, channel.yhat, channel.z))},
                   tensors={"kernel": _t(channel.table)})
    elif isinstance(channel, ParallelSourcesChannel):
        names = ("Xc", "Yc", "Zc", "Ys", "Yhats", "Zs")
        als = (channel.xc, channel.yc, channel.zc, channel.ys, channel.yhats, channel.zs)
        out.update(kind="parallel", alphabets={n: [_jsonable(s) for s in al] for n, al in zip(names, als)},
                   tensors={"main": _t(channel.main_kernel.table), "source": _t(channel.source_joint.mass)})
    elif isinstance(channel, StateChannel):
        names = ("X", "S", "Y", "Z")
        als = (channel.x, channel.s, channel.kernel.outputs[0][1], channel.kernel.outputs[1][1])
        out.update(kind="state_channel", alphabets={n: [_jsonable(s) for s in al] for n, al in zip(names, als)},
                   tensors={"kernel": _t(channel.kernel.table), "state": _t(channel.state_pmf.mass)})
    else:
        raise TypeError(f"cannot serialize {type(channel).__name__}")
    if metadata:
        out["metadata"] = dict(metadata)
    return out


def write_channel_spec(channel, path, metadata: dict | None = None) -> None:
    Path(path).write_text(json.dumps(serialize(channel, metadata), indent=2) + "\n", encoding="utf-8")


def is_perfect_feedback(channel) -> bool:
    return isinstance(channel, WtgfChannel) and has_perfect_feedback(channel)
