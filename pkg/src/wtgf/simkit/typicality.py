"""Strong (letter-frequency) typicality on integer-coded sequences."""

from __future__ import annotations

import numpy as np


def joint_counts(columns, shape) -> np.ndarray:
    """Joint type counts of aligned sequences.

    ``columns`` holds one integer array per variable, each of shape (n,) or
    (C, n) for C candidates; the result has shape (C, prod(shape)).
    """
    cols = [np.atleast_2d(np.asarray(c)) for c in columns]
    c = max(a.shape[0] for a in cols)
    cols = [np.broadcast_to(a, (c, a.shape[1])) for a in cols]
    cells = int(np.prod(shape))
    flat = np.ravel_multi_index(tuple(cols), shape)
    offs = flat + cells * np.arange(c)[:, None]
    return np.bincount(offs.ravel(), minlength=c * cells).reshape(c, cells)


def typical_mask(columns, pmf: np.ndarray, delta: float) -> np.ndarray:
    """Candidates whose joint type is within ``delta`` of ``pmf`` in every cell.

    A cell of probability zero must not occur at all.  Enlarging ``delta``
    never removes a candidate.
    """
    pmf = np.asarray(pmf, dtype=float)
    counts = joint_counts(columns, pmf.shape)
    n = np.atleast_2d(np.asarray(columns[0])).shape[1]
    p = pmf.reshape(-1)
    freq = counts / n
    ok = np.all(np.abs(freq - p) <= delta + 1e-12, axis=1)
    return ok & np.all((counts == 0) | (p > 0), axis=1)


def is_typical(columns, pmf: np.ndarray, delta: float) -> bool:
    return bool(typical_mask(columns, pmf, delta)[0])


def conditionally_typical_mask(child, parents, cond: np.ndarray, delta: float) -> np.ndarray:
    """Whether ``child`` looks drawn from ``cond`` = p(child | parents).

    For every parent configuration c and child symbol a,
    |N(c, a) - N(c) p(a|c)| <= delta * n, and N(c, a) = 0 when p(a|c) = 0.
    """
    cond = np.asarray(cond, dtype=float)
    counts = joint_counts(list(parents) + [child], cond.shape)
    c = counts.shape[0]
    counts = counts.reshape(c, -1, cond.shape[-1])
    n = np.atleast_2d(np.asarray(child)).shape[1]
    parent_counts = counts.sum(axis=2, keepdims=True)
    flat = cond.reshape(-1, cond.shape[-1])[None]
    dev = np.abs(counts - parent_counts * flat) / n
    ok = np.all(dev <= delta + 1e-12, axis=(1, 2))
    return ok & np.all((counts == 0) | (flat > 0), axis=(1, 2))
