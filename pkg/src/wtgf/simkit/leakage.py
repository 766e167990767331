"""Information leakage of a codebook: exact enumeration and Monte Carlo."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..channels import WtgfChannel
from ..errors import BudgetExceeded, ModelError
from .codebook import Codebook
from .session import describe_feedback, encode_block, run_session

ENUMERATION_BUDGET = 10**8


@dataclass(frozen=True)
class LeakageResult:
    """Leakage of the messages (and keys) to Eve's outputs over a whole session."""

    exact_bits: float
    method: str
    size: int
    key_bits: Optional[float] = None
    key_deficit_bits: Optional[float] = None
    message_entropy_bits: Optional[float] = None
    std_error: Optional[float] = None


def _entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    p = p / math.fsum(p)
    return -math.fsum(p * np.log2(p))


def _mutual_from_rows(rows: np.ndarray, prior: np.ndarray) -> float:
    """I(A;Z) = H(Z) - sum_a p(a) H(Z|a), each row normalized on its own."""
    live = prior > 0
    pz = (prior[live, None] * rows[live] / rows[live].sum(axis=1, keepdims=True)).sum(axis=0)
    cond = math.fsum(float(pa) * _entropy(r) for pa, r in zip(prior[live], rows[live]))
    return max(_entropy(pz) - cond, 0.0) + 0.0


def _block_outcomes(ch: WtgfChannel, x: tuple, n: int, with_yhat: bool) -> np.ndarray:
    """P(yhat^n, z^n | x^n) as a (|Yhat|^n, |Z|^n) matrix, or P(z^n | x^n) as a row."""
    w = ch.table.sum(axis=1)  # x, yhat, z
    if not with_yhat:
        w = w.sum(axis=1, keepdims=True)
    out = np.ones((1, 1))
    for xi in x:
        out = np.einsum("ab,cd->acbd", out, w[xi]).reshape(out.shape[0] * w.shape[1], -1)
    return out


def exact_leakage_tiny(cb: Codebook, ch: WtgfChannel, deterministic_encoder: bool = False,
                       budget: int = ENUMERATION_BUDGET) -> LeakageResult:
    """Exact I(M; Z^{nb}) for one codebook by summing over every path.

    Needs a deterministic p(x|u) and the caller's acknowledgement through
    ``deterministic_encoder``; encoder ties resolve to the lowest index, so
    the only randomness is the block-1 codeword, lf, the messages and the
    channel.  Also returns I(K; Z^{nb}) and log2|K| - H(K) for the keys
    k'_1 .. k'_{b-1}.
    """
    if not deterministic_encoder:
        raise ModelError("exact leakage needs deterministic_encoder=True (lowest-index tie-breaks)")
    if not cb.deterministic_encoder():
        raise ModelError("exact leakage needs a deterministic p(x|u)")
    s, n, b = cb.sizes, cb.n, cb.b
    nyh, nz = ch.yhat.size, ch.z.size
    n_msg = s.n_m0 * s.n_r1
    branches = s.n_r * nyh ** n * (n_msg * s.n_lf * nyh ** n) ** (b - 2) * n_msg * s.n_lf
    paths = branches * nz ** (n * b)
    if paths > budget:
        raise BudgetExceeded(f"enumeration needs {paths} weighted paths, above the budget of {budget}",
                             required=paths, budget=budget)
    xmap = cb.x_given_u.argmax(axis=1)
    n_keys = s.n_r1 ** (b - 1)
    pz_m = np.zeros((n_msg ** (b - 1), nz ** (n * b)))
    pz_k = np.zeros((n_keys, nz ** (n * b)))

    @lru_cache(maxsize=None)
    def outcomes(x: tuple, last: bool):
        return _block_outcomes(ch, x, n, not last)

    @lru_cache(maxsize=None)
    def describe(j: int, r: int, yhat_idx: int):
        x = xmap[cb.blocks[j].u[r]]
        yh = np.array(np.unravel_index(yhat_idx, (nyh,) * n))
        d = describe_feedback(cb, j, r, x, yh, None)
        return d["l1"], d["l2"], d["k_prime"]

    def walk(j, r, weight, zvec, msgs, keys):
        x = tuple(int(v) for v in xmap[cb.blocks[j].u[r]])
        last = j == b - 1
        out = outcomes(x, last)
        if last:
            z = np.kron(zvec, out[0]) * weight
            mi = int(np.ravel_multi_index(msgs, (n_msg,) * (b - 1))) if b > 1 else 0
            ki = int(np.ravel_multi_index(keys, (s.n_r1,) * (b - 1))) if b > 1 else 0
            pz_m[mi] += z
            pz_k[ki] += z / n_msg ** (b - 1)
            return
        for yi in range(out.shape[0]):
            row = out[yi]
            if not row.any():
                continue
            l1, l2, kp = describe(j, r, yi)
            zn = np.kron(zvec, row)
            for mi in range(n_msg):
                m0, m1 = divmod(mi, s.n_r1)
                for lf in range(s.n_lf):
                    e = encode_block(cb, j + 1, (l1, l2, kp), (m0, m1), lf)
                    walk(j + 1, e["r"], weight / s.n_lf, zn, msgs + (mi,), keys + (kp,))

    for r0 in range(s.n_r):
        walk(0, r0, 1.0 / s.n_r, np.ones(1), (), ())

    prior = np.full(pz_m.shape[0], 1.0 / pz_m.shape[0])
    leak = _mutual_from_rows(pz_m, prior)
    pk = pz_k.sum(axis=1)
    key_leak = _mutual_from_rows(pz_k, pk / math.fsum(pk))
    deficit = math.log2(n_keys) - _entropy(pk)
    return LeakageResult(leak, "enumeration", paths, key_leak, max(deficit, 0.0), math.log2(pz_m.shape[0]))


def monte_carlo_leakage(cb: Codebook, ch: WtgfChannel, trials: int, seed: int = 0) -> LeakageResult:
    """Plug-in estimate of I(M; Z^{nb}) from simulated sessions.

    Uses the deterministic-tie-break encoder so it targets the same quantity
    as :func:`exact_leakage_tiny`.  The plug-in value gets the Miller-Madow
    bias correction; the standard error is that of the mean information
    density.
    """
    s = cb.sizes
    n_msg = s.n_m0 * s.n_r1
    pairs = []
    for i in range(trials):
        tr = run_session(cb, ch, seed=seed + i, deterministic=True, decode=False)
        m = tuple(b.message[0] * s.n_r1 + b.message[1] for b in tr.blocks[1:])
        z = tuple(int(v) for blk in tr.blocks for v in blk.z)
        pairs.append((m, z))
    joint = Counter(pairs)
    pm = Counter(m for m, _ in pairs)
    pz = Counter(z for _, z in pairs)
    dens = np.array([math.log2(c * trials / (pm[m] * pz[z])) for (m, z), c in joint.items()])
    weights = np.array(list(joint.values()), dtype=float) / trials
    plug = math.fsum(weights * dens)
    corr = ((len(pm) - 1) + (len(pz) - 1) - (len(joint) - 1)) / (2 * trials * math.log(2))
    var = math.fsum(weights * (dens - plug) ** 2)
    return LeakageResult(plug + corr, "monte_carlo", trials, std_error=math.sqrt(var / trials),
                         message_entropy_bits=math.log2(n_msg) * (cb.b - 1))
