"""Layered random codebook with bins, sub-bins and key maps.

One independent codebook is drawn per block.  Word layers:

* ``q[l']``                    from p(q)^n
* ``u[r]``, r = (l', l'', m0, m1, lf), superposed on ``q[l']``
* ``t[l', s1]``                superposed on ``q[l']``
* ``v[r, s1, s2]``             superposed on ``u[r]`` and ``t[l', s1]``

Each word is redrawn until it is conditionally typical with its parents
(up to ``max_tries`` draws).  Bin maps assign equal numbers of indices to
every bin at random; ``ml`` is a random bijection (l1, l2) -> (l', l'').
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bounds import KG_NAMES, FactorizationKG
from ..channels import WtgfChannel
from ..errors import BudgetExceeded, ModelError
from .rates import CodeSizes, SchemeRates
from .typicality import conditionally_typical_mask

CODEBOOK_BUDGET = 50_000_000
MAX_TRIES = 100


def marginal(mass: np.ndarray, keep) -> np.ndarray:
    """Marginal of a KG-ordered joint on ``keep``, axes in the order given."""
    keep = list(keep)
    drop = tuple(i for i, n in enumerate(KG_NAMES) if n not in keep)
    m = mass.sum(axis=drop)
    kept = [n for n in KG_NAMES if n in keep]
    return np.transpose(m, [kept.index(n) for n in keep])


def conditional_table(mass: np.ndarray, given, target: str) -> np.ndarray:
    """p(target | given) with uniform rows where the condition has zero mass."""
    m = marginal(mass, list(given) + [target])
    tot = m.sum(axis=-1, keepdims=True)
    k = m.shape[-1]
    return np.where(tot > 0, m / np.where(tot > 0, tot, 1.0), 1.0 / k)


@dataclass(frozen=True)
class BlockCodebook:
    q: np.ndarray  # (n_lp, n)
    u: np.ndarray  # (n_r, n)
    t: np.ndarray  # (n_lp, n_s1, n)
    v: np.ndarray  # (n_r, n_s1, n_s2, n)
    b1: np.ndarray  # s1 -> l1
    b2: np.ndarray  # s2 -> l2
    sub: np.ndarray  # s2 -> k
    mk: np.ndarray  # k -> k'
    ml: np.ndarray  # l1 * n_l2 + l2 -> l' * n_lpp + l''
    ml_inv: np.ndarray


@dataclass(frozen=True)
class Codebook:
    rates: SchemeRates
    sizes: CodeSizes
    seed: int
    blocks: tuple
    x_given_u: np.ndarray
    pmfs: dict = field(repr=False)
    enc_delta: float = 0.09
    dec_delta: float = 0.135
    cb_delta: float = 0.09

    @property
    def n(self) -> int:
        return self.rates.n

    @property
    def b(self) -> int:
        return len(self.blocks)

    def r_index(self, lp, lpp, m0, m1, lf) -> int:
        return int(np.ravel_multi_index((lp, lpp, m0, m1, lf), self.sizes.r_shape))

    def r_tuple(self, r: int) -> tuple:
        return tuple(int(i) for i in np.unravel_index(r, self.sizes.r_shape))

    def recombine(self, j: int, l1: int, l2: int) -> tuple:
        """(l', l'') used in block ``j`` (0-based) for bins (l1, l2) of block j - 1."""
        idx = int(self.blocks[j].ml[l1 * self.sizes.n_l2 + l2])
        return divmod(idx, self.sizes.n_lpp)

    def split(self, j: int, lp: int, lpp: int) -> tuple:
        idx = int(self.blocks[j].ml_inv[lp * self.sizes.n_lpp + lpp])
        return divmod(idx, self.sizes.n_l2)

    def deterministic_encoder(self) -> bool:
        return bool(np.all(np.isclose(self.x_given_u.max(axis=1), 1.0, atol=0.0, rtol=0.0)))


def _draw(rng, cond, parents, shape, delta, tries):
    """Sample words of ``shape`` = (W, n) from ``cond`` given parent words."""
    k = cond.shape[-1]
    flat = cond.reshape(-1, k)
    cum = np.cumsum(flat, axis=1)
    cum[:, -1] = 1.0
    pidx = np.ravel_multi_index(tuple(parents), cond.shape[:-1]) if parents else np.zeros(shape, dtype=np.int64)

    def sample(rows):
        u = rng.random((rows.sum(),) + shape[1:])
        c = cum[pidx[rows]]
        return (u[..., None] >= c).sum(axis=-1).astype(np.int16)

    words = np.empty(shape, dtype=np.int16)
    todo = np.ones(shape[0], dtype=bool)
    for _ in range(tries):
        words[todo] = sample(todo)
        ok = conditionally_typical_mask(words[todo], [p[todo] for p in parents], cond, delta)
        idx = np.flatnonzero(todo)
        todo[idx[ok]] = False
        if not todo.any():
            break
    return words


def _equal_bins(rng, count: int, n_bins: int) -> np.ndarray:
    """Random map [count] -> [n_bins] with exactly count / n_bins preimages each."""
    out = np.empty(count, dtype=np.int64)
    out[rng.permutation(count)] = np.repeat(np.arange(n_bins), count // n_bins)
    return out


def codebook_symbols(sizes: CodeSizes, n: int, b: int) -> int:
    per = sizes.n_lp + sizes.n_r + sizes.n_lp * sizes.n_s1 + sizes.n_r * sizes.n_s1 * sizes.n_s2
    return per * n * b


def build_codebook(rates: SchemeRates, f: FactorizationKG, seed: int, channel: Optional[WtgfChannel] = None,
                   enc_delta: Optional[float] = None, dec_delta: Optional[float] = None,
                   cb_delta: Optional[float] = None, budget: int = CODEBOOK_BUDGET,
                   max_tries: int = MAX_TRIES) -> Codebook:
    """Draw the per-block codebooks; identical output for identical ``seed``.

    Typicality defaults sit just below the slacks: the encoder and the
    codebook use 0.9 min(eps1, eps2), the decoder 0.9 min(eps1~, eps2~).
    """
    joint = f.assemble(channel) if channel is not None else rates.joint
    if joint is None:
        raise ModelError("build_codebook needs the channel or rates carrying the assembled joint")
    if joint.names != KG_NAMES:
        raise ModelError("joint must be over (Q, U, X, Y, Yhat, Z, V, T)")
    sizes = rates.sizes()
    total = codebook_symbols(sizes, rates.n, rates.b)
    if total > budget:
        raise BudgetExceeded(f"codebook needs {total} symbols, above the budget of {budget}",
                             required=total, budget=budget)
    enc_delta = 0.9 * min(rates.eps1, rates.eps2) if enc_delta is None else enc_delta
    dec_delta = 0.9 * min(rates.eps1_tilde, rates.eps2_tilde) if dec_delta is None else dec_delta
    cb_delta = enc_delta if cb_delta is None else cb_delta
    mass = joint.mass
    p_q = marginal(mass, ["Q"])
    p_u_q = conditional_table(mass, ["Q"], "U")
    p_t_q = conditional_table(mass, ["Q"], "T")
    p_v_ut = conditional_table(mass, ["U", "T"], "V")
    n, s = rates.n, sizes
    rng = np.random.default_rng(seed)
    lp_of_r = np.unravel_index(np.arange(s.n_r), s.r_shape)[0]
    blocks = []
    for _ in range(rates.b):
        q = _draw(rng, p_q, [], (s.n_lp, n), cb_delta, max_tries)
        u = _draw(rng, p_u_q, [q[lp_of_r]], (s.n_r, n), cb_delta, max_tries)
        tq = np.repeat(q, s.n_s1, axis=0)
        t = _draw(rng, p_t_q, [tq], (s.n_lp * s.n_s1, n), cb_delta, max_tries).reshape(s.n_lp, s.n_s1, n)
        m = s.n_r * s.n_s1 * s.n_s2
        r_of = np.arange(m) // (s.n_s1 * s.n_s2)
        s1_of = (np.arange(m) // s.n_s2) % s.n_s1
        v = _draw(rng, p_v_ut, [u[r_of], t[lp_of_r[r_of], s1_of]], (m, n), cb_delta, max_tries)
        v = v.reshape(s.n_r, s.n_s1, s.n_s2, n)
        b1 = _equal_bins(rng, s.n_s1, s.n_l1)
        label = _equal_bins(rng, s.n_s2, s.n_l2 * s.n_k)
        mk = _equal_bins(rng, s.n_k, s.n_r1)
        ml = rng.permutation(s.n_l1 * s.n_l2)
        ml_inv = np.argsort(ml)
        blocks.append(BlockCodebook(q, u, t, v, b1, label // s.n_k, label % s.n_k, mk, ml, ml_inv))
    pmfs = {
        "enc_s1": marginal(mass, ["T", "Q", "U", "X", "Yhat"]),
        "enc_s2": marginal(mass, ["V", "T", "Q", "U", "X", "Yhat"]),
        "dec_r": marginal(mass, ["Q", "U", "Y"]),
        "dec_s1": marginal(mass, ["T", "Q", "U", "Y"]),
        "dec_s2": marginal(mass, ["V", "T", "Q", "U", "Y"]),
    }
    return Codebook(rates, sizes, seed, tuple(blocks), np.array(f.x_given_u.table), pmfs,
                    enc_delta, dec_delta, cb_delta)
