"""Block-Markov encoding, channel simulation and typicality decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..channels import WtgfChannel
from .codebook import Codebook
from .otp import otp_decrypt, otp_encrypt
from .typicality import typical_mask


@dataclass
class BlockRecord:
    """Everything that happened in one block (indices are zero-based).

    ``s1`` .. ``k_prime`` describe this block's feedback; they are chosen by the
    encoder at the start of the next block and stay None for the last block.
    """

    j: int
    message: Optional[tuple]
    m1_enc: Optional[int]
    key_used: int
    lp: int
    lpp: int
    lf: int
    r: int
    x: np.ndarray
    y: np.ndarray
    yhat: np.ndarray
    z: np.ndarray
    s1: Optional[int] = None
    s2: Optional[int] = None
    l1: Optional[int] = None
    l2: Optional[int] = None
    k: Optional[int] = None
    k_prime: Optional[int] = None
    s1_fallback: bool = False
    s2_fallback: bool = False
    decoded_r: Optional[int] = None
    decoded_key: Optional[int] = None
    decoded_message: Optional[tuple] = None
    success: Optional[bool] = None

    def export(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


@dataclass
class SessionTrace:
    seed: int
    blocks: list
    deterministic: bool
    rates: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        """All message-carrying blocks decoded correctly."""
        return all(bool(b.success) for b in self.blocks[1:])

    @property
    def keys_agree(self) -> bool:
        return all(b.decoded_key == b.key_used for b in self.blocks[1:])

    def export(self) -> list:
        return [b.export() for b in self.blocks]


def _pick(mask: np.ndarray, rng) -> tuple:
    """Index of a marked candidate (lowest when ``rng`` is None) and whether none was marked."""
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        if rng is None:
            return 0, True
        return int(rng.integers(mask.size)), True
    if rng is None or hits.size == 1:
        return int(hits[0]), False
    return int(rng.choice(hits)), False


def describe_feedback(cb: Codebook, j: int, r: int, x, yhat, rng=None) -> dict:
    """Encoder steps 1-2: indices (s1, s2) describing block ``j``'s feedback, then their bins.

    With ``rng`` None every tie and every miss resolves to the lowest index,
    which makes the encoder deterministic.
    """
    blk = cb.blocks[j]
    lp = cb.r_tuple(r)[0]
    q, u = blk.q[lp], blk.u[r]
    m1 = typical_mask([blk.t[lp], q, u, x, yhat], cb.pmfs["enc_s1"], cb.enc_delta)
    s1, miss1 = _pick(m1, rng)
    m2 = typical_mask([blk.v[r, s1], blk.t[lp, s1], q, u, x, yhat], cb.pmfs["enc_s2"], cb.enc_delta)
    s2, miss2 = _pick(m2, rng)
    k = int(blk.sub[s2])
    return {"s1": s1, "s2": s2, "l1": int(blk.b1[s1]), "l2": int(blk.b2[s2]), "k": k,
            "k_prime": int(blk.mk[k]), "s1_fallback": miss1, "s2_fallback": miss2}


def encode_block(cb: Codebook, j: int, carry: tuple, message: tuple, lf: int) -> dict:
    """Encoder steps 3-4 for block ``j`` >= 1: recombine bins, pad m1, select u.

    ``carry`` = (l1, l2, k') from block j - 1 is the only input from the past.
    """
    l1, l2, kp = carry
    lp, lpp = cb.recombine(j, l1, l2)
    m0, m1 = message
    m1_enc = otp_encrypt(m1, kp, cb.sizes.n_r1)
    return {"lp": lp, "lpp": lpp, "m1_enc": m1_enc, "r": cb.r_index(lp, lpp, m0, m1_enc, lf)}


def sample_x(cb: Codebook, u: np.ndarray, rng) -> np.ndarray:
    cum = np.cumsum(cb.x_given_u, axis=1)
    cum[:, -1] = 1.0
    return (rng.random(u.size)[:, None] >= cum[u]).sum(axis=1)


def sample_channel(ch: WtgfChannel, x: np.ndarray, rng) -> tuple:
    tab = ch.table.reshape(ch.table.shape[0], -1)
    cum = np.cumsum(tab, axis=1)
    cum[:, -1] = 1.0
    idx = (rng.random(x.size)[:, None] >= cum[x]).sum(axis=1)
    return np.unravel_index(idx, ch.table.shape[1:])


def _unique(mask: np.ndarray) -> Optional[int]:
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size == 1 else None


def decode_r(cb: Codebook, j: int, y) -> Optional[int]:
    """Decoder step 1: the unique r whose (q, u) is jointly typical with y."""
    blk = cb.blocks[j]
    lp_of_r = np.unravel_index(np.arange(cb.sizes.n_r), cb.sizes.r_shape)[0]
    return _unique(typical_mask([blk.q[lp_of_r], blk.u, y], cb.pmfs["dec_r"], cb.dec_delta))


def decode_key(cb: Codebook, j: int, r_prev: int, y_prev, l1: int, l2: int) -> Optional[int]:
    """Decoder steps 3-5 on block ``j``: recover s1 in bin l1, s2 in bin l2, return k'."""
    blk = cb.blocks[j]
    lp = cb.r_tuple(r_prev)[0]
    q, u = blk.q[lp], blk.u[r_prev]
    cand1 = np.flatnonzero(blk.b1 == l1)
    ok = typical_mask([blk.t[lp, cand1], q, u, y_prev], cb.pmfs["dec_s1"], cb.dec_delta)
    i = _unique(ok)
    if i is None:
        return None
    s1 = int(cand1[i])
    cand2 = np.flatnonzero(blk.b2 == l2)
    ok = typical_mask([blk.v[r_prev, s1, cand2], blk.t[lp, s1], q, u, y_prev], cb.pmfs["dec_s2"], cb.dec_delta)
    i = _unique(ok)
    if i is None:
        return None
    return int(blk.mk[blk.sub[cand2[i]]])


def run_session(cb: Codebook, ch: WtgfChannel, messages=None, seed: int = 0, deterministic: bool = False,
                decode: bool = True) -> SessionTrace:
    """Transmit b - 1 messages over b blocks.

    ``messages`` lists (m0, m1) for blocks 2..b; None draws them uniformly.
    With ``deterministic`` the encoder's tie-breaks pick the lowest index;
    block-1 codeword, lf, messages and channel noise stay random.
    """
    b, s = cb.b, cb.sizes
    if b < 2:
        raise ValueError("a session needs at least two blocks")
    ss = np.random.SeedSequence(seed)
    msg_rng, enc_rng, ch_rng = (np.random.default_rng(c) for c in ss.spawn(3))
    tie_rng = None if deterministic else enc_rng
    if messages is None:
        messages = [(int(msg_rng.integers(s.n_m0)), int(msg_rng.integers(s.n_r1))) for _ in range(b - 1)]
    if len(messages) != b - 1:
        raise ValueError(f"expected {b - 1} messages, got {len(messages)}")
    recs = []
    carry = None
    for j in range(b):
        if j == 0:
            r = int(enc_rng.integers(s.n_r))
            lp, lpp, _, _, lf = cb.r_tuple(r)
            rec_kw = dict(message=None, m1_enc=None, key_used=0)
        else:
            m0, m1 = messages[j - 1]
            if not (0 <= m0 < s.n_m0 and 0 <= m1 < s.n_r1):
                raise ValueError(f"message {(m0, m1)} out of range")
            lf = int(enc_rng.integers(s.n_lf))
            e = encode_block(cb, j, carry, (m0, m1), lf)
            r, lp, lpp = e["r"], e["lp"], e["lpp"]
            rec_kw = dict(message=(m0, m1), m1_enc=e["m1_enc"], key_used=carry[2])
        x = sample_x(cb, cb.blocks[j].u[r], enc_rng)
        y, yh, z = sample_channel(ch, x, ch_rng)
        rec = BlockRecord(j=j, lp=lp, lpp=lpp, lf=lf, r=r, x=x, y=y, yhat=yh, z=z, **rec_kw)
        recs.append(rec)
        if j < b - 1:
            # describe this block's feedback; block j + 1 sends its bins
            d = describe_feedback(cb, j, r, x, yh, tie_rng)
            rec.__dict__.update(d)
            carry = (d["l1"], d["l2"], d["k_prime"])
    if decode:
        _decode_session(cb, recs)
    mr = cb.rates.message_rate()
    return SessionTrace(seed=seed, blocks=recs, deterministic=deterministic, rates=mr)


def _decode_session(cb: Codebook, recs: list) -> None:
    for j, rec in enumerate(recs):
        rec.decoded_r = decode_r(cb, j, rec.y)
        if j == 0:
            continue
        prev = recs[j - 1]
        if rec.decoded_r is None:
            rec.success = False
            continue
        lp, lpp, m0, m1_enc, _ = cb.r_tuple(rec.decoded_r)
        l1, l2 = cb.split(j, lp, lpp)
        kp = None if prev.decoded_r is None else decode_key(cb, j - 1, prev.decoded_r, prev.y, l1, l2)
        rec.decoded_key = kp
        if kp is None:
            # without the key only an unpadded message can still be read
            kp = 0 if cb.sizes.n_r1 == 1 else None
        if kp is None:
            rec.success = False
            continue
        rec.decoded_message = (m0, otp_decrypt(m1_enc, kp, cb.sizes.n_r1))
        rec.success = rec.decoded_message == rec.message


@dataclass(frozen=True)
class ErrorEstimate:
    p_error: float
    half_width: float
    trials: int
    failures: int


def estimate_error(cb: Codebook, ch: WtgfChannel, trials: int, seed: int = 0) -> ErrorEstimate:
    """Fraction of sessions with any message error, with a 95% normal-approximation half-width.

    Trial i uses session seed ``seed + i``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    fails = sum(not run_session(cb, ch, seed=seed + i).success for i in range(trials))
    p = fails / trials
    return ErrorEstimate(p, 1.96 * math.sqrt(p * (1 - p) / trials), trials, fails)
