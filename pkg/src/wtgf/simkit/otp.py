"""One-time pad on message indices: addition modulo the key-set size."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence


def otp_encrypt(m: int, k: int, modulus: int) -> int:
    return (m + k) % modulus


def otp_decrypt(c: int, k: int, modulus: int) -> int:
    return (c - k) % modulus


def otp_joint(modulus: int, p_m: Optional[Sequence] = None) -> dict:
    """Exact joint pmf of (M, M + K mod modulus) for a uniform key K independent of M.

    ``p_m`` defaults to uniform; probabilities are :class:`fractions.Fraction`.
    """
    if modulus < 1:
        raise ValueError("modulus must be positive")
    p_m = [Fraction(1, modulus)] * modulus if p_m is None else [Fraction(p) for p in p_m]
    if len(p_m) != modulus or sum(p_m) != 1:
        raise ValueError("p_m must be a pmf over the message set")
    joint = {}
    pk = Fraction(1, modulus)
    for m in range(modulus):
        for k in range(modulus):
            c = otp_encrypt(m, k, modulus)
            joint[(m, c)] = joint.get((m, c), Fraction(0)) + p_m[m] * pk
    return joint


def otp_leakage(modulus: int, p_m: Optional[Sequence] = None) -> tuple:
    """I(M; M + K) in bits and the ciphertext pmf, both from exact rationals."""
    joint = otp_joint(modulus, p_m)
    pm, pc = {}, {}
    for (m, c), p in joint.items():
        pm[m] = pm.get(m, Fraction(0)) + p
        pc[c] = pc.get(c, Fraction(0)) + p
    terms = [float(p) * math.log2(p / (pm[m] * pc[c])) for (m, c), p in joint.items() if p > 0]
    return math.fsum(terms), [pc.get(c, Fraction(0)) for c in range(modulus)]
