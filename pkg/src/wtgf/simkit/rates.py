"""Scheme rates and the integer code sizes they induce at blocklength n."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bounds import FactorizationKG
from ..channels import WtgfChannel
from ..errors import SchemeInfeasible
from ..probkit import EntropyTable, JointPmf

RATE_TOL = 1e-12


def code_count(n: int, rate: float) -> int:
    """ceil(2^(n * rate)), with exponents within 1e-9 of an integer snapped to it."""
    e = n * rate
    if abs(e - round(e)) < 1e-9:
        e = round(e)
    return max(1, math.ceil(2.0 ** e))


@dataclass(frozen=True)
class CodeSizes:
    """Index-set sizes of one block's codebook.

    Sizes are rounded coarsest level first: the number of bins, then the number
    of codewords per bin, so every bin holds exactly the same number of words.
    """

    n_lp: int
    n_lpp: int
    n_m0: int
    n_r1: int
    n_lf: int
    n_l1: int
    t_per_bin: int
    n_l2: int
    k_per_key: int
    v_per_subbin: int

    @property
    def n_s1(self) -> int:
        return self.n_l1 * self.t_per_bin

    @property
    def n_k(self) -> int:
        return self.n_r1 * self.k_per_key

    @property
    def v_per_bin(self) -> int:
        return self.n_k * self.v_per_subbin

    @property
    def n_s2(self) -> int:
        return self.n_l2 * self.v_per_bin

    @property
    def r_shape(self) -> tuple:
        """Shape of the u-codeword index r = (l', l'', m0, m1, lf)."""
        return (self.n_lp, self.n_lpp, self.n_m0, self.n_r1, self.n_lf)

    @property
    def n_r(self) -> int:
        return int(np.prod(self.r_shape))


@dataclass(frozen=True)
class SchemeRates:
    """Rates (bits per symbol) and slacks of the block-Markov key-generation scheme."""

    n: int
    b: int
    s1: float
    s1_tilde: float
    s2: float
    s2_tilde: float
    s2_bar: float
    r0: float
    r1: float
    rf: float
    s_tilde_prime: float
    s_tilde_dprime: float
    eps1: float = 0.10
    eps1_tilde: float = 0.15
    eps2: float = 0.10
    eps2_tilde: float = 0.15
    eps_prime: float = 0.05
    joint: Optional[JointPmf] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.b < 1:
            raise SchemeInfeasible("blocklength and block count must be positive")
        for name in ("s1", "s1_tilde", "s2", "s2_tilde", "s2_bar", "r0", "r1", "rf",
                     "s_tilde_prime", "s_tilde_dprime"):
            if getattr(self, name) < -RATE_TOL:
                raise SchemeInfeasible(f"{name} >= 0 violated ({getattr(self, name):.6g})")
        checks = [
            ("s1_tilde <= s1", self.s1_tilde - self.s1),
            ("s2_tilde <= s2", self.s2_tilde - self.s2),
            ("s2_bar <= s2 - s2_tilde", self.s2_bar - (self.s2 - self.s2_tilde)),
            ("r1 <= s2_bar", self.r1 - self.s2_bar),
            ("s_tilde_prime + s_tilde_dprime = s1_tilde + s2_tilde",
             abs(self.s_tilde_prime + self.s_tilde_dprime - self.s1_tilde - self.s2_tilde)),
        ]
        for what, excess in checks:
            if excess > 1e-9:
                raise SchemeInfeasible(f"{what} violated by {excess:.6g}")

    def sizes(self) -> CodeSizes:
        n = self.n
        n_l1 = code_count(n, self.s1_tilde)
        n_l2 = code_count(n, self.s2_tilde)
        n_lp = _divisor_near(n_l1 * n_l2, code_count(n, self.s_tilde_prime))
        n_r1 = code_count(n, self.r1)
        return CodeSizes(
            n_lp=n_lp,
            n_lpp=n_l1 * n_l2 // n_lp,
            n_m0=code_count(n, self.r0),
            n_r1=n_r1,
            n_lf=code_count(n, self.rf),
            n_l1=n_l1,
            t_per_bin=code_count(n, self.s1 - self.s1_tilde),
            n_l2=n_l2,
            k_per_key=code_count(n, self.s2_bar - self.r1),
            v_per_subbin=code_count(n, self.s2 - self.s2_tilde - self.s2_bar),
        )

    def message_rate(self) -> dict:
        """Message bits per symbol, per carrying block and averaged over the session."""
        sz = self.sizes()
        per_block = math.log2(sz.n_m0 * sz.n_r1) / self.n
        return {"per_block": per_block, "per_session": per_block * (self.b - 1) / self.b}


def _divisor_near(total: int, target: int) -> int:
    """Largest divisor of ``total`` not above ``target`` (at least 1)."""
    best = 1
    for d in range(1, min(total, target) + 1):
        if total % d == 0:
            best = d
    return best


def scheme_terms(joint: JointPmf) -> dict:
    et = EntropyTable(joint.mass[None], joint.names)
    g = lambda a, b, c=(): float(et.I(a, b, c)[0])
    return {
        "I(T;UXYhat|Q)": g("T", ["U", "X", "Yhat"], "Q"),
        "I(T;UY|Q)": g("T", "UY", "Q"),
        "I(V;XYhat|UT)": g("V", ["X", "Yhat"], "UT"),
        "I(V;Y|UT)": g("V", "Y", "UT"),
        "I(V;Z|UT)": g("V", "Z", "UT"),
        "I(U;TZ|Q)": g("U", "TZ", "Q"),
    }


def derive_scheme_rates(f: FactorizationKG, ch: WtgfChannel, n: int, b: int, r0: float = 0.0,
                        r1: float = 0.0, eps1: float = 0.10, eps1_tilde: float = 0.15,
                        eps2: float = 0.10, eps2_tilde: float = 0.15, eps_prime: float = 0.05,
                        s_tilde_prime: Optional[float] = None) -> SchemeRates:
    """Codebook rates for a factorization.

    Bin rates above their codebook rate are lowered to it (one word per bin),
    the key rate is capped by the room left in each bin, and the randomization
    rate is clamped at zero.  A negative key rate, that is
    I(V;Z|UT) > I(V;Y|UT), makes the scheme infeasible.
    """
    joint = f.assemble(ch)
    t = scheme_terms(joint)
    s1 = t["I(T;UXYhat|Q)"] + eps1
    s1_tilde = min(t["I(T;UXYhat|Q)"] - t["I(T;UY|Q)"] + eps1 + eps1_tilde, s1)
    s2 = t["I(V;XYhat|UT)"] + eps2
    s2_tilde = min(t["I(V;XYhat|UT)"] - t["I(V;Y|UT)"] + eps2 + eps2_tilde, s2)
    key = t["I(V;Y|UT)"] - t["I(V;Z|UT)"]
    if key < -RATE_TOL:
        raise SchemeInfeasible(f"s2_bar >= 0 violated: I(V;Z|UT) exceeds I(V;Y|UT) by {-key:.6g}")
    s2_bar = min(max(key, 0.0), s2 - s2_tilde)
    if r1 > s2_bar + RATE_TOL:
        raise SchemeInfeasible(f"r1 <= s2_bar violated ({r1:.6g} > {s2_bar:.6g})")
    rf = max(t["I(U;TZ|Q)"] - eps_prime - r1, 0.0)
    sp = s1_tilde if s_tilde_prime is None else s_tilde_prime
    return SchemeRates(n=n, b=b, s1=s1, s1_tilde=s1_tilde, s2=s2, s2_tilde=s2_tilde, s2_bar=s2_bar,
                       r0=r0, r1=r1, rf=rf, s_tilde_prime=sp, s_tilde_dprime=s1_tilde + s2_tilde - sp,
                       eps1=eps1, eps1_tilde=eps1_tilde, eps2=eps2, eps2_tilde=eps2_tilde,
                       eps_prime=eps_prime, joint=joint)
