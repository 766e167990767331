"""Pointwise rate evaluators.

Every function here takes a channel and an explicit choice of auxiliary
distributions and returns the exact value of one rate expression.  The
numeric work happens in the ``*_batch`` helpers, which score a stack of
candidate factorizations at once; the optimizer calls those directly and the
public evaluators call them with a batch of one, so both paths share a
single implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import (
    BOB_OVER_EVE,
    EVE_OVER_BOB,
    ErasureParams,
    ParallelSourcesChannel,
    StateChannel,
    WtgfChannel,
    has_perfect_feedback,
    less_noisy_verdict,
)
from .errors import HypothesisUnverified, HypothesisViolated, ModelError
from .probkit import Alphabet, EntropyTable, JointPmf, Kernel, condition_residual

KG_NAMES = ("Q", "U", "X", "Y", "Yhat", "Z", "V", "T")
CHANNEL_PART = ("U", "Xc", "Yc", "Zc")
SOURCE_PART = ("Ys", "Yhats", "Zs", "V", "T")
FEAS_TOL = 1e-12
RESIDUAL_TOL = 1e-9
INFEASIBLE_SCORE = -1e3


@dataclass(frozen=True)
class RateValue:
    """A rate in bits; ``bits`` is None when the point is infeasible."""

    bits: Optional[float]
    feasible: bool = True
    binding_constraint: str = ""
    terms: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.feasible and (self.bits is None or self.bits < 0):
            raise ValueError("a feasible rate must be a nonnegative number")
        if not self.feasible and self.bits is not None:
            raise ValueError("an infeasible rate carries no value")


def _pos(x):
    return np.maximum(x, 0.0)


def _rate(raw, binding, terms, feasible=True, index=0):
    if not feasible:
        return RateValue(None, False, binding, terms)
    raw = float(raw)
    if raw <= 0.0:
        return RateValue(0.0, True, "clamp" if raw < 0 else binding, terms)
    return RateValue(raw, True, binding, terms)


def _terms_dict(terms: dict) -> dict:
    return {k: float(v[0]) for k, v in terms.items()}


# ---------------------------------------------------------------------------
# generalized-feedback inner bounds


@dataclass(frozen=True)
class FactorizationKG:
    """Free factors p(qu) p(x|u) p(v|u x yhat) p(t|v) of the KG inner bound."""

    qu: JointPmf
    x_given_u: Kernel
    v_given_uxyhat: Kernel
    t_given_v: Kernel

    def __post_init__(self):
        if self.qu.names != ("Q", "U"):
            raise ModelError("qu must be a pmf over (Q, U)")
        if self.x_given_u.input_names != ("U",) or self.x_given_u.output_names != ("X",):
            raise ModelError("x_given_u must map U -> X")
        if self.v_given_uxyhat.input_names != ("U", "X", "Yhat") or self.v_given_uxyhat.output_names != ("V",):
            raise ModelError("v_given_uxyhat must map (U, X, Yhat) -> V")
        if self.t_given_v.input_names != ("V",) or self.t_given_v.output_names != ("T",):
            raise ModelError("t_given_v must map V -> T")
        u = self.qu.alphabet("U")
        if self.x_given_u.inputs[0][1] != u or self.v_given_uxyhat.inputs[0][1] != u:
            raise ModelError("U alphabet differs between factors")
        if self.v_given_uxyhat.inputs[1][1] != self.x_given_u.outputs[0][1]:
            raise ModelError("X alphabet differs between factors")
        if self.t_given_v.inputs[0][1] != self.v_given_uxyhat.outputs[0][1]:
            raise ModelError("V alphabet differs between factors")

    @classmethod
    def from_arrays(cls, ch: WtgfChannel, qu, x_given_u, v_given_uxyhat, t_given_v,
                    q=None, u=None, v=None, t=None) -> "FactorizationKG":
        qu = np.asarray(qu, dtype=float)
        nv = np.asarray(v_given_uxyhat).shape[-1]
        nt = np.asarray(t_given_v).shape[-1]
        q = q or Alphabet.of_size(qu.shape[0])
        u = u or Alphabet.of_size(qu.shape[1])
        v = v or Alphabet.of_size(nv)
        t = t or Alphabet.of_size(nt)
        return cls(
            JointPmf([("Q", q), ("U", u)], qu),
            Kernel([("U", u)], [("X", ch.x)], x_given_u),
            Kernel([("U", u), ("X", ch.x), ("Yhat", ch.yhat)], [("V", v)], v_given_uxyhat),
            Kernel([("V", v)], [("T", t)], t_given_v),
        )

    @classmethod
    def wiretap(cls, ch: WtgfChannel, ux) -> "FactorizationKG":
        """Q, T, V degenerate; ``ux`` is the joint p(u, x)."""
        ux = np.asarray(ux, dtype=float)
        pu = ux.sum(axis=1)
        xu = np.where(pu[:, None] > 0, ux / np.where(pu > 0, pu, 1)[:, None], 1.0 / ux.shape[1])
        nu = ux.shape[0]
        return cls.from_arrays(ch, pu[None, :], xu, np.ones((nu, ch.x.size, ch.yhat.size, 1)),
                               np.ones((1, 1)))

    def arrays(self):
        return (self.qu.mass, self.x_given_u.table, self.v_given_uxyhat.table, self.t_given_v.table)

    def check_channel(self, ch: WtgfChannel):
        if self.x_given_u.outputs[0][1] != ch.x:
            raise ModelError("factorization X alphabet differs from the channel's")
        if self.v_given_uxyhat.inputs[2][1] != ch.yhat:
            raise ModelError("factorization Yhat alphabet differs from the channel's")

    def assemble(self, ch: WtgfChannel) -> JointPmf:
        """The joint p(q u x y yhat z v t) of the factorization."""
        self.check_channel(ch)
        mass = kg_joint_batch(ch.table, *(a[None] for a in self.arrays()))[0]
        variables = (self.qu.variables + self.x_given_u.outputs + ch.kernel.outputs
                     + self.v_given_uxyhat.outputs + self.t_given_v.outputs)
        return JointPmf(variables, mass)


def kg_joint_batch(table, qu, xu, vu, tv) -> np.ndarray:
    """Stacked joints over (Q, U, X, Y, Yhat, Z, V, T); inputs carry a batch axis."""
    a = qu[:, :, :, None] * xu[:, None, :, :]  # b q u x
    a = a[:, :, :, :, None, None, None] * table[None, None, None]  # b q u x y h z
    a = a[..., None] * vu[:, None, :, :, None, :, None, :]  # b q u x y h z v
    return a[..., None] * tv[:, None, None, None, None, None, None, :, :]


def kg_factorization_residual(joint: JointPmf) -> float:
    """Largest conditional-independence residual of the KG factorization."""
    return max(
        condition_residual(joint, ["X"], ["Q"], ["U"]),
        condition_residual(joint, ["Y", "Yhat", "Z"], ["Q", "U"], ["X"]),
        condition_residual(joint, ["V"], ["Q", "Y", "Z"], ["U", "X", "Yhat"]),
        condition_residual(joint, ["T"], ["Q", "U", "X", "Y", "Yhat", "Z"], ["V"]),
    )


def kg_terms(et: EntropyTable) -> dict:
    """Every mutual-information term appearing in the KG rate expressions."""
    # reduce the full joint twice, then derive the small marginals from these
    for group in ("QUYZVT", ("U", "X", "Y", "Yhat", "V"), "QUZT", "UTVY", "UTVZ"):
        et.marginal(group)
    return {
        "I(U;Y)": et.I("U", "Y"),
        "I(U;Z|Q)": et.I("U", "Z", "Q"),
        "I(U;T|QZ)": et.I("U", "T", "QZ"),
        "I(Q;Y)": et.I("Q", "Y"),
        "I(V;XYhat|UY)": et.I("V", ["X", "Yhat"], "UY"),
        "I(V;Y|UT)": et.I("V", "Y", "UT"),
        "I(V;Z|UT)": et.I("V", "Z", "UT"),
    }


def kg1_batch(t: dict):
    """Raw (unclamped) KG1 value and index of the binding line (0 or 1)."""
    cost = np.maximum(t["I(Q;Y)"], t["I(V;XYhat|UY)"])
    line1 = (t["I(U;Y)"] - t["I(U;Z|Q)"] - t["I(U;T|QZ)"] - cost
             + t["I(V;Y|UT)"] - t["I(V;Z|UT)"])
    line2 = t["I(U;Y)"] - cost
    return np.minimum(line1, line2), np.where(line1 <= line2, 0, 1)


def kg2_batch(t: dict):
    line1 = t["I(V;Y|UT)"] - t["I(V;Z|UT)"]
    line2 = t["I(U;Y)"] - t["I(V;XYhat|UY)"]
    return np.minimum(line1, line2), np.where(line1 <= line2, 0, 1)


def sk_inner_batch(t: dict):
    """Raw SK inner value, feasibility flag and constraint slack."""
    cost = np.maximum(t["I(Q;Y)"], t["I(V;XYhat|UY)"])
    wiretap = t["I(U;Y)"] - cost - t["I(U;Z|Q)"] - t["I(U;T|QZ)"]
    raw = t["I(V;Y|UT)"] - t["I(V;Z|UT)"] + _pos(wiretap)
    slack = t["I(U;Y)"] - t["I(V;XYhat|UY)"]
    return raw, slack >= -FEAS_TOL, slack


def _kg_table(ch: WtgfChannel, f: FactorizationKG) -> tuple:
    joint = f.assemble(ch)
    resid = kg_factorization_residual(joint)
    if resid > RESIDUAL_TOL:
        raise ModelError(f"factorization residual {resid:.3g} exceeds {RESIDUAL_TOL}")
    et = EntropyTable(joint.mass[None], joint.names)
    return kg_terms(et)


def rate_kg1(ch: WtgfChannel, f: FactorizationKG) -> RateValue:
    """KG inner bound, first strategy (partial encryption)."""
    terms = _kg_table(ch, f)
    raw, bind = kg1_batch(terms)
    return _rate(raw[0], ("rate_kg1.line1", "rate_kg1.line2")[int(bind[0])], _terms_dict(terms))


def rate_kg2(ch: WtgfChannel, f: FactorizationKG) -> RateValue:
    """KG inner bound, second strategy (full encryption, Q degenerate)."""
    if f.qu.alphabet("Q").size != 1:
        raise ValueError("rate_kg2 needs a degenerate Q (alphabet of size 1)")
    terms = _kg_table(ch, f)
    raw, bind = kg2_batch(terms)
    return _rate(raw[0], ("rate_kg2.line1", "rate_kg2.line2")[int(bind[0])], _terms_dict(terms))


def sk_inner_rate(ch: WtgfChannel, f: FactorizationKG) -> RateValue:
    """Secret-key inner bound; infeasible when the description cost exceeds I(U;Y)."""
    terms = _kg_table(ch, f)
    raw, ok, _ = sk_inner_batch(terms)
    return _rate(raw[0], "sk_inner", _terms_dict(terms), feasible=bool(ok[0]))


# ---------------------------------------------------------------------------
# parallel-sources outer bounds


@dataclass(frozen=True)
class FactorizationOuter:
    """Free factors p(u xc) p(v|yhats) p(t|v) of the outer bounds."""

    uxc: JointPmf
    v_given_yhats: Kernel
    t_given_v: Kernel

    def __post_init__(self):
        if self.uxc.names != ("U", "Xc"):
            raise ModelError("uxc must be a pmf over (U, Xc)")
        if self.v_given_yhats.input_names != ("Yhats",) or self.v_given_yhats.output_names != ("V",):
            raise ModelError("v_given_yhats must map Yhats -> V")
        if self.t_given_v.input_names != ("V",) or self.t_given_v.output_names != ("T",):
            raise ModelError("t_given_v must map V -> T")
        if self.t_given_v.inputs[0][1] != self.v_given_yhats.outputs[0][1]:
            raise ModelError("V alphabet differs between factors")

    @classmethod
    def from_arrays(cls, ps: ParallelSourcesChannel, uxc, v_given_yhats, t_given_v,
                    u=None, v=None, t=None) -> "FactorizationOuter":
        uxc = np.asarray(uxc, dtype=float)
        u = u or Alphabet.of_size(uxc.shape[0])
        v = v or Alphabet.of_size(np.asarray(v_given_yhats).shape[-1])
        t = t or Alphabet.of_size(np.asarray(t_given_v).shape[-1])
        return cls(
            JointPmf([("U", u), ("Xc", ps.xc)], uxc),
            Kernel([("Yhats", ps.yhats)], [("V", v)], v_given_yhats),
            Kernel([("V", v)], [("T", t)], t_given_v),
        )

    @classmethod
    def channel_only(cls, ps: ParallelSourcesChannel, uxc) -> "FactorizationOuter":
        return cls.from_arrays(ps, uxc, np.ones((ps.yhats.size, 1)), np.ones((1, 1)))

    def arrays(self):
        return (self.uxc.mass, self.v_given_yhats.table, self.t_given_v.table)

    def check_channel(self, ps: ParallelSourcesChannel):
        if self.uxc.alphabet("Xc") != ps.xc:
            raise ModelError("factorization Xc alphabet differs from the channel's")
        if self.v_given_yhats.inputs[0][1] != ps.yhats:
            raise ModelError("factorization Yhats alphabet differs from the channel's")

    def assemble(self, ps: ParallelSourcesChannel) -> JointPmf:
        self.check_channel(ps)
        chan, src = outer_joint_batch(ps, *(a[None] for a in self.arrays()))
        full = np.einsum("abcd,efghi->abcdefghi", chan[0], src[0])
        variables = (self.uxc.variables + ps.main_kernel.outputs + ps.source_joint.variables
                     + self.v_given_yhats.outputs + self.t_given_v.outputs)
        return JointPmf(variables, full)


def outer_joint_batch(ps: ParallelSourcesChannel, uxc, vy, tv):
    """Channel part (U, Xc, Yc, Zc) and source part (Ys, Yhats, Zs, V, T).

    The two parts are independent under the outer-bound factorization, so
    every term is computed from one of them.
    """
    chan = uxc[:, :, :, None, None] * ps.main_kernel.table[None, None]
    src = ps.source_joint.mass[None, :, :, :, None] * vy[:, None, :, None, :]
    src = src[..., None] * tv[:, None, None, None, :, :]
    return chan, src


def outer_terms(et_c: EntropyTable, et_s: EntropyTable) -> dict:
    return {
        "I(U;Yc)": et_c.I("U", "Yc"),
        "I(U;Zc)": et_c.I("U", "Zc"),
        "I(Xc;Yc)": et_c.I("Xc", "Yc"),
        "I(Xc;Zc)": et_c.I("Xc", "Zc"),
        "I(V;Ys|T)": et_s.I("V", "Ys", "T"),
        "I(V;Zs|T)": et_s.I("V", "Zs", "T"),
        "I(V;Yhats|Ys)": et_s.I("V", "Yhats", "Ys"),
        "H(Ys|Zs)": et_s.H(["Ys", "Zs"]) - et_s.H(["Zs"]),
    }


def outer_tables(ps, uxc, vy, tv):
    chan, src = outer_joint_batch(ps, uxc, vy, tv)
    return EntropyTable(chan, CHANNEL_PART), EntropyTable(src, SOURCE_PART)


def outer_secrecy_batch(t: dict):
    line1 = t["I(U;Yc)"] - t["I(U;Zc)"] + t["I(V;Ys|T)"] - t["I(V;Zs|T)"]
    line2 = t["I(Xc;Yc)"] - t["I(V;Yhats|Ys)"]
    return np.minimum(line1, line2), np.where(line1 <= line2, 0, 1)


def outer_sk_batch(t: dict):
    raw = t["I(U;Yc)"] - t["I(U;Zc)"] + t["I(V;Ys|T)"] - t["I(V;Zs|T)"]
    slack = t["I(Xc;Yc)"] - t["I(V;Yhats|Ys)"]
    return raw, slack >= -FEAS_TOL, slack


def _outer_terms(ps, f: FactorizationOuter) -> dict:
    f.check_channel(ps)
    return outer_terms(*outer_tables(ps, *(a[None] for a in f.arrays())))


def outer_secrecy_parallel(ps: ParallelSourcesChannel, f: FactorizationOuter) -> RateValue:
    """Secrecy outer bound of the parallel-sources channel at one factorization."""
    terms = _outer_terms(ps, f)
    raw, bind = outer_secrecy_batch(terms)
    return _rate(raw[0], ("outer_secrecy.line1", "outer_secrecy.line2")[int(bind[0])],
                 _terms_dict(terms))


def outer_sk_parallel(ps: ParallelSourcesChannel, f: FactorizationOuter) -> RateValue:
    """Secret-key outer bound; infeasible when I(V;Yhats|Ys) > I(Xc;Yc)."""
    terms = _outer_terms(ps, f)
    raw, ok, _ = outer_sk_batch(terms)
    return _rate(raw[0], "outer_sk", _terms_dict(terms), feasible=bool(ok[0]))


# ---------------------------------------------------------------------------
# closed-form special cases of the parallel-sources channel

SPECIAL_CASES = ("P1", "P2", "P3", "P4", "P5", "P6")
# which factors each case searches over: "uxc" = p(u, xc), "xc" = p(xc) with U = Xc
CASE_FAMILY = {"P1": "xc+source", "P2": "uxc", "P3": "uxc", "P4": "xc+source", "P5": "uxc", "P6": "xc"}


def special_case_batch(case: str, t: dict):
    """Raw value, feasibility and slack of a special case's objective."""
    ones = np.ones_like(t["I(U;Yc)"], dtype=bool)
    zero = np.zeros_like(t["I(U;Yc)"])
    if case == "P1":
        slack = t["I(Xc;Yc)"] - t["I(V;Yhats|Ys)"]
        return t["I(V;Ys|T)"] - t["I(V;Zs|T)"], slack >= -FEAS_TOL, slack
    if case in ("P2", "P5"):
        return t["I(U;Yc)"] - t["I(U;Zc)"], ones, zero
    if case == "P3":
        return t["H(Ys|Zs)"] + _pos(t["I(U;Yc)"] - t["I(U;Zc)"]), ones, zero
    if case == "P4":
        raw = np.minimum(t["I(V;Ys|T)"] - t["I(V;Zs|T)"], t["I(Xc;Yc)"] - t["I(V;Yhats|Ys)"])
        return raw, ones, zero
    if case == "P6":
        raw = np.minimum(t["I(Xc;Yc)"], t["I(Xc;Yc)"] - t["I(Xc;Zc)"] + t["H(Ys|Zs)"])
        return raw, ones, zero
    raise ValueError(f"unknown special case {case!r}")


def special_case_value(case: str, ps: ParallelSourcesChannel, f: FactorizationOuter) -> RateValue:
    """Closed-form objective of a special case at one factorization.

    Cases over p(xc) read the input distribution from ``f.uxc`` marginal;
    cases without a source description ignore ``f``'s V and T factors.
    """
    if case not in SPECIAL_CASES:
        raise ValueError(f"unknown special case {case!r}; choose from {SPECIAL_CASES}")
    terms = _outer_terms(ps, f)
    raw, ok, _ = special_case_batch(case, terms)
    return _rate(raw[0], f"special_case.{case}", _terms_dict(terms), feasible=bool(ok[0]))


def check_special_case_hypothesis(case: str, ps: ParallelSourcesChannel, probes: int = 512,
                                  seed: int = 0) -> str:
    """Verify the channel-class hypothesis of a special case.

    Returns a short description of how it was confirmed.  Raises
    :class:`HypothesisViolated` (with a witness when available) or
    :class:`HypothesisUnverified` when the probe is inconclusive.
    """
    if case not in SPECIAL_CASES:
        raise ValueError(f"unknown special case {case!r}")
    notes = []
    if case in ("P3", "P6"):
        if not ps.same_side_information():
            raise HypothesisViolated(f"{case} needs Yhats = Ys")
        notes.append("Yhats = Ys")
    checks = []
    if case in ("P1", "P4"):
        checks.append(("Eve's channel less noisy", ps.main_marginal("Yc"), ps.main_marginal("Zc"),
                       EVE_OVER_BOB, None))
    if case in ("P2", "P5"):
        checks.append(("Eve's side information less noisy", ps.source_kernel("Ys"),
                       ps.source_kernel("Zs"), EVE_OVER_BOB, ps.yhats_pmf()))
    if case == "P6":
        checks.append(("Bob's channel less noisy", ps.main_marginal("Yc"), ps.main_marginal("Zc"),
                       BOB_OVER_EVE, None))
    for what, ky, kz, direction, center in checks:
        v = less_noisy_verdict(ky, kz, direction, probes=probes, seed=seed, input_pmf=center)
        if v.verdict == "no":
            raise HypothesisViolated(f"{case}: {what} is false", witness=v.witness)
        if v.verdict == "unknown":
            raise HypothesisUnverified(f"{case}: could not confirm that {what}")
        notes.append(f"{what} ({v.reason})")
    return "; ".join(notes)


def special_case_capacity(case: str, ps: ParallelSourcesChannel, search=None,
                          assume_hypothesis: bool = False, probes: int = 512):
    """Maximize a special case's closed form over its reduced family.

    The case hypothesis is checked first unless ``assume_hypothesis`` is set.
    """
    from .optimize import SearchConfig, maximize

    search = search or SearchConfig()
    note = "assumed by caller" if assume_hypothesis else check_special_case_hypothesis(
        case, ps, probes=probes, seed=search.seed)
    report = maximize(f"special_case:{case}", ps, search)
    report.diagnostics["hypothesis"] = note
    return report


# ---------------------------------------------------------------------------
# perfect output feedback


def thm5_batch(et: EntropyTable):
    i_uy = et.I("U", "Y")
    i_uz = et.I("U", "Z")
    h_y_uz = et.H("UYZ") - et.H("UZ")
    line1 = i_uy
    line2 = _pos(i_uy - i_uz) + h_y_uz
    terms = {"I(U;Y)": i_uy, "I(U;Z)": i_uz, "H(Y|UZ)": h_y_uz}
    return np.minimum(line1, line2), np.where(line1 <= line2, 0, 1), terms


def perfect_feedback_joint_batch(ch: WtgfChannel, ux) -> np.ndarray:
    """Stacked joints over (U, X, Y, Z) for a channel with Yhat = Y."""
    yz = ch.table.sum(axis=2)
    return ux[:, :, :, None, None] * yz[None, None]


def perfect_feedback_rate(ch: WtgfChannel, ux) -> RateValue:
    """Rate achieved with V = Y and T = Q degenerate when Yhat = Y.

    ``ux`` is the joint pmf of (U, X), as a :class:`JointPmf` or an array.
    """
    if not has_perfect_feedback(ch):
        raise ModelError("perfect_feedback_rate needs a channel whose feedback equals Y")
    ux = ux.mass if isinstance(ux, JointPmf) else np.asarray(ux, dtype=float)
    if ux.ndim != 2 or ux.shape[1] != ch.x.size:
        raise ValueError("ux must be a |U| x |X| joint pmf")
    JointPmf([("U", Alphabet.of_size(ux.shape[0])), ("X", ch.x)], ux)
    et = EntropyTable(perfect_feedback_joint_batch(ch, ux[None]), ("U", "X", "Y", "Z"))
    raw, bind, terms = thm5_batch(et)
    return _rate(raw[0], ("thm5.link", "thm5.secrecy")[int(bind[0])], _terms_dict(terms))


# ---------------------------------------------------------------------------
# causal state information at the encoder


@dataclass(frozen=True)
class StateFactorization:
    """Factors for the causal-state rate.

    Branch 1 uses ``uprime`` (a deterministic map, integer array indexed by
    (u, s)) and ``x_given`` indexed by (u', s, x).  Branch 2 leaves ``uprime``
    as None and ``x_given`` is indexed by (u, s, x).
    """

    pu: np.ndarray
    x_given: np.ndarray
    uprime: Optional[np.ndarray] = None

    @property
    def branch(self) -> int:
        return 1 if self.uprime is not None else 2


def check_uprime(uprime, nu: int, ns: int) -> np.ndarray:
    a = np.asarray(uprime)
    if a.shape != (nu, ns) or not np.issubdtype(a.dtype, np.integer):
        raise ValueError("uprime must be a deterministic map given as an integer array (|U|, |S|)")
    if a.min() < 0:
        raise ValueError("uprime values must be nonnegative indices")
    return a


def state_joint_batch(ch: StateChannel, pu, x_given, uprime=None) -> np.ndarray:
    """Stacked joints over (U, S, X, Y, Z)."""
    ps = ch.state_pmf.mass
    if uprime is not None:
        ns = ps.size
        # p(x | u, s) = p(x | u'(u, s), s)
        x_us = x_given[:, uprime, np.arange(ns)[None, :], :]
    else:
        x_us = x_given
    a = pu[:, :, None, None] * ps[None, None, :, None] * x_us  # b u s x
    return a[..., None, None] * np.transpose(ch.kernel.table, (1, 0, 2, 3))[None, None]


def thm6_batch(et: EntropyTable, branch: int):
    if branch == 1:
        i_u_ys = et.I("U", "YS")
        i_u_zs = et.I("U", "ZS")
        h_s_z = et.H("SZ") - et.H("Z")
        line1 = i_u_ys - i_u_zs + h_s_z
        line2 = i_u_ys
        terms = {"I(U;YS)": i_u_ys, "I(U;ZS)": i_u_zs, "H(S|Z)": h_s_z}
    else:
        h_s_zu = et.H("SZU") - et.H("ZU")
        i_u_y_s = et.I("U", "Y", "S")
        line1, line2 = h_s_zu, i_u_y_s
        terms = {"H(S|ZU)": h_s_zu, "I(U;Y|S)": i_u_y_s}
    return np.minimum(line1, line2), np.where(line1 <= line2, 0, 1), terms


def causal_state_rate(ch: StateChannel, f: StateFactorization) -> RateValue:
    """Rate of one branch of the causal-state construction (V = S)."""
    pu = np.asarray(f.pu, dtype=float)
    JointPmf([("U", Alphabet.of_size(pu.size))], pu)
    ns = ch.s.size
    uprime = None
    if f.uprime is not None:
        uprime = check_uprime(f.uprime, pu.size, ns)
        n_in = f.x_given.shape[0]
        if uprime.max() >= n_in:
            raise ValueError("uprime maps outside the U' alphabet of x_given")
    Kernel([("A", Alphabet.of_size(f.x_given.shape[0])), ("S", ch.s)], [("X", ch.x)], f.x_given)
    mass = state_joint_batch(ch, pu[None], np.asarray(f.x_given, dtype=float)[None], uprime)
    et = EntropyTable(mass, ("U", "S", "X", "Y", "Z"))
    raw, bind, terms = thm6_batch(et, f.branch)
    return _rate(raw[0], (f"thm6.branch{f.branch}.line1", f"thm6.branch{f.branch}.line2")[int(bind[0])],
                 _terms_dict(terms))


# ---------------------------------------------------------------------------
# erasure wiretap channel with public state feedback


def erasure_rates(p: ErasureParams) -> dict:
    """Best KG rate and the secrecy capacity of the erasure model, in bits."""
    d, de = p.delta, p.delta_e
    if d >= 1.0 or de <= 0.0:
        return {"inner_kg": 0.0, "capacity": 0.0}
    inner = (1 - d) * de * max((1 - d) / (1 - d * de), 1 / (1 + de))
    capacity = (1 - d) * de * (1 - d * de) / (1 - d * de * de)
    return {"inner_kg": inner, "capacity": capacity}


def erasure_mixing_weight(p: ErasureParams, branch: str = "kg1") -> float:
    """Optimal P(U != r) for :func:`erasure_factorization` on each branch."""
    d, de = p.delta, p.delta_e
    if branch == "kg1":
        return (1 - d) * de / (1 - d * de) if d * de < 1 else 0.0
    if branch == "kg2":
        return de / (1 + de)
    raise ValueError("branch must be 'kg1' or 'kg2'")


def erasure_factorization(ch: WtgfChannel, weight: float) -> FactorizationKG:
    """Auxiliaries for the erasure model: T = Q degenerate, V = X when Y != e.

    U takes values {0, 1, r}: with probability ``weight`` it is a uniform bit
    sent uncoded (X = U); otherwise U = r and X is a fresh uniform bit that only
    feeds the key through V.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    u = Alphabet((0, 1, "r"))
    v = Alphabet((0, 1, "-"))
    qu = np.array([[weight / 2, weight / 2, 1 - weight]])
    xu = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    vt = np.zeros((3, 2, 2, 3))
    for ui in range(3):
        for xi in range(2):
            vt[ui, xi, 0, xi] = 1.0  # Yhat = 0 means Y was not erased
            vt[ui, xi, 1, 2] = 1.0
    return FactorizationKG.from_arrays(ch, qu, xu, vt, np.ones((3, 1)), u=u, v=v)
