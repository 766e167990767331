"""Channel models and channel-class tests.

The generalized-feedback wiretap channel is a single kernel
p(y, yhat, z | x).  The parallel-sources model is a wiretap channel
p(yc, zc | xc) plus an independent i.i.d. source triple (Ys, Yhats, Zs);
:func:`embed_parallel` rewrites it as a generalized-feedback channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import ModelError
from .probkit import Alphabet, JointPmf, Kernel, mutual_information

DEGRADED_TOL = 1e-7
PROBE_COUNT = 512
VIOLATION_THRESHOLD = 1e-9

BOB_OVER_EVE = "y_over_z"
EVE_OVER_BOB = "z_over_y"
DIRECTIONS = (BOB_OVER_EVE, EVE_OVER_BOB)


def _alph(a) -> Alphabet:
    return a if isinstance(a, Alphabet) else Alphabet(tuple(a))


@dataclass(frozen=True)
class WtgfChannel:
    """Wiretap channel with generalized feedback, p(y yhat z | x)."""

    kernel: Kernel

    def __post_init__(self):
        if self.kernel.input_names != ("X",) or self.kernel.output_names != ("Y", "Yhat", "Z"):
            raise ModelError("WtgfChannel kernel must map X -> (Y, Yhat, Z)")

    @classmethod
    def from_table(cls, table, x, y, yhat, z) -> "WtgfChannel":
        x, y, yhat, z = map(_alph, (x, y, yhat, z))
        return cls(Kernel([("X", x)], [("Y", y), ("Yhat", yhat), ("Z", z)], table))

    @property
    def x(self) -> Alphabet:
        return self.kernel.inputs[0][1]

    @property
    def y(self) -> Alphabet:
        return self.kernel.outputs[0][1]

    @property
    def yhat(self) -> Alphabet:
        return self.kernel.outputs[1][1]

    @property
    def z(self) -> Alphabet:
        return self.kernel.outputs[2][1]

    @property
    def table(self) -> np.ndarray:
        return self.kernel.table

    def marginal_kernel(self, *outputs: str) -> Kernel:
        """Kernel from X to a subset of (Y, Yhat, Z)."""
        names = self.kernel.output_names
        drop = tuple(1 + i for i, n in enumerate(names) if n not in outputs)
        kept = [v for v in self.kernel.outputs if v[0] in outputs]
        return Kernel(self.kernel.inputs, kept, self.table.sum(axis=drop))

    def with_input(self, px) -> JointPmf:
        from .probkit import compose

        return compose(JointPmf(self.kernel.inputs, px), self.kernel)

    def structurally_equal(self, other: "WtgfChannel", atol: float = 0.0) -> bool:
        return (
            self.kernel.inputs == other.kernel.inputs
            and self.kernel.outputs == other.kernel.outputs
            and np.allclose(self.table, other.table, rtol=0.0, atol=atol)
        )


@dataclass(frozen=True)
class ParallelSourcesChannel:
    """Wiretap channel p(yc zc | xc) with independent sources p(ys yhats zs)."""

    main_kernel: Kernel
    source_joint: JointPmf

    def __post_init__(self):
        if self.main_kernel.input_names != ("Xc",) or self.main_kernel.output_names != ("Yc", "Zc"):
            raise ModelError("main kernel must map Xc -> (Yc, Zc)")
        if self.source_joint.names != ("Ys", "Yhats", "Zs"):
            raise ModelError("source joint must be over (Ys, Yhats, Zs)")

    @classmethod
    def from_tables(cls, main, source, xc, yc, zc, ys, yhats, zs) -> "ParallelSourcesChannel":
        xc, yc, zc, ys, yhats, zs = map(_alph, (xc, yc, zc, ys, yhats, zs))
        return cls(
            Kernel([("Xc", xc)], [("Yc", yc), ("Zc", zc)], main),
            JointPmf([("Ys", ys), ("Yhats", yhats), ("Zs", zs)], source),
        )

    @property
    def xc(self) -> Alphabet:
        return self.main_kernel.inputs[0][1]

    @property
    def yc(self) -> Alphabet:
        return self.main_kernel.outputs[0][1]

    @property
    def zc(self) -> Alphabet:
        return self.main_kernel.outputs[1][1]

    @property
    def ys(self) -> Alphabet:
        return self.source_joint.variables[0][1]

    @property
    def yhats(self) -> Alphabet:
        return self.source_joint.variables[1][1]

    @property
    def zs(self) -> Alphabet:
        return self.source_joint.variables[2][1]

    def main_marginal(self, output: str) -> Kernel:
        axis = {"Yc": 2, "Zc": 1}[output]
        kept = [v for v in self.main_kernel.outputs if v[0] == output]
        return Kernel(self.main_kernel.inputs, kept, self.main_kernel.table.sum(axis=axis))

    def source_kernel(self, output: str) -> Kernel:
        """p(ys | yhats) or p(zs | yhats); unsupported rows are uniform."""
        from .probkit import conditional

        return conditional(self.source_joint, ["Yhats"], [output])

    def yhats_pmf(self) -> np.ndarray:
        return self.source_joint.mass.sum(axis=(0, 2))

    def same_side_information(self) -> bool:
        """True when Yhats = Ys almost surely (labels compared)."""
        if self.ys != self.yhats:
            return False
        m = self.source_joint.mass
        off = sum(m[i, j].sum() for i in range(m.shape[0]) for j in range(m.shape[1]) if i != j)
        return bool(off <= 1e-12)


@dataclass(frozen=True)
class StateChannel:
    """State-dependent wiretap channel p(y z | x s) with i.i.d. state p(s)."""

    kernel: Kernel
    state_pmf: JointPmf

    def __post_init__(self):
        if self.kernel.input_names != ("X", "S") or self.kernel.output_names != ("Y", "Z"):
            raise ModelError("state channel kernel must map (X, S) -> (Y, Z)")
        if self.state_pmf.names != ("S",) or self.state_pmf.variables[0][1] != self.kernel.inputs[1][1]:
            raise ModelError("state pmf must be over the kernel's S alphabet")

    @classmethod
    def from_tables(cls, table, ps, x, s, y, z) -> "StateChannel":
        x, s, y, z = map(_alph, (x, s, y, z))
        return cls(
            Kernel([("X", x), ("S", s)], [("Y", y), ("Z", z)], table),
            JointPmf([("S", s)], ps),
        )

    @property
    def x(self) -> Alphabet:
        return self.kernel.inputs[0][1]

    @property
    def s(self) -> Alphabet:
        return self.kernel.inputs[1][1]


@dataclass(frozen=True)
class ErasureParams:
    delta: float
    delta_e: float

    def __post_init__(self):
        for name in ("delta", "delta_e"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def embed_parallel(ps: ParallelSourcesChannel) -> WtgfChannel:
    """Generalized-feedback form: Yhat = Yhats, Y = (Ys, Yc), Z = (Zs, Zc)."""
    main = ps.main_kernel.table  # (xc, yc, zc)
    src = ps.source_joint.mass  # (ys, yhats, zs)
    full = np.einsum("abc,def->adbefc", main, src)  # xc ys yc yhats zs zc
    nx, nys, nyc, nyh, nzs, nzc = full.shape
    table = full.reshape(nx, nys * nyc, nyh, nzs * nzc)
    y = Alphabet(tuple((s, c) for s in ps.ys for c in ps.yc))
    z = Alphabet(tuple((s, c) for s in ps.zs for c in ps.zc))
    return WtgfChannel.from_table(table, ps.xc, y, ps.yhats, z)


def make_erasure_wtgf(p: ErasureParams) -> WtgfChannel:
    """Erasure wiretap channel with public state feedback from Bob.

    Y and Ze are independent erasures of X (probabilities delta and delta_e);
    F = 1{Y = e} is seen by Alice (as Yhat) and by Eve (inside Z = (Ze, F)).
    """
    d, de = p.delta, p.delta_e
    x = Alphabet((0, 1))
    y = Alphabet((0, 1, "e"))
    yhat = Alphabet((0, 1))
    z = Alphabet(tuple((ze, f) for ze in (0, 1, "e") for f in (0, 1)))
    table = np.zeros((2, 3, 2, 6))
    for xi in (0, 1):
        for y_sym, py, f in ((xi, 1 - d, 0), ("e", d, 1)):
            for ze, pz in ((xi, 1 - de), ("e", de)):
                table[xi, y.index(y_sym), f, z.index((ze, f))] += py * pz
    return WtgfChannel.from_table(table, x, y, yhat, z)


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def bec(e: float) -> np.ndarray:
    return np.array([[1 - e, 0.0, e], [0.0, 1 - e, e]])


def make_bsc_wiretap(p_bob: float, p_eve: float, degraded: bool = True) -> WtgfChannel:
    """Binary symmetric wiretap channel with a degenerate feedback signal.

    With ``degraded`` and ``p_eve >= p_bob`` Eve's output is Bob's output passed
    through a further BSC (physically degraded); otherwise the two outputs are
    conditionally independent given X.
    """
    if degraded and p_eve >= p_bob and p_bob < 0.5:
        extra = (p_eve - p_bob) / (1 - 2 * p_bob)
        yz = bsc(p_bob)[:, :, None] * bsc(extra)[None, :, :]
    else:
        yz = bsc(p_bob)[:, :, None] * bsc(p_eve)[:, None, :]
    table = yz[:, :, None, :]
    return WtgfChannel.from_table(table, (0, 1), (0, 1), ("-",), (0, 1))


def make_wiretap(yz_table, x, y, z) -> WtgfChannel:
    """Plain wiretap channel p(y z | x) with a degenerate feedback signal."""
    yz = np.asarray(yz_table, dtype=float)
    return WtgfChannel.from_table(yz[:, :, None, :], x, y, ("-",), z)


def make_perfect_feedback(yz_table, x, y, z) -> WtgfChannel:
    """Wiretap channel whose feedback is Bob's output itself (Yhat = Y)."""
    yz = np.asarray(yz_table, dtype=float)
    ny = yz.shape[1]
    table = yz[:, :, None, :] * np.eye(ny)[None, :, :, None]
    return WtgfChannel.from_table(table, x, y, y, z)


def has_perfect_feedback(ch: WtgfChannel, tol: float = 1e-12) -> bool:
    if ch.y != ch.yhat:
        return False
    off = ch.table * (1.0 - np.eye(ch.y.size))[None, :, :, None]
    return bool(off.max(initial=0.0) <= tol)


def _matrix(k) -> np.ndarray:
    return k.matrix() if isinstance(k, Kernel) else np.atleast_2d(np.asarray(k, dtype=float))


def degradation_residual(k1, k2, m) -> float:
    """Sup-norm of k1 @ m - k2."""
    return float(np.max(np.abs(_matrix(k1) @ np.asarray(m) - _matrix(k2))))


def is_degraded(k1, k2, tol: float = DEGRADED_TOL):
    """Whether k2 = k1 followed by some stochastic matrix M.

    Solves min ||k1 M - k2||_inf over row-stochastic M as a linear program.
    Returns ``(True, M)`` when the optimum is within ``tol`` and
    ``(False, None)`` otherwise.
    """
    a = _matrix(k1)
    b = _matrix(k2)
    if a.shape[0] != b.shape[0]:
        raise ValueError("kernels must share the input alphabet")
    nx, na = a.shape
    nb = b.shape[1]
    nm = na * nb
    # variables: vec(M) row-major, then the bound s
    c = np.zeros(nm + 1)
    c[-1] = 1.0
    lin = np.zeros((nx * nb, nm))
    for x in range(nx):
        for j in range(nb):
            lin[x * nb + j, j::nb] = a[x]
    target = b.reshape(-1)
    ones = np.ones((nx * nb, 1))
    a_ub = np.vstack([np.hstack([lin, -ones]), np.hstack([-lin, -ones])])
    b_ub = np.concatenate([target, -target])
    a_eq = np.zeros((na, nm + 1))
    for i in range(na):
        a_eq[i, i * nb:(i + 1) * nb] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.ones(na),
                  bounds=[(0, None)] * (nm + 1), method="highs")
    if res.status != 0:
        return False, None
    m = np.clip(res.x[:nm].reshape(na, nb), 0.0, None)
    m = m / m.sum(axis=1, keepdims=True)
    if degradation_residual(a, b, m) <= tol:
        return True, m
    return False, None


@dataclass(frozen=True)
class ConcavityWitness:
    """Two input pmfs and a mixing weight at which concavity fails."""

    p1: tuple
    p2: tuple
    weight: float
    margin: float

    def reevaluate(self, k_better, k_worse) -> float:
        """Recompute the violation margin (positive means violated)."""
        p1, p2 = np.array(self.p1), np.array(self.p2)
        mid = self.weight * p1 + (1 - self.weight) * p2
        f = lambda p: _advantage(k_better, k_worse, p)
        return self.weight * f(p1) + (1 - self.weight) * f(p2) - f(mid)


@dataclass(frozen=True)
class LessNoisyVerdict:
    """Three-valued answer to "A is less noisy than B"."""

    verdict: str  # "yes" | "no" | "unknown"
    witness: Optional[ConcavityWitness] = None
    reason: str = ""

    def __post_init__(self):
        if self.verdict not in ("yes", "no", "unknown"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "no" and self.witness is None:
            raise ValueError("a 'no' verdict needs a witness")


def _mi_x(k: Kernel, px) -> float:
    m = k.matrix()
    joint = JointPmf([("X", Alphabet.of_size(m.shape[0])), ("O", Alphabet.of_size(m.shape[1]))],
                     np.asarray(px, dtype=float)[:, None] * m)
    return mutual_information(joint, "X", "O")


def _advantage(k_better, k_worse, px) -> float:
    return _mi_x(_as_kernel(k_better), px) - _mi_x(_as_kernel(k_worse), px)


def _as_kernel(k) -> Kernel:
    if isinstance(k, Kernel):
        return k
    m = _matrix(k)
    return Kernel([("X", Alphabet.of_size(m.shape[0]))], [("O", Alphabet.of_size(m.shape[1]))], m)


def _probe_pairs(rng, nx, probes, center):
    for i in range(probes):
        if center is None:
            alpha = 1.0 if i % 2 == 0 else 0.3
            p1 = rng.dirichlet(np.full(nx, alpha))
            p2 = rng.dirichlet(np.full(nx, alpha))
        else:
            d = rng.normal(size=nx)
            d -= d.mean()
            # largest step keeping both center +/- t d in the simplex
            with np.errstate(divide="ignore"):
                lim = np.min(np.where(np.abs(d) > 0, center / np.abs(d), np.inf))
            if not np.isfinite(lim) or lim <= 0:
                continue
            t = lim * rng.uniform(0.05, 1.0)
            p1 = np.clip(center + t * d, 0, None)
            p2 = np.clip(center - t * d, 0, None)
            p1, p2 = p1 / p1.sum(), p2 / p2.sum()
        yield p1, p2


def less_noisy_verdict(k_y, k_z, direction: str = EVE_OVER_BOB, probes: int = PROBE_COUNT,
                       seed: int = 0, input_pmf=None,
                       threshold: float = VIOLATION_THRESHOLD) -> LessNoisyVerdict:
    """Decide whether one output of a wiretap pair is less noisy than the other.

    ``direction`` is ``"z_over_y"`` for "Z is less noisy than Y" (Eve better)
    or ``"y_over_z"`` for the reverse.  Degradedness of the worse output gives
    "yes".  Otherwise a seeded midpoint-concavity probe of
    f(p) = I(X; better) - I(X; worse) looks for a violation, which proves the
    property false.  With ``input_pmf`` the probe is centred on that input
    distribution, which tests the fixed-input form of the property.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    better, worse = (k_y, k_z) if direction == BOB_OVER_EVE else (k_z, k_y)
    ok, _ = is_degraded(better, worse)
    if ok:
        return LessNoisyVerdict("yes", reason="degraded")
    better_k, worse_k = _as_kernel(better), _as_kernel(worse)
    nx = better_k.matrix().shape[0]
    rng = np.random.default_rng(seed)
    center = None if input_pmf is None else np.asarray(input_pmf, dtype=float)
    f = lambda p: _advantage(better_k, worse_k, p)
    for p1, p2 in _probe_pairs(rng, nx, probes, center):
        mid = 0.5 * (p1 + p2)
        margin = 0.5 * (f(p1) + f(p2)) - f(mid)
        if margin > threshold:
            w = ConcavityWitness(tuple(map(float, p1)), tuple(map(float, p2)), 0.5, float(margin))
            return LessNoisyVerdict("no", witness=w, reason="concavity violated")
    return LessNoisyVerdict("unknown", reason="no violation found by probe")


@dataclass(frozen=True)
class ClassificationReport:
    degraded_y_to_z: bool
    degraded_z_to_y: bool
    less_noisy_verdicts: dict = field(default_factory=dict)
    witness: Optional[ConcavityWitness] = None
    degrading_map: Optional[np.ndarray] = None


def classify_pair(k_y, k_z, probes: int = PROBE_COUNT, seed: int = 0,
                  input_pmf=None) -> ClassificationReport:
    """Degradedness in both directions plus both less-noisy verdicts.

    ``degraded_y_to_z`` means X - Y - Z (Eve sees a degraded version of Bob).
    """
    dyz, m_yz = is_degraded(k_y, k_z)
    dzy, m_zy = is_degraded(k_z, k_y)
    verdicts = {d: less_noisy_verdict(k_y, k_z, d, probes, seed, input_pmf) for d in DIRECTIONS}
    witness = next((v.witness for v in verdicts.values() if v.witness is not None), None)
    return ClassificationReport(dyz, dzy, verdicts, witness, m_yz if dyz else m_zy)


def classify(ch: WtgfChannel, probes: int = PROBE_COUNT, seed: int = 0) -> ClassificationReport:
    return classify_pair(ch.marginal_kernel("Y"), ch.marginal_kernel("Z"), probes, seed)
