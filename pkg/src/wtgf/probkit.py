"""Finite-alphabet probability tensors and information measures (in bits).

A :class:`JointPmf` is a normalized tensor whose axes follow the declaration
order of its variables; cell ``mass[i0, i1, ...]`` is the probability of the
symbol tuple ``(alphabet0[i0], alphabet1[i1], ...)``.  This row-major layout is
also the on-disk layout of channel files.

A :class:`Kernel` is a conditional pmf with axes ``inputs + outputs``.

:class:`EntropyTable` is the numeric engine underneath the public functions.
It works on a stack of joints (leading batch axis) so the optimizer can score
many candidate factorizations per numpy call.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import xlogy

DEFAULT_TOL = 1e-9
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct symbol labels."""

    symbols: tuple

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if not symbols:
            raise ValueError("an alphabet needs at least one symbol")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"alphabet labels must be unique: {symbols!r}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def of_size(cls, k: int) -> "Alphabet":
        return cls(tuple(range(k)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        return self.symbols.index(symbol)

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


Variable = tuple  # (name, Alphabet)


def _as_variables(variables) -> tuple:
    out = []
    for name, alph in variables:
        if not isinstance(alph, Alphabet):
            alph = Alphabet(tuple(alph))
        out.append((str(name), alph))
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise ValueError(f"variable names must be unique: {names}")
    return tuple(out)


def _normalize(mass: np.ndarray, tol: float, what: str) -> np.ndarray:
    if np.any(~np.isfinite(mass)):
        raise ValueError(f"{what}: non-finite entries")
    if np.any(mass < 0):
        raise ValueError(f"{what}: negative entries")
    total = mass.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"{what}: mass sums to {total!r}, not 1 (tol {tol})")
    return mass / total


class JointPmf:
    """Immutable joint pmf over named finite alphabets."""

    __slots__ = ("variables", "mass", "tol")

    def __init__(self, variables: Iterable, mass, tol: float = DEFAULT_TOL):
        variables = _as_variables(variables)
        mass = np.array(mass, dtype=float)
        shape = tuple(a.size for _, a in variables)
        if mass.size != int(np.prod(shape, dtype=int)):
            raise ValueError(f"mass has {mass.size} cells, alphabets need shape {shape}")
        mass = _normalize(mass.reshape(shape), tol, "JointPmf")
        mass.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "tol", tol)

    def __setattr__(self, key, value):
        raise AttributeError("JointPmf is immutable")

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.variables)

    @property
    def shape(self) -> tuple:
        return self.mass.shape

    def alphabet(self, name: str) -> Alphabet:
        for n, a in self.variables:
            if n == name:
                return a
        raise KeyError(f"unknown variable {name!r}; have {self.names}")

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {self.names}") from None

    def prob(self, **assignment) -> float:
        """Probability of a full or partial symbol assignment."""
        p = marginalize(self, list(assignment)) if set(assignment) != set(self.names) else self
        idx = tuple(p.alphabet(n).index(assignment[n]) for n in p.names)
        return float(p.mass[idx])

    def reorder(self, names: Sequence[str]) -> "JointPmf":
        axes = [self.axis(n) for n in names]
        if sorted(axes) != list(range(len(self.names))):
            raise ValueError("reorder needs a permutation of all variable names")
        return JointPmf([self.variables[a] for a in axes], np.transpose(self.mass, axes), self.tol)

    def __repr__(self):
        dims = ", ".join(f"{n}:{a.size}" for n, a in self.variables)
        return f"JointPmf({dims})"

    @classmethod
    def uniform(cls, variables) -> "JointPmf":
        variables = _as_variables(variables)
        shape = tuple(a.size for _, a in variables)
        return cls(variables, np.full(shape, 1.0 / np.prod(shape)))

    @classmethod
    def point(cls, variables, symbols: Sequence) -> "JointPmf":
        variables = _as_variables(variables)
        mass = np.zeros(tuple(a.size for _, a in variables))
        mass[tuple(a.index(s) for (_, a), s in zip(variables, symbols))] = 1.0
        return cls(variables, mass)


class Kernel:
    """Conditional pmf p(outputs | inputs); table axes are inputs then outputs."""

    __slots__ = ("inputs", "outputs", "table", "tol")

    def __init__(self, inputs: Iterable, outputs: Iterable, table, tol: float = DEFAULT_TOL):
        inputs = _as_variables(inputs)
        outputs = _as_variables(outputs)
        _as_variables(inputs + outputs)  # name clash check
        in_shape = tuple(a.size for _, a in inputs)
        out_shape = tuple(a.size for _, a in outputs)
        table = np.array(table, dtype=float)
        if table.size != int(np.prod(in_shape + out_shape, dtype=int)):
            raise ValueError(
                f"kernel table has {table.size} cells, expected shape {in_shape + out_shape}"
            )
        rows = table.reshape(int(np.prod(in_shape, dtype=int)), -1)
        if np.any(~np.isfinite(rows)) or np.any(rows < 0):
            raise ValueError("kernel entries must be finite and nonnegative")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            r = int(bad[0])
            raise ValueError(f"kernel row {r} sums to {sums[r]!r}, not 1 (tol {tol})")
        rows = rows / sums[:, None]
        table = rows.reshape(in_shape + out_shape)
        table.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "tol", tol)

    def __setattr__(self, key, value):
        raise AttributeError("Kernel is immutable")

    @property
    def input_names(self) -> tuple:
        return tuple(n for n, _ in self.inputs)

    @property
    def output_names(self) -> tuple:
        return tuple(n for n, _ in self.outputs)

    def matrix(self) -> np.ndarray:
        """Rows indexed by flattened inputs, columns by flattened outputs."""
        n_in = int(np.prod([a.size for _, a in self.inputs], dtype=int))
        return self.table.reshape(n_in, -1)

    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.matrix().max(axis=1), 1.0)))

    def __repr__(self):
        return f"Kernel({self.input_names} -> {self.output_names})"

    @classmethod
    def identity(cls, name_in: str, name_out: str, alphabet: Alphabet) -> "Kernel":
        return cls([(name_in, alphabet)], [(name_out, alphabet)], np.eye(alphabet.size))

    @classmethod
    def constant(cls, inputs, outputs, pmf) -> "Kernel":
        inputs = _as_variables(inputs)
        outputs = _as_variables(outputs)
        in_shape = tuple(a.size for _, a in inputs)
        pmf = np.asarray(pmf, dtype=float).reshape(tuple(a.size for _, a in outputs))
        return cls(inputs, outputs, np.broadcast_to(pmf, in_shape + pmf.shape).copy())

    @classmethod
    def from_function(cls, inputs, outputs, fn) -> "Kernel":
        """Deterministic kernel from a map of input symbols to output symbols."""
        inputs = _as_variables(inputs)
        outputs = _as_variables(outputs)
        shape = tuple(a.size for _, a in inputs) + tuple(a.size for _, a in outputs)
        table = np.zeros(shape)
        for idx in np.ndindex(*shape[: len(inputs)]):
            syms = [a.symbols[i] for (_, a), i in zip(inputs, idx)]
            out = fn(*syms)
            if len(outputs) == 1:
                out = (out,)
            table[idx + tuple(a.index(o) for (_, a), o in zip(outputs, out))] = 1.0
        return cls(inputs, outputs, table)


def binary_entropy(p: float) -> float:
    """h(p) in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-(p * math.log2(p) + (1 - p) * math.log2(1 - p)))


def entropy_bits(mass: np.ndarray, axis=None) -> np.ndarray:
    """-sum p log2 p over ``axis`` with 0 log 0 = 0."""
    return -xlogy(mass, mass).sum(axis=axis) / _LN2


class EntropyTable:
    """Marginal entropies of a stack of joints, cached by variable subset.

    ``mass`` has shape ``(batch, *alphabet_sizes)`` and ``names`` labels the
    non-batch axes.  Each marginal is reduced from the smallest cached superset,
    so asking for many small groups touches the full tensor only once or twice.
    """

    def __init__(self, mass: np.ndarray, names: Sequence[str]):
        self.names = tuple(names)
        if mass.ndim != len(self.names) + 1:
            raise ValueError("mass must carry one leading batch axis")
        self._marg = {frozenset(self.names): (self.names, mass)}
        self._h = {}

    def _key(self, group) -> frozenset:
        # a string is one variable name, or a run of one-letter names ("UYZ")
        if isinstance(group, str):
            if group in self.names or not group:
                return frozenset((group,) if group else ())
            return frozenset(group)
        return frozenset(group)

    def marginal(self, group: Iterable[str]) -> tuple:
        key = self._key(group)
        hit = self._marg.get(key)
        if hit is not None:
            return hit
        unknown = key - set(self.names)
        if unknown:
            raise KeyError(f"unknown variables {sorted(unknown)}; have {self.names}")
        best = None
        for k, (nm, arr) in self._marg.items():
            if key <= k and (best is None or arr[0].size < best[1][1][0].size):
                best = (k, (nm, arr))
        src_names, src = best[1]
        drop = tuple(1 + i for i, n in enumerate(src_names) if n not in key)
        arr = src.sum(axis=drop) if drop else src
        kept = tuple(n for n in src_names if n in key)
        self._marg[key] = (kept, arr)
        return kept, arr

    def H(self, group: Iterable[str]) -> np.ndarray:
        key = self._key(group)
        if not key:
            batch = next(iter(self._marg.values()))[1].shape[0]
            return np.zeros(batch)
        h = self._h.get(key)
        if h is None:
            _, arr = self.marginal(key)
            h = entropy_bits(arr.reshape(arr.shape[0], -1), axis=1)
            self._h[key] = h
        return h

    def I(self, a: Iterable[str], b: Iterable[str], c: Iterable[str] = (), raw: bool = False):
        """I(A;B|C) per batch element, clamped at zero unless ``raw``."""
        a, b, c = self._key(a), self._key(b), self._key(c)
        val = self.H(a | c) + self.H(b | c) - self.H(a | b | c) - self.H(c)
        return val if raw else np.maximum(val, 0.0)


def _group(p: JointPmf, group) -> tuple:
    if isinstance(group, str):
        group = (group,)
    group = tuple(group)
    for n in group:
        p.axis(n)
    return group


def entropy(p: JointPmf, group) -> float:
    """Entropy in bits of the marginal of ``p`` on ``group``."""
    group = _group(p, group)
    return float(EntropyTable(p.mass[None], p.names).H(group)[0])


def mutual_information(p: JointPmf, a, b, c=None, raw: bool = False) -> float:
    """I(A;B|C) in bits; C may be omitted.

    The value is clamped at zero.  ``raw=True`` returns the unclamped
    difference of entropies, useful for checking numeric consistency.
    """
    a = _group(p, a)
    b = _group(p, b)
    c = _group(p, c) if c is not None else ()
    sa, sb, sc = set(a), set(b), set(c)
    if (sa & sb) or (sa & sc) or (sb & sc):
        raise ValueError(f"groups must be pairwise disjoint: {a}, {b}, {c}")
    if not sa or not sb:
        raise ValueError("mutual information needs two nonempty groups")
    return float(EntropyTable(p.mass[None], p.names).I(a, b, c, raw=raw)[0])


def marginalize(p: JointPmf, keep) -> JointPmf:
    """Sum out every variable not in ``keep``; output keeps declaration order."""
    keep = _group(p, keep)
    if not keep:
        raise ValueError("marginalize needs at least one variable to keep")
    keep_set = set(keep)
    drop = tuple(i for i, n in enumerate(p.names) if n not in keep_set)
    mass = p.mass.sum(axis=drop) if drop else p.mass
    return JointPmf([v for v in p.variables if v[0] in keep_set], mass, p.tol)


def _letters(k: int) -> str:
    pool = string.ascii_letters
    if k > len(pool):
        raise ValueError("too many axes for einsum")
    return pool[:k]


def compose(p: JointPmf, k: Kernel) -> JointPmf:
    """Joint of ``p`` and ``k``: p(a) k(b | a restricted to k's inputs)."""
    for name, alph in k.inputs:
        if p.alphabet(name) != alph:
            raise ValueError(f"alphabet mismatch for {name!r}")
    clash = set(k.output_names) & set(p.names)
    if clash:
        raise ValueError(f"kernel outputs collide with existing variables: {sorted(clash)}")
    letters = _letters(len(p.names) + len(k.outputs))
    p_sub = letters[: len(p.names)]
    out_sub = letters[len(p.names):]
    k_sub = "".join(p_sub[p.axis(n)] for n in k.input_names) + out_sub
    mass = np.einsum(f"{p_sub},{k_sub}->{p_sub}{out_sub}", p.mass, k.table)
    return JointPmf(p.variables + k.outputs, mass, p.tol)


def conditional(p: JointPmf, given, target) -> Kernel:
    """p(target | given) as a Kernel; rows with zero mass become uniform."""
    given = _group(p, given)
    target = _group(p, target)
    m = marginalize(p, given + target).reorder(given + target)
    g_shape = m.shape[: len(given)]
    t_shape = m.shape[len(given):]
    rows = m.mass.reshape(int(np.prod(g_shape, dtype=int)), -1)
    tot = rows.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        rows = np.where(tot > 0, rows / np.where(tot > 0, tot, 1.0), 1.0 / rows.shape[1])
    return Kernel(m.variables[: len(given)], m.variables[len(given):], rows.reshape(g_shape + t_shape))


def product(p: JointPmf, q: JointPmf) -> JointPmf:
    """Joint of two independent pmfs over disjoint variables."""
    return compose(p, Kernel.constant(p.variables, q.variables, q.mass))


def condition_residual(p: JointPmf, a, b, c=()) -> float:
    """Conditional-independence residual max |p(abc)p(c) - p(ac)p(bc)|."""
    a, b = _group(p, a), _group(p, b)
    c = _group(p, c) if c else ()
    order = a + b + c
    m = marginalize(p, order).reorder(order).mass
    na, nb = len(a), len(b)
    pac = m.sum(axis=tuple(range(na, na + nb)), keepdims=True)
    pbc = m.sum(axis=tuple(range(na)), keepdims=True)
    pc = pac.sum(axis=tuple(range(na)), keepdims=True)
    return float(np.max(np.abs(m * pc - pac * pbc)))
