"""Maximization of rate expressions over factorized distribution families.

A *family* is a list of blocks, each a stack of rows that live on a
probability simplex (one row per conditioning symbol).  Two searches share
that representation:

* :func:`ascend` is a derivative-free coordinate ascent.  It visits one row at
  a time, scores a batch of mass-transfer moves on that row and keeps the best
  one when it improves, so the objective never decreases.
* :func:`grid_enumerate` scores every point of the rational grid with a given
  step, refusing when the grid exceeds a budget.

:func:`maximize` picks the family for an objective, runs the configured search
and re-evaluates the winner through :mod:`wtgf.bounds`.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import bounds as B
from .channels import ParallelSourcesChannel, StateChannel, WtgfChannel, embed_parallel, has_perfect_feedback
from .errors import BudgetExceeded, ModelError
from .probkit import EntropyTable

MODES = ("random_restart", "exhaustive_grid", "hybrid")
OBJECTIVES = ("inner_kg", "inner_kg1", "inner_kg2", "sk_inner", "outer_secrecy", "outer_sk", "thm5",
              "thm6") + tuple(f"special_case:{c}" for c in B.SPECIAL_CASES)
OUTER_OBJECTIVES = ("outer_secrecy", "outer_sk")
STEPS = (1.0, 0.5, 0.2, 0.1, 0.03, 0.01, 3e-3, 1e-3, 1e-4)
ACCEPT_TOL = 1e-14
CHUNK_CELLS = 2_000_000
MAX_STATE_MAPS = 4096


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    ``aux_cardinalities`` overrides the alphabet size of individual auxiliaries
    (keys among Q, U, V, T); unset ones default to ``min(bound, 3)``, or to the
    full bound when ``full_caps`` is set.
    """

    seed: int = 0
    restarts: int = 64
    grid_step: Fraction = Fraction(1, 8)
    max_sweeps: int = 200
    improve_tol: float = 1e-7
    aux_cardinalities: dict = field(default_factory=dict)
    mode: str = "random_restart"
    full_caps: bool = False
    u_equals_x: bool = False
    grid_budget: int = 10**7

    def __post_init__(self):
        step = Fraction(self.grid_step)
        object.__setattr__(self, "grid_step", step)
        if step <= 0 or step > 1 or (1 / step).denominator != 1:
            raise ValueError(f"grid_step must divide 1, got {step}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.restarts < 0 or self.max_sweeps < 0:
            raise ValueError("restarts and max_sweeps must be nonnegative")
        for k, v in self.aux_cardinalities.items():
            if k not in ("Q", "U", "V", "T"):
                raise ValueError(f"unknown auxiliary {k!r}")
            if int(v) < 1:
                raise ValueError(f"cap for {k} must be at least 1")

    def echo(self) -> dict:
        d = asdict(self)
        d["grid_step"] = str(self.grid_step)
        return d


@dataclass
class RateReport:
    """Outcome of a maximization; ``best_bits`` is None when nothing feasible was found."""

    objective: str
    best_bits: Optional[float]
    feasible: bool
    best_factors: object
    branch: str
    evaluations: int
    wall_time: float
    per_restart_bests: list
    label: str
    rate_value: Optional[B.RateValue] = None
    caps: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


@dataclass
class AscentResult:
    params: list
    score: float
    history: list
    evaluations: int


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class Block:
    name: str
    rows: int
    cols: int
    fixed: Optional[np.ndarray] = None

    @property
    def free(self) -> bool:
        return self.fixed is None and self.cols > 1


class Family:
    """Base class: subclasses define blocks, batch scoring and certification."""

    objective = ""
    branch = ""
    cells = 1

    def __init__(self, blocks):
        self.blocks = tuple(blocks)

    def score(self, params):
        """Search score per batch element: raw value, or a penalty below any value."""
        raw, ok, slack = self.evaluate(params)
        return np.where(ok, raw, B.INFEASIBLE_SCORE + np.minimum(slack, 0.0))

    def evaluate(self, params):
        raise NotImplementedError

    def factors(self, params):
        raise NotImplementedError

    def certify(self, factors) -> B.RateValue:
        raise NotImplementedError

    def random_params(self, rng) -> list:
        out = []
        for b in self.blocks:
            if b.fixed is not None:
                out.append(np.array(b.fixed, dtype=float))
            else:
                out.append(rng.dirichlet(np.ones(b.cols), size=b.rows))
        return out

    def chunk(self) -> int:
        return max(1, CHUNK_CELLS // max(self.cells, 1))


def _ones(rows):
    return np.ones((rows, 1))


class KGFamily(Family):
    """p(qu) p(x|u) p(v|u x yhat) p(t|v) for the KG bounds."""

    def __init__(self, ch: WtgfChannel, nq, nu, nv, nt, branch: str, u_equals_x=False):
        nx, nh = ch.x.size, ch.yhat.size
        if u_equals_x:
            nu = nx
        self.ch, self.sizes, self.branch = ch, (nq, nu, nv, nt), branch
        self.objective = {"kg1": "inner_kg", "kg2": "inner_kg", "sk": "sk_inner"}[branch]
        self.cells = nq * nu * ch.table.size * nv * nt
        super().__init__([
            Block("qu", 1, nq * nu),
            Block("x|u", nu, nx, np.eye(nx) if u_equals_x else None),
            Block("v|uxyhat", nu * nx * nh, nv, _ones(nu * nx * nh) if nv == 1 else None),
            Block("t|v", nv, nt, _ones(nv) if nt == 1 else None),
        ])

    def _arrays(self, params):
        nq, nu, nv, nt = self.sizes
        nx, nh = self.ch.x.size, self.ch.yhat.size
        n = params[0].shape[0]
        return (params[0].reshape(n, nq, nu), params[1], params[2].reshape(n, nu, nx, nh, nv), params[3])

    def evaluate(self, params):
        et = EntropyTable(B.kg_joint_batch(self.ch.table, *self._arrays(params)), B.KG_NAMES)
        t = B.kg_terms(et)
        if self.branch == "sk":
            return B.sk_inner_batch(t)
        raw, _ = (B.kg1_batch if self.branch == "kg1" else B.kg2_batch)(t)
        return raw, np.ones(raw.shape, bool), np.zeros(raw.shape)

    def factors(self, params):
        arrs = self._arrays([p[None] for p in params])
        return B.FactorizationKG.from_arrays(self.ch, *(a[0] for a in arrs))

    def certify(self, f):
        fn = {"kg1": B.rate_kg1, "kg2": B.rate_kg2, "sk": B.sk_inner_rate}[self.branch]
        return fn(self.ch, f)

    def params_from(self, f: B.FactorizationKG) -> list:
        qu, xu, vu, tv = f.arrays()
        return [qu.reshape(1, -1), xu, vu.reshape(-1, vu.shape[-1]), tv]


class OuterFamily(Family):
    """p(u xc) p(v|yhats) p(t|v) for the outer bounds and the special cases.

    ``kind`` is "secrecy", "sk" or a special-case label.  With ``u_equals_xc``
    the first block is the input pmf p(xc) and U is a copy of Xc.
    """

    def __init__(self, ps: ParallelSourcesChannel, nu, nv, nt, kind: str, u_equals_xc=False):
        nxc, nyh = ps.xc.size, ps.yhats.size
        self.ps, self.kind, self.u_equals_xc = ps, kind, u_equals_xc
        if u_equals_xc:
            nu = nxc
        self.sizes = (nu, nv, nt)
        self.objective = {"secrecy": "outer_secrecy", "sk": "outer_sk"}.get(kind, f"special_case:{kind}")
        self.branch = self.objective
        self.cells = nu * ps.main_kernel.table.size + ps.source_joint.mass.size * nv * nt
        first = Block("p(xc)", 1, nxc) if u_equals_xc else Block("uxc", 1, nu * nxc)
        super().__init__([
            first,
            Block("v|yhats", nyh, nv, _ones(nyh) if nv == 1 else None),
            Block("t|v", nv, nt, _ones(nv) if nt == 1 else None),
        ])

    def _uxc(self, first):
        n = first.shape[0]
        if self.u_equals_xc:
            k = first.shape[-1]
            return first.reshape(n, k)[:, :, None] * np.eye(k)[None]
        nu = self.sizes[0]
        return first.reshape(n, nu, -1)

    def evaluate(self, params):
        t = B.outer_terms(*B.outer_tables(self.ps, self._uxc(params[0]), params[1], params[2]))
        if self.kind == "secrecy":
            raw, _ = B.outer_secrecy_batch(t)
            return raw, np.ones(raw.shape, bool), np.zeros(raw.shape)
        if self.kind == "sk":
            return B.outer_sk_batch(t)
        return B.special_case_batch(self.kind, t)

    def factors(self, params):
        uxc = self._uxc(params[0][None])[0]
        return B.FactorizationOuter.from_arrays(self.ps, uxc, params[1], params[2])

    def certify(self, f):
        if self.kind == "secrecy":
            return B.outer_secrecy_parallel(self.ps, f)
        if self.kind == "sk":
            return B.outer_sk_parallel(self.ps, f)
        return B.special_case_value(self.kind, self.ps, f)

    def params_from(self, f: B.FactorizationOuter) -> list:
        uxc, vy, tv = f.arrays()
        first = uxc.sum(axis=0)[None] if self.u_equals_xc else uxc.reshape(1, -1)
        return [first, vy, tv]


class Thm5Family(Family):
    objective = branch = "thm5"

    def __init__(self, ch: WtgfChannel, nu, u_equals_x=False):
        self.ch, self.u_equals_x = ch, u_equals_x
        nx = ch.x.size
        self.nu = nx if u_equals_x else nu
        self.cells = self.nu * nx * ch.y.size * ch.z.size
        super().__init__([Block("p(x)", 1, nx) if u_equals_x else Block("ux", 1, self.nu * nx)])

    def _ux(self, first):
        n = first.shape[0]
        if self.u_equals_x:
            return first.reshape(n, -1)[:, :, None] * np.eye(first.shape[-1])[None]
        return first.reshape(n, self.nu, -1)

    def evaluate(self, params):
        et = EntropyTable(B.perfect_feedback_joint_batch(self.ch, self._ux(params[0])), ("U", "X", "Y", "Z"))
        raw, _, _ = B.thm5_batch(et)
        return raw, np.ones(raw.shape, bool), np.zeros(raw.shape)

    def factors(self, params):
        return self._ux(params[0][None])[0]

    def certify(self, ux):
        return B.perfect_feedback_rate(self.ch, ux)

    def params_from(self, ux) -> list:
        ux = np.asarray(ux, dtype=float)
        return [ux.sum(axis=0)[None] if self.u_equals_x else ux.reshape(1, -1)]


class Thm6Family(Family):
    """One branch of the causal-state construction; branch 1 fixes a map u'(u, s)."""

    objective = "thm6"

    def __init__(self, ch: StateChannel, nu, branch: int, uprime=None):
        self.ch, self.nu, self.branch_no, self.uprime = ch, nu, branch, uprime
        self.branch = f"thm6.branch{branch}"
        ns, nx = ch.s.size, ch.x.size
        self.cells = nu * ns * ch.kernel.table.size
        super().__init__([Block("p(u)", 1, nu), Block("x|us", nu * ns, nx)])

    def evaluate(self, params):
        n = params[0].shape[0]
        ns, nx = self.ch.s.size, self.ch.x.size
        mass = B.state_joint_batch(self.ch, params[0].reshape(n, -1), params[1].reshape(n, self.nu, ns, nx),
                                   self.uprime)
        raw, _, _ = B.thm6_batch(EntropyTable(mass, ("U", "S", "X", "Y", "Z")), self.branch_no)
        return raw, np.ones(raw.shape, bool), np.zeros(raw.shape)

    def factors(self, params):
        ns, nx = self.ch.s.size, self.ch.x.size
        return B.StateFactorization(params[0].reshape(-1), params[1].reshape(self.nu, ns, nx), self.uprime)

    def certify(self, f):
        return B.causal_state_rate(self.ch, f)


# ---------------------------------------------------------------------------
# cardinalities


def kg_bounds(ch: WtgfChannel, nq: int, nt: int) -> dict:
    nx, nh = ch.x.size, ch.yhat.size
    return {"Q": nx + 4, "U": nq * (nx + 3), "T": nx * nh + 2, "V": nt * (nx * nh + 1)}


def outer_bounds(ps: ParallelSourcesChannel, nt: int) -> dict:
    nyh = ps.yhats.size
    return {"U": ps.xc.size, "T": nyh + 1, "V": (nyh + 1) ** 2}


def _cap(name, bound, cfg: SearchConfig, default_cap: int = 3):
    want = cfg.aux_cardinalities.get(name)
    if want is None:
        if bound is None:
            return default_cap
        return bound if cfg.full_caps else min(bound, default_cap)
    want = int(want)
    if bound is not None and want > bound:
        raise ValueError(f"cap {want} for {name} exceeds its cardinality bound {bound}")
    return want


def resolve_kg_caps(ch: WtgfChannel, cfg: SearchConfig, singleton_q: bool) -> dict:
    nx, nh = ch.x.size, ch.yhat.size
    nq = 1 if singleton_q else _cap("Q", nx + 4, cfg)
    nt = _cap("T", nx * nh + 2, cfg)
    b = kg_bounds(ch, nq, nt)
    nu = nx if cfg.u_equals_x else _cap("U", b["U"], cfg)
    nv = _cap("V", b["V"], cfg)
    return {"Q": nq, "U": nu, "V": nv, "T": nt}


def resolve_outer_caps(ps: ParallelSourcesChannel, cfg: SearchConfig) -> dict:
    b = outer_bounds(ps, 0)
    nu = ps.xc.size if cfg.u_equals_x else _cap("U", b["U"], cfg)
    return {"U": nu, "V": _cap("V", b["V"], cfg), "T": _cap("T", b["T"], cfg)}


# ---------------------------------------------------------------------------
# searches


def _row_moves(p: np.ndarray) -> np.ndarray:
    """Candidate rows obtained by moving a fraction of one entry's mass to another."""
    k = p.size
    out = []
    for j in range(k):
        if p[j] <= 0:
            continue
        for i in range(k):
            if i == j:
                continue
            for s in STEPS:
                q = p.copy()
                amt = s * p[j]
                q[j] = p[j] - amt if s < 1 else 0.0
                q[i] = p[i] + amt
                out.append(q)
    return np.array(out) if out else np.empty((0, k))


def _score_batches(family: Family, params_list, vary_block, rows_stack):
    """Score ``params_list`` with block ``vary_block`` replaced by each entry of ``rows_stack``."""
    n = rows_stack.shape[0]
    scores = np.empty(n)
    step = family.chunk()
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        batch = [np.broadcast_to(p, (hi - lo,) + p.shape) for p in params_list]
        batch[vary_block] = rows_stack[lo:hi]
        scores[lo:hi] = family.score(batch)
    return scores


def _single_score(family: Family, params) -> float:
    return float(family.score([p[None] for p in params])[0])


def ascend_params(family: Family, start: list, cfg: SearchConfig) -> AscentResult:
    """Coordinate ascent from explicit block arrays."""
    params = [np.array(p, dtype=float) for p in start]
    cur = _single_score(family, params)
    evals = 1
    history = [cur]
    for _ in range(cfg.max_sweeps):
        before = cur
        for bi, blk in enumerate(family.blocks):
            if not blk.free:
                continue
            for r in range(blk.rows):
                moves = _row_moves(params[bi][r])
                if moves.shape[0] == 0:
                    continue
                stack = np.repeat(params[bi][None], moves.shape[0], axis=0)
                stack[:, r] = moves
                vals = _score_batches(family, params, bi, stack)
                evals += moves.shape[0]
                i = int(np.argmax(vals))
                if vals[i] > cur + ACCEPT_TOL:
                    cur = float(vals[i])
                    params[bi] = stack[i].copy()
        history.append(cur)
        if cur - before < cfg.improve_tol:
            break
    return AscentResult(params, cur, history, evals)


def _simplex_grid(k: int, m: int) -> np.ndarray:
    pts = []
    for bars in itertools.combinations(range(m + k - 1), k - 1):
        edges = (-1,) + bars + (m + k - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(pts, dtype=float) / m


def grid_size(family: Family, step: Fraction) -> int:
    m = int(1 / Fraction(step))
    total = 1
    for blk in family.blocks:
        if blk.free:
            total *= math.comb(m + blk.cols - 1, blk.cols - 1) ** blk.rows
    return total


def grid_params(family: Family, cfg: SearchConfig) -> tuple:
    """Exact maximizer over the grid: (params, score, evaluations)."""
    total = grid_size(family, cfg.grid_step)
    if total > cfg.grid_budget:
        raise BudgetExceeded(f"grid has {total} points, above the budget of {cfg.grid_budget}",
                             required=total, budget=cfg.grid_budget)
    m = int(1 / cfg.grid_step)
    slots = []  # (block index, row, grid)
    for bi, blk in enumerate(family.blocks):
        if blk.free:
            g = _simplex_grid(blk.cols, m)
            slots.extend((bi, r, g) for r in range(blk.rows))
    base = [np.array(b.fixed if b.fixed is not None else np.ones((b.rows, b.cols)), dtype=float)
            for b in family.blocks]
    dims = tuple(g.shape[0] for _, _, g in slots) or (1,)
    best, best_idx = -np.inf, 0
    step = family.chunk()
    for lo in range(0, total, step):
        idx = np.arange(lo, min(total, lo + step))
        digits = np.unravel_index(idx, dims) if slots else ()
        batch = [np.repeat(b[None], idx.size, axis=0) for b in base]
        for (bi, r, g), d in zip(slots, digits):
            batch[bi][:, r] = g[d]
        vals = family.score(batch)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_idx = float(vals[i]), int(idx[i])
    params = [b.copy() for b in base]
    if slots:
        for (bi, r, g), d in zip(slots, np.unravel_index(best_idx, dims)):
            params[bi][r] = g[int(d)]
    return params, best, total


# ---------------------------------------------------------------------------
# public entry points


def _families(objective: str, channel, cfg: SearchConfig):
    """Families to search for ``objective`` plus the caps used."""
    if objective in ("inner_kg", "inner_kg1", "inner_kg2", "sk_inner"):
        ch = embed_parallel(channel) if isinstance(channel, ParallelSourcesChannel) else channel
        if not isinstance(ch, WtgfChannel):
            raise ModelError(f"{objective} needs a WtgfChannel or ParallelSourcesChannel")
        fams, caps = [], {}
        branches = {"inner_kg": ("kg1", "kg2"), "inner_kg1": ("kg1",), "inner_kg2": ("kg2",),
                    "sk_inner": ("sk",)}[objective]
        for br in branches:
            c = resolve_kg_caps(ch, cfg, singleton_q=(br == "kg2"))
            fams.append(KGFamily(ch, c["Q"], c["U"], c["V"], c["T"], br, cfg.u_equals_x))
            caps[br] = c
        return fams, caps
    if objective in OUTER_OBJECTIVES or objective.startswith("special_case:"):
        if not isinstance(channel, ParallelSourcesChannel):
            raise ModelError(f"{objective} needs a ParallelSourcesChannel")
        if objective in OUTER_OBJECTIVES:
            c = resolve_outer_caps(channel, cfg)
            kind = "secrecy" if objective == "outer_secrecy" else "sk"
            return [OuterFamily(channel, c["U"], c["V"], c["T"], kind, cfg.u_equals_x)], {objective: c}
        case = objective.split(":", 1)[1]
        if case not in B.SPECIAL_CASES:
            raise ValueError(f"unknown special case {case!r}")
        shape = B.CASE_FAMILY[case]
        if shape == "xc+source":
            c = resolve_outer_caps(channel, cfg)
            c["U"] = channel.xc.size
            return [OuterFamily(channel, c["U"], c["V"], c["T"], case, True)], {case: c}
        if shape == "xc":
            c = {"U": channel.xc.size, "V": 1, "T": 1}
            return [OuterFamily(channel, c["U"], 1, 1, case, True)], {case: c}
        c = resolve_outer_caps(channel, cfg)
        c.update(V=1, T=1)
        return [OuterFamily(channel, c["U"], 1, 1, case, cfg.u_equals_x)], {case: c}
    if objective == "thm5":
        if not isinstance(channel, WtgfChannel) or not has_perfect_feedback(channel):
            raise ModelError("thm5 needs a WtgfChannel whose feedback equals Y")
        nu = _cap("U", None, cfg)
        return [Thm5Family(channel, nu, cfg.u_equals_x)], {"thm5": {"U": channel.x.size if cfg.u_equals_x else nu}}
    if objective == "thm6":
        if not isinstance(channel, StateChannel):
            raise ModelError("thm6 needs a StateChannel")
        nu = _cap("U", None, cfg, default_cap=min(channel.x.size, 3))
        ns = channel.s.size
        n_maps = nu ** (nu * ns)
        if n_maps > MAX_STATE_MAPS:
            raise BudgetExceeded(f"{n_maps} maps u'(u, s) exceed the limit of {MAX_STATE_MAPS}",
                                 required=n_maps, budget=MAX_STATE_MAPS)
        fams = [Thm6Family(channel, nu, 1, np.array(m, dtype=int).reshape(nu, ns))
                for m in itertools.product(range(nu), repeat=nu * ns)]
        fams.append(Thm6Family(channel, nu, 2))
        return fams, {"thm6": {"U": nu, "U'": nu}}
    raise ValueError(f"unknown objective {objective!r}; choose from {OBJECTIVES}")


def _label(objective: str, grid_done: bool) -> str:
    if grid_done:
        return "grid-exact"
    if objective in OUTER_OBJECTIVES:
        return "best-found lower estimate of the outer bound"
    return "best-found"


def _rng(seed: int, family_index: int, restart: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(family_index, restart)))


def _restart_share(cfg: SearchConfig, n_fams: int, objective: str) -> int:
    # the causal-state map enumeration splits the restart budget across maps
    if objective == "thm6":
        return max(1, math.ceil(cfg.restarts / n_fams))
    return cfg.restarts


def maximize(objective: str, channel, cfg: Optional[SearchConfig] = None) -> RateReport:
    """Maximize ``objective`` over its family; deterministic given ``cfg``.

    Candidates are merged by value with ties going to the earliest family and
    restart.  The winner is re-evaluated through :mod:`wtgf.bounds`, so the
    reported value is always that of a concrete factorization.
    """
    cfg = cfg or SearchConfig()
    t0 = time.perf_counter()
    fams, caps = _families(objective, channel, cfg)
    evals = 0
    best = None  # (score, family index, params)
    per_restart = []
    grid_done = False
    grid_note = None

    def consider(score, fi, params):
        nonlocal best
        if best is None or score > best[0]:
            best = (score, fi, params)

    if cfg.mode in ("exhaustive_grid", "hybrid"):
        required = sum(grid_size(f, cfg.grid_step) for f in fams)
        try:
            if required > cfg.grid_budget:
                raise BudgetExceeded(f"grid has {required} points, above the budget of {cfg.grid_budget}",
                                     required=required, budget=cfg.grid_budget)
            for fi, fam in enumerate(fams):
                params, score, n = grid_params(fam, cfg)
                evals += n
                consider(score, fi, params)
            grid_done = True
        except BudgetExceeded as exc:
            if cfg.mode == "exhaustive_grid":
                raise
            grid_note = str(exc)

    if cfg.mode in ("random_restart", "hybrid"):
        if cfg.mode == "hybrid" and best is not None:
            res = ascend_params(fams[best[1]], best[2], cfg)
            evals += res.evaluations
            consider(res.score, best[1], res.params)
        share = _restart_share(cfg, len(fams), objective)
        for fi, fam in enumerate(fams):
            for r in range(share):
                res = ascend_params(fam, fam.random_params(_rng(cfg.seed, fi, r)), cfg)
                evals += res.evaluations
                per_restart.append(max(res.score, 0.0) if res.score > B.INFEASIBLE_SCORE / 2 else None)
                consider(res.score, fi, res.params)

    if best is None:
        raise ValueError("search ran no evaluations (restarts = 0 with random_restart mode)")
    score, fi, params = best
    fam = fams[fi]
    factors = fam.factors(params)
    rv = fam.certify(factors)
    diagnostics = {"families": len(fams)}
    if grid_note:
        diagnostics["grid_skipped"] = grid_note
    return RateReport(
        objective=objective,
        best_bits=rv.bits,
        feasible=rv.feasible,
        best_factors=factors,
        branch=fam.branch,
        evaluations=evals,
        wall_time=time.perf_counter() - t0,
        per_restart_bests=per_restart,
        label=_label(objective, grid_done),
        rate_value=rv,
        caps=caps,
        config=cfg.echo(),
        diagnostics=diagnostics,
    )


def grid_enumerate(objective: str, channel, cfg: Optional[SearchConfig] = None) -> RateReport:
    """Exact maximum over the rational grid; raises BudgetExceeded when too large."""
    cfg = cfg or SearchConfig()
    fields = cfg.echo()
    fields.update(mode="exhaustive_grid", grid_step=cfg.grid_step)
    return maximize(objective, channel, SearchConfig(**fields))


def family_for(objective: str, channel, factors, cfg: Optional[SearchConfig] = None):
    """Family whose cardinalities match an explicit factorization."""
    cfg = cfg or SearchConfig()
    if isinstance(factors, B.FactorizationKG):
        ch = embed_parallel(channel) if isinstance(channel, ParallelSourcesChannel) else channel
        nq, nu = factors.qu.shape
        nv = factors.t_given_v.table.shape[0]
        nt = factors.t_given_v.table.shape[1]
        br = {"inner_kg": "kg1", "inner_kg1": "kg1", "inner_kg2": "kg2", "sk_inner": "sk"}[objective]
        return KGFamily(ch, nq, nu, nv, nt, br)
    if isinstance(factors, B.FactorizationOuter):
        nu = factors.uxc.shape[0]
        nv, nt = factors.t_given_v.table.shape
        kind = {"outer_secrecy": "secrecy", "outer_sk": "sk"}.get(objective)
        if kind is None:
            kind = objective.split(":", 1)[1]
        return OuterFamily(channel, nu, nv, nt, kind)
    if objective == "thm5":
        return Thm5Family(channel, np.asarray(factors).shape[0], cfg.u_equals_x)
    raise ValueError(f"cannot build a family for {type(factors).__name__}")


def ascend(objective: str, channel, start, cfg: Optional[SearchConfig] = None) -> AscentResult:
    """Coordinate ascent from an explicit factorization.

    The returned ``history`` holds the score after every sweep (first entry is
    the start) and never decreases.
    """
    cfg = cfg or SearchConfig()
    fam = family_for(objective, channel, start, cfg)
    res = ascend_params(fam, fam.params_from(start), cfg)
    res.params = fam.factors(res.params)
    return res
