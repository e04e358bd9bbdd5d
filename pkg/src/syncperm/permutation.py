"""Permutation tests for 2x2 layouts: WTPS, CSP and USP.

WTPS permutes the pooled sample and recomputes the studentized Wald
statistic. CSP and USP exchange observations only inside the blocks formed
by the levels of the non-tested factor, with the same number of exchanges
in every block, and use the unstudentized sum statistics.

Resamples are generated in fixed-size chunks; chunk ``k`` draws from its
own stream derived from ``(seed, k)``, so a p-value does not depend on how
chunks are distributed over worker threads.

Cell totals are always summed in sorted order. Two resamples with the same
cell multisets therefore give bit-identical statistics, so ties that hold
exactly in real arithmetic also hold in floating point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import Dataset, Effect, EffectSpec
from .errors import InvalidInputError, UnsupportedDesignError
from .parametric import TestResult, _require_variances, as_effect, wald_statistic_batch

CHUNK = 1024
_U64 = (1 << 64) - 1
KINDS = ("pooled", "csp", "usp")


@dataclass(frozen=True)
class PermutationPlan:
    kind: str = "pooled"
    n_perm: int = 5000
    seed: int = 0
    pre_randomize: bool = False
    add_one: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown permutation kind {self.kind!r}")
        if int(self.n_perm) < 1:
            raise InvalidInputError("n_perm must be at least 1")


@dataclass(frozen=True)
class SyncExchange:
    """One synchronized exchange.

    ``moved[k]`` lists the positions of cell k that leave it; they are
    paired element-wise with ``moved`` of the other cell in the same block.
    """

    nu: int
    moved: tuple


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed) & _U64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _chunks(n_perm: int):
    for k, start in enumerate(range(0, n_perm, CHUNK)):
        yield k, min(CHUNK, n_perm - start)


def _count_exceedances(seed, n_perm, observed, chunk_stats, workers=1) -> int:
    def one(item):
        k, size = item
        return int(np.count_nonzero(chunk_stats(stream(seed, 0, k), size) >= observed))

    items = list(_chunks(n_perm))
    if workers <= 1 or len(items) == 1:
        return sum(map(one, items))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(one, items))


def _p_value(count: int, n_perm: int, add_one: bool) -> float:
    if add_one:
        return (count + 1) / (n_perm + 1)
    return count / n_perm


def canonical_totals(x: np.ndarray) -> np.ndarray:
    """Sum along the last axis in sorted order."""
    return np.sort(x, axis=-1).sum(axis=-1)


def _canonical_moments(x: np.ndarray):
    xs = np.sort(x, axis=-1)
    total = xs.sum(axis=-1)
    mean = total / x.shape[-1]
    dev = xs - mean[..., None]
    return total, (dev * dev).sum(axis=-1)


# ---------------------------------------------------------------------------
# WTPS
# ---------------------------------------------------------------------------

def _cell_moments(cells):
    out = [_canonical_moments(c) for c in cells]
    return (
        np.stack([t for t, _ in out], axis=-1),
        np.stack([s for _, s in out], axis=-1),
    )


def wtps(d: Dataset, e, plan: PermutationPlan | None = None, workers: int = 1) -> TestResult:
    """Wald-type permutation test on the pooled sample."""
    _require_variances(d)
    e = as_effect(e)
    plan = plan or PermutationPlan("pooled")
    n = d.n
    c = e.c
    sums, ssd = _cell_moments([x[None, :] for x in d.cells])
    observed = float(wald_statistic_batch(sums, ssd, n, c)[0])
    pooled = d.pooled()
    cuts = np.cumsum(n)[:-1]
    base = np.arange(d.N)

    def chunk_stats(rng, size):
        idx = rng.permuted(np.broadcast_to(base, (size, d.N)), axis=1)
        vals = pooled[idx]
        s, q = _cell_moments(np.split(vals, cuts, axis=1))
        return wald_statistic_batch(s, q, n, c)

    count = _count_exceedances(plan.seed, plan.n_perm, observed, chunk_stats, workers)
    return TestResult(
        observed, None, None, _p_value(count, plan.n_perm, plan.add_one), "WTPS",
        n_resamples=plan.n_perm, degenerate=math.isinf(observed),
    )


# ---------------------------------------------------------------------------
# Synchronized statistic
# ---------------------------------------------------------------------------

def restricted_ok(n, e) -> bool:
    """True if the sizes admit the exact nuisance-eliminating weighting."""
    n = np.asarray(n)
    if np.all(n == n[0]):
        return True
    if as_effect(e).effect is Effect.B:
        return n[0] == n[2] and n[1] == n[3]
    return n[0] == n[1] and n[2] == n[3]


def sync_weights(n, e, strict: bool = True) -> np.ndarray:
    """Signed coefficients of the cell totals in the synchronized statistic.

    Balanced layouts use unit weights. Otherwise each total is weighted by
    the size of the opposite cell in its block. With ``strict`` the sizes
    must follow the pattern for which this removes the nuisance effects
    exactly; without it the same weights are applied to any sizes.
    """
    e = as_effect(e)
    n = np.asarray(n, dtype=float)
    c = e.c
    if np.all(n == n[0]):
        return c.copy()
    if strict and not restricted_ok(n, e):
        raise UnsupportedDesignError(
            f"synchronized statistic for effect {e.effect.value} needs "
            + ("n11 = n21 and n12 = n22" if e.effect is Effect.B else "n11 = n12 and n21 = n22")
            + f"; got n = {n.astype(int).tolist()}"
        )
    w = np.empty(4)
    for a, b in e.blocks():
        w[a] = n[b]
        w[b] = n[a]
    return c * w


def _combine(totals, w) -> np.ndarray:
    pos = w > 0
    neg = w < 0
    u = (totals[..., pos] * w[pos]).sum(axis=-1)
    v = (totals[..., neg] * -w[neg]).sum(axis=-1)
    diff = u - v
    return diff * diff


def sync_statistic(d: Dataset, e, strict: bool = True) -> float:
    """Squared weighted combination of the cell totals T_ij."""
    w = sync_weights(d.n, e, strict)
    totals = np.array([canonical_totals(x) for x in d.cells])
    return float(_combine(totals, w))


# ---------------------------------------------------------------------------
# CSP / USP draws
# ---------------------------------------------------------------------------

def csp_positions(n, e) -> int:
    """Number of positions that can take part in a constrained exchange."""
    return int(min(min(n[a], n[b]) for a, b in as_effect(e).blocks()))


def usp_nu_probabilities(n) -> np.ndarray:
    """P(nu) proportional to the number of synchronized exchanges of size nu.

    The blocks are the same pairs of cells for every effect up to labelling,
    and the product runs over all four cells either way.
    """
    n = [int(k) for k in n]
    nu_max = min(n)
    logw = np.array([
        sum(math.lgamma(k + 1) - math.lgamma(nu + 1) - math.lgamma(k - nu + 1) for k in n)
        for nu in range(nu_max + 1)
    ])
    w = np.exp(logw - logw.max())
    return w / w.sum()


def _csp_masks(rng, p_max: int, size: int) -> np.ndarray:
    return rng.random((size, p_max)) < 0.5


def _usp_draws(rng, n, size: int):
    probs = usp_nu_probabilities(n)
    nu = rng.choice(probs.size, size=size, p=probs)
    orders = [
        rng.permuted(np.broadcast_to(np.arange(k), (size, k)), axis=1) for k in n
    ]
    return nu, orders


def draw_csp_exchange(d: Dataset, e, rng) -> SyncExchange:
    p_max = csp_positions(d.n, e)
    mask = _csp_masks(rng, p_max, 1)[0]
    pos = tuple(int(k) for k in np.flatnonzero(mask))
    return SyncExchange(len(pos), (pos,) * 4)


def draw_usp_exchange(d: Dataset, e, rng) -> SyncExchange:
    nu, orders = _usp_draws(rng, d.n, 1)
    k = int(nu[0])
    return SyncExchange(k, tuple(tuple(int(i) for i in o[0, :k]) for o in orders))


def apply_exchange(d: Dataset, e, ex: SyncExchange) -> Dataset:
    cells = [np.array(x) for x in d.cells]
    for a, b in as_effect(e).blocks():
        ia = list(ex.moved[a])
        ib = list(ex.moved[b])
        if len(ia) != ex.nu or len(ib) != ex.nu:
            raise InvalidInputError("exchange is not synchronized")
        cells[a][ia], cells[b][ib] = d.cells[b][ib], d.cells[a][ia]
    return Dataset(cells)


def sample_csp(d: Dataset, e, rng) -> Dataset:
    """One constrained synchronized resample.

    A subset of the first ``p_max`` positions is drawn uniformly (each
    position independently with probability 1/2) and the observations at
    those positions are swapped between the two cells of every block.
    """
    return apply_exchange(d, e, draw_csp_exchange(d, e, rng))


def sample_usp(d: Dataset, e, rng) -> Dataset:
    """One unconstrained synchronized resample, uniform over the USP set."""
    return apply_exchange(d, e, draw_usp_exchange(d, e, rng))


def csp_batch_statistics(d: Dataset, e, masks, strict: bool = True) -> np.ndarray:
    """Synchronized statistics for a batch of CSP position masks."""
    e = as_effect(e)
    w = sync_weights(d.n, e, strict)
    masks = np.asarray(masks, dtype=bool)
    size, p = masks.shape
    totals = np.empty((size, 4))
    for a, b in e.blocks():
        xa, xb = d.cells[a], d.cells[b]
        na = np.broadcast_to(xa, (size, xa.size)).copy()
        nb = np.broadcast_to(xb, (size, xb.size)).copy()
        na[:, :p] = np.where(masks, xb[:p], xa[:p])
        nb[:, :p] = np.where(masks, xa[:p], xb[:p])
        totals[:, a] = canonical_totals(na)
        totals[:, b] = canonical_totals(nb)
    return _combine(totals, w)


def usp_batch_statistics(d: Dataset, e, nu, orders, strict: bool = True) -> np.ndarray:
    """Synchronized statistics for a batch of USP draws."""
    e = as_effect(e)
    w = sync_weights(d.n, e, strict)
    nu = np.asarray(nu)
    size = nu.size
    totals = np.empty((size, 4))
    rows_all = np.arange(size)[:, None]
    for a, b in e.blocks():
        xa, xb = d.cells[a], d.cells[b]
        k = min(xa.size, xb.size)
        oa = orders[a][:, :k]
        ob = orders[b][:, :k]
        active = np.arange(k) < nu[:, None]
        rows = np.broadcast_to(rows_all, (size, k))[active]
        na = np.broadcast_to(xa, (size, xa.size)).copy()
        nb = np.broadcast_to(xb, (size, xb.size)).copy()
        na[rows, oa[active]] = xb[ob[active]]
        nb[rows, ob[active]] = xa[oa[active]]
        totals[:, a] = canonical_totals(na)
        totals[:, b] = canonical_totals(nb)
    return _combine(totals, w)


def pre_randomized(d: Dataset, seed: int) -> Dataset:
    """Shuffle the order of observations within every cell once."""
    rng = stream(seed, 1)
    return Dataset([rng.permutation(x) for x in d.cells])


def csp_test(d: Dataset, e, plan: PermutationPlan | None = None,
             strict: bool = True, workers: int = 1) -> TestResult:
    """Constrained synchronized permutation test."""
    e = as_effect(e)
    plan = plan or PermutationPlan("csp")
    if plan.pre_randomize:
        d = pre_randomized(d, plan.seed)
    observed = sync_statistic(d, e, strict)
    p_max = csp_positions(d.n, e)

    def chunk_stats(rng, size):
        return csp_batch_statistics(d, e, _csp_masks(rng, p_max, size), strict)

    count = _count_exceedances(plan.seed, plan.n_perm, observed, chunk_stats, workers)
    return TestResult(
        observed, None, None, _p_value(count, plan.n_perm, plan.add_one), "CSP",
        n_resamples=plan.n_perm, diagnostics={"p_max": p_max, "restricted": bool(restricted_ok(d.n, e))},
    )


def usp_test(d: Dataset, e, plan: PermutationPlan | None = None,
             strict: bool = True, workers: int = 1) -> TestResult:
    """Unconstrained synchronized permutation test."""
    e = as_effect(e)
    plan = plan or PermutationPlan("usp")
    observed = sync_statistic(d, e, strict)
    n = d.n

    def chunk_stats(rng, size):
        nu, orders = _usp_draws(rng, n, size)
        return usp_batch_statistics(d, e, nu, orders, strict)

    count = _count_exceedances(plan.seed, plan.n_perm, observed, chunk_stats, workers)
    return TestResult(
        observed, None, None, _p_value(count, plan.n_perm, plan.add_one), "USP",
        n_resamples=plan.n_perm, diagnostics={"nu_max": int(n.min()), "restricted": bool(restricted_ok(n, e))},
    )
