"""Discrete covering process on Z/nZ: arc placement, cover times, vacancy formulas.

Two placement engines share one pinned arc stream:

* ``TorusCoverState``: the successor-skipping structure ("next uncovered index
  at or after i" with path compression). Each index is touched O(alpha(n))
  amortized over a run.
* a batched circular-sweep used inside ``run_to_cover``, which resolves whole
  arc batches against the vacant set in O(n + batch) vectorized work. Both
  engines produce identical results on the same stream; tests enforce this.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seeding import generator
from .tails import TailFunction, tail_prefix_total

__all__ = [
    "TorusCoverState",
    "NaiveCoverState",
    "ArcEvent",
    "CoverResult",
    "run_to_cover",
    "run_to_cover_reference",
    "snapshot_vacant",
    "site_vacancy",
    "vacancy_probability_exact",
    "pair_vacancy_exact",
    "covered_mask",
]

ARC_HARD_CAP = 10**10
VACANT_INDEX_LIMIT = 10**6


class TorusCoverState:
    """Coverage over Z/nZ via a successor array with path compression."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("torus size must be >= 1")
        self.n = n
        # successor[i] = next uncovered index >= i; index n is a fixed sentinel
        self.successor = list(range(n + 1))
        self.vacant_count = n
        self.arcs_placed = 0

    def _find(self, i: int) -> int:
        succ = self.successor
        root = i
        while succ[root] != root:
            root = succ[root]
        while succ[i] != root:
            succ[i], i = root, succ[i]
        return root

    def place_arc(self, u: int, r: int) -> int:
        """Cover {u, ..., u+r-1} mod n; returns the number of newly covered indices."""
        n = self.n
        if not 0 <= u < n:
            raise ValueError(f"start index {u} outside [0, {n})")
        if r < 1:
            raise ValueError("arc length must be >= 1")
        r = min(r, n)
        newly = 0
        succ = self.successor
        end = min(u + r, n)
        j = self._find(u)
        while j < end:
            succ[j] = j + 1
            newly += 1
            j = self._find(j + 1)
        wrap_end = u + r - n
        if wrap_end > 0:
            j = self._find(0)
            while j < wrap_end:
                succ[j] = j + 1
                newly += 1
                j = self._find(j + 1)
        self.vacant_count -= newly
        self.arcs_placed += 1
        return newly

    def vacant_indices(self) -> list[int]:
        out = []
        j = self._find(0)
        while j < self.n:
            out.append(j)
            j = self._find(j + 1)
        return out

    @property
    def is_covered(self) -> bool:
        return self.vacant_count == 0


class NaiveCoverState:
    """Boolean-array oracle with the same interface as TorusCoverState."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("torus size must be >= 1")
        self.n = n
        self.covered = np.zeros(n, dtype=bool)
        self.vacant_count = n
        self.arcs_placed = 0

    def place_arc(self, u: int, r: int) -> int:
        n = self.n
        if not 0 <= u < n:
            raise ValueError(f"start index {u} outside [0, {n})")
        if r < 1:
            raise ValueError("arc length must be >= 1")
        r = min(r, n)
        before = self.vacant_count
        end = min(u + r, n)
        seg = self.covered[u:end]
        newly = int(seg.size - np.count_nonzero(seg))
        seg[:] = True
        wrap_end = u + r - n
        if wrap_end > 0:
            seg = self.covered[0:wrap_end]
            newly += int(seg.size - np.count_nonzero(seg))
            seg[:] = True
        self.vacant_count = before - newly
        self.arcs_placed += 1
        return newly

    def vacant_indices(self) -> list[int]:
        return np.flatnonzero(~self.covered).tolist()

    @property
    def is_covered(self) -> bool:
        return self.vacant_count == 0


@dataclass(frozen=True)
class ArcEvent:
    """One placed arc: start u, length r, arrival order."""

    u: int
    r: int
    index: int

    def covered_indices(self, n: int) -> list[int]:
        if self.r < 1:
            raise ValueError("arc length must be >= 1")
        return sorted({(self.u + j) % n for j in range(min(self.r, n))})


@dataclass(frozen=True)
class CoverResult:
    """One replicate: discrete cover time tau, Poissonized time T, largest placed arc."""

    n: int
    tau: int
    T: float
    max_radius: int
    seed: int


# -- vectorized coverage sweep ---------------------------------------------


class _CoverSweep:
    """Reusable buffers for the doubled-index prefix-max coverage sweep.

    For arcs {start, ..., start+len-1} mod n, a site v is covered iff some
    doubled start p <= v+n has p + len(p) > v+n, so one prefix max of
    p + L[p mod n] answers all queries. O(n + #arcs) per call.
    """

    def __init__(self, n: int):
        if n >= 2**30:
            raise ValueError("torus size limited to 2**30")
        self.n = n
        self._L = np.zeros(n, dtype=np.int32)
        self._reach = np.empty(2 * n, dtype=np.int32)
        self._base = np.arange(2 * n, dtype=np.int32)

    def accumulate(self, starts, lengths):
        """Fold a chunk of arcs into the per-start max-length table."""
        if len(starts):
            np.maximum.at(self._L, starts, lengths.astype(np.int32, copy=False))

    def finish(self, query=None, clear=None):
        """Run the sweep on the accumulated table; ``clear`` lists starts to reset."""
        n = self.n
        L = self._L
        reach = self._reach
        reach[:n] = L
        reach[n:] = L
        reach += self._base
        np.maximum.accumulate(reach, out=reach)
        if clear is not None and len(clear):
            L[clear] = 0
        if query is None:
            q = self._base[n:]
            return reach[n:] > q
        q = np.asarray(query, dtype=np.int64) + n
        return reach[q] > q

    def covered(self, starts, lengths, query=None):
        """Mask of covered sites (all of them, or only ``query``); lengths <= n."""
        self.accumulate(starts, lengths)
        return self.finish(query=query, clear=starts)


def covered_mask(n: int, starts: np.ndarray, lengths: np.ndarray, query: np.ndarray | None = None):
    """One-shot coverage of the union of arcs {start, ..., start+len-1} mod n."""
    lengths = np.minimum(np.asarray(lengths, dtype=np.int64), n)
    return _CoverSweep(n).covered(np.asarray(starts, dtype=np.int64), lengths, query)


def _default_batch(tail: TailFunction, n: int) -> int:
    est = n * (math.log(max(n, 2)) + 2.0) / tail_prefix_total(tail, n)
    return int(min(max(1024.0, 1.25 * est), 262144.0))


def run_to_cover(tail: TailFunction, n: int, seed: int, batch_size: int | None = None) -> CoverResult:
    """Place i.i.d. arcs (uniform start, inverse-transform radius) until covered.

    Deterministic given the seed. Arcs are drawn from the pinned PCG64 stream in
    batches of B(tail, n); radii are clamped to n at placement. T is the sum of
    one standard exponential per placed arc.
    """
    rng = generator(seed)
    B = batch_size or _default_batch(tail, n)
    sweep = _CoverSweep(n)
    vacant = np.arange(n, dtype=np.int64)
    arcs_before = 0
    eta_parts: list[float] = []
    max_r = 0
    while True:
        u = rng.integers(0, n, B, dtype=np.int64)
        w = 1.0 - rng.random(B)
        r = tail.sample_radii(w, cap=n)
        eta = rng.standard_exponential(B)
        cov = sweep.covered(u, r, vacant)
        if cov.all():
            lo, hi = 1, B
            while lo < hi:
                mid = (lo + hi) // 2
                if bool(sweep.covered(u[:mid], r[:mid], vacant).all()):
                    hi = mid
                else:
                    lo = mid + 1
            tau = arcs_before + lo
            T = math.fsum(eta_parts + [float(np.sum(eta[:lo]))])
            max_r = max(max_r, int(r[:lo].max()))
            return CoverResult(n=n, tau=tau, T=T, max_radius=max_r, seed=seed)
        vacant = vacant[~cov]
        arcs_before += B
        eta_parts.append(float(np.sum(eta)))
        max_r = max(max_r, int(r.max()))
        if arcs_before > ARC_HARD_CAP:
            raise RuntimeError(f"no cover after {arcs_before} arcs; configuration bug?")


def run_to_cover_reference(tail: TailFunction, n: int, seed: int, batch_size: int | None = None,
                           engine: str = "successor") -> CoverResult:
    """Arc-by-arc reference consuming the identical stream as run_to_cover."""
    rng = generator(seed)
    B = batch_size or _default_batch(tail, n)
    state = TorusCoverState(n) if engine == "successor" else NaiveCoverState(n)
    arcs_before = 0
    eta_parts: list[float] = []
    max_r = 0
    while True:
        u = rng.integers(0, n, B, dtype=np.int64)
        w = 1.0 - rng.random(B)
        r = tail.sample_radii(w, cap=n)
        eta = rng.standard_exponential(B)
        for k in range(B):
            state.place_arc(int(u[k]), int(r[k]))
            if state.vacant_count == 0:
                tau = arcs_before + k + 1
                T = math.fsum(eta_parts + [float(np.sum(eta[: k + 1]))])
                max_r = max(max_r, int(r[: k + 1].max()))
                return CoverResult(n=n, tau=tau, T=T, max_radius=max_r, seed=seed)
        arcs_before += B
        eta_parts.append(float(np.sum(eta)))
        max_r = max(max_r, int(r.max()))
        if arcs_before > ARC_HARD_CAP:
            raise RuntimeError(f"no cover after {arcs_before} arcs; configuration bug?")


# -- timed snapshots ---------------------------------------------------------

_DRAW_CHUNK = 1 << 22


def snapshot_vacant(tail: TailFunction, n: int, t: float, seed: int):
    """State at Poisson time t: draws N ~ Poisson(t) arcs, returns (vacant_count, vacant_indices).

    vacant_indices is None when the count exceeds 10**6 (memory guard).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    rng = generator(seed)
    N = int(rng.poisson(t))
    sweep = _CoverSweep(n)
    done = 0
    while done < N:
        m = min(N - done, _DRAW_CHUNK)
        u = rng.integers(0, n, m, dtype=np.int64)
        w = 1.0 - rng.random(m)
        sweep.accumulate(u, tail.sample_radii(w, cap=n))
        done += m
    cov = sweep.finish()
    count = int(n - np.count_nonzero(cov))
    if count > VACANT_INDEX_LIMIT:
        return count, None
    return count, np.flatnonzero(~cov)


def site_vacancy(tail: TailFunction, n: int, t: float, seed: int, sites) -> np.ndarray:
    """Vacancy indicators for a few sites at Poisson time t (no full state kept)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    sites = np.asarray(sites, dtype=np.int64)
    rng = generator(seed)
    N = int(rng.poisson(t))
    covered = np.zeros(sites.shape, dtype=bool)
    done = 0
    while done < N:
        m = min(N - done, _DRAW_CHUNK)
        u = rng.integers(0, n, m, dtype=np.int64)
        w = 1.0 - rng.random(m)
        r = tail.sample_radii(w, cap=n)
        for j, s in enumerate(sites):
            if not covered[j]:
                covered[j] = bool(np.any(((s - u) % n) < r))
        done += m
    return ~covered


# -- exact vacancy formulas ---------------------------------------------------


def vacancy_probability_exact(tail: TailFunction, n: int, t: float) -> float:
    """P(one fixed site vacant at time t) = exp(-t F_n / n)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return math.exp(-t * tail_prefix_total(tail, n) / n)


def pair_vacancy_exact(tail: TailFunction, n: int, t: float, k: int) -> float:
    """P(sites 0 and k both vacant at time t) = exp(-t (F_k + F_{n-k}) / n)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if not 1 <= k <= n - 1:
        raise IndexError(f"separation k={k} outside [1, {n - 1}]")
    fk = tail_prefix_total(tail, k) + tail_prefix_total(tail, n - k)
    return math.exp(-t * fk / n)
