"""Lattice random walks with geometric killing, loop erasure, cut-time
scanning, and the loop-erasure prefix stability check."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import direction_vectors


@dataclass(frozen=True)
class KillingLaw:
    """Per-step kill probability lambda = gamma / (2d + gamma).

    The kill happens before each lattice move, so the number T of
    completed moves satisfies P[T = t] = (1-lambda)^t * lambda on
    {0, 1, 2, ...}; drawing T up front is equivalent in law.
    """

    lam: float

    def __post_init__(self):
        if not 0 <= self.lam < 1:
            raise ValueError("lambda must be in [0, 1)")

    @classmethod
    def from_gamma(cls, gamma: float, d: int) -> "KillingLaw":
        if gamma < 0:
            raise ValueError("gamma must be >= 0")
        return cls(lam=gamma / (2 * d + gamma))


@dataclass
class WalkTrace:
    """sites[t] is S(t); consecutive rows differ by one lattice step."""

    sites: np.ndarray            # (L+1, d) int64
    killed_at: int | None
    stop_reason: str             # "exit" | "hit" | "killed" | "budget"

    def __len__(self) -> int:
        return len(self.sites)


def _pad3(vec, d):
    out = np.zeros(3, dtype=np.int64)
    out[:d] = np.asarray(vec, dtype=np.int64)
    return out


def _pack_rows(rows3: np.ndarray) -> np.ndarray:
    off = np.int64(1) << np.int64(20)
    span = np.int64(1) << np.int64(21)
    return ((rows3[:, 0] + off) * span + (rows3[:, 1] + off)) * span \
        + (rows3[:, 2] + off)


def run_walk(start, d: int, exit_radius: float | None = None,
             hit_set=None, killing: KillingLaw | None = None,
             budget: int = 10_000_000,
             rng: np.random.Generator | None = None) -> WalkTrace:
    """Simple random walk from start until the first triggered stop.

    Stops: leaving the closed Euclidean ball of the given radius, hitting
    a vertex of hit_set (checked from step 1 on), the geometric kill, or
    the step budget (flagged, not fatal).
    """
    if rng is None:
        raise ValueError("an explicitly seeded rng is required")
    if budget <= 0:
        raise ValueError("budget must be positive")
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    pos = _pad3(start, d)
    exit_r2 = np.int64(-1)
    if exit_radius is not None:
        exit_r2 = np.int64(int(np.floor(float(exit_radius) ** 2 + 1e-9)))
    if hit_set is not None and len(hit_set):
        rows = np.zeros((len(hit_set), 3), dtype=np.int64)
        for i, v in enumerate(hit_set):
            rows[i, :d] = np.asarray(v, dtype=np.int64)
        hit_sorted = np.sort(_pack_rows(rows))
    else:
        hit_sorted = np.empty(0, dtype=np.int64)
    T = None
    if killing is not None and killing.lam > 0:
        T = int(rng.geometric(killing.lam)) - 1
    chunks = [pos[:d].copy().reshape(1, d)]
    done = 0
    reason = "budget"
    killed_at = None
    while True:
        limit = budget - done
        if T is not None:
            limit = min(limit, T - done)
        if limit <= 0:
            if T is not None and done == T:
                reason = "killed"
                killed_at = T
            break
        chunk = int(min(4096, limit))
        steps = rng.integers(0, 2 * d, size=chunk, dtype=np.int64)
        out = np.empty((chunk, 3), dtype=np.int64)
        cnt, code = _kernels.walk_chunk(pos, steps, dirs3, exit_r2,
                                        hit_sorted, out)
        if cnt:
            chunks.append(out[:cnt, :d].copy())
            done += int(cnt)
        if code == 1:
            reason = "exit"
            break
        if code == 2:
            reason = "hit"
            break
    sites = np.concatenate(chunks, axis=0)
    return WalkTrace(sites=sites, killed_at=killed_at, stop_reason=reason)


def loop_erase(path) -> np.ndarray:
    """Chronological loop erasure of a vertex sequence.

    Works on any sequence of coordinate rows (lattice adjacency is not
    required); output is self-avoiding with first and last entries
    preserved.
    """
    arr = np.asarray(path)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if len(arr) == 0:
        raise ValueError("empty path")
    pos = {}
    out = []
    for row in arr:
        key = tuple(int(c) for c in row)
        if key in pos:
            cut = pos[key]
            for r in out[cut + 1:]:
                del pos[tuple(int(c) for c in r)]
            del out[cut + 1:]
        else:
            pos[key] = len(out)
            out.append(row)
    return np.asarray(out)


@dataclass
class CutTimeScan:
    """Exact cut times of a finite trace with the window annotations."""

    cuts: np.ndarray         # sorted cut indices k
    in_window: np.ndarray    # tau_m <= k <= tau_n
    no_return: np.ndarray    # no visit to B(m) at or after k
    tau_m: int | None
    tau_n: int | None


def cut_time_scan(trace, m: float, n: float) -> CutTimeScan:
    """All k with sites[0..k] disjoint from sites[k+1..end], annotated.

    The trace is a truncated stand-in for the infinite walk, so the
    annotations are computed against the truncated future.
    """
    if m >= n:
        raise ValueError("need m < n")
    sites = trace.sites if isinstance(trace, WalkTrace) else np.asarray(trace)
    L = len(sites) - 1
    first = {}
    last = {}
    r2 = (sites.astype(np.int64) ** 2).sum(axis=1)
    m2 = float(m) ** 2
    n2 = float(n) ** 2
    tau_m = tau_n = None
    last_m = -1
    for t in range(L + 1):
        key = tuple(int(c) for c in sites[t])
        if key not in first:
            first[key] = t
        last[key] = t
        if r2[t] <= m2:
            last_m = t
        else:
            if tau_m is None:
                tau_m = t
            if tau_n is None and r2[t] > n2:
                tau_n = t
    cover = np.zeros(L + 2, dtype=np.int64)
    for key, f in first.items():
        cover[f] += 1
        cover[last[key]] -= 1
    running = np.cumsum(cover)[: L + 1]
    cuts = np.flatnonzero(running == 0)
    in_window = np.zeros(len(cuts), dtype=bool)
    if tau_m is not None and tau_n is not None:
        in_window = (cuts >= tau_m) & (cuts <= tau_n)
    no_return = cuts > last_m
    return CutTimeScan(cuts=cuts, in_window=in_window, no_return=no_return,
                       tau_m=tau_m, tau_n=tau_n)


def _ordered_ball_section(path: np.ndarray, m: float) -> list[tuple]:
    m2 = float(m) ** 2
    out = []
    for row in path:
        if float((np.asarray(row, dtype=np.int64) ** 2).sum()) <= m2:
            out.append(tuple(int(c) for c in row))
    return out


def le_prefix_stability(trace: WalkTrace, m: float, n: float) -> bool:
    """Whether killing changes the loop-erasure inside B(m):
    LE(S[0,T]) and LE(S[0,end]) meet B(m) in the same ordered vertex list.

    A trace killed before it ever left B(m) is not comparable and counts
    as unstable (returns False).
    """
    if m >= n:
        raise ValueError("need m < n")
    sites = trace.sites
    T = trace.killed_at
    if T is None or T >= len(sites) - 1:
        return True
    r2 = (sites.astype(np.int64) ** 2).sum(axis=1)
    if not (r2[: T + 1] > float(m) ** 2).any():
        return False
    le_full = loop_erase(sites)
    le_t = loop_erase(sites[: T + 1])
    return _ordered_ball_section(le_full, m) == _ordered_ball_section(le_t, m)


def cut_time_probability(m: int, n: int, walks: int, seed: int,
                         trunc_radius: int | None = None,
                         threads: int = 1, d: int = 3):
    """Monte Carlo probability of an annotated cut time in [tau_m, tau_n]
    for walks truncated on leaving B(trunc_radius). Returns
    (p_hat, stderr, inconclusive count); inconclusive walks count as
    failures."""
    if m >= n:
        raise ValueError("need m < n")
    if trunc_radius is None:
        trunc_radius = 8 * n
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    budget = np.int64(8 * trunc_radius * trunc_radius)
    ok = np.zeros(walks, dtype=np.int8)
    incon = np.zeros(walks, dtype=np.int8)
    master = np.uint64(_kernels.derive_seed(np.uint64(seed), np.uint64(0xC07)))

    def work(lo, hi):
        _kernels.cut_time_block(master, lo, hi, 2 * d, dirs3,
                                np.int64(m), np.int64(n),
                                np.int64(trunc_radius), budget,
                                ok[lo:hi], incon[lo:hi])

    if threads <= 1:
        work(0, walks)
    else:
        bounds = np.linspace(0, walks, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(lambda i: work(bounds[i], bounds[i + 1]),
                        range(threads)))
    p = float(ok.sum()) / walks
    se = float(np.sqrt(max(p * (1 - p), 1e-12) / walks))
    return p, se, int(incon.sum())
