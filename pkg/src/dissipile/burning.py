"""The Burning Test: peel vertices round by round, deciding in polynomial
time whether a configuration is allowed. One implementation serves both
plain stable configurations (heights <= 2d-1) and starred ones
(heights <= 2d, where height 2d burns in the first round)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import BoxDomain


@dataclass(frozen=True)
class BurnSchedule:
    """Rounds B_1, B_2, ... as lists of vertex indices; leftover is the
    final unburnt set (empty iff the configuration is allowed)."""

    rounds: list
    leftover: list

    @property
    def allowed(self) -> bool:
        return len(self.leftover) == 0

    def round_of(self, n: int) -> np.ndarray:
        """Round number per vertex (1-based); 0 for leftover vertices."""
        out = np.zeros(n, dtype=np.int64)
        for r, vs in enumerate(self.rounds, start=1):
            for v in vs:
                out[v] = r
        return out


def burning_test(heights, domain: BoxDomain, naive: bool = False) -> BurnSchedule:
    """Burn schedule of a configuration with heights in {0,...,2d}.

    The first round takes exactly the sites at height 2d; later rounds
    take unburnt sites whose height is at least their unburnt neighbor
    count. ``naive`` switches to per-round rescans (oracle use).
    """
    h = np.asarray(heights)
    n = len(domain)
    if h.shape != (n,):
        raise ValueError("heights length does not match domain")
    if (h < 0).any() or (h > 2 * domain.d).any():
        raise ValueError(f"heights must lie in [0, {2 * domain.d}]")
    if naive:
        return _burning_naive(h, domain)
    nbr = domain.neighbors
    u = (nbr >= 0).sum(axis=1).astype(np.int64)  # unburnt in-domain neighbors
    burnt = np.zeros(n, dtype=bool)
    rounds = []
    b1 = [i for i in range(n) if h[i] == 2 * domain.d]
    rounds.append(sorted(b1))
    for v in b1:
        burnt[v] = True
    for v in b1:
        for w in nbr[v]:
            if w >= 0:
                u[w] -= 1
    frontier = [i for i in range(n) if not burnt[i] and h[i] >= u[i]]
    while frontier:
        rounds.append(sorted(frontier))
        for v in frontier:
            burnt[v] = True
        nxt = []
        seen = set()
        for v in frontier:
            for w in nbr[v]:
                if w >= 0 and not burnt[w]:
                    u[w] -= 1
                    if h[w] >= u[w] and w not in seen:
                        seen.add(w)
                        nxt.append(w)
        frontier = nxt
    leftover = sorted(int(i) for i in range(n) if not burnt[i])
    return BurnSchedule(rounds=rounds, leftover=leftover)


def _burning_naive(h, domain: BoxDomain) -> BurnSchedule:
    n = len(domain)
    nbr = domain.neighbors
    unburnt = set(range(n))
    rounds = [sorted(i for i in unburnt if h[i] == 2 * domain.d)]
    unburnt -= set(rounds[0])
    while True:
        cur = []
        for i in unburnt:
            deg = sum(1 for w in nbr[i] if w >= 0 and w in unburnt)
            if h[i] >= deg:
                cur.append(i)
        if not cur:
            break
        rounds.append(sorted(cur))
        unburnt -= set(cur)
    return BurnSchedule(rounds=rounds, leftover=sorted(unburnt))


def is_allowed(heights, domain: BoxDomain) -> bool:
    return burning_test(heights, domain).allowed
