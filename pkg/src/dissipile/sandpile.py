"""Height configurations, legal topplings, stabilization, the sandpile
Markov chain, and the forbidden-subconfiguration scan.

Heights live in flat numpy arrays ordered by the domain index map:
int64 in discrete mode (threshold 2d), float64 in continuous mode
(threshold 2d + gamma). Mass sent to the root is lost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _kernels
from .lattice import BoxDomain, build_box, build_grid, domain_from_vertices

FSC_EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class TopplingParams:
    """Toppling rule: threshold 2d + gamma; gamma = 0 in discrete mode."""

    d: int
    gamma: float = 0.0
    mode: str = "discrete"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"unsupported dimension {self.d}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "discrete" and self.gamma != 0:
            raise ValueError("discrete mode requires gamma = 0")

    @property
    def threshold(self) -> float:
        return 2 * self.d + self.gamma

    @classmethod
    def discrete(cls, d: int) -> "TopplingParams":
        return cls(d=d, gamma=0.0, mode="discrete")

    @classmethod
    def continuous(cls, d: int, gamma: float) -> "TopplingParams":
        return cls(d=d, gamma=float(gamma), mode="continuous")


def _check_heights(heights: np.ndarray, domain: BoxDomain, params: TopplingParams) -> np.ndarray:
    if heights.shape != (len(domain),):
        raise ValueError("heights length does not match domain")
    if params.mode == "discrete":
        h = np.asarray(heights, dtype=np.int64)
        if (h < 0).any():
            raise ValueError("negative height")
    else:
        h = np.asarray(heights, dtype=np.float64)
        if not np.isfinite(h).all() or (h < 0).any():
            raise ValueError("heights must be finite and non-negative")
    return h


def is_stable(heights: np.ndarray, params: TopplingParams) -> bool:
    if params.mode == "discrete":
        return bool((np.asarray(heights) <= 2 * params.d - 1).all())
    return bool((np.asarray(heights) < params.threshold).all())


def topple(heights, x, domain: BoxDomain, params: TopplingParams) -> np.ndarray:
    """Single legal toppling at x; raises if x is below the threshold."""
    h = _check_heights(np.asarray(heights), domain, params).copy()
    i = domain.index(x) if not isinstance(x, (int, np.integer)) else int(x)
    if not 0 <= i < len(domain):
        raise ValueError("vertex outside domain")
    if h[i] < params.threshold:
        raise ValueError(f"illegal toppling: height {h[i]} below threshold {params.threshold}")
    if params.mode == "discrete":
        h[i] -= 2 * params.d
    else:
        h[i] -= params.threshold
    for j in domain.neighbors[i]:
        if j >= 0:
            h[j] += 1
    return h


def stabilize(heights, domain: BoxDomain, params: TopplingParams,
              order: str = "queue", seed: int = 0):
    """Stabilize by legal topplings; returns (stable heights, odometer).

    order "queue" is the deterministic FIFO schedule; "random" performs
    one hash-chosen legal toppling at a time (used to exercise the
    Abelian property, the result is the same either way).
    """
    h = _check_heights(np.asarray(heights), domain, params).copy()
    odo = np.zeros(len(domain), dtype=np.int64)
    nbr = domain.neighbors
    if params.mode == "discrete":
        thr = np.int64(2 * params.d)
        if order == "queue":
            _kernels.stabilize_int(h, nbr, thr, odo)
        elif order == "random":
            _kernels.stabilize_int_random(h, nbr, thr, odo, np.uint64(seed))
        else:
            raise ValueError(f"unknown order {order!r}")
    else:
        thr = np.float64(params.threshold)
        if order == "queue":
            _kernels.stabilize_float(h, nbr, thr, odo)
        elif order == "random":
            _kernels.stabilize_float_random(h, nbr, thr, odo, np.uint64(seed))
        else:
            raise ValueError(f"unknown order {order!r}")
    return h, odo


def toppling_matrix(domain: BoxDomain, params: TopplingParams) -> np.ndarray:
    """Dense toppling matrix restricted to the domain (wired boundary)."""
    n = len(domain)
    m = np.zeros((n, n), dtype=np.float64)
    np.fill_diagonal(m, params.threshold)
    for i in range(n):
        for j in domain.neighbors[i]:
            if j >= 0:
                m[i, j] = -1.0
    return m


def chain_step(heights, domain: BoxDomain, params: TopplingParams,
               x=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """One Markov chain step: add a unit at x (or a uniform site) and
    stabilize. Input must be stable."""
    h = _check_heights(np.asarray(heights), domain, params)
    if not is_stable(h, params):
        raise ValueError("chain_step requires a stable configuration")
    if x is None:
        if rng is None:
            raise ValueError("need an addition site or an rng")
        i = int(rng.integers(0, len(domain)))
    else:
        i = domain.index(x) if not isinstance(x, (int, np.integer)) else int(x)
    h = h.copy()
    h[i] += 1
    out, _ = stabilize(h, domain, params)
    return out


def run_chain(domain: BoxDomain, params: TopplingParams, steps: int,
              seed: int, heights=None, record: str | None = None,
              record_vertex=None):
    """Drive the chain for many steps with uniform additions.

    record "vertex" returns the height at record_vertex after every step;
    record "code" returns the mixed-radix encoding of the full state
    (stable discrete states only, tiny domains). Returns (final, trace).
    """
    if params.mode != "discrete":
        raise ValueError("bulk chain driver supports discrete mode only")
    n = len(domain)
    if heights is None:
        h = np.zeros(n, dtype=np.int64)
    else:
        h = _check_heights(np.asarray(heights), domain, params).copy()
    rng = np.random.default_rng(seed)
    sites = rng.integers(0, n, size=steps, dtype=np.int64)
    thr = np.int64(2 * params.d)
    if record is None:
        out = np.empty(0, dtype=np.int64)
        _kernels.chain_record_vertex(h, domain.neighbors, thr, sites, 0,
                                     np.empty(steps, dtype=np.int64))
        return h, out
    out = np.empty(steps, dtype=np.int64)
    if record == "vertex":
        v = domain.index(record_vertex)
        _kernels.chain_record_vertex(h, domain.neighbors, thr, sites, v, out)
    elif record == "code":
        base = 2 * params.d
        if base ** n > 2 ** 62:
            raise ValueError("domain too large for state encoding")
        _kernels.chain_record_code(h, domain.neighbors, thr, sites,
                                   np.int64(base), out)
    else:
        raise ValueError(f"unknown record {record!r}")
    return h, out


def fsc_scan(heights, domain: BoxDomain, exhaustive: bool | None = None):
    """Search for a forbidden subconfiguration.

    Returns a witness as a sorted list of vertex indices, or None. The
    exhaustive subset scan (smallest witness first) is only allowed for
    |domain| <= 20; larger domains fall back to the burning test, whose
    leftover set is the witness.
    """
    h = np.asarray(heights)
    n = len(domain)
    if exhaustive is None:
        exhaustive = n <= FSC_EXHAUSTIVE_LIMIT
    if exhaustive:
        if n > FSC_EXHAUSTIVE_LIMIT:
            raise ValueError("domain too large for exhaustive FSC scan")
        nbr = domain.neighbors
        for size in range(1, n + 1):
            for comb in combinations(range(n), size):
                w = set(comb)
                ok = True
                for y in comb:
                    deg_in = sum(1 for z in nbr[y] if z >= 0 and z in w)
                    if not h[y] < deg_in:
                        ok = False
                        break
                if ok:
                    return sorted(w)
        return None
    from .burning import burning_test
    sched = burning_test(h, domain)
    return sorted(sched.leftover) if sched.leftover else None


# --- configuration JSON ----------------------------------------------------

def config_to_json(heights, domain: BoxDomain, params: TopplingParams) -> str:
    doc = {
        "d": params.d,
        "gamma": params.gamma,
        "shape": domain.shape,
        "heights": [int(x) if params.mode == "discrete" else float(x)
                    for x in np.asarray(heights)],
    }
    if domain.shape in ("cube", "ball"):
        doc["k"] = int(domain.k)
    elif domain.shape == "grid":
        doc["dims"] = [int(domain.vertices[:, a].max()) + 1 for a in range(domain.d)]
    else:
        doc["vertices"] = [list(map(int, v)) for v in domain.vertices]
    return json.dumps(doc, sort_keys=True)


def config_from_json(text: str):
    """Parse a configuration document; returns (heights, domain, params)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid JSON: {e}") from e
    for key in ("d", "gamma", "shape", "heights"):
        if key not in doc:
            raise ValueError(f"missing config field {key!r}")
    d = int(doc["d"])
    gamma = float(doc["gamma"])
    shape = doc["shape"]
    if shape in ("cube", "ball"):
        domain = build_box(d, int(doc["k"]), shape)
    elif shape == "grid":
        domain = build_grid(d, doc["dims"])
    elif shape == "custom":
        domain = domain_from_vertices(d, doc["vertices"])
    else:
        raise ValueError(f"unknown shape {shape!r}")
    heights = doc["heights"]
    if not isinstance(heights, list) or len(heights) != len(domain):
        raise ValueError("heights array has the wrong length")
    if gamma == 0 and all(isinstance(x, int) for x in heights):
        params = TopplingParams.discrete(d)
        arr = np.asarray(heights, dtype=np.int64)
    else:
        params = TopplingParams.continuous(d, gamma)
        arr = np.asarray(heights, dtype=np.float64)
    arr = _check_heights(arr, domain, params)
    return arr, domain, params
