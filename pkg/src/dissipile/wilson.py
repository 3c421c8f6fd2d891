"""Wilson's algorithm on the wired graph, the marker-coupled pair
sampler, and the two-walk quadruple used by the pair-reduction estimates.

All samplers are driven by per-vertex arrow stacks generated lazily from
a counter-based hash keyed by (seed, vertex, depth). Running the same
stacks with markers ignored or respected yields the two coupled trees;
that the two executions read identical randomness is the correctness
crux of the coupling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import DissipativeGraph, direction_vectors
from .treecode import SpanningTree

_M64 = (1 << 64) - 1
_MA = 0x9E3779B97F4A7C15
_MB = 0xBF58476D1CE4E5B9
_MC = 0x94D049BB133111EB
_MD = 0xD6E8FEB86659FD93

_OFF = 1 << 20
_SPAN = 1 << 21


def _mix_py(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MB) & _M64
    z = ((z ^ (z >> 27)) * _MC) & _M64
    return (z ^ (z >> 31)) & _M64


def pack_vertex(coords) -> int:
    c = list(int(v) for v in coords) + [0, 0]
    return ((c[0] + _OFF) * _SPAN + (c[1] + _OFF)) * _SPAN + (c[2] + _OFF)


def unpack_vertex(key: int, d: int) -> tuple:
    z = key % _SPAN - _OFF
    key //= _SPAN
    y = key % _SPAN - _OFF
    x = key // _SPAN - _OFF
    return (x, y) if d == 2 else (x, y, z)


@dataclass(frozen=True)
class ArrowStacks:
    """Lazily generated per-vertex arrow stacks.

    arrow(vertex_key, depth) returns (direction index, red marker) and is
    a pure function of (seed, vertex, depth): the stacks never mutate and
    both coupled samplers can replay them independently.
    """

    seed: int
    d: int
    lam: float

    def arrow(self, vertex_key: int, depth: int) -> tuple[int, bool]:
        h = _mix_py((self.seed & _M64) ^ ((_MA * (vertex_key & _M64)) & _M64))
        h = _mix_py(h ^ ((_MD * (depth & _M64)) & _M64))
        direction = h % (2 * self.d)
        u = (_mix_py(h ^ _MD) >> 11) * (1.0 / 9007199254740992.0)
        return int(direction), bool(u < self.lam)


def _order_array(graph: DissipativeGraph, order) -> np.ndarray:
    n = len(graph.domain)
    if order is None:
        return np.arange(n, dtype=np.int64)
    idx = np.asarray([graph.domain.index(v) if not isinstance(v, (int, np.integer))
                      else int(v) for v in order], dtype=np.int64)
    if sorted(idx.tolist()) != list(range(n)):
        raise ValueError("order must enumerate every vertex exactly once")
    return idx


def wilson_sample_audit(graph: DissipativeGraph, gamma: float, order=None,
                        seed: int = 0):
    """Sample plus the exact arrow accounting (consumed, kept, popped)."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma > 0 and not graph.dissipative:
        raise ValueError("gamma > 0 requires a dissipative graph")
    d = graph.d
    lam = gamma / (2 * d + gamma)
    idx = _order_array(graph, order)
    parents = np.full(len(graph.domain), -1, dtype=np.int8)
    consumed, kept, popped = _kernels.wilson_finite(
        np.uint64(seed), np.float64(lam), gamma > 0,
        graph.domain.neighbors, idx, parents)
    return SpanningTree(graph=graph, parents=parents), int(consumed), \
        int(kept), int(popped)


def wilson_sample(graph: DissipativeGraph, gamma: float, order=None,
                  seed: int = 0) -> SpanningTree:
    """One spanning tree with law proportional to gamma^H(t); gamma = 0
    is the uniform tree without dissipative edges. The law does not
    depend on the vertex order."""
    return wilson_sample_audit(graph, gamma, order, seed)[0]


def coupled_wilson_pair(graph: DissipativeGraph, gamma: float, order=None,
                        seed: int = 0):
    """(tree0, treeg) from one set of arrow stacks: tree0 ignores the red
    markers, treeg follows them to the root. Marginally tree0 is the
    gamma = 0 sample and treeg the gamma sample; at lam = 0 they are
    equal."""
    if not graph.dissipative:
        raise ValueError("coupled pair needs the dissipative graph")
    d = graph.d
    lam = gamma / (2 * d + gamma)
    idx = _order_array(graph, order)
    n = len(graph.domain)
    p0 = np.full(n, -1, dtype=np.int8)
    pg = np.full(n, -1, dtype=np.int8)
    _kernels.wilson_finite(np.uint64(seed), np.float64(lam), False,
                           graph.domain.neighbors, idx, p0)
    _kernels.wilson_finite(np.uint64(seed), np.float64(lam), True,
                           graph.domain.neighbors, idx, pg)
    graph0 = DissipativeGraph(domain=graph.domain, dissipative=False)
    return SpanningTree(graph=graph0, parents=p0), \
        SpanningTree(graph=graph, parents=pg)


@dataclass
class TwoPathResult:
    """The four loop-erasures of the pair reduction, with event flags.

    Flags: hit_before_exit is the first walk's loop-erasure being hit by
    the second walk inside B(m); survive_to_exit is the second clock
    outliving the B(m) exit; prefix_stable is the killed loop-erasure
    agreeing with the unkilled one through its last B(m) visit.
    """

    le_inf: np.ndarray
    le_killed: np.ndarray
    le_s1_hit: np.ndarray
    le_s1_hit_or_kill: np.ndarray
    hit_before_exit: bool
    survive_to_exit: bool
    prefix_stable: bool
    s1_avoids_killed_le: bool
    inconclusive: bool


def _keys_to_coords(buf: np.ndarray, length: int, d: int) -> np.ndarray:
    keys = buf[:length].astype(np.int64)
    z = keys % _SPAN - _OFF
    rest = keys // _SPAN
    y = rest % _SPAN - _OFF
    x = rest // _SPAN - _OFF
    cols = [x, y] if d == 2 else [x, y, z]
    return np.stack(cols, axis=1)


def two_path_quadruple(m: int, n_big: int, lam: float, seed: int,
                       budget: int | None = None) -> TwoPathResult:
    """One replica of the two-walk experiment in dimension 3: a walk from
    the origin (truncated outside B(n_big), with its killing clock) and a
    walk from a lattice neighbor sharing the construction."""
    d = 3
    if n_big <= m:
        raise ValueError("need n_big > m")
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    if budget is None:
        budget = int(64 * n_big * n_big + 64 / max(lam, 1e-9))
    cap = 1 << 16
    a = np.empty(cap, np.int64)
    b = np.empty(cap, np.int64)
    c = np.empty(cap, np.int64)
    e = np.empty(cap, np.int64)
    res = _kernels.two_path_one(np.uint64(seed), 2 * d, dirs3, np.int64(m),
                                np.int64(n_big), np.float64(lam),
                                np.int64(budget), a, b, c, e)
    lin, lt, ls1, ls1k, fi, fii, fiii, fno, inc = res
    return TwoPathResult(
        le_inf=_keys_to_coords(a, lin, d),
        le_killed=_keys_to_coords(b, lt, d),
        le_s1_hit=_keys_to_coords(c, ls1, d),
        le_s1_hit_or_kill=_keys_to_coords(e, ls1k, d),
        hit_before_exit=bool(fi), survive_to_exit=bool(fii),
        prefix_stable=bool(fiii), s1_avoids_killed_le=bool(fno),
        inconclusive=bool(inc))


def two_path_flags(m: int, n_big: int, lam: float, replicas: int, seed: int,
                   threads: int = 1) -> dict:
    """Monte Carlo fractions of the pair-reduction events over many
    replicas; inconclusive replicas are counted against every event."""
    d = 3
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    budget = int(64 * n_big * n_big + 64 / max(lam, 1e-9))
    flags = np.zeros((replicas, 5), dtype=np.int8)
    master = np.uint64(_kernels.derive_seed(np.uint64(seed), np.uint64(0x2247)))

    def work(lo, hi):
        _kernels.two_path_flag_block(master, lo, hi, 2 * d, dirs3,
                                     np.int64(m), np.int64(n_big),
                                     np.float64(lam), np.int64(budget),
                                     flags[lo:hi])

    if threads <= 1:
        work(0, replicas)
    else:
        bounds = np.linspace(0, replicas, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(lambda i: work(bounds[i], bounds[i + 1]),
                        range(threads)))
    ok = flags[:, 4] == 0
    out = {
        "replicas": replicas,
        "inconclusive": int((~ok).sum()),
        "hit_before_exit": float((flags[:, 0] & ok).sum() / replicas),
        "survive_to_exit": float((flags[:, 1] & ok).sum() / replicas),
        "prefix_stable": float((flags[:, 2] & ok).sum() / replicas),
        "s1_avoids_killed_le": float((flags[:, 3] & ok).sum() / replicas),
    }
    all_ok = (flags[:, 0] & flags[:, 1] & flags[:, 2] & ok).sum()
    out["all_conditions"] = float(all_ok / replicas)
    return out


def wilson_sample_batch(graph: DissipativeGraph, gamma: float, samples: int,
                        seed: int, order=None) -> np.ndarray:
    """Parent-slot arrays of many independent samples, (samples, n) int8."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma > 0 and not graph.dissipative:
        raise ValueError("gamma > 0 requires a dissipative graph")
    lam = gamma / (2 * graph.d + gamma)
    idx = _order_array(graph, order)
    out = np.full((samples, len(graph.domain)), -1, dtype=np.int8)
    _kernels.wilson_batch(np.uint64(seed), np.float64(lam), gamma > 0,
                          graph.domain.neighbors, idx, out)
    return out


def coupled_pair_batch(graph: DissipativeGraph, gamma: float, samples: int,
                       seed: int, order=None):
    """Parent-slot arrays of many coupled pairs; rows share randomness."""
    if not graph.dissipative:
        raise ValueError("coupled pairs need the dissipative graph")
    lam = gamma / (2 * graph.d + gamma)
    idx = _order_array(graph, order)
    n = len(graph.domain)
    out0 = np.full((samples, n), -1, dtype=np.int8)
    outg = np.full((samples, n), -1, dtype=np.int8)
    _kernels.coupled_wilson_batch(np.uint64(seed), np.float64(lam),
                                  graph.domain.neighbors, idx, out0, outg)
    return out0, outg
