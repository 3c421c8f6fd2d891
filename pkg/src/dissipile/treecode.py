"""Coding of sandpile configurations by rooted spanning trees.

Covers the discretization of continuous heights, its uniform inverse, the
bijection between allowed starred configurations and spanning trees of
the wired dissipative graph, and the local height evaluation from tree
paths used by the truncated infinite-volume samplers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .burning import burning_test
from .lattice import (ROOT, BoxDomain, DissipativeGraph, alpha_inverse,
                      alpha_value, direction_index, direction_vectors)


def star_height_count(xi, d: int) -> int:
    """H(xi): number of sites at the top value 2d."""
    return int((np.asarray(xi) == 2 * d).sum())


def discretize(heights, d: int) -> np.ndarray:
    """Floor map with the 2d cap: h <= eta < h+1 -> h, eta >= 2d -> 2d."""
    h = np.asarray(heights, dtype=np.float64)
    if not np.isfinite(h).all() or (h < 0).any():
        raise ValueError("heights must be finite and non-negative")
    out = np.floor(h).astype(np.int64)
    np.minimum(out, 2 * d, out=out)
    return out.astype(np.uint8)


def attach_uniform_heights(xi, d: int, gamma: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Conditionally uniform heights over a starred configuration:
    Unif(h, h+1) below the top value, Unif(2d, 2d+gamma) at it."""
    xi = np.asarray(xi)
    if (xi < 0).any() or (xi > 2 * d).any():
        raise ValueError("star heights out of range")
    top = xi == 2 * d
    if top.any() and gamma <= 0:
        raise ValueError("height 2d requires gamma > 0")
    u = rng.random(xi.shape)
    out = xi + u
    out[top] = 2 * d + gamma * u[top]
    return out


@dataclass(frozen=True)
class SpanningTree:
    """Parent map on the domain: slot 0..2d-1 is the ordinary edge in that
    direction (to the root when it leaves the domain), slot 2d the
    dissipative edge."""

    graph: DissipativeGraph
    parents: np.ndarray  # (n,) int8

    def __post_init__(self):
        object.__setattr__(self, "parents",
                           np.asarray(self.parents, dtype=np.int8))

    @property
    def d(self) -> int:
        return self.graph.d

    def H(self) -> int:
        return int((self.parents == 2 * self.d).sum())

    def parent_vertex(self, i: int) -> int:
        return self.graph.slot_endpoint(i, int(self.parents[i]))

    def path_to_root(self, i: int) -> list[int]:
        """Vertex indices from i to the root (ROOT sentinel included)."""
        out = [i]
        seen = {i}
        v = i
        while True:
            v = self.parent_vertex(v)
            out.append(v)
            if v == ROOT:
                return out
            if v in seen:
                raise ValueError("parent map contains a cycle")
            seen.add(v)

    def validate(self) -> None:
        n = len(self.graph.domain)
        d = self.d
        for i in range(n):
            s = int(self.parents[i])
            if s == 2 * d:
                if not self.graph.dissipative:
                    raise ValueError("dissipative parent on a graph without dissipation")
            elif not 0 <= s < 2 * d:
                raise ValueError(f"invalid parent slot {s}")
        state = np.zeros(n, dtype=np.int8)  # 0 new, 1 active, 2 done
        for i in range(n):
            if state[i]:
                continue
            chain = []
            v = i
            while v != ROOT and state[v] == 0:
                state[v] = 1
                chain.append(v)
                v = self.parent_vertex(v)
            if v != ROOT and state[v] == 1:
                raise ValueError("parent map contains a cycle")
            for u in chain:
                state[u] = 2

    def key(self) -> bytes:
        return self.parents.tobytes()


def tree_to_json(tree: SpanningTree) -> str:
    d = tree.d
    pairs = []
    for i, row in enumerate(tree.graph.domain.vertices):
        s = int(tree.parents[i])
        pairs.append([list(map(int, row)), "diss" if s == 2 * d else s])
    return json.dumps(pairs)


def tree_from_json(text: str, graph: DissipativeGraph) -> SpanningTree:
    pairs = json.loads(text)
    n = len(graph.domain)
    if len(pairs) != n:
        raise ValueError("wrong number of parent entries")
    parents = np.full(n, -1, dtype=np.int8)
    for vert, slot in pairs:
        i = graph.domain.index(vert)
        parents[i] = 2 * graph.d if slot == "diss" else int(slot)
    tree = SpanningTree(graph=graph, parents=parents)
    tree.validate()
    return tree


def _round_data(graph: DissipativeGraph, rounds: np.ndarray, i: int):
    """(n_x, P-slots, K-start) for a vertex burning at round >= 2.

    Endpoint rounds treat the root as burnt at time 0; at round 2 the
    root also counts as part of the previous round, which is what lets
    boundary vertices pick ordinary edges to the root.
    """
    d = graph.d
    r = int(rounds[i])
    n_x = 0
    p_slots = []
    for t in range(2 * d):
        ep = graph.slot_endpoint(i, t)
        ep_round = 0 if ep == ROOT else int(rounds[ep])
        if ep == ROOT or (ep_round != 0 and ep_round < r):
            n_x += 1
        if (ep != ROOT and ep_round == r - 1) or (ep == ROOT and r == 2):
            p_slots.append(t)
    return n_x, p_slots, 2 * d - n_x


def sigma(xi, graph: DissipativeGraph) -> SpanningTree:
    """Spanning tree of an allowed starred configuration.

    Sites burning first (height 2d) take their dissipative edge; a site
    burning at round i >= 2 takes the ordinary edge selected by the fixed
    direction coding applied to its height.
    """
    domain = graph.domain
    d = graph.d
    xi = np.asarray(xi)
    sched = burning_test(xi, domain)
    if not sched.allowed:
        raise ValueError("configuration is not allowed")
    rounds = sched.round_of(len(domain))
    parents = np.full(len(domain), -1, dtype=np.int8)
    for i in range(len(domain)):
        if rounds[i] == 1:
            if not graph.dissipative:
                raise ValueError("height 2d requires a dissipative graph")
            parents[i] = 2 * d
        else:
            n_x, p_slots, k_start = _round_data(graph, rounds, i)
            parents[i] = alpha_inverse(p_slots, d, k_start, int(xi[i]))
    return SpanningTree(graph=graph, parents=parents)


def phi(tree: SpanningTree) -> np.ndarray:
    """Inverse coding: burn rounds are read off tree distances, then each
    height is the direction-code of the parent edge."""
    tree.validate()
    graph = tree.graph
    domain = graph.domain
    d = tree.d
    n = len(domain)
    depth = np.full(n, -1, dtype=np.int64)
    has_b1_anc = np.zeros(n, dtype=bool)
    diss = tree.parents == 2 * d

    def resolve(i):
        chain = []
        v = i
        while v != ROOT and depth[v] < 0:
            chain.append(v)
            v = tree.parent_vertex(v)
        base_depth = 0 if v == ROOT else int(depth[v])
        base_anc = False if v == ROOT else bool(has_b1_anc[v])
        for u in reversed(chain):
            base_depth += 1
            base_anc = base_anc or bool(diss[u])
            depth[u] = base_depth
            has_b1_anc[u] = base_anc

    for i in range(n):
        resolve(i)
    rounds = np.where(diss, 1, depth - np.where(has_b1_anc, 1, 0) + 1)
    xi = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        if diss[i]:
            xi[i] = 2 * d
        else:
            n_x, p_slots, k_start = _round_data(graph, rounds, i)
            slot = int(tree.parents[i])
            if slot not in p_slots:
                raise ValueError("tree is inconsistent with its burn rounds")
            xi[i] = alpha_value(p_slots, d, k_start, slot)
    return xi


def local_height_from_paths(paths: dict, x, d: int) -> int:
    """Height at x from the tree paths of x and its lattice neighbors.

    ``paths`` maps each offset y with |y| <= 1 (as a tuple, including the
    zero offset) to the path of x+y: a sequence of lattice vertices
    walking toward the root, terminated by None exactly when the path
    reaches the root. A path whose first step is the root jump yields the
    top height 2d. Otherwise the meeting vertex is the first vertex of
    x's path common to all paths, and heights follow the direction coding
    of relative distances to it.
    """
    dirs = [tuple(v) for v in direction_vectors(d)]
    zero = tuple([0] * d)
    need = [zero] + dirs
    for y in need:
        if tuple(y) not in paths:
            raise ValueError(f"missing path for offset {y}")
    norm = {tuple(k): [tuple(v) if v is not None else None for v in p]
            for k, p in paths.items()}
    px = norm[zero]
    x = tuple(int(c) for c in x)
    if not px or px[0] != x:
        raise ValueError("path of x must start at x")
    if len(px) < 2:
        raise ValueError("path of x is too short")
    if px[1] is None:
        return 2 * d
    sets = {y: set(norm[y]) for y in dirs}
    v_meet = None
    for v in px:
        if all(v in sets[y] for y in dirs):
            v_meet = v
            break
    if v_meet is None:
        raise ValueError("paths end before meeting; truncation too short")
    dist = {}
    for y in need:
        p = norm[y]
        if p and p[0] != (x if y == zero else tuple(a + b for a, b in zip(x, y))):
            raise ValueError(f"path for offset {y} starts at the wrong vertex")
        dist[y] = p.index(v_meet)
    dx = dist[zero]
    n_x = sum(1 for y in dirs if dist[y] < dx)
    p_dirs = [y for y in dirs if dist[y] == dx - 1]
    step = tuple(a - b for a, b in zip(px[1], x))
    ydir = direction_index(step, d)
    return alpha_value(p_dirs, d, 2 * d - n_x, ydir)


def phi_batch_no_diss(parents_batch: np.ndarray,
                      graph: DissipativeGraph) -> np.ndarray:
    """Vectorized inverse coding for batches of trees without dissipative
    edges (where burn rounds reduce to root distances)."""
    d = graph.d
    pb = np.asarray(parents_batch, dtype=np.int64)
    if (pb >= 2 * d).any():
        raise ValueError("batch contains dissipative parents")
    n = pb.shape[1]
    nbr = graph.domain.neighbors.astype(np.int64)
    pv = np.take_along_axis(np.broadcast_to(nbr, (pb.shape[0], n, 2 * d)),
                            pb[:, :, None], axis=2)[:, :, 0]
    depth = np.ones(pb.shape, dtype=np.int64)
    for _ in range(n):
        pd = np.take_along_axis(depth, np.maximum(pv, 0), axis=1)
        depth = np.where(pv < 0, 1, pd + 1)
    ep_depth = np.zeros((pb.shape[0], n, 2 * d), dtype=np.int64)
    for t in range(2 * d):
        col = nbr[:, t]
        dep = np.where(col < 0, 0, depth[:, np.maximum(col, 0)])
        ep_depth[:, :, t] = dep
    own = depth[:, :, None]
    n_x = (ep_depth < own).sum(axis=2)
    in_p = ep_depth == own - 1
    slots = np.arange(2 * d)[None, None, :]
    rank = (in_p & (slots < pb[:, :, None])).sum(axis=2)
    return (2 * d - n_x + rank).astype(np.uint8)
