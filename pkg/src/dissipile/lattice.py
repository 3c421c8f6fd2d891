"""Finite lattice domains in Z^d, the wired dissipative multigraph, and
the canonical direction/boundary orderings used by the coupling experiments.

Conventions fixed here and relied on everywhere else:

* Directions are ordered (+e1, -e1, +e2, -e2, +e3, -e3) and addressed by
  index 0..2d-1.
* Vertex index maps are dense, row-major by coordinate (lexicographic).
* The wired root is a single extra vertex, written as index -1 in neighbor
  tables ("outside the domain").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROOT = -1          # neighbor-table sentinel for the wired vertex
MAX_VERTICES = 50_000_000


def direction_vectors(d: int) -> np.ndarray:
    """The fixed total order (+e1, -e1, +e2, -e2, ...) as a (2d, d) array."""
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension {d}")
    out = np.zeros((2 * d, d), dtype=np.int64)
    for axis in range(d):
        out[2 * axis, axis] = 1
        out[2 * axis + 1, axis] = -1
    return out


def direction_index(vec, d: int) -> int:
    """Index of a unit vector in the fixed direction order."""
    vec = tuple(int(v) for v in vec)
    for i, row in enumerate(direction_vectors(d)):
        if tuple(row) == vec:
            return i
    raise ValueError(f"{vec} is not a unit direction in d={d}")


@dataclass(frozen=True)
class BoxDomain:
    """A finite vertex set in Z^d with a dense row-major index map.

    ``shape`` is one of "cube" (B(k) = [-k,k]^d), "ball" (Euclidean
    |x| <= k), "grid" ([0,n1) x ... rectangles) or "custom".
    Immutable after construction; safe to share across threads.
    """

    d: int
    shape: str
    k: int | None
    vertices: np.ndarray                      # (n, d) int64, lexicographic
    _index: dict = field(repr=False)
    neighbors: np.ndarray = field(repr=False)  # (n, 2d) int32, ROOT outside

    def __len__(self) -> int:
        return len(self.vertices)

    def contains(self, x) -> bool:
        return tuple(int(c) for c in x) in self._index

    def index(self, x) -> int:
        return self._index[tuple(int(c) for c in x)]

    def vertex(self, i: int) -> tuple:
        return tuple(int(c) for c in self.vertices[i])


def _finish_domain(d: int, shape: str, k: int | None, verts: np.ndarray) -> BoxDomain:
    if verts.ndim != 2 or verts.shape[1] != d:
        raise ValueError("vertex array must have shape (n, d)")
    order = np.lexsort(verts.T[::-1])  # row-major: first coordinate slowest
    verts = verts[order]
    index = {tuple(int(c) for c in row): i for i, row in enumerate(verts)}
    if len(index) != len(verts):
        raise ValueError("duplicate vertices")
    dirs = direction_vectors(d)
    nbr = np.full((len(verts), 2 * d), ROOT, dtype=np.int32)
    for i, row in enumerate(verts):
        for t in range(2 * d):
            j = index.get(tuple(int(c) for c in row + dirs[t]))
            if j is not None:
                nbr[i, t] = j
    return BoxDomain(d=d, shape=shape, k=k, vertices=verts, _index=index, neighbors=nbr)


def build_box(d: int, k: int, shape: str = "cube") -> BoxDomain:
    """Cube B(k) or Euclidean ball of radius k around the origin."""
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension {d}")
    if k < 0:
        raise ValueError("k must be >= 0")
    side = 2 * k + 1
    if side ** d > MAX_VERTICES:
        raise ValueError("domain too large for dense index map")
    axes = [np.arange(-k, k + 1, dtype=np.int64)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    if shape == "cube":
        verts = grid
    elif shape == "ball":
        verts = grid[(grid * grid).sum(axis=1) <= k * k]
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return _finish_domain(d, shape, k, verts)


def build_grid(d: int, dims) -> BoxDomain:
    """Rectangular box [0,dims[0]) x ... (e.g. the 2x2 square)."""
    dims = [int(x) for x in dims]
    if d not in (2, 3) or len(dims) != d:
        raise ValueError("dims must have length d, d in {2,3}")
    if any(x <= 0 for x in dims):
        raise ValueError("dims must be positive")
    if math.prod(dims) > MAX_VERTICES:
        raise ValueError("domain too large for dense index map")
    axes = [np.arange(n, dtype=np.int64) for n in dims]
    verts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return _finish_domain(d, "grid", None, verts)


def domain_from_vertices(d: int, vertices) -> BoxDomain:
    uniq = sorted({tuple(int(c) for c in v) for v in vertices})
    verts = np.asarray(uniq, dtype=np.int64)
    return _finish_domain(d, "custom", None, verts)


@dataclass(frozen=True)
class DissipativeGraph:
    """The wired multigraph on domain + root.

    Each vertex has 2d ordinary edge slots (one per direction; slots whose
    endpoint leaves the domain go to the root but keep their direction
    identity) plus, when ``dissipative`` is set, one dissipative slot.
    Slot 2d encodes the dissipative edge.
    """

    domain: BoxDomain
    dissipative: bool

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def nslots(self) -> int:
        return 2 * self.d + (1 if self.dissipative else 0)

    DISS = property(lambda self: 2 * self.d)

    def slot_endpoint(self, i: int, slot: int) -> int:
        """Vertex index the slot leads to, or ROOT."""
        if slot == 2 * self.d:
            if not self.dissipative:
                raise ValueError("graph has no dissipative edges")
            return ROOT
        return int(self.domain.neighbors[i, slot])

    def ordinary_root_multiplicity(self, i: int) -> int:
        return int((self.domain.neighbors[i] == ROOT).sum())

    def edge_count(self) -> tuple[int, int]:
        """(ordinary half-slot count, dissipative edge count)."""
        n = len(self.domain)
        return 2 * self.d * n, (n if self.dissipative else 0)


def build_wired_graph(domain: BoxDomain, dissipative: bool) -> DissipativeGraph:
    return DissipativeGraph(domain=domain, dissipative=dissipative)


def _as_direction_indices(P, d: int) -> list[int]:
    out = []
    for p in P:
        if isinstance(p, (int, np.integer)):
            if not 0 <= int(p) < 2 * d:
                raise ValueError(f"direction index {p} out of range for d={d}")
            out.append(int(p))
        else:
            out.append(direction_index(p, d))
    if len(set(out)) != len(out):
        raise ValueError("duplicate directions in P")
    return out


def alpha_bijection(P, K, d: int) -> dict[int, int]:
    """The fixed bijection from a direction set P onto an integer interval K.

    The i-th direction of P in the canonical direction order maps to the
    i-th smallest element of K (ascending/ascending). Directions may be
    given as indices or unit vectors; keys of the result are indices.
    """
    idx = sorted(_as_direction_indices(P, d))
    ks = sorted(int(x) for x in K)
    if not idx:
        raise ValueError("P must be nonempty")
    if len(ks) != len(idx):
        raise ValueError(f"|K| = {len(ks)} does not match |P| = {len(idx)}")
    if ks != list(range(ks[0], ks[0] + len(ks))):
        raise ValueError("K must be a contiguous integer interval")
    return dict(zip(idx, ks))


def alpha_value(P, d: int, k_start: int, direction: int) -> int:
    """alpha_{P,K}(direction) with K = {k_start, ..., k_start+|P|-1}."""
    idx = sorted(_as_direction_indices(P, d))
    return k_start + idx.index(int(direction))


def alpha_inverse(P, d: int, k_start: int, value: int) -> int:
    """Direction index with alpha_{P,K}(direction) = value."""
    idx = sorted(_as_direction_indices(P, d))
    pos = int(value) - int(k_start)
    if not 0 <= pos < len(idx):
        raise ValueError(f"value {value} outside K")
    return idx[pos]


@dataclass(frozen=True)
class BoundaryOrder:
    """Exterior boundary walk z_1..z_N followed by the box vertices
    z_{N+1}..z_{N+M}, with the earlier-vertex witness for each boundary j.

    witness[j] is the index i(j) < j of the earlier boundary vertex at
    minimal lattice distance (ties to the smallest index); witness[0] = -1.
    For k >= 1 the witness distance is at most 2; for k = 0 it equals 2.
    """

    k: int
    boundary: np.ndarray       # (N, d) int64
    interior: np.ndarray       # (M, d) int64
    witness: np.ndarray        # (N,) int32
    witness_dist: np.ndarray   # (N,) int32


def _exterior_boundary(domain: BoxDomain) -> np.ndarray:
    d = domain.d
    dirs = direction_vectors(d)
    seen = set()
    for v in domain.vertices:
        for t in range(2 * d):
            w = tuple(int(c) for c in v + dirs[t])
            if w not in domain._index:
                seen.add(w)
    return np.asarray(sorted(seen), dtype=np.int64)


def _plate_order_d3(k: int) -> list[tuple]:
    # Plates listed so each one starts within lattice distance 2 of an
    # earlier plate; inside a plate, row-major order keeps consecutive
    # cells adjacent.
    rng_asc = list(range(-k, k + 1))
    rng_desc = list(range(k, -k - 1, -1))
    plates = [
        (0, k + 1, rng_asc, rng_asc),     # +e1: (k+1, y, z)
        (1, k + 1, rng_desc, rng_asc),    # +e2: (x, k+1, z), x descending
        (0, -k - 1, rng_desc, rng_asc),   # -e1: y descending
        (1, -k - 1, rng_asc, rng_asc),    # -e2: x ascending
        (2, k + 1, rng_desc, rng_asc),    # +e3: (x, y, k+1), x descending
        (2, -k - 1, rng_desc, rng_asc),   # -e3
    ]
    cells = []
    for axis, fixed, rng_a, rng_b in plates:
        free = [a for a in range(3) if a != axis]
        for a in rng_a:
            for b in rng_b:
                cell = [0, 0, 0]
                cell[axis] = fixed
                cell[free[0]] = a
                cell[free[1]] = b
                cells.append(tuple(cell))
    return cells


def boundary_enumeration(domain: BoxDomain) -> BoundaryOrder:
    """Ordered enumeration of ext-boundary then box for a cube B(k)."""
    if domain.shape != "cube":
        raise ValueError("boundary enumeration is defined for cube domains")
    d, k = domain.d, int(domain.k)
    ext = _exterior_boundary(domain)
    if d == 2:
        ang = np.arctan2(ext[:, 1].astype(float), ext[:, 0].astype(float))
        ext = ext[np.argsort(ang, kind="stable")]
    else:
        cells = _plate_order_d3(k)
        ext = np.asarray(cells, dtype=np.int64)
    n = len(ext)
    witness = np.full(n, -1, dtype=np.int32)
    wdist = np.zeros(n, dtype=np.int32)
    for j in range(1, n):
        dist = np.abs(ext[:j] - ext[j]).sum(axis=1)
        witness[j] = int(np.argmin(dist))
        wdist[j] = int(dist[witness[j]])
    return BoundaryOrder(k=k, boundary=ext, interior=domain.vertices.copy(),
                         witness=witness, witness_dist=wdist)
