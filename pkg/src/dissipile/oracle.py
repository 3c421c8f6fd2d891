"""Brute-force ground truth on tiny domains: exhaustive allowed-config
enumeration, explicit spanning-tree enumeration with dissipation weights,
matrix-tree determinants in exact rational arithmetic, and exact Markov
chain stationary distributions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import _kernels
from .burning import burning_test
from .lattice import ROOT, BoxDomain, DissipativeGraph, build_wired_graph
from .sandpile import TopplingParams, fsc_scan
from .treecode import SpanningTree

ENUM_CONFIG_LIMIT = 9
ENUM_TREE_LIMIT = 2_000_000
DET_EXACT_LIMIT = 400


@dataclass
class ExactEnumeration:
    """Exhaustive answers for one domain."""

    domain: BoxDomain
    allowed: list = field(default_factory=list)       # tuples of heights
    trees: list = field(default_factory=list)         # SpanningTree
    tree_h: list = field(default_factory=list)        # dissipative edge counts
    z_weighted: float | None = None                   # sum gamma^H(t)


def enumerate_allowed(domain: BoxDomain, starred: bool) -> list[tuple]:
    """All allowed configurations, decided by the burning test and
    cross-checked against the exhaustive FSC scan."""
    n = len(domain)
    if n > ENUM_CONFIG_LIMIT:
        raise ValueError("domain too large for exhaustive enumeration")
    d = domain.d
    top = 2 * d if starred else 2 * d - 1
    out = []
    for cfg in product(range(top + 1), repeat=n):
        arr = np.asarray(cfg, dtype=np.int64)
        by_burning = burning_test(arr, domain).allowed
        by_fsc = fsc_scan(arr, domain, exhaustive=True) is None
        if by_burning != by_fsc:
            raise AssertionError(f"burning and FSC scan disagree on {cfg}")
        if by_burning:
            out.append(cfg)
    return out


def count_trees_determinant(domain: BoxDomain, gamma: float = 0.0):
    """det of the toppling matrix restricted to the domain.

    Exact rational arithmetic (gamma converted exactly) up to a few
    hundred vertices, float64 beyond. Returns int when gamma == 0.
    """
    n = len(domain)
    if n > 10_000:
        raise ValueError("domain too large")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if n <= DET_EXACT_LIMIT:
        g = Fraction(gamma)
        diag = 2 * domain.d + g
        m = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            m[i][i] = diag
            for j in domain.neighbors[i]:
                if j >= 0:
                    m[i][int(j)] = Fraction(-1)
        det = Fraction(1)
        for col in range(n):
            piv = None
            for r in range(col, n):
                if m[r][col] != 0:
                    piv = r
                    break
            if piv is None:
                return 0
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                det = -det
            det *= m[col][col]
            inv = m[col][col]
            for r in range(col + 1, n):
                f = m[r][col] / inv
                if f:
                    row_r = m[r]
                    row_c = m[col]
                    for c in range(col, n):
                        row_r[c] -= f * row_c[c]
        if det.denominator == 1:
            val = int(det)
            return val if gamma == 0 else float(val)
        return float(det)
    from .sandpile import toppling_matrix
    params = TopplingParams.continuous(domain.d, gamma) if gamma else \
        TopplingParams.discrete(domain.d)
    return float(np.linalg.det(toppling_matrix(domain, params)))


def enumerate_trees(domain: BoxDomain, dissipative: bool,
                    gamma: float = 0.0) -> ExactEnumeration:
    """Explicit spanning trees by parent-slot assignment with cycle
    rejection; fills tree list, H values and the weighted total."""
    graph = build_wired_graph(domain, dissipative)
    n = len(domain)
    nslots = graph.nslots
    if nslots ** n > ENUM_TREE_LIMIT:
        raise ValueError("tree enumeration would blow up")
    res = ExactEnumeration(domain=domain)
    z = Fraction(0)
    g = Fraction(gamma)
    for combo in product(range(nslots), repeat=n):
        state = [0] * n  # 0 new, 1 active, 2 done
        ok = True
        for i in range(n):
            if state[i]:
                continue
            chain = []
            v = i
            while v != ROOT and state[v] == 0:
                state[v] = 1
                chain.append(v)
                s = combo[v]
                v = ROOT if s == 2 * domain.d else int(domain.neighbors[v, s])
            if v != ROOT and state[v] == 1:
                ok = False
                break
            for u in chain:
                state[u] = 2
        if not ok:
            continue
        tree = SpanningTree(graph=graph,
                            parents=np.asarray(combo, dtype=np.int8))
        h = tree.H()
        res.trees.append(tree)
        res.tree_h.append(h)
        z += g ** h
    res.z_weighted = float(z) if gamma else int(z)
    return res


def state_code(heights, base: int) -> int:
    code = 0
    mult = 1
    for h in heights:
        code += int(h) * mult
        mult *= base
    return code


def state_decode(code: int, base: int, n: int) -> tuple:
    out = []
    for _ in range(n):
        out.append(code % base)
        code //= base
    return tuple(out)


def exact_stationary(domain: BoxDomain, params: TopplingParams,
                     tol: float = 1e-12, max_iter: int = 200_000):
    """Stationary distribution of the addition-and-stabilize chain with
    uniform additions, by power iteration on the exact transition map.

    Returns (probs, base) with probs indexed by the mixed-radix state
    code of stable configurations.
    """
    if params.mode != "discrete":
        raise ValueError("exact stationary distribution: discrete mode only")
    n = len(domain)
    base = 2 * params.d
    nstates = base ** n
    if nstates > 100_000:
        raise ValueError("state space too large")
    thr = np.int64(base)
    nxt = np.empty((nstates, n), dtype=np.int64)
    odo = np.zeros(n, dtype=np.int64)
    for code in range(nstates):
        cfg = np.asarray(state_decode(code, base, n), dtype=np.int64)
        for site in range(n):
            h = cfg.copy()
            h[site] += 1
            odo[:] = 0
            _kernels.stabilize_int(h, domain.neighbors, thr, odo)
            nxt[code, site] = state_code(h, base)
    flat = nxt.reshape(-1)
    pi = np.full(nstates, 1.0 / nstates)
    w = 1.0 / n
    for _ in range(max_iter):
        step = np.zeros(nstates)
        np.add.at(step, flat, np.repeat(pi * w, n))
        if np.abs(step - pi).sum() < tol:
            pi = step
            break
        # lazy damping: the chain itself can be periodic (single vertex
        # rotates deterministically), the half-step keeps the same
        # stationary law and always converges
        pi = 0.5 * (step + pi)
    else:
        raise RuntimeError("power iteration did not converge")
    return pi, base


# --- named oracle checks -----------------------------------------------------

def _domain_suite(name: str, domain: BoxDomain) -> list[dict]:
    from .treecode import phi, sigma
    checks = []
    det0 = count_trees_determinant(domain, 0.0)
    allowed = enumerate_allowed(domain, starred=False)
    enum0 = enumerate_trees(domain, dissipative=False)
    checks.append({
        "check": f"{name}: counts |allowed| = det = |trees|",
        "allowed": len(allowed), "det": det0, "trees": len(enum0.trees),
        "pass": len(allowed) == det0 == len(enum0.trees),
    })
    gamma = 0.5
    detg = count_trees_determinant(domain, gamma)
    enumg = enumerate_trees(domain, dissipative=True, gamma=gamma)
    checks.append({
        "check": f"{name}: weighted tree total matches det at gamma={gamma}",
        "det": detg, "enumerated": enumg.z_weighted,
        "pass": abs(detg - enumg.z_weighted) < 1e-9 * max(1.0, abs(detg)),
    })
    graphd = build_wired_graph(domain, True)
    star = enumerate_allowed(domain, starred=True)
    ok = len(star) == len(enumg.trees)
    seen = set()
    for cfg in star:
        t = sigma(np.asarray(cfg, dtype=np.int64), graphd)
        ok = ok and tuple(phi(t)) == cfg
        seen.add(t.key())
    ok = ok and len(seen) == len(star)
    checks.append({
        "check": f"{name}: sigma is a bijection with phi inverse (starred)",
        "starred_allowed": len(star), "trees_with_diss": len(enumg.trees),
        "pass": bool(ok),
    })
    ok = True
    for t in enumg.trees:
        xi = phi(t)
        t2 = sigma(xi, graphd)
        ok = ok and t2.key() == t.key()
    checks.append({
        "check": f"{name}: sigma(phi(t)) = t over all trees",
        "trees": len(enumg.trees), "pass": bool(ok),
    })
    if (2 * domain.d) ** len(domain) <= 100_000:
        pi, base = exact_stationary(domain, TopplingParams.discrete(domain.d))
        allowed_codes = {state_code(c, base) for c in allowed}
        mass = sum(pi[c] for c in allowed_codes)
        uniform = all(abs(pi[c] - 1.0 / len(allowed)) < 1e-10
                      for c in allowed_codes)
        off = sum(pi[c] for c in range(len(pi)) if c not in allowed_codes)
        checks.append({
            "check": f"{name}: stationary uniform on allowed set",
            "mass_on_allowed": mass, "off_mass": off,
            "pass": bool(uniform and off < 1e-10 and abs(mass - 1) < 1e-9),
        })
    return checks


def run_oracle_suite(level: str = "quick") -> list[dict]:
    from .lattice import build_grid, domain_from_vertices
    if level not in ("quick", "full"):
        raise ValueError(f"unknown oracle level {level!r}")
    checks = []
    single = domain_from_vertices(2, [(0, 0)])
    two = domain_from_vertices(2, [(0, 0), (1, 0)])
    checks += _domain_suite("single-vertex d=2", single)
    checks += _domain_suite("2-vertex d=2", two)
    if level == "full":
        checks += _domain_suite("2x2 d=2", build_grid(2, (2, 2)))
        checks += _domain_suite("2x3 d=2", build_grid(2, (2, 3)))
    return checks
