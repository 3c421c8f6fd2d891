"""The coupling experiments: paired samples of the zero-dissipation and
dissipative tree measures from shared randomness, success-condition
bookkeeping, and the Monte Carlo estimators for the stationary-measure
gap, cut-time and non-hitting trends."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lattice import boundary_enumeration, build_box, direction_vectors

DEFAULT_C0_GUARD = 16.0 ** -46
DEFAULT_C0_EXP = 46.0 * (24.0 - 3.0 / 23.0)


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def binom_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-12) / max(n, 1))


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def ci_monotone(values, ses, direction: int = 1, z: float = 2.0) -> bool:
    """Monotone trend up to CI overlap: each consecutive step may move
    against the trend by at most z combined standard errors."""
    v = list(values)
    s = list(ses)
    for i in range(len(v) - 1):
        step = (v[i + 1] - v[i]) * direction
        if step < -z * math.hypot(s[i], s[i + 1]):
            return False
    return True


def loglog_fit(x, y, y_se):
    """Weighted least squares of log y on log x; returns
    (slope, slope_se, intercept). Points with y <= 0 are excluded."""
    xs, ys, ws = [], [], []
    for xi, yi, si in zip(x, y, y_se):
        if yi > 0:
            xs.append(math.log(xi))
            ys.append(math.log(yi))
            ws.append(1.0 / max(si / yi, 1e-9) ** 2)
    if len(xs) < 2:
        raise ValueError("need at least 2 positive points to fit")
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    ws = np.asarray(ws)
    sw = ws.sum()
    xbar = (ws * xs).sum() / sw
    ybar = (ws * ys).sum() / sw
    sxx = (ws * (xs - xbar) ** 2).sum()
    slope = float((ws * (xs - xbar) * (ys - ybar)).sum() / sxx)
    intercept = float(ybar - slope * xbar)
    slope_se = float(math.sqrt(1.0 / sxx))
    return slope, slope_se, intercept


# --- d = 2 parameter schedule ------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Length scales tied to the killing rate; beta is recomputed from
    the rounded scales and the guard records whether the asymptotic
    small-lambda regime is actually reachable."""

    lam: float
    m: int
    r_prime: int
    r_big: int
    n: int
    beta: float
    lambda_ok: bool
    warnings: tuple


def d2_parameter_schedule(lam: float, k: int = 1, c0: float = DEFAULT_C0_GUARD,
                          c0_exp: float = DEFAULT_C0_EXP) -> Schedule:
    """Scales m = lam^(-1/23), R' = lam^(-3/46), R = 4 lam^(-3/23),
    n = lam^(-13/46), rounded to integers and re-checked."""
    if not 0 < lam < 1:
        raise ValueError("lambda must be in (0, 1)")
    m = max(1, round(lam ** (-1.0 / 23.0)))
    r_prime = max(m + 1, round(lam ** (-3.0 / 46.0)))
    r_big = max(r_prime + 1, round(4.0 * lam ** (-3.0 / 23.0)))
    n = max(r_big + 1, round(lam ** (-13.0 / 46.0)))
    beta = math.log(n) / math.log(r_big)
    warnings = []
    if 16 * m >= r_prime:
        warnings.append("16m < R' fails after rounding; using m < R'")
    if beta <= 2:
        warnings.append("beta > 2 unmet at this scale")
    if m < 2 * k:
        warnings.append("m < 2k at this scale")
    lambda_ok = lam <= c0 * float(k) ** (-c0_exp)
    if not lambda_ok:
        warnings.append("guard lambda <= c0 * k^-C0 unmet")
    return Schedule(lam=lam, m=m, r_prime=r_prime, r_big=r_big, n=n,
                    beta=beta, lambda_ok=lambda_ok, warnings=tuple(warnings))


# --- replica batches ---------------------------------------------------------

@dataclass
class ReplicaBatch:
    """Coupled replica outcomes for one (d, k, gamma)."""

    d: int
    k: int
    gamma: float
    lam: float
    m_values: tuple
    trunc0: int
    truncg: int
    seed: int
    replicas: int
    n_pre: int
    n_boundary: int
    n_interior: int
    schedule: Schedule | None
    success: np.ndarray
    flags_i: np.ndarray
    flags_ii: np.ndarray
    flags_iii: np.ndarray
    flags_iv: np.ndarray
    incon: np.ndarray
    hmis: np.ndarray
    heights0: np.ndarray
    heightsg: np.ndarray
    pairfail: np.ndarray
    ivfail: np.ndarray

    def fail_rate(self, mi: int):
        p = 1.0 - float(self.success[:, mi].sum()) / self.replicas
        return p, binom_se(p, self.replicas)

    def best_m(self):
        """Index, rate and se of the grid radius with the lowest failure
        rate (any valid radius gives a valid upper bound)."""
        rates = [self.fail_rate(i) for i in range(len(self.m_values))]
        mi = int(np.argmin([r[0] for r in rates]))
        return mi, rates[mi][0], rates[mi][1]


def _walk_list(d: int, k: int):
    bo = boundary_enumeration(build_box(d, k, "cube"))
    nb = len(bo.boundary)
    ni = len(bo.interior)
    if d == 2:
        n_pre = 1
        starts = np.zeros((1 + nb + ni, 3), dtype=np.int64)
        starts[1:1 + nb, :d] = bo.boundary
        starts[1 + nb:, :d] = bo.interior
        witness = np.full(1 + nb + ni, -1, dtype=np.int32)
        witness[1] = 0                      # z_1 pairs with the trunk
        witness[2:1 + nb] = bo.witness[1:] + 1
    else:
        n_pre = 0
        starts = np.zeros((nb + ni, 3), dtype=np.int64)
        starts[:nb, :d] = bo.boundary
        starts[nb:, :d] = bo.interior
        witness = np.full(nb + ni, -1, dtype=np.int32)
        witness[1:nb] = bo.witness[1:]
    return starts, witness, n_pre, nb, ni


def _pick_exp(target: float, lo: int = 18, hi: int = 22) -> int:
    e = int(math.ceil(math.log2(max(target, 2.0)))) + 1
    return min(max(e, lo), hi)


def run_coupling_replicas(d: int, k: int, gamma: float, replicas: int,
                          seed: int, m_values=None, n_big: int | None = None,
                          n_fin: int | None = None,
                          threads: int = 1) -> ReplicaBatch:
    """Coupled replicas; same replica seeds are reused across gamma values
    so the marker-free side is common randomness for the whole grid."""
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if k < 1:
        raise ValueError("k must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be > 0 for a coupling replica")
    if replicas < 1:
        raise ValueError("need at least one replica")
    lam = gamma / (2 * d + gamma)
    schedule = None
    # smallest ball containing the box and its exterior boundary: corner
    # boundary cells sit at norm sqrt((k+1)^2 + (d-1)k^2) > 2k when k = 1
    m_floor = int(math.ceil(math.sqrt((k + 1) ** 2 + (d - 1) * k * k)))
    if d == 3:
        trunc0 = int(n_big) if n_big is not None else 64 * k
        if m_values is None:
            grid = [max(2 * k * (1 << i), 2 * k, m_floor) for i in range(5)]
            m_values = tuple(sorted({m for m in grid if m <= trunc0 // 2}))
        else:
            m_values = tuple(int(m) for m in m_values)
        if any(m < 2 * k for m in m_values):
            raise ValueError("coupling radii must satisfy m >= 2k")
        truncg = trunc0
        gamma_exit_root = True
        budget = 64 * trunc0 * trunc0
        pop_exp = _pick_exp(64.0 * trunc0 * trunc0)
    else:
        schedule = d2_parameter_schedule(lam, k)
        base = max(schedule.m, 2 * k, m_floor)
        trunc0 = int(n_fin) if n_fin is not None else \
            max(4 * schedule.r_big, 8 * base, 4 * k + 8)
        if m_values is None:
            grid = [base, 2 * base, 4 * base]
            m_values = tuple(sorted({m for m in grid if m <= trunc0 // 2}))
        m_values = tuple(int(m) for m in m_values)
        truncg = max(trunc0, int(math.ceil(8.0 / math.sqrt(lam))))
        gamma_exit_root = False
        budget = max(64 * trunc0 * trunc0, int(math.ceil(60.0 / lam)))
        pop_exp = _pick_exp(max(16.0 / lam, 64.0 * trunc0 * trunc0))
    starts, witness, n_pre, nb, ni = _walk_list(d, k)
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    nm = len(m_values)
    r = replicas
    out_success = np.zeros((r, nm), dtype=np.int8)
    out_i = np.zeros((r, nm, nb), dtype=np.int8)
    out_ii = np.zeros((r, nm, nb), dtype=np.int8)
    out_iii = np.zeros((r, nm, nb), dtype=np.int8)
    out_iv = np.zeros((r, ni), dtype=np.int8)
    out_incon = np.zeros(r, dtype=np.int8)
    out_hmis = np.zeros(r, dtype=np.int8)
    out_h0 = np.zeros((r, ni), dtype=np.int8)
    out_hg = np.zeros((r, ni), dtype=np.int8)
    out_pairfail = np.zeros((r, nm), dtype=np.int16)
    out_ivfail = np.zeros(r, dtype=np.int16)
    master = np.uint64(_kernels.derive_seed(np.uint64(seed), np.uint64(0xC0)))
    marr = np.asarray(m_values, dtype=np.int64)

    def work(lo, hi):
        _kernels.coupled_replica_block(
            master, lo, hi, 2 * d, dirs3, np.float64(lam),
            starts, witness, np.int64(n_pre), np.int64(nb),
            marr, np.int64(trunc0), np.int64(truncg), gamma_exit_root,
            np.int64(budget), np.int64(1 << 17), np.int64(pop_exp),
            np.int64(18),
            out_success[lo:hi], out_i[lo:hi], out_ii[lo:hi], out_iii[lo:hi],
            out_iv[lo:hi], out_incon[lo:hi], out_hmis[lo:hi],
            out_h0[lo:hi], out_hg[lo:hi], out_pairfail[lo:hi],
            out_ivfail[lo:hi])

    if threads <= 1 or replicas < 4:
        work(0, replicas)
    else:
        bounds = np.linspace(0, replicas, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(lambda i: work(bounds[i], bounds[i + 1]),
                        range(threads)))
    return ReplicaBatch(
        d=d, k=k, gamma=gamma, lam=lam, m_values=m_values, trunc0=trunc0,
        truncg=truncg, seed=seed, replicas=replicas, n_pre=n_pre,
        n_boundary=nb, n_interior=ni, schedule=schedule,
        success=out_success, flags_i=out_i, flags_ii=out_ii,
        flags_iii=out_iii, flags_iv=out_iv, incon=out_incon, hmis=out_hmis,
        heights0=out_h0, heightsg=out_hg, pairfail=out_pairfail,
        ivfail=out_ivfail)


@dataclass
class CouplingReport:
    """One replica of the coupling, with per-condition outcomes and the
    two height restrictions when they resolved."""

    d: int
    k: int
    gamma: float
    lam: float
    seed: int
    m_values: tuple
    trunc0: int
    truncg: int
    success: dict
    pair_fail: dict
    iv_fail: int
    flags_i: dict
    flags_ii: dict
    flags_iii: dict
    flags_iv: list
    inconclusive: bool
    heights_equal: bool
    heights0: list | None
    heightsg: list | None
    schedule: Schedule | None = None

    def to_jsonable(self) -> dict:
        doc = {
            "d": self.d, "k": self.k, "gamma": self.gamma, "lam": self.lam,
            "seed": self.seed, "m_values": list(self.m_values),
            "trunc0": self.trunc0, "truncg": self.truncg,
            "success": {str(m): bool(v) for m, v in self.success.items()},
            "pair_fail": {str(m): int(v) for m, v in self.pair_fail.items()},
            "iv_fail": self.iv_fail,
            "flags_iv": [bool(x) for x in self.flags_iv],
            "inconclusive": self.inconclusive,
            "heights_equal": self.heights_equal,
            "heights0": self.heights0, "heightsg": self.heightsg,
        }
        for name, flags in (("flags_i", self.flags_i),
                            ("flags_ii", self.flags_ii),
                            ("flags_iii", self.flags_iii)):
            doc[name] = {str(m): [bool(x) for x in v]
                         for m, v in flags.items()}
        if self.schedule is not None:
            doc["schedule"] = {
                "m": self.schedule.m, "r_prime": self.schedule.r_prime,
                "r_big": self.schedule.r_big, "n": self.schedule.n,
                "beta": self.schedule.beta,
                "lambda_ok": self.schedule.lambda_ok,
                "warnings": list(self.schedule.warnings),
            }
        return doc


def _report_from_batch(batch: ReplicaBatch) -> CouplingReport:
    mvals = batch.m_values
    h0 = batch.heights0[0]
    hg = batch.heightsg[0]
    have_h = bool((h0 >= 0).all() and (hg >= 0).all())
    return CouplingReport(
        d=batch.d, k=batch.k, gamma=batch.gamma, lam=batch.lam,
        seed=batch.seed, m_values=mvals, trunc0=batch.trunc0,
        truncg=batch.truncg,
        success={m: bool(batch.success[0, i]) for i, m in enumerate(mvals)},
        pair_fail={m: int(batch.pairfail[0, i]) for i, m in enumerate(mvals)},
        iv_fail=int(batch.ivfail[0]),
        flags_i={m: batch.flags_i[0, i].tolist() for i, m in enumerate(mvals)},
        flags_ii={m: batch.flags_ii[0, i].tolist() for i, m in enumerate(mvals)},
        flags_iii={m: batch.flags_iii[0, i].tolist() for i, m in enumerate(mvals)},
        flags_iv=batch.flags_iv[0].tolist(),
        inconclusive=bool(batch.incon[0]),
        heights_equal=bool(batch.hmis[0] == 0),
        heights0=h0.tolist() if have_h else None,
        heightsg=hg.tolist() if have_h else None,
        schedule=batch.schedule)


def run_coupling_replica_d3(k: int, gamma: float, seed: int,
                            m_values=None, n_big: int | None = None) -> CouplingReport:
    batch = run_coupling_replicas(3, k, gamma, 1, seed, m_values=m_values,
                                  n_big=n_big)
    return _report_from_batch(batch)


def run_coupling_replica_d2(k: int, gamma: float, seed: int,
                            n_fin: int | None = None,
                            m: int | None = None) -> CouplingReport:
    m_values = (int(m),) if m is not None else None
    batch = run_coupling_replicas(2, k, gamma, 1, seed, m_values=m_values,
                                  n_fin=n_fin)
    return _report_from_batch(batch)


# --- independent-mode height sampling ----------------------------------------

def sample_heights(d: int, k: int, gamma: float, replicas: int, seed: int,
                   trunc: int | None = None, threads: int = 1):
    """Star heights on B(k) from the truncated tree measure, one variant
    only (gamma = 0 means the marker-free side). Returns (heights array
    (replicas, M) int8, inconclusive flags)."""
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    lam = gamma / (2 * d + gamma)
    starts, _, n_pre, nb, ni = _walk_list(d, k)
    if trunc is None:
        trunc = 16 * k if d == 3 else 16 * k
        trunc = max(trunc, 16)
    use_markers = gamma > 0
    if d == 3 or not use_markers:
        exit_r = int(trunc)
        exit_is_root = True
        budget = 64 * exit_r * exit_r
        pop_exp = _pick_exp(64.0 * exit_r * exit_r)
    else:
        exit_r = max(int(trunc), int(math.ceil(8.0 / math.sqrt(lam))))
        exit_is_root = False
        budget = max(64 * trunc * trunc, int(math.ceil(60.0 / lam)))
        pop_exp = _pick_exp(max(16.0 / lam, 64.0 * trunc * trunc))
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    out_h = np.zeros((replicas, ni), dtype=np.int8)
    out_incon = np.zeros(replicas, dtype=np.int8)
    master = np.uint64(_kernels.derive_seed(np.uint64(seed), np.uint64(0x1D5)))

    def work(lo, hi):
        _kernels.height_sample_block(
            master, lo, hi, 2 * d, dirs3, np.float64(lam), use_markers,
            starts, np.int64(n_pre + nb), np.int64(exit_r), exit_is_root,
            np.int64(budget), np.int64(1 << 17), np.int64(pop_exp),
            np.int64(18), out_h, out_incon)

    if threads <= 1 or replicas < 4:
        work(0, replicas)
    else:
        bounds = np.linspace(0, replicas, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(lambda i: work(bounds[i], bounds[i + 1]),
                        range(threads)))
    return out_h, out_incon


@dataclass
class GapEstimate:
    gamma: float
    mode: str
    gap: float
    stderr: float
    fail_rate: float | None
    fail_se: float | None
    best_m: int | None
    replicas: int
    inconclusive: int
    details: dict = field(default_factory=dict)


def estimate_event_gap(event, d: int, k: int, gamma: float, replicas: int,
                       mode: str, seed: int, threads: int = 1,
                       m_values=None, trunc: int | None = None) -> GapEstimate:
    """Estimate |m_gamma(E) - m_0(E)| for a cylinder event on the B(k)
    star heights.

    The event receives the length-M height vector (B(k) in index order),
    so it cannot depend on sites outside the box. Coupled mode reports
    the coupling failure rate, which upper-bounds the gap; independent
    mode differences two direct Monte Carlo estimates.
    """
    if mode == "coupled":
        batch = run_coupling_replicas(d, k, gamma, replicas, seed,
                                      m_values=m_values, threads=threads,
                                      n_big=trunc if d == 3 else None,
                                      n_fin=trunc if d == 2 else None)
        mi, p, se = batch.best_m()
        # paired event difference over replicas with resolved heights;
        # the failure rate is the rigorous upper bound for the gap
        ok = (batch.heights0 >= 0).all(axis=1) & (batch.heightsg >= 0).all(axis=1)
        if ok.any():
            eg = np.fromiter((event(h) for h in batch.heightsg[ok]), dtype=float)
            e0 = np.fromiter((event(h) for h in batch.heights0[ok]), dtype=float)
            diff = eg - e0
            gap = abs(float(diff.mean()))
            gap_se = float(diff.std(ddof=1) / math.sqrt(len(diff))) \
                if len(diff) > 1 else 0.0
        else:
            gap, gap_se = 0.0, 0.0
        return GapEstimate(gamma=gamma, mode=mode, gap=gap, stderr=gap_se,
                           fail_rate=p, fail_se=se,
                           best_m=batch.m_values[mi], replicas=replicas,
                           inconclusive=int(batch.incon.sum()),
                           details={"per_m": {m: batch.fail_rate(i)
                                              for i, m in enumerate(batch.m_values)},
                                    "n_paired": int(ok.sum())})
    if mode != "independent":
        raise ValueError(f"unknown mode {mode!r}")
    seed_g = int(_kernels.derive_seed(np.uint64(seed), np.uint64(1)))
    seed_0 = int(_kernels.derive_seed(np.uint64(seed), np.uint64(2)))
    hg, ig = sample_heights(d, k, gamma, replicas, seed_g, trunc=trunc,
                            threads=threads)
    h0, i0 = sample_heights(d, k, 0.0, replicas, seed_0, trunc=trunc,
                            threads=threads)
    ok_g = ig == 0
    ok_0 = i0 == 0
    pg = float(np.fromiter((event(h) for h in hg[ok_g]), dtype=float).mean()) \
        if ok_g.any() else 0.0
    p0 = float(np.fromiter((event(h) for h in h0[ok_0]), dtype=float).mean()) \
        if ok_0.any() else 0.0
    ng = int(ok_g.sum())
    n0 = int(ok_0.sum())
    se = math.hypot(binom_se(pg, ng), binom_se(p0, n0))
    return GapEstimate(gamma=gamma, mode=mode, gap=abs(pg - p0), stderr=se,
                       fail_rate=None, fail_se=None, best_m=None,
                       replicas=replicas,
                       inconclusive=int((~ok_g).sum() + (~ok_0).sum()),
                       details={"p_gamma": pg, "p_zero": p0,
                                "n_gamma": ng, "n_zero": n0})


# --- rate fitting and the full experiment -------------------------------------

@dataclass
class RateFit:
    """Log-log slope of the gap estimates. This is an empirical summary
    of the finite-size Monte Carlo data, not a verification of the
    asymptotic exponent."""

    slope: float
    slope_se: float
    intercept: float
    n_used: int
    note: str = "empirical slope; not a verification of the asymptotic exponent"

    @property
    def ci95(self):
        return (self.slope - 1.96 * self.slope_se,
                self.slope + 1.96 * self.slope_se)


def fit_rate(gammas, gaps, ses) -> RateFit:
    slope, slope_se, intercept = loglog_fit(gammas, gaps, ses)
    n_used = sum(1 for g in gaps if g > 0)
    return RateFit(slope=slope, slope_se=slope_se, intercept=intercept,
                   n_used=n_used)


@dataclass
class RateRow:
    gamma: float
    replicas: int
    fail_rate: float
    fail_se: float
    best_m: int
    gap_indep: float
    gap_se: float
    gap_coupled: float
    gap_coupled_se: float
    incon: int
    audit_ok: bool
    per_m: dict


@dataclass
class RateResult:
    d: int
    k: int
    seed: int
    rows: list
    fit: RateFit | None


def make_origin_event(d: int, k: int, value: int):
    """Cylinder event {xi_origin = value}; the origin sits at the center
    of the row-major B(k) enumeration."""
    n_side = 2 * k + 1
    mid = (n_side ** d) // 2

    def event(heights) -> bool:
        return int(heights[mid]) == value

    return event


def rate_experiment(d: int, k: int, gammas, replicas: int, seed: int,
                    threads: int | None = None, event=None,
                    indep_replicas: int | None = None,
                    m_values=None) -> RateResult:
    """Scan a gamma grid: coupled failure rates (shared replica seeds
    across the grid), independent-mode gaps for the event, the
    domination audit, and the fitted slope."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if threads is None:
        threads = default_threads()
    if event is None:
        event = make_origin_event(d, k, 2 * d)
    if indep_replicas is None:
        indep_replicas = max(1000, replicas // 4)
    rows = []
    for gi, gamma in enumerate(sorted(gammas, reverse=True)):
        coupled = estimate_event_gap(event, d, k, gamma, replicas, "coupled",
                                     seed, threads=threads, m_values=m_values)
        indep = estimate_event_gap(event, d, k, gamma, indep_replicas,
                                   "independent",
                                   seed + 1000 + gi, threads=threads)
        audit_ok = indep.gap <= coupled.fail_rate + 3.0 * math.hypot(
            indep.stderr, coupled.fail_se)
        rows.append(RateRow(
            gamma=gamma, replicas=replicas, fail_rate=coupled.fail_rate,
            fail_se=coupled.fail_se, best_m=coupled.best_m,
            gap_indep=indep.gap, gap_se=indep.stderr,
            gap_coupled=coupled.gap, gap_coupled_se=coupled.stderr,
            incon=coupled.inconclusive, audit_ok=audit_ok,
            per_m={m: v for m, v in coupled.details["per_m"].items()}))
    fit = None
    try:
        fit = fit_rate([r.gamma for r in rows], [r.fail_rate for r in rows],
                       [r.fail_se for r in rows])
    except ValueError:
        pass
    return RateResult(d=d, k=k, seed=seed, rows=rows, fit=fit)


# --- trend experiments ---------------------------------------------------------

def cut_time_trend(m: int, ns, walks: int, seed: int,
                   threads: int | None = None):
    """Probability of an annotated cut time in [tau_m, tau_n] per n;
    returns rows (n, p, se, inconclusive) on walks truncated at B(8n)."""
    from .walks import cut_time_probability
    if threads is None:
        threads = default_threads()
    rows = []
    for i, n in enumerate(ns):
        p, se, inc = cut_time_probability(m, n, walks, seed + i,
                                          trunc_radius=8 * n,
                                          threads=threads)
        rows.append((int(n), p, se, inc))
    return rows


def beurling_trend(m: int, radii, obstacles: int, trials: int, seed: int,
                   threads: int | None = None, d: int = 2):
    """Worst non-hitting probability over sampled loop-erased obstacle
    paths crossing from B(m) to the boundary of B(N), for each N.

    Returns (rows, slope, slope_se); rows are (N, sup_p, mean_p, se_sup).
    """
    if threads is None:
        threads = default_threads()
    dirs3 = np.zeros((2 * d, 3), dtype=np.int64)
    dirs3[:, :d] = direction_vectors(d)
    ring = []
    for v in build_box(d, m, "ball").vertices:
        r2 = int((v.astype(np.int64) ** 2).sum())
        if r2 > (m - 1) ** 2:
            ring.append(v)
    ring = np.asarray(ring, dtype=np.int64)
    rows = []
    rng = np.random.default_rng(seed)
    lebuf = np.empty(1 << 17, dtype=np.int64)
    for big_n in radii:
        big_n = int(big_n)
        sup_p = 0.0
        sup_n = trials
        total = 0.0
        for ob in range(obstacles):
            oseed = np.uint64(_kernels.derive_seed(np.uint64(seed),
                                         np.uint64(big_n * 100003 + ob)))
            ln = _kernels.lerw_exit_ball(oseed, 2 * d, dirs3,
                                         np.int64(big_n),
                                         np.int64(64 * big_n * big_n), lebuf)
            if ln < 0:
                continue
            obstacle = np.sort(lebuf[:ln].copy())
            z = np.zeros(3, dtype=np.int64)
            z[:d] = ring[rng.integers(0, len(ring))]
            tseed = np.uint64(_kernels.derive_seed(oseed, np.uint64(0xBE)))
            counts = np.zeros((threads, 2), dtype=np.int64)

            def work(i, lo, hi):
                nh, un = _kernels.beurling_block(
                    tseed, lo, hi, 2 * d, dirs3, z, obstacle,
                    np.int64(big_n), np.int64(64 * big_n * big_n))
                counts[i, 0] = nh
                counts[i, 1] = un

            if threads <= 1:
                work(0, 0, trials)
            else:
                bounds = np.linspace(0, trials, threads + 1, dtype=int)
                with ThreadPoolExecutor(max_workers=threads) as ex:
                    list(ex.map(lambda i: work(i, bounds[i], bounds[i + 1]),
                                range(threads)))
            p = float(counts[:, 0].sum() + counts[:, 1].sum()) / trials
            total += p
            if p > sup_p:
                sup_p = p
        rows.append((big_n, sup_p, total / obstacles,
                     binom_se(sup_p, sup_n)))
    xs = [row[0] / m for row in rows]
    ys = [row[1] for row in rows]
    ses = [max(row[3], 1e-6) for row in rows]
    slope, slope_se, _ = loglog_fit(xs, ys, ses)
    return rows, slope, slope_se
