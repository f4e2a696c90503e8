"""Statistical estimators over sampler output, power-law fitting, and the
discrete extremal-distance solver.

Monte Carlo error bars come from batch means (at least 50 batches) with an
autocorrelation-corrected effective sample count; ratio-type functionals use
leave-one-batch-out jackknife.  Fits are weighted least squares on log-log
coordinates with bootstrap confidence intervals.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import arms, paths
from .lattice import RectDomain, Vertex, build_annulus, build_box, build_rect
from .rcmodel import BoundaryCondition, Configuration, Params, critical_point
from .sampler import SamplerSpec, autocorrelation, replica_chain, run_chain

DEFAULT_BATCHES = 50


@dataclass(frozen=True)
class EstimateRecord:
    name: str
    value: float
    stderr: float
    n_samples: int
    n_effective: float
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "stderr": self.stderr,
                "nSamples": self.n_samples, "nEffective": self.n_effective,
                "context": dict(self.context)}

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateRecord":
        return cls(name=d["name"], value=d["value"], stderr=d["stderr"],
                   n_samples=d["nSamples"], n_effective=d["nEffective"],
                   context=dict(d.get("context", {})))


def _context(params: Params, bc, seed, spec: Optional[SamplerSpec], **extra) -> dict:
    ctx = {"q": params.q, "p": params.p, "bc": _bc_label(bc), "seed": seed}
    if spec is not None:
        ctx["algorithm"] = spec.algorithm
    ctx.update(extra)
    return ctx


def _bc_label(bc: BoundaryCondition) -> str:
    if bc.is_free:
        return "free"
    from .lattice import boundary_vertices
    if bc.classes == (tuple(sorted(boundary_vertices(bc.domain))),):
        return "wired"
    return "custom"


def replica_threads(replica_count: int) -> int:
    """Worker threads for replica-parallel collection, capped by
    RCLAB_THREADS (default 1: sequential, always deterministic)."""
    cap = os.environ.get("RCLAB_THREADS")
    if cap is None:
        return 1
    return max(1, min(int(cap), replica_count))


def collect_samples(domain, params: Params, bc: BoundaryCondition,
                    spec: SamplerSpec, seed: int, n_samples: int,
                    statistics: Sequence[Callable[[Configuration], float]]) -> np.ndarray:
    """(n_samples, n_statistics) matrix of per-configuration statistics,
    replica-major; the sample budget is split evenly across replicas.
    Output is byte-identical whatever the thread count."""
    reps = spec.replica_count
    shares = [n_samples // reps + (1 if r < n_samples % reps else 0)
              for r in range(reps)]

    def collect_one(r: int) -> np.ndarray:
        block = np.empty((shares[r], len(statistics)))
        chain = replica_chain(spec, domain, params, bc, seed, r)
        for i in range(shares[r]):
            cfg = next(chain)
            for j, stat in enumerate(statistics):
                block[i, j] = stat(cfg)
        return block

    workers = replica_threads(reps)
    if workers == 1 or reps == 1:
        blocks = [collect_one(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(collect_one, range(reps)))
    return np.vstack(blocks)


def _batch_means(series: np.ndarray, n_batches: int = DEFAULT_BATCHES) -> np.ndarray:
    n = len(series)
    if n < n_batches:
        raise ValueError(f"need at least {n_batches} samples, got {n}")
    width = n // n_batches
    return series[:n_batches * width].reshape(n_batches, width, -1).mean(axis=1)


def _n_effective(series: np.ndarray) -> float:
    try:
        tau = autocorrelation(series)
    except ValueError:
        return float(len(series))
    if not math.isfinite(tau):
        return 0.0
    return len(series) / (2.0 * tau)


def estimate_probability(event: Callable[[Configuration], bool], domain,
                         params: Params, bc: BoundaryCondition,
                         spec: SamplerSpec, seed: int,
                         n_samples: int, name: str = "probability",
                         **extra_context) -> EstimateRecord:
    """Frequency estimate with batch-means standard error."""
    data = collect_samples(domain, params, bc, spec, seed, n_samples,
                           [lambda c: 1.0 if event(c) else 0.0])[:, 0]
    n_eff = _n_effective(data)
    if n_eff == 0.0 and data.std() == 0.0:
        # constant series: exact frequency, zero spread
        return EstimateRecord(name, float(data.mean()), 0.0, n_samples,
                              float(n_samples),
                              _context(params, bc, seed, spec, **extra_context))
    batches = _batch_means(data)[:, 0]
    stderr = float(batches.std(ddof=1) / math.sqrt(len(batches)))
    return EstimateRecord(name, float(data.mean()), stderr, n_samples, n_eff,
                          _context(params, bc, seed, spec, **extra_context))


def estimate_conditional_mean(statistic: Callable[[Configuration], float],
                              condition: Callable[[Configuration], bool],
                              domain, params: Params, bc: BoundaryCondition,
                              spec: SamplerSpec, seed: int, n_samples: int,
                              name: str = "conditional_mean",
                              **extra_context) -> EstimateRecord:
    """Ratio estimator E[X 1_A] / P(A) with leave-one-batch-out jackknife
    standard error; raises if the condition never occurs."""
    def pair(cfg):
        if condition(cfg):
            return (statistic(cfg), 1.0)
        return (0.0, 0.0)

    data = collect_samples(domain, params, bc, spec, seed, n_samples,
                           [lambda c: pair(c)[0], lambda c: pair(c)[1]])
    hits = data[:, 1].sum()
    if hits == 0:
        raise ValueError("conditioning event never occurred in the sample")
    value = data[:, 0].sum() / hits
    batches = _batch_means(data)
    stderr = _jackknife_stderr(batches, lambda m: m[0] / m[1] if m[1] > 0 else np.nan)
    n_eff = _n_effective(data[:, 1])
    return EstimateRecord(name, float(value), stderr, n_samples, n_eff,
                          _context(params, bc, seed, spec,
                                   conditioning_hits=int(hits), **extra_context))


def _jackknife_stderr(batch_matrix: np.ndarray, functional) -> float:
    """Leave-one-batch-out jackknife on batch means of joint statistics."""
    nb = batch_matrix.shape[0]
    total = batch_matrix.sum(axis=0)
    vals = []
    for b in range(nb):
        m = (total - batch_matrix[b]) / (nb - 1)
        vals.append(functional(m))
    vals = np.asarray(vals, dtype=float)
    good = np.isfinite(vals)
    if good.sum() < 2:
        return math.inf
    vals = vals[good]
    nb = len(vals)
    return float(math.sqrt((nb - 1) / nb * ((vals - vals.mean()) ** 2).sum()))


# ---------------------------------------------------------------------------
# arm-event probabilities and quasi-multiplicativity


@lru_cache(maxsize=64)
def origin_annulus_view(n1: int, n2: int):
    """Origin-centered annulus plus index arrays mapping its edges into a
    host rectangle's edge grids (add the center offset at lookup time)."""
    ann = build_annulus((0, 0), n1, n2)
    is_h = np.array([e.a.y == e.b.y for e in ann.edges])
    ex = np.array([e.a.x for e in ann.edges], dtype=np.int64)
    ey = np.array([e.a.y for e in ann.edges], dtype=np.int64)
    return ann, is_h, ex, ey


def annulus_subconfig(config: Configuration, host, center, n1: int, n2: int) -> Configuration:
    """The host configuration restricted to Ann(center; n1, n2), which must
    lie inside the host rectangle."""
    ann, is_h, ex, ey = origin_annulus_view(n1, n2)
    cx, cy = center
    rows = ey + cy - host.y0
    cols = ex + cx - host.x0
    hg, vg = host.h_edge_grid, host.v_edge_grid
    ids = np.where(is_h,
                   hg[np.clip(rows, 0, hg.shape[0] - 1), np.clip(cols, 0, hg.shape[1] - 1)],
                   vg[np.clip(rows, 0, vg.shape[0] - 1), np.clip(cols, 0, vg.shape[1] - 1)])
    return Configuration(ann, np.ascontiguousarray(config.bits[ids]))


def arm_event_on_host(sigma, n1: int, n2: int, center=(0, 0)):
    """Predicate on host configurations: the sigma arm event in
    Ann(center; n1, n2)."""
    ann, _, _, _ = origin_annulus_view(n1, n2)
    spec = arms.ArmSpec(ann, tuple(sigma))

    def event(cfg: Configuration) -> bool:
        sub = annulus_subconfig(cfg, cfg.domain, center, n1, n2)
        return arms.detect_arm_event(sub, spec).occurs

    return event


def estimate_arm_probability(sigma, n1: int, n2: int, q: float,
                             bc_kind: str, spec: SamplerSpec, seed: int,
                             n_samples: int, domain_n: Optional[int] = None,
                             ) -> EstimateRecord:
    """pi-hat_sigma(n1, n2) under the box measure on B(domain_n)."""
    n = domain_n if domain_n is not None else n2
    box = _box_cached(n)
    params = Params(critical_point(q), q)
    bc = _bc_cached(box, bc_kind)
    event = arm_event_on_host(sigma, n1, n2)
    rec = estimate_probability(event, box, params, bc, spec, seed, n_samples,
                               name=f"pi[{''.join(sigma)}]({n1},{n2})",
                               n1=n1, n2=n2, domain_n=n, sigma="".join(sigma))
    return rec


@lru_cache(maxsize=32)
def _box_cached(n: int):
    return build_box(n)


def _bc_cached(domain, kind: str) -> BoundaryCondition:
    if kind == "free":
        return BoundaryCondition.free(domain)
    if kind == "wired":
        return BoundaryCondition.wired(domain)
    raise ValueError(f"unknown boundary condition {kind!r}")


def quasi_mult_ratio(n1: int, n3: int, n2: int, sigma, q: float,
                     bc_kind: str, spec: SamplerSpec, seed: int,
                     n_samples: int) -> EstimateRecord:
    """pi(n1,n3) pi(n3,n2) / pi(n1,n2), all three factors estimated under
    the same box measure B(n2) from independent streams; degenerate
    annuli use the convention pi(n, n) = 1."""
    if not n1 <= n3 <= n2:
        raise ValueError("need n1 <= n3 <= n2")
    params = Params(critical_point(q), q)
    parts = []
    for i, (a, b) in enumerate(((n1, n3), (n3, n2), (n1, n2))):
        if a == b:
            parts.append(None)
            continue
        parts.append(estimate_arm_probability(
            sigma, a, b, q, bc_kind, spec, seed + 7919 * i, n_samples,
            domain_n=n2))
    if n1 == n3:
        # ratio = pi(n1,n2) * 1 / pi(n1,n2) with the same estimate reused
        rec = parts[1]
        ctx = _context(params, _bc_cached(_box_cached(n2), bc_kind), seed, spec,
                       n1=n1, n3=n3, n2=n2, sigma="".join(sigma))
        return EstimateRecord("quasi_mult_ratio", 1.0, 0.0, rec.n_samples,
                              rec.n_effective, ctx)
    if n3 == n2:
        rec = parts[0]
        ctx = _context(params, _bc_cached(_box_cached(n2), bc_kind), seed, spec,
                       n1=n1, n3=n3, n2=n2, sigma="".join(sigma))
        return EstimateRecord("quasi_mult_ratio", 1.0, 0.0, rec.n_samples,
                              rec.n_effective, ctx)
    p13, p32, p12 = parts
    if p12.value == 0:
        raise ValueError("denominator arm probability estimated at zero")
    value = p13.value * p32.value / p12.value
    rel = math.sqrt(sum((r.stderr / r.value) ** 2 for r in parts if r.value > 0))
    ctx = _context(params, _bc_cached(_box_cached(n2), bc_kind), seed, spec,
                   n1=n1, n3=n3, n2=n2, sigma="".join(sigma),
                   factors=[(r.value, r.stderr) for r in parts])
    return EstimateRecord("quasi_mult_ratio", value, abs(value) * rel,
                          3 * n_samples, min(r.n_effective for r in parts), ctx)


# ---------------------------------------------------------------------------
# power-law fitting


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    exponent_ci: tuple[float, float]
    intercept_log: float
    r_squared: float

    def __post_init__(self):
        lo, hi = self.exponent_ci
        if not lo <= self.exponent <= hi:
            raise ValueError("confidence interval must contain the estimate")


def fit_power_law(points: Sequence[tuple[float, float, float]],
                  n_bootstrap: int = 1000, seed: int = 0) -> PowerLawFit:
    """Weighted least squares for y = C x^alpha on log-log coordinates.

    points: (scale ratio, probability, stderr); stderr of 0 gives that point
    the weight of the most precise noisy point.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    s = np.array([p[2] for p in points], dtype=float)
    if (y <= 0).any():
        raise ValueError("probabilities must be positive for a log-log fit")
    if (x <= 0).any():
        raise ValueError("scale ratios must be positive")
    lx, ly = np.log(x), np.log(y)
    sl = np.where(s > 0, s / y, np.nan)  # delta method on log y
    fallback = np.nanmin(sl) if np.isfinite(sl).any() else 1e-6
    sl = np.where(np.isnan(sl), fallback, sl)
    w = 1.0 / sl**2

    def wls(ly_in):
        W = w.sum()
        mx = (w * lx).sum() / W
        my = (w * ly_in).sum() / W
        slope = (w * (lx - mx) * (ly_in - my)).sum() / (w * (lx - mx) ** 2).sum()
        inter = my - slope * mx
        return slope, inter

    slope, inter = wls(ly)
    resid = ly - (slope * lx + inter)
    ss_res = (w * resid**2).sum()
    my = (w * ly).sum() / w.sum()
    ss_tot = (w * (ly - my) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    rng = np.random.default_rng(seed)
    slopes = []
    for _ in range(n_bootstrap):
        ly_b = ly + rng.standard_normal(len(ly)) * sl
        slopes.append(wls(ly_b)[0])
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    lo, hi = min(lo, slope), max(hi, slope)
    return PowerLawFit(exponent=float(slope), exponent_ci=(float(lo), float(hi)),
                       intercept_log=float(inter), r_squared=float(r2))


# ---------------------------------------------------------------------------
# mixing and FKG estimators


def mixing_coefficient(event_a: Callable[[Configuration], bool], ell: int,
                       event_b: Callable[[Configuration], bool], m: int, n: int,
                       q: float, bc_kind: str, spec: SamplerSpec, seed: int,
                       n_samples: int) -> EstimateRecord:
    """|P(A and B) - P(A)P(B)| / (P(A)P(B)) under the B(n) measure, for A
    living on B(ell) and B on Ann(m, n); requires 2 ell < m < n."""
    if not (2 * ell < m < n):
        raise ValueError("need 2*ell < m < n")
    box = _box_cached(n)
    params = Params(critical_point(q), q)
    bc = _bc_cached(box, bc_kind)
    data = collect_samples(
        box, params, bc, spec, seed, n_samples,
        [lambda c: 1.0 if event_a(c) else 0.0,
         lambda c: 1.0 if event_b(c) else 0.0,
         lambda c: 1.0 if (event_a(c) and event_b(c)) else 0.0])
    pa, pb, pab = data.mean(axis=0)
    if pa == 0 or pb == 0:
        raise ValueError("zero marginal probability; mixing ratio undefined")
    value = abs(pab - pa * pb) / (pa * pb)
    batches = _batch_means(data)
    stderr = _jackknife_stderr(
        batches, lambda mu: abs(mu[2] - mu[0] * mu[1]) / (mu[0] * mu[1])
        if mu[0] > 0 and mu[1] > 0 else np.nan)
    n_eff = _n_effective(data[:, 2])
    return EstimateRecord("mixing_coefficient", float(value), stderr,
                          n_samples, n_eff,
                          _context(params, bc, seed, spec, ell=ell, m=m, n=n))


def validate_increasing(event: Callable[[Configuration], bool], domain) -> bool:
    """Exhaustive monotonicity check; only feasible for small domains."""
    ne = domain.n_edges
    if ne > 14:
        raise ValueError("exhaustive monotonicity check capped at 14 edges")
    values = np.empty(1 << ne, dtype=bool)
    for idx in range(1 << ne):
        values[idx] = event(Configuration.from_index(domain, idx))
    for idx in range(1 << ne):
        if not values[idx]:
            continue
        for e in range(ne):
            if not (idx >> e) & 1:
                if not values[idx | (1 << e)]:
                    return False
    return True


def fkg_covariance(event_a, event_b, domain, params: Params,
                   bc: BoundaryCondition, spec: SamplerSpec, seed: int,
                   n_samples: int, increasing_declared: bool = False,
                   ) -> EstimateRecord:
    """cov(1_A, 1_B) estimate for two increasing events.  On domains small
    enough the events are validated to be increasing by exhaustion; larger
    domains require increasing_declared=True."""
    if not increasing_declared:
        if domain.n_edges > 14:
            raise ValueError("cannot validate monotonicity on this domain; "
                             "pass increasing_declared=True")
        for ev, label in ((event_a, "A"), (event_b, "B")):
            if not validate_increasing(ev, domain):
                raise ValueError(f"event {label} is not increasing")
    data = collect_samples(
        domain, params, bc, spec, seed, n_samples,
        [lambda c: 1.0 if event_a(c) else 0.0,
         lambda c: 1.0 if event_b(c) else 0.0,
         lambda c: 1.0 if (event_a(c) and event_b(c)) else 0.0])
    mu = data.mean(axis=0)
    value = mu[2] - mu[0] * mu[1]
    batches = _batch_means(data)
    stderr = _jackknife_stderr(batches, lambda m: m[2] - m[0] * m[1])
    return EstimateRecord("fkg_covariance", float(value), stderr, n_samples,
                          _n_effective(data[:, 2]),
                          _context(params, bc, seed, spec))


# ---------------------------------------------------------------------------
# discrete extremal distance (effective resistance of the quad)


@dataclass(frozen=True, eq=False)
class Quad:
    """A rectangle-based quad: vertex set, weighted edges, and the four
    boundary arcs ab, bc, cd, da in cyclic order (ab and cd are the
    measured pair by default).

    Edges lying along the lateral arcs carry conductance 1/2 (the standard
    reflecting-boundary discretization, which makes an n x m cell rectangle
    measure exactly n/m); all other edges carry 1.
    """
    vertices: tuple
    edges: tuple                 # ((Vertex, Vertex), ...)
    conductance: np.ndarray
    arcs: dict                   # {"ab": (...), "bc": (...), "cd": (...), "da": (...)}

    def __post_init__(self):
        seen = set()
        for name in ("ab", "bc", "cd", "da"):
            for v in self.arcs[name]:
                if v in seen:
                    raise ValueError("quad arcs must be disjoint")
                seen.add(v)


def quad_rectangle(n_sep: int, m_len: int) -> Quad:
    """n_sep x m_len cell rectangle with (ab) = bottom side, (cd) = top
    side (the long sides when m_len > n_sep), lateral arcs left/right."""
    if n_sep < 1 or m_len < 1:
        raise ValueError("need at least one cell each way")
    dom = build_rect(0, m_len, 0, n_sep)
    ab = tuple(Vertex(x, 0) for x in range(m_len + 1))
    cd = tuple(Vertex(x, n_sep) for x in range(m_len + 1))
    bc_ = tuple(Vertex(m_len, y) for y in range(1, n_sep))
    da = tuple(Vertex(0, y) for y in range(1, n_sep))
    cond = np.ones(dom.n_edges)
    for i, e in enumerate(dom.edges):
        if e.a.x == e.b.x and e.a.x in (0, m_len):
            cond[i] = 0.5
    return Quad(vertices=tuple(dom.vertices),
                edges=tuple((e.a, e.b) for e in dom.edges),
                conductance=cond,
                arcs={"ab": ab, "bc": bc_, "cd": cd, "da": da})


def remove_quad_edges(quad: Quad, edge_indices) -> Quad:
    keep = np.ones(len(quad.edges), dtype=bool)
    for i in edge_indices:
        keep[i] = False
    edges = tuple(e for i, e in enumerate(quad.edges) if keep[i])
    return Quad(vertices=quad.vertices, edges=edges,
                conductance=quad.conductance[keep], arcs=quad.arcs)


def _pcg(A: sp.csr_matrix, b: np.ndarray, tol: float, max_iter: int):
    """Conjugate gradient with Jacobi preconditioning."""
    diag = A.diagonal()
    inv_d = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)
    x = np.zeros_like(b)
    r = b - A @ x
    z = inv_d * r
    p = z.copy()
    rz = float(r @ z)
    bnorm = max(float(np.linalg.norm(b)), 1e-300)
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol * bnorm:
            break
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        z = inv_d * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, float(np.linalg.norm(b - A @ x))


def extremal_distance(quad: Quad, arcs: tuple[str, str] = ("ab", "cd"),
                      tol: float = 1e-10) -> tuple[float, float]:
    """Effective resistance between the two named arcs with the quad's
    conductances: potential 0 / 1 Dirichlet data, reflecting elsewhere;
    value = 1 / total current.  Returns (distance, solver residual);
    disconnected arcs give (inf, 0)."""
    src = set(quad.arcs[arcs[0]])
    snk = set(quad.arcs[arcs[1]])
    # connectivity
    index = {v: i for i, v in enumerate(quad.vertices)}
    adj = [[] for _ in quad.vertices]
    for k, (u, v) in enumerate(quad.edges):
        adj[index[u]].append((index[v], k))
        adj[index[v]].append((index[u], k))
    stack = [index[v] for v in src if v in index]
    seen = np.zeros(len(quad.vertices), dtype=bool)
    for i in stack:
        seen[i] = True
    while stack:
        i = stack.pop()
        for j, _ in adj[i]:
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    if not any(seen[index[v]] for v in snk if v in index):
        return math.inf, 0.0

    free = [v for v in quad.vertices if v not in src and v not in snk]
    fidx = {v: i for i, v in enumerate(free)}
    nfree = len(free)
    rows, cols, vals = [], [], []
    b = np.zeros(nfree)
    diag = np.zeros(nfree)
    for k, (u, v) in enumerate(quad.edges):
        c = quad.conductance[k]
        for a, w in ((u, v), (v, u)):
            if a in fidx:
                diag[fidx[a]] += c
                if w in fidx:
                    rows.append(fidx[a])
                    cols.append(fidx[w])
                    vals.append(-c)
                elif w in snk:
                    b[fidx[a]] += c
    rows.extend(range(nfree))
    cols.extend(range(nfree))
    vals.extend(diag)
    if nfree:
        A = sp.csr_matrix((vals, (rows, cols)), shape=(nfree, nfree))
        x, residual = _pcg(A, b, tol, max_iter=8 * nfree + 100)
    else:
        x, residual = np.zeros(0), 0.0
    potential = {v: 0.0 for v in src}
    potential.update({v: 1.0 for v in snk})
    potential.update({v: x[i] for v, i in fidx.items()})
    current = 0.0
    for k, (u, v) in enumerate(quad.edges):
        for a, w in ((u, v), (v, u)):
            if a in snk and w not in snk:
                current += quad.conductance[k] * (1.0 - potential[w])
    if current <= 0:
        return math.inf, residual
    return 1.0 / current, residual


# ---------------------------------------------------------------------------
# chemical-distance ratio series


def _pi3_ladder(n: int) -> list[tuple[int, int]]:
    """Annulus chain for pi3(1, n): geometric steps of factor 8 from 1."""
    scales = [1]
    while scales[-1] * 8 < n:
        scales.append(scales[-1] * 8)
    scales.append(n)
    return list(zip(scales[:-1], scales[1:]))


def bound_ratio_series(n_list: Sequence[int], q: float, bc_kind: str,
                       spec: SamplerSpec, seed: int, n_samples: int,
                       ) -> list[EstimateRecord]:
    """For each n: the two crossing-length ratios E[S_n | H_n] / (n^2 pi3)
    and E[len(l_n) | H_n] / (n^2 pi3), with pi3(1, n) assembled by
    quasi-multiplicative chaining over the reported ladder.  The per-sample
    inequality S_n <= len(l_n) is asserted on every conditioned sample."""
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be increasing")
    records = []
    params = Params(critical_point(q), q)
    for idx_n, n in enumerate(n_list):
        box = _box_cached(n)
        bc = _bc_cached(box, bc_kind)
        ladder = _pi3_ladder(n)
        ooc_events = [arm_event_on_host(("O", "O", "C"), a, b) for a, b in ladder]

        def stats_for(cfg, _events=ooc_events):
            lc = paths.lowest_crossing(cfg, cfg.domain)
            if lc is None:
                row = [0.0, 0.0, 0.0]
            else:
                s_n = paths.chemical_distance(cfg, cfg.domain)
                assert s_n is not None and s_n <= lc.length, \
                    "shortest crossing longer than the lowest crossing"
                row = [1.0, float(s_n), float(lc.length)]
            row.extend(1.0 if ev(cfg) else 0.0 for ev in _events)
            return row

        width = 3 + len(ladder)
        data = np.empty((n_samples, width))
        gen = run_chain(spec, box, params, bc, seed + 104729 * idx_n)
        for i in range(n_samples):
            _, cfg = next(gen)
            data[i] = stats_for(cfg)
        hits = data[:, 0].sum()
        if hits == 0:
            raise ValueError(f"no crossings observed at n={n}")
        batches = _batch_means(data)

        def ratio_fn(col):
            def fn(mu):
                if mu[0] <= 0:
                    return np.nan
                pi3 = 1.0
                for j in range(len(ladder)):
                    pi3 *= mu[3 + j]
                if pi3 <= 0:
                    return np.nan
                return (mu[col] / mu[0]) / (n * n * pi3)
            return fn

        mu = data.mean(axis=0)
        pi3_chain = float(np.prod(mu[3:]))
        ctx_common = _context(params, bc, seed, spec, n=n,
                              ladder=[list(t) for t in ladder],
                              chain_factors=[float(v) for v in mu[3:]],
                              pi3_chain=pi3_chain,
                              conditioning_hits=int(hits))
        for col, label in ((1, "chemical_ratio"), (2, "lowest_ratio")):
            value = (mu[col] / mu[0]) / (n * n * pi3_chain)
            stderr = _jackknife_stderr(batches, ratio_fn(col))
            records.append(EstimateRecord(
                f"{label}(n={n})", float(value), stderr, n_samples,
                _n_effective(data[:, 0]), dict(ctx_common)))
        records.append(EstimateRecord(
            f"mean_chemical(n={n})", float(mu[1] / mu[0]),
            _jackknife_stderr(batches, lambda m: m[1] / m[0] if m[0] > 0 else np.nan),
            n_samples, _n_effective(data[:, 0]), dict(ctx_common)))
        records.append(EstimateRecord(
            f"mean_lowest(n={n})", float(mu[2] / mu[0]),
            _jackknife_stderr(batches, lambda m: m[2] / m[0] if m[0] > 0 else np.nan),
            n_samples, _n_effective(data[:, 0]), dict(ctx_common)))
    return records


# ---------------------------------------------------------------------------
# event helpers


def edge_open_event(domain, u, v):
    eid = domain.edge_id(u, v)
    return lambda cfg: bool(cfg.bits[eid])


def horizontal_crossing_event():
    return lambda cfg: paths.has_horizontal_crossing(cfg, cfg.domain)
