"""The random-cluster measure on finite domains.

Weights are p^o (1-p)^c q^k where k counts connected components of the open
subgraph after identifying the vertices of each boundary-condition class.
Everything here is exact: weights are handled in log space, and domains with
at most ORACLE_EDGE_CAP edges admit full enumeration of the distribution,
which serves as the ground-truth oracle for every sampler and estimator in
the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .lattice import Vertex, boundary_vertices

ORACLE_EDGE_CAP = 22


class OracleSizeError(ValueError):
    """Domain too large for exact enumeration."""


class UnsupportedAlgorithmError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    p: float
    q: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge weight p must be in [0, 1], got {self.p}")
        if not 1.0 <= self.q <= 4.0:
            raise ValueError(f"cluster weight q must be in [1, 4], got {self.q}")


def critical_point(q: float) -> float:
    """Self-dual point sqrt(q) / (1 + sqrt(q)) on the square lattice."""
    if q <= 0:
        raise ValueError(f"cluster weight must be positive, got {q}")
    s = math.sqrt(q)
    return s / (1.0 + s)


def dual_parameter(p: float, q: float) -> float:
    """The p* in (0,1) with p* p / ((1-p*)(1-p)) = q."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in the open interval (0, 1), got {p}")
    if q <= 0:
        raise ValueError(f"cluster weight must be positive, got {q}")
    return q * (1.0 - p) / (p + q * (1.0 - p))


def critical_params(q: float) -> Params:
    return Params(p=critical_point(q), q=q)


class BoundaryCondition:
    """A partition of a domain's boundary vertices.

    Classes are canonicalized (sorted members, classes sorted by smallest
    member); singleton classes are implicit.  FREE is the all-singleton
    partition, WIRED the single-class one.
    """

    def __init__(self, domain, classes=()):
        self.domain = domain
        bset = set(boundary_vertices(domain))
        seen = set()
        canon = []
        for cls in classes:
            members = tuple(sorted(Vertex(*v) for v in cls))
            for v in members:
                if v not in bset:
                    raise ValueError(f"{v} is not a boundary vertex")
                if v in seen:
                    raise ValueError(f"{v} appears in two classes")
                seen.add(v)
            if len(members) > 1:
                canon.append(members)
        canon.sort()
        self.classes = tuple(canon)

    @classmethod
    def free(cls, domain) -> "BoundaryCondition":
        return cls(domain)

    @classmethod
    def wired(cls, domain) -> "BoundaryCondition":
        return cls(domain, classes=(tuple(boundary_vertices(domain)),))

    @property
    def is_free(self) -> bool:
        return not self.classes

    def representative(self, v) -> Vertex:
        v = Vertex(*v)
        for cls in self.classes:
            if v in cls:
                return cls[0]
        return v

    def full_partition(self) -> list[tuple[Vertex, ...]]:
        """All classes including singletons, sorted by representative."""
        in_class = {v for cls in self.classes for v in cls}
        parts = list(self.classes)
        parts.extend((v,) for v in boundary_vertices(self.domain) if v not in in_class)
        return sorted(parts)

    @cached_property
    def premerge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertex-id pairs whose union implements the wiring."""
        vi = self.domain.vertex_index
        pa, pb = [], []
        for cls in self.classes:
            r = vi[cls[0]]
            for v in cls[1:]:
                pa.append(r)
                pb.append(vi[v])
        return (np.array(pa, dtype=np.int32), np.array(pb, dtype=np.int32))

    @cached_property
    def class_arrays(self):
        """(vclass, indptr, members): per-vertex class id (-1 if unwired)
        plus CSR member lists, for kernel-side teleports."""
        vi = self.domain.vertex_index
        vclass = np.full(self.domain.n_vertices, -1, dtype=np.int32)
        indptr = [0]
        members = []
        for ci, cls in enumerate(self.classes):
            for v in cls:
                vclass[vi[v]] = ci
                members.append(vi[v])
            indptr.append(len(members))
        return vclass, np.array(indptr, dtype=np.int32), np.array(members, dtype=np.int32)

    def __eq__(self, other):
        return (isinstance(other, BoundaryCondition)
                and self.domain is other.domain and self.classes == other.classes)

    def __hash__(self):
        return hash((id(self.domain), self.classes))

    def __repr__(self):
        if self.is_free:
            return "BoundaryCondition(free)"
        if self.classes == (tuple(sorted(boundary_vertices(self.domain))),):
            return "BoundaryCondition(wired)"
        return f"BoundaryCondition({len(self.classes)} nontrivial classes)"


@dataclass
class Configuration:
    """One sample omega: a bit per domain edge, 1 = open."""

    domain: object
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.shape != (self.domain.n_edges,):
            raise ValueError("bit vector length does not match domain edge count")

    @classmethod
    def all_open(cls, domain):
        return cls(domain, np.ones(domain.n_edges, dtype=np.uint8))

    @classmethod
    def all_closed(cls, domain):
        return cls(domain, np.zeros(domain.n_edges, dtype=np.uint8))

    @classmethod
    def from_index(cls, domain, index: int):
        """Bit j of index = state of edge j (the exact-table ordering)."""
        bits = (index >> np.arange(domain.n_edges, dtype=np.uint64)) & 1
        return cls(domain, bits.astype(np.uint8))

    @classmethod
    def bernoulli(cls, domain, p: float, rng):
        return cls(domain, (rng.random(domain.n_edges) < p).astype(np.uint8))

    def copy(self):
        return Configuration(self.domain, self.bits.copy())

    def is_open(self, u, v) -> bool:
        return bool(self.bits[self.domain.edge_id(u, v)])

    @property
    def n_open(self) -> int:
        return int(self.bits.sum())


def cluster_count(config: Configuration, bc: BoundaryCondition) -> int:
    """Components of the open subgraph on all vertices, with bc wiring.

    Isolated vertices count; a wired class counts as one component even when
    none of its members touches an open edge.
    """
    dom = config.domain
    pa, pb = bc.premerge_arrays
    return int(_kernels.cluster_count_bits(
        config.bits, dom.edge_a, dom.edge_b, dom.n_vertices, pa, pb))


@dataclass(frozen=True)
class WeightBreakdown:
    o: int
    c: int
    k: int
    log_weight: float


def log_weight(config: Configuration, params: Params, bc: BoundaryCondition) -> WeightBreakdown:
    o = config.n_open
    c = config.domain.n_edges - o
    k = cluster_count(config, bc)
    p, q = params.p, params.q
    if p == 0.0:
        lw = -math.inf if o > 0 else k * math.log(q)
    elif p == 1.0:
        lw = -math.inf if c > 0 else k * math.log(q)
    else:
        lw = o * math.log(p) + c * math.log(1.0 - p) + k * math.log(q)
    return WeightBreakdown(o=o, c=c, k=k, log_weight=lw)


class ExactTable:
    """The full normalized distribution over all 2^|E| configurations.

    Configuration index i has edge j open iff bit j of i is set.
    """

    def __init__(self, domain, params: Params, bc: BoundaryCondition,
                 log_weights: np.ndarray, log_z: float):
        self.domain = domain
        self.params = params
        self.bc = bc
        self.log_weights = log_weights
        self.log_z = log_z
        self.probabilities = np.exp(log_weights - log_z)

    @property
    def n_configs(self) -> int:
        return self.probabilities.shape[0]

    def config(self, index: int) -> Configuration:
        return Configuration.from_index(self.domain, index)

    def __iter__(self):
        for i in range(self.n_configs):
            yield self.config(i), float(self.probabilities[i])

    def probability(self, predicate) -> float:
        """Total probability of {omega : predicate(omega)}."""
        total = 0.0
        for i in range(self.n_configs):
            if predicate(self.config(i)):
                total += self.probabilities[i]
        return float(total)

    def edge_marginals(self) -> np.ndarray:
        idx = np.arange(self.n_configs, dtype=np.uint64)
        out = np.empty(self.domain.n_edges)
        for e in range(self.domain.n_edges):
            out[e] = self.probabilities[(idx >> np.uint64(e)) & np.uint64(1) == 1].sum()
        return out

    def indicator_vector(self, predicate) -> np.ndarray:
        return np.array([1.0 if predicate(self.config(i)) else 0.0
                         for i in range(self.n_configs)])

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(values, self.probabilities))

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probabilities)


def _check_oracle_cap(domain):
    if domain.n_edges > ORACLE_EDGE_CAP:
        raise OracleSizeError(
            f"exact enumeration capped at {ORACLE_EDGE_CAP} edges, "
            f"domain has {domain.n_edges}")


def exact_distribution(domain, params: Params, bc: BoundaryCondition) -> ExactTable:
    _check_oracle_cap(domain)
    ne = domain.n_edges
    n = 1 << ne
    pa, pb = bc.premerge_arrays
    ks = np.empty(n, dtype=np.int32)
    os_ = np.empty(n, dtype=np.int32)
    chunk = 1 << 20
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        _kernels.cluster_counts_range(
            domain.edge_a, domain.edge_b, domain.n_vertices, pa, pb,
            start, stop, ks[start:stop], os_[start:stop])
    p, q = params.p, params.q
    if not 0.0 < p < 1.0:
        raise ValueError("exact_distribution requires p in (0, 1)")
    lw = os_ * math.log(p) + (ne - os_) * math.log1p(-p) + ks * math.log(q)
    m = lw.max()
    log_z = m + math.log(np.exp(lw - m).sum())
    return ExactTable(domain, params, bc, lw, log_z)


def exact_event_probability(domain, params: Params, bc: BoundaryCondition,
                            predicate) -> float:
    table = exact_distribution(domain, params, bc)
    return table.probability(predicate)


def induced_boundary_condition(outer_config: Configuration,
                               outer_bc: BoundaryCondition,
                               subdomain) -> BoundaryCondition:
    """Partition of the subdomain boundary induced by connectivity through
    the configuration restricted to edges outside the subdomain, with the
    outer wiring in force (the domain Markov boundary condition)."""
    dom = outer_config.domain
    for e in subdomain.edges:
        if (e.a, e.b) not in dom.edge_index:
            raise ValueError("subdomain is not contained in the outer domain")
    sub_edges = {(e.a, e.b) for e in subdomain.edges}

    from .unionfind import UnionFind
    uf = UnionFind(dom.n_vertices)
    vi = dom.vertex_index
    pa, pb = outer_bc.premerge_arrays
    for i in range(len(pa)):
        uf.union(int(pa[i]), int(pb[i]))
    for i, e in enumerate(dom.edges):
        if outer_config.bits[i] and (e.a, e.b) not in sub_edges:
            uf.union(vi[e.a], vi[e.b])

    groups = {}
    for v in boundary_vertices(subdomain):
        groups.setdefault(uf.find(vi[v]), []).append(v)
    classes = [tuple(g) for g in groups.values() if len(g) > 1]
    return BoundaryCondition(subdomain, classes)


def heat_bath_open_probability(config: Configuration, edge, params: Params,
                               bc: BoundaryCondition) -> float:
    """Conditional probability that `edge` is open given the rest of omega:
    p when its endpoints are connected without it (wiring included), else
    p / (p + (1-p) q)."""
    dom = config.domain
    if isinstance(edge, int):
        eid = edge
    else:
        eid = dom.edge_id(*edge)
    e = dom.edges[eid]
    a, b = dom.vertex_index[e.a], dom.vertex_index[e.b]
    if _endpoints_connected_without(config, eid, a, b, bc):
        return params.p
    return params.p / (params.p + (1.0 - params.p) * params.q)


def _endpoints_connected_without(config, eid, a, b, bc) -> bool:
    dom = config.domain
    vclass, cls_indptr, cls_members = bc.class_arrays
    seen_cls = set()
    visited = np.zeros(dom.n_vertices, dtype=bool)
    stack = [a]
    visited[a] = True

    def teleport(v):
        c = vclass[v]
        if c >= 0 and c not in seen_cls:
            seen_cls.add(c)
            for m in cls_members[cls_indptr[c]:cls_indptr[c + 1]]:
                if not visited[m]:
                    visited[m] = True
                    stack.append(int(m))

    teleport(a)
    while stack:
        v = stack.pop()
        if v == b or visited[b]:
            return True
        for t in range(dom.adj_indptr[v], dom.adj_indptr[v + 1]):
            ee = dom.adj_edge[t]
            if ee == eid or not config.bits[ee]:
                continue
            w = dom.adj_vertex[t]
            if not visited[w]:
                visited[w] = True
                stack.append(int(w))
                teleport(int(w))
    return bool(visited[b])
