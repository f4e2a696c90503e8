"""Markov-chain and exact samplers targeting the random-cluster measure,
with reproducible counter-based streams, resumable chain state, and
integrated-autocorrelation diagnostics.

Randomness addressing: every sweep consumes one row of a Philox block keyed
by (seed, stream, block) where block = sweep // 256; within the row, the
uniform at position i drives edge (or vertex) i.  Chains are therefore
bit-exactly resumable from (seed, stream, sweep count, bits) alone; no
generator state is carried.  Sweep counter 0 is reserved for drawing the
initial configuration.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from . import _kernels
from .lattice import AnnulusDomain, BoxDomain, RectDomain, Vertex, build_annulus, build_box, build_rect
from .rcmodel import (BoundaryCondition, Configuration, Params, OracleSizeError,
                      UnsupportedAlgorithmError, exact_distribution,
                      ORACLE_EDGE_CAP)
from .rng import keyed_generator

HEAT_BATH = "heat_bath"
SWENDSEN_WANG = "swendsen_wang"
CHAYES_MACHTA = "chayes_machta"
EXACT_TINY = "exact_tiny"
ALGORITHMS = (HEAT_BATH, SWENDSEN_WANG, CHAYES_MACHTA, EXACT_TINY)

_BLOCK = 256

CHECKPOINT_MAGIC = b"RCLB"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class SamplerSpec:
    algorithm: str
    burn_in_sweeps: Optional[int] = None   # None: pilot-estimated, 20 * tau-hat
    thinning_sweeps: int = 1
    replica_count: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise UnsupportedAlgorithmError(f"unknown algorithm {self.algorithm!r}")
        if self.thinning_sweeps < 1:
            raise ValueError("thinning must be a positive number of sweeps")
        if self.replica_count < 1:
            raise ValueError("need at least one replica")
        if self.burn_in_sweeps is not None and self.burn_in_sweeps < 0:
            raise ValueError("burn-in cannot be negative")


@dataclass(frozen=True)
class ChainState:
    config: Configuration
    seed: int
    stream: int
    sweeps: int

    @property
    def domain(self):
        return self.config.domain


def validate_algorithm(algorithm: str, domain, params: Params) -> None:
    if algorithm == SWENDSEN_WANG and abs(params.q - round(params.q)) > 1e-12:
        raise UnsupportedAlgorithmError(
            f"Swendsen-Wang needs integer q in {{2,3,4}}, got q={params.q}")
    if algorithm == SWENDSEN_WANG and round(params.q) not in (2, 3, 4):
        raise UnsupportedAlgorithmError(
            f"Swendsen-Wang needs integer q in {{2,3,4}}, got q={params.q}")
    if algorithm == EXACT_TINY and domain.n_edges > ORACLE_EDGE_CAP:
        raise OracleSizeError("exact sampling needs an oracle-size domain")


@lru_cache(maxsize=4)
def _uniform_block(seed: int, stream: int, block: int, width: int) -> np.ndarray:
    g = keyed_generator(seed, stream, block)
    return g.random((_BLOCK, width))


def _sweep_uniforms(seed: int, stream: int, sweep: int, width: int) -> np.ndarray:
    return _uniform_block(seed, stream, sweep // _BLOCK, width)[sweep % _BLOCK]


def initial_state(domain, params: Params, seed: int, stream: int = 0) -> ChainState:
    """Product-Bernoulli(p) start drawn from the reserved sweep-0 counter."""
    u = _sweep_uniforms(seed, stream, 0, domain.n_edges)
    bits = (u < params.p).astype(np.uint8)
    return ChainState(Configuration(domain, bits), seed, stream, 0)


def heat_bath_sweep(state: ChainState, params: Params,
                    bc: BoundaryCondition) -> ChainState:
    """Visit every edge once in index order, resampling each from its
    single-edge conditional probability."""
    dom = state.domain
    sweep = state.sweeps + 1
    u = _sweep_uniforms(state.seed, state.stream, sweep, dom.n_edges)
    bits = state.config.bits.copy()
    vclass, cls_indptr, cls_members = bc.class_arrays
    pa, pb = bc.premerge_arrays
    _kernels.heat_bath_sweep_kernel(
        bits, dom.edge_a, dom.edge_b, dom.adj_indptr, dom.adj_vertex,
        dom.adj_edge, vclass, cls_indptr, cls_members, params.p, params.q, u)
    return ChainState(Configuration(dom, bits), state.seed, state.stream, sweep)


def _cluster_sweep(state: ChainState, params: Params, bc: BoundaryCondition,
                   is_sw: bool) -> ChainState:
    dom = state.domain
    sweep = state.sweeps + 1
    u = _sweep_uniforms(state.seed, state.stream, sweep,
                        dom.n_vertices + dom.n_edges)
    bits = state.config.bits.copy()
    pa, pb = bc.premerge_arrays
    roots = np.empty(dom.n_vertices, dtype=np.int32)
    if is_sw:
        _kernels.sw_sweep(bits, dom.edge_a, dom.edge_b, dom.n_vertices, pa, pb,
                          int(round(params.q)), u[:dom.n_vertices],
                          u[dom.n_vertices:], params.p, roots)
    else:
        _kernels.cm_sweep(bits, dom.edge_a, dom.edge_b, dom.n_vertices, pa, pb,
                          params.q, u[:dom.n_vertices], u[dom.n_vertices:],
                          params.p, roots)
    return ChainState(Configuration(dom, bits), state.seed, state.stream, sweep)


def swendsen_wang_sweep(state: ChainState, params: Params,
                        bc: BoundaryCondition) -> ChainState:
    """Uniform Potts color per cluster (wired classes share their cluster's
    color), then edges between equal-colored endpoints open with
    probability p."""
    validate_algorithm(SWENDSEN_WANG, state.domain, params)
    return _cluster_sweep(state, params, bc, is_sw=True)


def chayes_machta_sweep(state: ChainState, params: Params,
                        bc: BoundaryCondition) -> ChainState:
    """Each cluster active with probability 1/q; the configuration on edges
    inside the active vertex set is refreshed as Bernoulli(p).  At q = 1
    every cluster is active and the sweep is a full independent refresh."""
    return _cluster_sweep(state, params, bc, is_sw=False)


def sweep(state: ChainState, params: Params, bc: BoundaryCondition,
          algorithm: str) -> ChainState:
    if algorithm == HEAT_BATH:
        return heat_bath_sweep(state, params, bc)
    if algorithm == SWENDSEN_WANG:
        return swendsen_wang_sweep(state, params, bc)
    if algorithm == CHAYES_MACHTA:
        return chayes_machta_sweep(state, params, bc)
    raise UnsupportedAlgorithmError(algorithm)


@lru_cache(maxsize=8)
def _cached_cumulative(domain, params: Params, bc: BoundaryCondition):
    table = exact_distribution(domain, params, bc)
    return np.cumsum(table.probabilities)


def exact_sample_tiny(domain, params: Params, bc: BoundaryCondition,
                      rng: np.random.Generator) -> Configuration:
    """One exact draw by inverse CDF over the full enumeration."""
    cum = _cached_cumulative(domain, params, bc)
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    idx = min(idx, len(cum) - 1)
    return Configuration.from_index(domain, idx)


def replica_chain(spec: SamplerSpec, domain, params: Params,
                  bc: BoundaryCondition, seed: int,
                  stream: int) -> Iterator[Configuration]:
    """One replica's stream of thinned configurations after burn-in."""
    validate_algorithm(spec.algorithm, domain, params)
    if spec.algorithm == EXACT_TINY:
        g = keyed_generator(seed, stream)
        while True:
            yield exact_sample_tiny(domain, params, bc, g)
    burn = spec.burn_in_sweeps
    if burn is None:
        burn = pilot_burn_in(spec.algorithm, domain, params, bc, seed)
    state = initial_state(domain, params, seed, stream)
    for _ in range(burn):
        state = sweep(state, params, bc, spec.algorithm)
    while True:
        for _ in range(spec.thinning_sweeps):
            state = sweep(state, params, bc, spec.algorithm)
        yield state.config.copy()


def run_chain(spec: SamplerSpec, domain, params: Params, bc: BoundaryCondition,
              seed: int) -> Iterator[tuple[int, Configuration]]:
    """Yield (replica, configuration) pairs round-robin across replicas,
    one per thinning interval after burn-in.  Fully reproducible from
    (seed, spec, domain, params, bc)."""
    chains = [replica_chain(spec, domain, params, bc, seed, r)
              for r in range(spec.replica_count)]
    while True:
        for r, ch in enumerate(chains):
            yield r, next(ch)


def sample_codes(spec: SamplerSpec, domain, params: Params,
                 bc: BoundaryCondition, seed: int, n_samples: int,
                 stream: int = 0) -> np.ndarray:
    """Thinned configurations of one replica as int64 bit-codes (edge j =
    bit j), via block kernels; the trajectory is bit-identical to repeated
    single sweeps.  Requires <= 62 edges."""
    validate_algorithm(spec.algorithm, domain, params)
    if domain.n_edges > 62:
        raise ValueError("bit-codes need at most 62 edges")
    if spec.algorithm == EXACT_TINY:
        cum = _cached_cumulative(domain, params, bc)
        g = keyed_generator(seed, stream)
        idx = np.searchsorted(cum, g.random(n_samples), side="right")
        return np.minimum(idx, len(cum) - 1).astype(np.int64)
    burn = spec.burn_in_sweeps if spec.burn_in_sweeps is not None else \
        pilot_burn_in(spec.algorithm, domain, params, bc, seed)
    thin = spec.thinning_sweeps
    bits = initial_state(domain, params, seed, stream).config.bits.copy()
    pa, pb = bc.premerge_arrays
    vclass, cls_indptr, cls_members = bc.class_arrays
    is_hb = spec.algorithm == HEAT_BATH
    width = domain.n_edges if is_hb else domain.n_vertices + domain.n_edges
    codes = np.empty(n_samples, dtype=np.int64)

    def advance(first_sweep, n_sweeps, thinning, codes_filled):
        """Run global sweeps [first_sweep, first_sweep + n_sweeps); record
        relative to the phase start.  Returns codes recorded."""
        done = 0
        while done < n_sweeps:
            g0 = first_sweep + done
            lo = g0 % _BLOCK
            hi = min(_BLOCK, lo + (n_sweeps - done))
            u = _uniform_block(seed, stream, g0 // _BLOCK, width)[lo:hi]
            if is_hb:
                rec = _kernels.heat_bath_block(
                    bits, domain.edge_a, domain.edge_b, domain.adj_indptr,
                    domain.adj_vertex, domain.adj_edge, vclass, cls_indptr,
                    cls_members, params.p, params.q, u,
                    done, thinning, codes, codes_filled)
            else:
                rec = _kernels.cluster_block(
                    bits, domain.edge_a, domain.edge_b, domain.n_vertices,
                    pa, pb, spec.algorithm == SWENDSEN_WANG, params.q,
                    params.p, u, done, thinning, codes, codes_filled)
            codes_filled += rec
            done += hi - lo
        return codes_filled

    advance(1, burn, burn + 1, 0)  # burn-in: thinning > n_sweeps, no records
    filled = advance(burn + 1, n_samples * thin, thin, 0)
    assert filled == n_samples
    return codes


def pilot_burn_in(algorithm: str, domain, params: Params, bc: BoundaryCondition,
                  seed: int, pilot_samples: int = 400, floor: int = 32) -> int:
    """Default burn-in: 20 * tau-hat of the open-edge density from a short
    pilot run (documented default; override via SamplerSpec)."""
    spec = SamplerSpec(algorithm, burn_in_sweeps=0, thinning_sweeps=1)
    dens = []
    for (_, cfg), _ in zip(run_chain(spec, domain, params, bc, seed ^ 0x9E3779B9),
                           range(pilot_samples)):
        dens.append(cfg.bits.mean())
    try:
        tau = autocorrelation(dens)
    except ValueError:
        tau = 1.0
    if not math.isfinite(tau):
        tau = 1.0
    return max(floor, int(math.ceil(20 * tau)))


# -- diagnostics --------------------------------------------------------------

def autocorrelation(series) -> float:
    """Integrated autocorrelation time by self-consistent windowing
    (window W grows until W >= 6 * tau(W)); 0.5 for i.i.d. data.  A constant
    series has no time scale and returns math.inf as a documented sentinel."""
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n < 100:
        raise ValueError(f"need at least 100 points, got {n}")
    x = x - x.mean()
    var = np.dot(x, x) / n
    if var == 0.0:
        return math.inf
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    rho = acov / acov[0]
    tau = 0.5
    for t in range(1, n // 2):
        tau += rho[t]
        if t >= 6.0 * tau:
            break
    return max(tau, 0.5)


def effective_sample_size(series) -> float:
    tau = autocorrelation(series)
    if not math.isfinite(tau):
        return 0.0
    return len(series) / (2.0 * tau)


# -- checkpoints --------------------------------------------------------------

def _domain_spec(domain) -> dict:
    if isinstance(domain, BoxDomain):
        return {"kind": "box", "n": domain.n, "center": list(domain.center)}
    if isinstance(domain, AnnulusDomain):
        return {"kind": "annulus", "center": list(domain.center),
                "n1": domain.n1, "n2": domain.n2}
    if isinstance(domain, RectDomain):
        return {"kind": "rect", "x0": domain.x0, "x1": domain.x1,
                "y0": domain.y0, "y1": domain.y1}
    raise TypeError(f"cannot serialize domain {type(domain).__name__}")


def domain_from_spec(spec: dict):
    kind = spec["kind"]
    if kind == "box":
        return build_box(spec["n"], tuple(spec["center"]))
    if kind == "annulus":
        return build_annulus(tuple(spec["center"]), spec["n1"], spec["n2"])
    if kind == "rect":
        return build_rect(spec["x0"], spec["x1"], spec["y0"], spec["y1"])
    raise ValueError(f"unknown domain kind {kind!r}")


def save_checkpoint(path, state: ChainState, params: Params,
                    bc: BoundaryCondition) -> None:
    header = {
        "domain": _domain_spec(state.domain),
        "p": params.p,
        "q": params.q,
        "bc_classes": [[list(v) for v in cls] for cls in bc.classes],
        "seed": state.seed,
        "stream": state.stream,
        "sweeps": state.sweeps,
        "n_edges": state.domain.n_edges,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    packed = np.packbits(state.config.bits).tobytes()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(packed)


def load_checkpoint(path) -> tuple[ChainState, Params, BoundaryCondition]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError("not a chain checkpoint")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode())
        packed = np.frombuffer(fh.read(), dtype=np.uint8)
    domain = domain_from_spec(header["domain"])
    bits = np.unpackbits(packed)[:header["n_edges"]].astype(np.uint8)
    params = Params(header["p"], header["q"])
    bc = BoundaryCondition(domain, [[Vertex(*v) for v in cls]
                                    for cls in header["bc_classes"]])
    state = ChainState(Configuration(domain, bits), header["seed"],
                       header["stream"], header["sweeps"])
    return state, params, bc
