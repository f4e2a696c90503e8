"""Horizontal and radial crossings, chemical distance, and the lowest
crossing of a rectangle.

Conventions.  A horizontal crossing of a rectangle is an open path joining
the left and right boundary columns; its length is its edge count.  The
dual blocker is a dual-closed path joining the fringe face row below the
rectangle to the fringe row above it, never crossing the boundary columns'
vertical edges.  With these conventions exactly one of {open left-right
crossing, dual-closed top-bottom crossing} holds in every configuration,
and on the (n+1) x n rectangle the two events are exactly isomorphic, which
pins the q = 1 crossing probability to 1/2.

The lowest crossing is extracted by flooding the dual-closed territory
attached below the bottom side and tracing the open interface above it with
a right-hand wall-following walk; virtual always-open columns just outside
the rectangle make the multi-source start and finish uniform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .lattice import Edge, RectDomain, Vertex, build_rect, make_edge
from .rcmodel import Configuration

_CW = {(1, 0): (0, -1), (0, -1): (-1, 0), (-1, 0): (0, 1), (0, 1): (1, 0)}
_CCW = {v: k for k, v in _CW.items()}


@dataclass(frozen=True)
class CrossingResult:
    exists: bool
    shortest_length: Optional[int] = None
    shortest_path: Optional[tuple[Edge, ...]] = None


@dataclass(frozen=True)
class LowestCrossing:
    path: tuple[Edge, ...]
    below_area: int

    @property
    def length(self) -> int:
        return len(self.path)


def crossing_rectangle(n: int) -> RectDomain:
    """The self-dual crossing geometry: vertex rectangle [0, n+1] x [0, n]."""
    if n < 1:
        raise ValueError("need n >= 1")
    return build_rect(0, n + 1, 0, n)


def _require_rect(box) -> RectDomain:
    if not isinstance(box, RectDomain):
        raise TypeError("crossing operations need a rectangular domain")
    return box


def _left_right_masks(box: RectDomain):
    left = np.zeros(box.n_vertices, dtype=np.bool_)
    right = np.zeros(box.n_vertices, dtype=np.bool_)
    for v in box.left_column():
        left[box.vertex_index[v]] = True
    for v in box.right_column():
        right[box.vertex_index[v]] = True
    return left, right


def _crossing_distances(config: Configuration, box: RectDomain) -> np.ndarray:
    left, _ = _left_right_masks(box)
    dist = np.empty(box.n_vertices, dtype=np.int32)
    _kernels.multi_source_bfs_dist(box.adj_indptr, box.adj_vertex, box.adj_edge,
                                   config.bits, left, dist)
    return dist


def has_horizontal_crossing(config: Configuration, box) -> bool:
    box = _require_rect(box)
    if box.x0 == box.x1:
        return True
    dist = _crossing_distances(config, box)
    _, right = _left_right_masks(box)
    return bool((dist[right] >= 0).any())


def chemical_distance(config: Configuration, box) -> Optional[int]:
    """Minimum edge count over open left-right crossings, or None."""
    box = _require_rect(box)
    if box.x0 == box.x1:
        return 0
    dist = _crossing_distances(config, box)
    _, right = _left_right_masks(box)
    hits = dist[right]
    hits = hits[hits >= 0]
    return int(hits.min()) if hits.size else None


def horizontal_crossing(config: Configuration, box) -> CrossingResult:
    """Existence plus one shortest crossing path recovered from the BFS tree."""
    box = _require_rect(box)
    if box.x0 == box.x1:
        return CrossingResult(exists=True, shortest_length=0, shortest_path=())
    dist = _crossing_distances(config, box)
    _, right = _left_right_masks(box)
    best, best_d = -1, -1
    for v in np.nonzero(right)[0]:
        if dist[v] >= 0 and (best < 0 or dist[v] < best_d):
            best, best_d = int(v), int(dist[v])
    if best < 0:
        return CrossingResult(exists=False)
    path = []
    v = best
    while dist[v] > 0:
        for t in range(box.adj_indptr[v], box.adj_indptr[v + 1]):
            e = box.adj_edge[t]
            w = box.adj_vertex[t]
            if config.bits[e] and dist[w] == dist[v] - 1:
                path.append(box.edges[e])
                v = int(w)
                break
        else:  # pragma: no cover - BFS tree always provides a predecessor
            raise AssertionError("broken BFS parent chain")
    return CrossingResult(exists=True, shortest_length=best_d,
                          shortest_path=tuple(reversed(path)))


def radial_chemical_distance(config: Configuration, box) -> Optional[int]:
    """Length of the shortest open path from the box center to its boundary."""
    if not hasattr(box, "center"):
        raise TypeError("radial distance needs a centered box")
    if box.n == 0:
        return 0
    src = np.zeros(box.n_vertices, dtype=np.bool_)
    src[box.vertex_index[box.center]] = True
    dist = np.empty(box.n_vertices, dtype=np.int32)
    _kernels.multi_source_bfs_dist(box.adj_indptr, box.adj_vertex, box.adj_edge,
                                   config.bits, src, dist)
    hits = [dist[box.vertex_index[v]] for v in box.boundary()]
    hits = [d for d in hits if d >= 0]
    return int(min(hits)) if hits else None


# -- dual territory and the duality dichotomy --------------------------------

def dual_territory_bottom(config: Configuration, box) -> np.ndarray:
    """Face rows (H+2) x W of the dual-closed territory attached below the
    bottom side; row 0 is the bottom fringe, row H+1 the top fringe."""
    box = _require_rect(box)
    W = box.x1 - box.x0
    H = box.y1 - box.y0
    reached = np.zeros((H + 2, max(W, 1)), dtype=np.uint8)
    if W == 0:
        return reached
    _kernels.dual_territory_bottom(config.bits, box.h_edge_grid, box.v_edge_grid, reached)
    return reached


def has_dual_vertical_crossing(config: Configuration, box) -> bool:
    """Dual-closed top-bottom crossing of the rectangle (the blocking event)."""
    box = _require_rect(box)
    if box.x0 == box.x1:
        return False
    return bool(dual_territory_bottom(config, box)[-1].any())


def duality_dichotomy_holds(config: Configuration, box) -> bool:
    """Exactly one of {open LR crossing, dual-closed TB crossing}."""
    return has_horizontal_crossing(config, box) != has_dual_vertical_crossing(config, box)


# -- lowest crossing ----------------------------------------------------------

def _walk_lowest(config: Configuration, box: RectDomain) -> list[Vertex]:
    """Right-hand wall-following walk from the virtual left column to the
    virtual right column, hugging the dual territory below.  Returns the
    vertex sequence including virtual endpoints."""
    x0, x1, y0, y1 = box.x0, box.x1, box.y0, box.y1
    hg, vg = box.h_edge_grid, box.v_edge_grid
    bits = config.bits

    def edge_open(v, d):
        x, y = v
        nx, ny = x + d[0], y + d[1]
        if nx == x:  # vertical move
            lo = min(y, ny)
            if lo < y0 or lo + 1 > y1:
                return False
            if x in (x0 - 1, x1 + 1):  # virtual highway
                return True
            if x0 <= x <= x1:
                return bool(bits[vg[lo - y0, x - x0]])
            return False
        lo = min(x, nx)
        if not y0 <= y <= y1:
            return False
        if lo == x0 - 1 or lo == x1:  # ramps onto/off the virtual columns
            return True
        if x0 <= lo <= x1 - 1:
            return bool(bits[hg[y - y0, lo - x0]])
        return False

    pos = (x0 - 1, y0)
    incoming = (1, 0)
    path = [pos]
    seen_states = set()
    max_steps = 16 * (box.n_edges + box.n_vertices + 4 * (y1 - y0 + 2)) + 64
    for _ in range(max_steps):
        if pos[0] == x1 + 1:
            return path
        state = (pos, incoming)
        if state in seen_states:
            raise AssertionError("wall follower looped; no crossing to trace")
        seen_states.add(state)
        d = _CW[incoming]
        for _ in range(4):
            if edge_open(pos, d):
                npos = (pos[0] + d[0], pos[1] + d[1])
                if len(path) >= 2 and path[-2] == npos:
                    path.pop()
                else:
                    path.append(npos)
                pos, incoming = npos, d
                break
            d = _CCW[d]
        else:
            raise AssertionError("wall follower stuck")
    raise AssertionError("wall follower exceeded step budget")


def lowest_crossing(config: Configuration, box) -> Optional[LowestCrossing]:
    """The open left-right crossing minimal in the below-region order.

    Ties along the boundary columns (spurs that enclose no face) are broken
    by trimming: the crossing starts at its last departure from the left
    column and ends at its first arrival on the right column.
    """
    box = _require_rect(box)
    if box.x0 == box.x1:
        return LowestCrossing(path=(), below_area=0)
    territory = dual_territory_bottom(config, box)
    if territory[-1].any():
        return None
    walk = _walk_lowest(config, box)
    last_virtual = max(i for i, (x, _) in enumerate(walk) if x == box.x0 - 1)
    verts = [Vertex(x, y) for x, y in walk[last_virtual + 1:-1]]
    verts = _loop_erase(verts)
    while len(verts) >= 2 and verts[0].x == box.x0 and verts[1].x == box.x0:
        verts.pop(0)
    while len(verts) >= 2 and verts[-1].x == box.x1 and verts[-2].x == box.x1:
        verts.pop()
    edges = tuple(make_edge(verts[i], verts[i + 1]) for i in range(len(verts) - 1))
    assert len(set(verts)) == len(verts), "traced crossing is not a simple path"
    below = below_region(config, box, edges)
    return LowestCrossing(path=edges, below_area=below)


def _loop_erase(verts):
    """Excise cycles from the walk: the wall follower circles pendant
    structures engulfed by the territory (both faces below), which never
    carry the lowest crossing."""
    clean = []
    where = {}
    for v in verts:
        if v in where:
            cut = where[v]
            for w in clean[cut + 1:]:
                del where[w]
            del clean[cut + 1:]
        else:
            where[v] = len(clean)
            clean.append(v)
    return clean


def below_region(config: Configuration, box, path_edges) -> int:
    """Number of real faces below the given crossing: faces reachable from
    the bottom fringe by dual moves crossing any edge not on the path."""
    box = _require_rect(box)
    W = box.x1 - box.x0
    H = box.y1 - box.y0
    if W == 0 or H == 0:
        return 0
    on_path = np.zeros(box.n_edges, dtype=np.uint8)
    for e in path_edges:
        on_path[box.edge_id(e.a, e.b)] = 1
    # reuse the territory kernel: passable iff "closed", so feed it the
    # path indicator (path edges block, everything else passes)
    reached = np.zeros((H + 2, W), dtype=np.uint8)
    _kernels.dual_territory_bottom(on_path, box.h_edge_grid, box.v_edge_grid, reached)
    return int(reached[1:H + 1].sum())


def dist_to_boundary(box, v) -> int:
    box = _require_rect(box)
    v = Vertex(*v)
    return min(v.x - box.x0, box.x1 - v.x, v.y - box.y0, box.y1 - v.y)


def three_arm_point_count(config: Configuration, box, crossing: LowestCrossing,
                          cap_radius: int) -> int:
    """Edges e of the crossing whose local open-open-dual-closed arm event
    holds out to min(dist(e, boundary), cap_radius); radii too small to form
    an annulus pass vacuously."""
    from .arms import edge_annulus_ooc

    box = _require_rect(box)
    count = 0
    for e in crossing.path:
        ex = min(e.a, e.b)
        r = min(dist_to_boundary(box, ex), cap_radius)
        if r <= 1:
            count += 1
            continue
        if edge_annulus_ooc(config, box, ex, r):
            count += 1
    return count
