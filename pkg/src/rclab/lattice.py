"""Finite subdomains of the square lattice: boxes, rectangles, annuli, duals.

All domains are immutable after construction.  Vertices are integer pairs,
edges are canonically ordered nearest-neighbor pairs, and every domain
carries a dense, deterministic indexing of its vertices and edges (sorted
lexicographically) so that configurations can be stored as flat bit
vectors.

Dual vertices live on the half-integer lattice and are encoded as doubled
integers: the dual of (x, y) + (1/2, 1/2) is stored as (2x+1, 2y+1), which
keeps all midpoint arithmetic exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

HOLE = -1  # dual-side sentinel: face inside the inner box of an annulus
OUT = -2   # dual-side sentinel: face outside the domain


class InvalidGeometryError(ValueError):
    """Raised for inconsistent domain parameters (e.g. n1 >= n2)."""


class Vertex(NamedTuple):
    x: int
    y: int


class Edge(NamedTuple):
    """Nearest-neighbor edge with endpoints in canonical (sorted) order."""

    a: Vertex
    b: Vertex


def make_edge(u, v) -> Edge:
    u, v = Vertex(*u), Vertex(*v)
    if abs(u.x - v.x) + abs(u.y - v.y) != 1:
        raise InvalidGeometryError(f"not a nearest-neighbor pair: {u}, {v}")
    return Edge(u, v) if u <= v else Edge(v, u)


def _build_indexing(edges: list[Edge], extra_vertices=()):
    """Dense vertex/edge indexing plus CSR adjacency, all in sorted order."""
    verts = sorted({v for e in edges for v in e} | set(extra_vertices))
    vindex = {v: i for i, v in enumerate(verts)}
    ea = np.array([vindex[e.a] for e in edges], dtype=np.int32)
    eb = np.array([vindex[e.b] for e in edges], dtype=np.int32)
    nv = len(verts)
    deg = np.zeros(nv, dtype=np.int32)
    for i in range(len(edges)):
        deg[ea[i]] += 1
        deg[eb[i]] += 1
    indptr = np.zeros(nv + 1, dtype=np.int32)
    np.cumsum(deg, out=indptr[1:])
    nbr = np.zeros(indptr[-1], dtype=np.int32)
    nbr_edge = np.zeros(indptr[-1], dtype=np.int32)
    cursor = indptr[:-1].copy()
    for i in range(len(edges)):
        a, b = ea[i], eb[i]
        nbr[cursor[a]], nbr_edge[cursor[a]] = b, i
        cursor[a] += 1
        nbr[cursor[b]], nbr_edge[cursor[b]] = a, i
        cursor[b] += 1
    for arr in (ea, eb, indptr, nbr, nbr_edge):
        arr.setflags(write=False)
    return verts, vindex, ea, eb, indptr, nbr, nbr_edge


@dataclass(frozen=True, eq=False)
class _Domain:
    """Shared skeleton: ordered edge list plus dense indexing."""

    edges: tuple[Edge, ...]
    vertices: tuple[Vertex, ...] = field(repr=False)
    vertex_index: dict = field(repr=False)
    edge_index: dict = field(repr=False)
    edge_a: np.ndarray = field(repr=False)      # dense endpoint ids
    edge_b: np.ndarray = field(repr=False)
    adj_indptr: np.ndarray = field(repr=False)  # CSR adjacency
    adj_vertex: np.ndarray = field(repr=False)
    adj_edge: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, u, v) -> bool:
        u, v = Vertex(*u), Vertex(*v)
        key = (u, v) if u <= v else (v, u)
        return key in self.edge_index

    def edge_id(self, u, v) -> int:
        u, v = Vertex(*u), Vertex(*v)
        key = (u, v) if u <= v else (v, u)
        return self.edge_index[key]


def _domain_fields(edges: list[Edge], extra_vertices=()):
    verts, vindex, ea, eb, indptr, nbr, nbr_edge = _build_indexing(edges, extra_vertices)
    eindex = {(e.a, e.b): i for i, e in enumerate(edges)}
    return dict(
        edges=tuple(edges),
        vertices=tuple(verts),
        vertex_index=vindex,
        edge_index=eindex,
        edge_a=ea,
        edge_b=eb,
        adj_indptr=indptr,
        adj_vertex=nbr,
        adj_edge=nbr_edge,
    )


def _rect_edges(x0, x1, y0, y1) -> list[Edge]:
    edges = []
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            if x < x1:
                edges.append(Edge(Vertex(x, y), Vertex(x + 1, y)))
            if y < y1:
                edges.append(Edge(Vertex(x, y), Vertex(x, y + 1)))
    edges.sort()
    return edges


def _ring_vertices(center: Vertex, r: int) -> list[Vertex]:
    """Vertices at sup-norm distance r, counterclockwise from the bottom-left corner."""
    cx, cy = center
    if r == 0:
        return [Vertex(cx, cy)]
    ring = []
    for x in range(cx - r, cx + r):          # bottom, left to right
        ring.append(Vertex(x, cy - r))
    for y in range(cy - r, cy + r):          # right, bottom to top
        ring.append(Vertex(cx + r, y))
    for x in range(cx + r, cx - r, -1):      # top, right to left
        ring.append(Vertex(x, cy + r))
    for y in range(cy + r, cy - r, -1):      # left, top to bottom
        ring.append(Vertex(cx - r, y))
    return ring


@dataclass(frozen=True, eq=False)
class RectDomain(_Domain):
    """All nearest-neighbor edges inside the vertex rectangle [x0,x1] x [y0,y1].

    h_edge_grid[r, c] is the id of the horizontal edge (x0+c, y0+r)-(x0+c+1, y0+r);
    v_edge_grid[r, c] the id of the vertical edge (x0+c, y0+r)-(x0+c, y0+r+1).
    """

    x0: int = 0
    x1: int = 0
    y0: int = 0
    y1: int = 0
    h_edge_grid: np.ndarray = field(default=None, repr=False)
    v_edge_grid: np.ndarray = field(default=None, repr=False)

    def boundary(self) -> list[Vertex]:
        vs = []
        if self.x0 == self.x1 and self.y0 == self.y1:
            return [Vertex(self.x0, self.y0)]
        if self.x0 == self.x1:
            return [Vertex(self.x0, y) for y in range(self.y0, self.y1 + 1)]
        if self.y0 == self.y1:
            return [Vertex(x, self.y0) for x in range(self.x0, self.x1 + 1)]
        for x in range(self.x0, self.x1):
            vs.append(Vertex(x, self.y0))
        for y in range(self.y0, self.y1):
            vs.append(Vertex(self.x1, y))
        for x in range(self.x1, self.x0, -1):
            vs.append(Vertex(x, self.y1))
        for y in range(self.y1, self.y0, -1):
            vs.append(Vertex(self.x0, y))
        return vs

    def left_column(self) -> list[Vertex]:
        return [Vertex(self.x0, y) for y in range(self.y0, self.y1 + 1)]

    def right_column(self) -> list[Vertex]:
        return [Vertex(self.x1, y) for y in range(self.y0, self.y1 + 1)]


@dataclass(frozen=True, eq=False)
class BoxDomain(RectDomain):
    """B(n) around a center: the domain induced by edges in the (2n+1)^2 vertex square."""

    n: int = 0
    center: Vertex = Vertex(0, 0)

    def boundary(self) -> list[Vertex]:
        return _ring_vertices(self.center, self.n)


def _grid_vertices(x0, x1, y0, y1):
    return [Vertex(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]


def _edge_grids(edge_index, x0, x1, y0, y1):
    w, h = x1 - x0, y1 - y0
    hg = np.full((h + 1, max(w, 1)), -1, dtype=np.int32)
    vg = np.full((max(h, 1), w + 1), -1, dtype=np.int32)
    for r in range(h + 1):
        for c in range(w):
            hg[r, c] = edge_index[(Vertex(x0 + c, y0 + r), Vertex(x0 + c + 1, y0 + r))]
    for r in range(h):
        for c in range(w + 1):
            vg[r, c] = edge_index[(Vertex(x0 + c, y0 + r), Vertex(x0 + c, y0 + r + 1))]
    hg.setflags(write=False)
    vg.setflags(write=False)
    return hg, vg


def build_rect(x0: int, x1: int, y0: int, y1: int) -> RectDomain:
    if x1 < x0 or y1 < y0:
        raise InvalidGeometryError("empty rectangle")
    fields = _domain_fields(_rect_edges(x0, x1, y0, y1), _grid_vertices(x0, x1, y0, y1))
    hg, vg = _edge_grids(fields["edge_index"], x0, x1, y0, y1)
    return RectDomain(x0=x0, x1=x1, y0=y0, y1=y1,
                      h_edge_grid=hg, v_edge_grid=vg, **fields)


def build_box(n: int, center=(0, 0)) -> BoxDomain:
    if n < 0:
        raise InvalidGeometryError("box radius must be nonnegative")
    c = Vertex(*center)
    edges = _rect_edges(c.x - n, c.x + n, c.y - n, c.y + n)
    fields = _domain_fields(edges, _grid_vertices(c.x - n, c.x + n, c.y - n, c.y + n))
    hg, vg = _edge_grids(fields["edge_index"], c.x - n, c.x + n, c.y - n, c.y + n)
    return BoxDomain(n=n, center=c,
                     x0=c.x - n, x1=c.x + n, y0=c.y - n, y1=c.y + n,
                     h_edge_grid=hg, v_edge_grid=vg,
                     **fields)


@dataclass(frozen=True, eq=False)
class AnnulusDomain(_Domain):
    """Edges of B(center, n2) with no endpoint strictly inside B(center, n1).

    With this convention the annulus edge set and the strict interior of
    B(n1) (edges having an endpoint at sup-norm distance < n1) partition the
    edge set of B(n2); the ring of B(n1) itself belongs to the annulus.

    Face (dual-vertex) bookkeeping: a face is named by its lower-left corner
    (x, y) and means the unit square [x,x+1] x [y,y+1].  Faces split into
    hole faces (center at sup-norm distance <= n1 - 1/2 from the annulus
    center), annulus faces, and outside faces; per-edge dual sides use the
    sentinels HOLE / OUT for the latter two.
    """

    center: Vertex = Vertex(0, 0)
    n1: int = 0
    n2: int = 0
    inner_boundary: tuple[Vertex, ...] = ()
    outer_boundary: tuple[Vertex, ...] = ()
    faces: tuple[tuple[int, int], ...] = field(default=(), repr=False)
    face_index: dict = field(default_factory=dict, repr=False)
    edge_sides: np.ndarray = field(default=None, repr=False)   # (E,2) face ids / HOLE / OUT
    inner_contact_faces: tuple[int, ...] = field(default=(), repr=False)
    inner_ring_edges: tuple[int, ...] = field(default=(), repr=False)  # edge ids on the B(n1) ring

    def face_side_of(self, corner) -> int:
        """Classify a face by its lower-left corner: id, HOLE, or OUT."""
        fx, fy = corner
        d = max(abs(2 * fx + 1 - 2 * self.center.x), abs(2 * fy + 1 - 2 * self.center.y))
        if d >= 2 * self.n2 + 1:
            return OUT
        if self.n1 > 0 and d <= 2 * self.n1 - 1:
            return HOLE
        return self.face_index[(fx, fy)]


def _edge_face_corners(e: Edge):
    """Lower-left corners of the two faces bordering e."""
    (ax, ay), (bx, by) = e
    if ay == by:  # horizontal: faces below and above
        return (ax, ay - 1), (ax, ay)
    return (ax - 1, ay), (ax, ay)  # vertical: faces left and right


def build_annulus(center, n1: int, n2: int) -> AnnulusDomain:
    if not 0 <= n1 < n2:
        raise InvalidGeometryError(f"need 0 <= n1 < n2, got ({n1}, {n2})")
    c = Vertex(*center)

    def norm(v) -> int:
        return max(abs(v[0] - c.x), abs(v[1] - c.y))

    box_edges = _rect_edges(c.x - n2, c.x + n2, c.y - n2, c.y + n2)
    edges = [e for e in box_edges if norm(e.a) >= n1 and norm(e.b) >= n1]
    fields = _domain_fields(edges)

    # Annulus faces: centers at sup-norm distance in [n1 + 1/2, n2 - 1/2].
    faces = []
    for fx in range(c.x - n2, c.x + n2):
        for fy in range(c.y - n2, c.y + n2):
            d = max(abs(2 * fx + 1 - 2 * c.x), abs(2 * fy + 1 - 2 * c.y))
            if 2 * n1 + 1 <= d <= 2 * n2 - 1:
                faces.append((fx, fy))
    face_index = {f: i for i, f in enumerate(faces)}

    dom = AnnulusDomain(
        center=c, n1=n1, n2=n2,
        inner_boundary=tuple(_ring_vertices(c, n1)),
        outer_boundary=tuple(_ring_vertices(c, n2)),
        faces=tuple(faces), face_index=face_index,
        **fields,
    )
    sides = np.empty((len(edges), 2), dtype=np.int32)
    for i, e in enumerate(edges):
        f0, f1 = _edge_face_corners(e)
        sides[i, 0] = dom.face_side_of(f0)
        sides[i, 1] = dom.face_side_of(f1)
    sides.setflags(write=False)
    object.__setattr__(dom, "edge_sides", sides)

    if n1 == 0:
        contact = tuple(face_index[f] for f in ((c.x - 1, c.y - 1), (c.x - 1, c.y),
                                                (c.x, c.y - 1), (c.x, c.y)))
    else:
        contact = tuple(face_index[f] for f in faces
                        if max(abs(2 * f[0] + 1 - 2 * c.x), abs(2 * f[1] + 1 - 2 * c.y)) == 2 * n1 + 1)
    object.__setattr__(dom, "inner_contact_faces", contact)
    ring = tuple(i for i, e in enumerate(edges) if norm(e.a) == n1 and norm(e.b) == n1)
    object.__setattr__(dom, "inner_ring_edges", ring)
    return dom


def boundary_vertices(domain) -> list[Vertex]:
    """Topological boundary of a domain, cyclically ordered.

    For an annulus the outer ring is returned followed by the inner ring
    (two cyclic components).
    """
    if isinstance(domain, AnnulusDomain):
        return list(domain.outer_boundary) + list(domain.inner_boundary)
    return list(domain.boundary())


class DualMap:
    """Bijection between a domain's edges and their duals.

    Dual vertices are encoded as doubled integers: (2x+1, 2y+1) stands for
    (x + 1/2, y + 1/2).  An edge and its dual share the same midpoint, which
    in doubled coordinates is exact integer arithmetic.
    """

    def __init__(self, domain):
        self.domain = domain
        self._to_dual = {}
        self._to_primal = {}
        for e in domain.edges:
            d = self.dual_edge(e)
            self._to_dual[e] = d
            self._to_primal[d] = e

    @staticmethod
    def dual_edge(e: Edge) -> Edge:
        (ax, ay), (bx, by) = e
        mx, my = ax + bx, ay + by  # doubled midpoint
        if ay == by:  # horizontal -> vertical dual
            u, v = Vertex(mx, my - 1), Vertex(mx, my + 1)
        else:         # vertical -> horizontal dual
            u, v = Vertex(mx - 1, my), Vertex(mx + 1, my)
        return Edge(u, v) if u <= v else Edge(v, u)

    def to_dual(self, e: Edge) -> Edge:
        return self._to_dual[e]

    def to_primal(self, d: Edge) -> Edge:
        return self._to_primal[d]

    def __len__(self) -> int:
        return len(self._to_dual)

    @staticmethod
    def midpoint_doubled(e: Edge) -> Vertex:
        (ax, ay), (bx, by) = e
        return Vertex(ax + bx, ay + by)


def dual_map(domain) -> DualMap:
    if domain.n_edges == 0:
        raise InvalidGeometryError("domain has no edges")
    return DualMap(domain)
