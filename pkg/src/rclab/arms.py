"""Arm events in annuli: k disjoint inner-outer crossings whose colors
(open / dual-closed) follow a prescribed cyclic sequence.

Conventions.  Open arms are paths in the primal annulus graph from the
inner ring (the center vertex when n1 = 0) to the outer ring, pairwise
vertex-disjoint.  Dual-closed arms are face paths entering through a
closed inner-ring edge and leaving through a closed outer-ring edge,
pairwise face-disjoint.  Arms of different colors live on different
lattices and cannot collide, so the cyclic color order is the only
cross-color constraint.  Color sequences equal up to rotation denote the
same event.

Detection.  When one color appears at most once the cyclic order is
vacuous and the event reduces to two Menger counts (unit-capacity
max-flow).  Otherwise the detector anchors a dual arm at each closed
inner-ring edge in turn, extracting the clockwise-most arm from that slot
with a right-hand wall-following walk, then greedily places the remaining
colors counterclockwise, each walk hugging the previous witness.  A
virtual highway of cells just inside the inner ring, cut at the anchor
slot and at each placed witness, gives every walk a uniform multi-slot
start; a walk fails exactly when its state (cell, arrival move) repeats.

brute_force_arm_oracle is the independent ground truth: exhaustive search
over tuples of trimmed disjoint paths with strictly increasing cyclic
slot positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .lattice import HOLE, OUT, AnnulusDomain, Vertex
from .rcmodel import Configuration

OPEN = "O"
DUAL_CLOSED = "C"

_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # E N W S: counterclockwise order


class InvalidArmSpecError(ValueError):
    pass


class OracleBudgetError(RuntimeError):
    """Brute-force search exceeded its node budget."""


def n0(k: int) -> int:
    """Smallest radius whose boundary ring has at least k vertices."""
    if k < 1:
        raise ValueError("need k >= 1")
    return 0 if k == 1 else (k + 7) // 8


def normalize_sigma(sigma) -> tuple[str, ...]:
    out = []
    for s in sigma:
        if s not in (OPEN, DUAL_CLOSED):
            raise InvalidArmSpecError(
                f"colors must be '{OPEN}' or '{DUAL_CLOSED}', got {s!r}")
        out.append(s)
    if not out:
        raise InvalidArmSpecError("empty color sequence")
    return tuple(out)


def cyclically_equal(s1, s2) -> bool:
    s1, s2 = tuple(s1), tuple(s2)
    return len(s1) == len(s2) and any(s2 == s1[r:] + s1[:r] for r in range(len(s1)))


@dataclass(frozen=True)
class ArmSpec:
    annulus: AnnulusDomain
    sigma: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", normalize_sigma(self.sigma))
        k = len(self.sigma)
        if self.annulus.n1 < n0(k):
            raise InvalidArmSpecError(
                f"inner radius {self.annulus.n1} below n0({k}) = {n0(k)}")


@dataclass(frozen=True)
class ArmWitness:
    color: str
    vertices: tuple = ()        # open arm: ring vertex ... outer vertex
    faces: tuple = ()           # dual arm: face path (lower-left corners)
    crossed_edges: tuple = ()   # dual arm: primal edge ids, entry ... exit


@dataclass(frozen=True)
class ArmResult:
    occurs: bool
    witnesses: Optional[tuple[ArmWitness, ...]] = None


# ---------------------------------------------------------------------------
# workspace: dual CSR, ring slot tables, exit geometry


class _Workspace:
    def __init__(self, ann: AnnulusDomain):
        self.ann = ann
        c = ann.center

        nf = len(ann.faces)
        self.nf = nf
        self.hole_node = nf
        self.out_node = nf + 1
        adj = [[] for _ in range(nf + 2)]
        for eid in range(ann.n_edges):
            s0, s1 = int(ann.edge_sides[eid, 0]), int(ann.edge_sides[eid, 1])
            a = self.hole_node if s0 == HOLE else (self.out_node if s0 == OUT else s0)
            b = self.hole_node if s1 == HOLE else (self.out_node if s1 == OUT else s1)
            adj[a].append((b, eid))
            adj[b].append((a, eid))
        if ann.n1 == 0:
            # the four faces around the center are the hole contact; the
            # connection crosses no edge (id -1 = always passable)
            for f in ann.inner_contact_faces:
                adj[self.hole_node].append((f, -1))
                adj[f].append((self.hole_node, -1))
        self.dual_indptr = np.zeros(nf + 3, dtype=np.int32)
        np.cumsum([len(a) for a in adj], out=self.dual_indptr[1:])
        self.dual_nbr = np.empty(int(self.dual_indptr[-1]), dtype=np.int32)
        self.dual_edge = np.empty(int(self.dual_indptr[-1]), dtype=np.int32)
        pos = 0
        for rows in adj:
            for b, eid in rows:
                self.dual_nbr[pos] = b
                self.dual_edge[pos] = eid
                pos += 1

        self.inner_vmask = np.zeros(ann.n_vertices, dtype=np.bool_)
        self.outer_vmask = np.zeros(ann.n_vertices, dtype=np.bool_)
        for v in ann.inner_boundary:
            self.inner_vmask[ann.vertex_index[v]] = True
        for v in ann.outer_boundary:
            self.outer_vmask[ann.vertex_index[v]] = True
        self.hole_mask = np.zeros(nf + 2, dtype=np.bool_)
        self.hole_mask[self.hole_node] = True

        # hole-adjacent edge of each face (at most one for n1 >= 1)
        self.face_hole_edge = {}
        # ring slots: position 2i = ring vertex i, 2i+1 = ring edge (v_i, v_{i+1})
        ring = list(ann.inner_boundary)
        self.ring = ring
        self.R = len(ring) if ann.n1 >= 1 else 0
        self.n_pos = 2 * self.R
        self.vert_pos = {}
        self.edge_pos = {}
        self.slot_edge = {}
        self.entry_face = {}
        self.vertex_exits = {}
        if ann.n1 >= 1:
            for i, v in enumerate(ring):
                self.vert_pos[v] = 2 * i
            for i in range(self.R):
                u, w = ring[i], ring[(i + 1) % self.R]
                eid = ann.edge_id(u, w)
                p = 2 * i + 1
                self.edge_pos[eid] = p
                self.slot_edge[p] = eid
                e = ann.edges[eid]
                s0, s1 = int(ann.edge_sides[eid, 0]), int(ann.edge_sides[eid, 1])
                if e.a.y == e.b.y:  # horizontal ring edge: faces below/above
                    face = (e.a.x, e.a.y - 1) if s1 == HOLE else (e.a.x, e.a.y)
                else:               # vertical: faces left/right
                    face = (e.a.x, e.a.y) if s0 == HOLE else (e.a.x - 1, e.a.y)
                self.entry_face[p] = face
                self.face_hole_edge[face] = eid
            for v in ring:
                dx = (c.x > v.x) - (c.x < v.x)
                dy = (c.y > v.y) - (c.y < v.y)
                ramp_angle = (math.atan2(dy, dx) - 1e-6) % (2 * math.pi)
                entries = [((math.atan2(d[1], d[0])) % (2 * math.pi), ("dir", d))
                           for d in _DIRS]
                entries.append((ramp_angle, ("ramp", None)))
                entries.sort(key=lambda t: t[0])
                self.vertex_exits[v] = tuple(mv for _, mv in entries)

        self.norm = lambda v: max(abs(v[0] - c.x), abs(v[1] - c.y))

    def face_cross_edge(self, f, d) -> Optional[int]:
        """Id of the primal edge crossed when stepping from face f in
        direction d, or None if it is not an annulus edge."""
        fx, fy = f
        if d == (1, 0):
            key = (Vertex(fx + 1, fy), Vertex(fx + 1, fy + 1))
        elif d == (0, 1):
            key = (Vertex(fx, fy + 1), Vertex(fx + 1, fy + 1))
        elif d == (-1, 0):
            key = (Vertex(fx, fy), Vertex(fx, fy + 1))
        else:
            key = (Vertex(fx, fy), Vertex(fx + 1, fy))
        return self.ann.edge_index.get(key)

    def face_side(self, f) -> int:
        """face id / HOLE / OUT classification of an arbitrary face corner."""
        return self.ann.face_side_of(f)

    # -- reach / flow primitives ------------------------------------------

    def open_arm_exists(self, bits) -> bool:
        reached = np.empty(self.ann.n_vertices, dtype=np.bool_)
        _kernels.reach_mask(self.ann.adj_indptr, self.ann.adj_vertex,
                            self.ann.adj_edge, bits, self.inner_vmask, reached)
        return bool(reached[self.outer_vmask].any())

    def dual_arm_exists(self, bits) -> bool:
        reached = np.empty(self.nf + 2, dtype=np.bool_)
        _kernels.reach_mask(self.dual_indptr, self.dual_nbr, self.dual_edge,
                            (1 - bits).astype(np.uint8), self.hole_mask, reached)
        return bool(reached[self.out_node])

    def open_flow(self, bits, need: int) -> int:
        if need <= 0:
            return 0
        return int(_kernels.max_vertex_disjoint_paths(
            self.ann.adj_indptr, self.ann.adj_vertex, self.ann.adj_edge,
            np.ascontiguousarray(bits), self.inner_vmask, self.outer_vmask,
            need))

    def dual_flow(self, bits, need: int) -> int:
        """Max face-disjoint dual-closed crossings (entry and exit edges
        crossed, all intermediate steps between annulus faces)."""
        if need <= 0:
            return 0
        ann = self.ann
        closed = (1 - bits).astype(np.uint8)
        src = np.zeros(self.nf, dtype=np.bool_)
        tgt = np.zeros(self.nf, dtype=np.bool_)
        keep = closed.copy()
        for eid in range(ann.n_edges):
            s0, s1 = int(ann.edge_sides[eid, 0]), int(ann.edge_sides[eid, 1])
            if s0 >= 0 and s1 >= 0:
                continue
            keep[eid] = 0  # ring edges are entries/exits, not internal steps
            if bits[eid]:
                continue
            inner = (s0 == HOLE or s1 == HOLE)
            face = s1 if s0 < 0 else s0
            if face < 0:
                continue
            if inner:
                src[face] = True
            else:
                tgt[face] = True
        if ann.n1 == 0:
            for f in ann.inner_contact_faces:
                src[f] = True
        return int(_kernels.max_vertex_disjoint_paths(
            self.dual_indptr[:self.nf + 1], self.dual_nbr, self.dual_edge,
            keep, src, tgt, need))


@lru_cache(maxsize=None)
def _workspace(ann: AnnulusDomain) -> _Workspace:
    return _Workspace(ann)


# ---------------------------------------------------------------------------
# the right-hand wall-following walk

_HW_EXITS_RAMP = (("ramp", None), ("ccw", None), ("cw", None))
_HW_EXITS_PLAIN = (("ccw", None), ("cw", None))
_GRID_EXITS = tuple(("dir", d) for d in _DIRS)


class _WalkFailed(Exception):
    pass


def _walk_arm(ws: _Workspace, bits, color, start, start_back, cuts,
              used_v, used_f):
    """Extract the clockwise-most arm of the given color.

    start is either ("H", pos) for greedy walks scanning the highway or
    ("F", face) for the anchored dual walk; start_back is the move whose
    reverse brought us here.  Returns (cells, trail) where trail[i] is the
    primal edge crossed by the move cells[i] -> cells[i+1] (dual walks) or
    None, with a final ("OUT", edge) cell for dual walks; returns None when
    no arm exists past the cut.
    """
    ann = ws.ann
    n2 = ann.n2

    def exits_at(cell):
        kind = cell[0]
        if kind == "H":
            pos = cell[1]
            want = 0 if color == OPEN else 1
            return _HW_EXITS_RAMP if pos % 2 == want else _HW_EXITS_PLAIN
        if kind == "P":
            return ws.vertex_exits.get(cell[1], _GRID_EXITS)
        # face cell: replace the direction toward the hole with the ramp
        f = cell[1]
        hole_eid = ws.face_hole_edge.get(f)
        if hole_eid is None:
            return _GRID_EXITS
        out = []
        for mv in _GRID_EXITS:
            if ws.face_cross_edge(f, mv[1]) == hole_eid:
                out.append(("ramp", None))
            else:
                out.append(mv)
        return tuple(out)

    def try_move(cell, mv):
        """None if impassable, else (new_cell, back_move, crossed_edge, done)."""
        kind = cell[0]
        m, payload = mv
        if kind == "H":
            pos = cell[1]
            if m == "ccw":
                np_ = (pos + 1) % ws.n_pos
                if np_ in cuts:
                    return None
                return ("H", np_), ("cw", None), None, False
            if m == "cw":
                np_ = (pos - 1) % ws.n_pos
                if np_ in cuts:
                    return None
                return ("H", np_), ("ccw", None), None, False
            if pos % 2 == 0:
                v = ws.ring[pos // 2]
                if v in used_v:
                    return None
                return ("P", v), ("ramp", None), None, False
            eid = ws.slot_edge[pos]
            if bits[eid]:
                return None
            f = ws.entry_face[pos]
            if f in used_f:
                return None
            return ("F", f), ("ramp", None), eid, False
        if kind == "P":
            v = cell[1]
            if m == "ramp":
                hw = ws.vert_pos[v]
                if hw in cuts:
                    return None
                return ("H", hw), ("ramp", None), None, False
            d = payload
            w = Vertex(v[0] + d[0], v[1] + d[1])
            key = (v, w) if v <= w else (w, v)
            eid = ann.edge_index.get(key)
            if eid is None or not bits[eid] or w in used_v:
                return None
            if w not in ann.vertex_index:
                return None
            done = ws.norm(w) == n2
            return ("P", w), ("dir", (-d[0], -d[1])), None, done
        # face cell
        f = cell[1]
        if m == "ramp":
            eid = ws.face_hole_edge[f]
            hw = ws.edge_pos[eid]
            if hw in cuts or bits[eid]:
                return None
            return ("H", hw), ("ramp", None), eid, False
        d = payload
        eid = ws.face_cross_edge(f, d)
        if eid is None or bits[eid]:
            return None
        g = (f[0] + d[0], f[1] + d[1])
        side = ws.face_side(g)
        if side == OUT:
            return ("OUT", eid), None, eid, True
        if side == HOLE or side < 0:
            return None
        gf = ann.faces[side]
        if gf in used_f:
            return None
        return ("F", gf), ("dir", (-d[0], -d[1])), eid, False

    pos, back = start, start_back
    path = [pos]
    trail = []
    seen = set()
    budget = 64 * (ann.n_edges + ws.n_pos + 16)
    for _ in range(budget):
        state = (pos, back)
        if state in seen:
            return None
        seen.add(state)
        order = exits_at(pos)
        try:
            idx = order.index(back)
            order = order[idx + 1:] + order[:idx + 1]
        except ValueError:
            pass
        for mv in order:
            res = try_move(pos, mv)
            if res is None:
                continue
            ncell, nback, crossed, done = res
            if len(path) >= 2 and path[-2] == ncell:
                path.pop()
                trail.pop()
            else:
                path.append(ncell)
                trail.append(crossed)
            pos, back = ncell, nback
            if done:
                return path, trail
            break
        else:
            return None
    raise AssertionError("arm walk exceeded its step budget")


def _witness_from_walk(ws: _Workspace, color, path, trail):
    """Strip the highway prefix and trim ring-running spurs; return the
    witness plus the set of inner-ring positions it occupies."""
    last_hw = max(i for i, cell in enumerate(path) if cell[0] == "H")
    cells = path[last_hw + 1:]
    steps = trail[last_hw:]
    if color == OPEN:
        verts = [c[1] for c in cells]
        while len(verts) >= 2 and ws.norm(verts[1]) == ws.ann.n1:
            verts.pop(0)
        positions = {ws.vert_pos[v] for v in verts if ws.norm(v) == ws.ann.n1}
        return ArmWitness(color=OPEN, vertices=tuple(verts)), positions
    faces = tuple(c[1] for c in cells if c[0] == "F")
    crossed = tuple(int(e) for e in steps if e is not None)
    entry = crossed[0]
    return (ArmWitness(color=DUAL_CLOSED, faces=faces, crossed_edges=crossed),
            {ws.edge_pos[entry]})


# ---------------------------------------------------------------------------
# detection

def count_disjoint_open_crossings(config: Configuration, annulus: AnnulusDomain) -> int:
    ws = _workspace(annulus)
    bound = max(len(annulus.inner_boundary), 1)
    return ws.open_flow(config.bits, bound)


def count_disjoint_dual_crossings(config: Configuration, annulus: AnnulusDomain) -> int:
    ws = _workspace(annulus)
    bound = len(annulus.inner_boundary) + 4
    return ws.dual_flow(config.bits, bound)


def detect_poly_arm(config: Configuration, annulus: AnnulusDomain, j: int) -> bool:
    """j-1 disjoint open arms plus one dual-closed arm.  Cutting along a
    dual-closed crossing removes only closed edges, which the open flow
    never uses, so the cut never changes the open count."""
    if j < 3:
        raise ValueError("poly-arm events need j >= 3")
    ws = _workspace(annulus)
    if not ws.dual_arm_exists(config.bits):
        return False
    return ws.open_flow(config.bits, j - 1) >= j - 1


def detect_arm_event(config: Configuration, spec: ArmSpec) -> ArmResult:
    ws = _workspace(spec.annulus)
    bits = config.bits
    sigma = spec.sigma
    n_open = sum(1 for s in sigma if s == OPEN)
    n_dual = len(sigma) - n_open

    if n_open and not ws.open_arm_exists(bits):
        return ArmResult(False)
    if n_dual and not ws.dual_arm_exists(bits):
        return ArmResult(False)
    if n_open and ws.open_flow(bits, n_open) < n_open:
        return ArmResult(False)
    if n_dual and ws.dual_flow(bits, n_dual) < n_dual:
        return ArmResult(False)
    if n_open <= 1 or n_dual <= 1:
        # cyclic order carries no constraint; the flow counts above already
        # decide the event
        return ArmResult(True)

    # general cyclic case: anchor at each closed inner-ring edge
    rot = sigma.index(DUAL_CLOSED)
    word = sigma[rot:] + sigma[:rot]
    all_cut = frozenset(range(ws.n_pos))
    for i in range(ws.R):
        p_anchor = 2 * i + 1
        eid = ws.slot_edge[p_anchor]
        if bits[eid]:
            continue
        entry = ws.entry_face[p_anchor]
        res = _walk_arm(ws, bits, DUAL_CLOSED, ("F", entry), ("ramp", None),
                        all_cut, frozenset(), frozenset())
        if res is None:
            continue
        anchor_w, anchor_pos = _witness_from_walk(
            ws, DUAL_CLOSED, [("H", p_anchor)] + res[0], [eid] + res[1])
        placed = _greedy_rest(ws, bits, word[1:], p_anchor, anchor_w)
        if placed is not None:
            return ArmResult(True, (anchor_w, *placed))
    return ArmResult(False)


def _greedy_rest(ws: _Workspace, bits, word, p_anchor, anchor_w):
    used_v: set = set()
    used_f = set(anchor_w.faces)
    cuts = {p_anchor}
    prev_lin = 0
    out = []
    for color in word:
        start_lin = prev_lin + 1
        if start_lin >= ws.n_pos:
            return None
        start_pos = (p_anchor + start_lin) % ws.n_pos
        res = _walk_arm(ws, bits, color, ("H", start_pos), ("cw", None),
                        cuts, used_v, used_f)
        if res is None:
            return None
        witness, positions = _witness_from_walk(ws, color, res[0], res[1])
        lin_positions = {(p - p_anchor) % ws.n_pos for p in positions}
        prev_lin = max(lin_positions)
        cuts.add((p_anchor + prev_lin) % ws.n_pos)
        if color == OPEN:
            used_v.update(witness.vertices)
        else:
            used_f.update(witness.faces)
        out.append(witness)
    return tuple(out)


# ---------------------------------------------------------------------------
# witness validation (independent recheck)

def validate_witnesses(config: Configuration, spec: ArmSpec, witnesses) -> bool:
    ws = _workspace(spec.annulus)
    ann = spec.annulus
    bits = config.bits
    if witnesses is None or len(witnesses) != len(spec.sigma):
        return False
    if not cyclically_equal(spec.sigma, tuple(w.color for w in witnesses)):
        return False
    seen_v: set = set()
    seen_f: set = set()
    positions = []
    for w in witnesses:
        if w.color == OPEN:
            vs = w.vertices
            if not vs or ws.norm(vs[0]) != ann.n1 or ws.norm(vs[-1]) != ann.n2:
                return False
            for a, b in zip(vs, vs[1:]):
                key = (Vertex(*a), Vertex(*b))
                key = key if key[0] <= key[1] else (key[1], key[0])
                eid = ann.edge_index.get(key)
                if eid is None or not bits[eid]:
                    return False
            if seen_v & set(vs):
                return False
            seen_v.update(vs)
            positions.append(ws.vert_pos[Vertex(*vs[0])])
        else:
            if not w.crossed_edges or not w.faces:
                return False
            entry, exit_ = w.crossed_edges[0], w.crossed_edges[-1]
            sides_in = set(int(s) for s in ann.edge_sides[entry])
            sides_out = set(int(s) for s in ann.edge_sides[exit_])
            if HOLE not in sides_in or OUT not in sides_out:
                return False
            for eid in w.crossed_edges:
                if bits[eid]:
                    return False
            for f, g, eid in zip(w.faces, w.faces[1:], w.crossed_edges[1:]):
                s0, s1 = int(ann.edge_sides[eid, 0]), int(ann.edge_sides[eid, 1])
                fi, gi = ann.face_index[f], ann.face_index[g]
                if {s0, s1} != {fi, gi}:
                    return False
            if seen_f & set(w.faces):
                return False
            seen_f.update(w.faces)
            positions.append(ws.edge_pos[entry])
    base = positions[0]
    lin = [(p - base) % ws.n_pos for p in positions]
    return all(lin[i] < lin[i + 1] for i in range(len(lin) - 1))


# ---------------------------------------------------------------------------
# brute-force oracle

def brute_force_arm_oracle(config: Configuration, spec: ArmSpec,
                           max_edges: int = 200, budget: int = 5_000_000) -> bool:
    """Exhaustive search over tuples of trimmed disjoint arms honoring the
    cyclic color order.  Independent of the detector: plain DFS over paths
    with reachability pruning."""
    ann = spec.annulus
    if ann.n_edges > max_edges:
        raise OracleBudgetError(
            f"oracle capped at {max_edges} annulus edges, got {ann.n_edges}")
    ws = _workspace(ann)
    bits = config.bits
    sigma = spec.sigma
    k = len(sigma)
    if k == 1:
        return (ws.open_arm_exists(bits) if sigma[0] == OPEN
                else ws.dual_arm_exists(bits))

    nodes = [0]

    def charge():
        nodes[0] += 1
        if nodes[0] > budget:
            raise OracleBudgetError(f"oracle budget {budget} exhausted")

    inner, outer = ann.n1, ann.n2

    def open_paths_from(v0, used_v):
        """Trimmed open arms starting at ring vertex v0: touch the inner
        ring only at v0 and stop at the first outer-ring vertex."""
        path = [v0]
        on_path = {v0}

        def extend():
            charge()
            v = path[-1]
            vid = ann.vertex_index[v]
            for t in range(ann.adj_indptr[vid], ann.adj_indptr[vid + 1]):
                eid = ann.adj_edge[t]
                if not bits[eid]:
                    continue
                w = ann.vertices[ann.adj_vertex[t]]
                if w in on_path or w in used_v:
                    continue
                nw = ws.norm(w)
                if nw == inner:
                    continue
                path.append(w)
                if nw == outer:
                    yield tuple(path)
                else:
                    on_path.add(w)
                    yield from extend()
                    on_path.remove(w)
                path.pop()

        yield from extend()

    def dual_paths_from(p_slot, used_f):
        eid0 = ws.slot_edge[p_slot]
        if bits[eid0]:
            return
        f0 = ws.entry_face[p_slot]
        if f0 in used_f:
            return
        path = [f0]
        on_path = {f0}
        edges = [eid0]

        def extend():
            charge()
            f = path[-1]
            for d in _DIRS:
                eid = ws.face_cross_edge(f, d)
                if eid is None or bits[eid]:
                    continue
                g = (f[0] + d[0], f[1] + d[1])
                side = ws.face_side(g)
                if side == OUT:
                    yield tuple(path), tuple(edges) + (eid,)
                    continue
                if side == HOLE or side < 0:
                    continue
                gf = ann.faces[side]
                if gf in on_path or gf in used_f:
                    continue
                path.append(gf)
                on_path.add(gf)
                edges.append(eid)
                yield from extend()
                edges.pop()
                on_path.remove(gf)
                path.pop()

        yield from extend()

    def colors_still_possible(remaining, used_v, used_f):
        if OPEN in remaining:
            avail = np.array([1 if (bits[e] and True) else 0
                              for e in range(ann.n_edges)], dtype=np.uint8)
            src = ws.inner_vmask.copy()
            for v in used_v:
                src[ann.vertex_index[v]] = False
            blocked = np.zeros(ann.n_vertices, dtype=np.bool_)
            for v in used_v:
                blocked[ann.vertex_index[v]] = True
            reached = np.empty(ann.n_vertices, dtype=np.bool_)
            passable = avail.copy()
            for eid in range(ann.n_edges):
                ia, ib = int(ann.edge_a[eid]), int(ann.edge_b[eid])
                if blocked[ia] or blocked[ib]:
                    passable[eid] = 0
            _kernels.reach_mask(ann.adj_indptr, ann.adj_vertex, ann.adj_edge,
                                passable, src, reached)
            reached &= ~blocked
            if not bool(reached[ws.outer_vmask & ~blocked].any()):
                return False
        if DUAL_CLOSED in remaining:
            closed = (1 - bits).astype(np.uint8)
            reached = np.empty(ws.nf + 2, dtype=np.bool_)
            passable = closed.copy()
            blocked_f = np.zeros(ws.nf + 2, dtype=np.bool_)
            for f in used_f:
                blocked_f[ann.face_index[f]] = True
            for eid in range(ann.n_edges):
                s0, s1 = int(ann.edge_sides[eid, 0]), int(ann.edge_sides[eid, 1])
                if (s0 >= 0 and blocked_f[s0]) or (s1 >= 0 and blocked_f[s1]):
                    passable[eid] = 0
            _kernels.reach_mask(ws.dual_indptr, ws.dual_nbr, ws.dual_edge,
                                passable, ws.hole_mask, reached)
            if not bool(reached[ws.out_node]):
                return False
        return True

    def slots_for(color):
        if color == OPEN:
            return [ws.vert_pos[v] for v in ws.ring]
        return sorted(ws.slot_edge.keys())

    def place(i, first_pos, prev_lin, used_v, used_f):
        if i == k:
            return True
        color = sigma[i]
        if not colors_still_possible(set(sigma[i:]), used_v, used_f):
            return False
        for pos in slots_for(color):
            if i > 0:
                lin = (pos - first_pos) % ws.n_pos
                if lin <= prev_lin:
                    continue
            else:
                lin = 0
            if color == OPEN:
                v0 = ws.ring[pos // 2]
                if v0 in used_v:
                    continue
                for path in open_paths_from(v0, used_v):
                    if place(i + 1, pos if i == 0 else first_pos, lin,
                             used_v | set(path), used_f):
                        return True
            else:
                for faces, _edges in dual_paths_from(pos, used_f):
                    if place(i + 1, pos if i == 0 else first_pos, lin,
                             used_v, used_f | set(faces)):
                        return True
        return False

    return place(0, 0, -1, frozenset(), frozenset())


# ---------------------------------------------------------------------------
# fast open-open-dual-closed check for lowest-crossing edges

@lru_cache(maxsize=128)
def _origin_annulus(r: int):
    ann = _build_origin_annulus(r)
    ws = _workspace(ann)
    is_h = np.array([e.a.y == e.b.y for e in ann.edges])
    ex = np.array([e.a.x for e in ann.edges], dtype=np.int64)
    ey = np.array([e.a.y for e in ann.edges], dtype=np.int64)
    return ann, ws, is_h, ex, ey


def _build_origin_annulus(r: int) -> AnnulusDomain:
    from .lattice import build_annulus
    return build_annulus((0, 0), 1, r)


def edge_annulus_ooc(config: Configuration, host, center, r: int) -> bool:
    """Two disjoint open arms plus one dual-closed arm from distance 1 to
    distance r around `center`, evaluated on the host configuration.

    The annulus must lie inside the host rectangle.
    """
    if r <= 1:
        return True
    ann, ws, is_h, ex, ey = _origin_annulus(r)
    cx, cy = center
    rows = ey + cy - host.y0
    cols = ex + cx - host.x0
    sub = np.where(is_h,
                   host.h_edge_grid[rows % host.h_edge_grid.shape[0],
                                    cols % host.h_edge_grid.shape[1]],
                   host.v_edge_grid[rows % host.v_edge_grid.shape[0],
                                    cols % host.v_edge_grid.shape[1]])
    bits = np.ascontiguousarray(config.bits[sub])
    if not ws.dual_arm_exists(bits):
        return False
    return ws.open_flow(bits, 2) >= 2
