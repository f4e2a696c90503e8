"""Dev harness: exhaustive validation of lowest_crossing against the
below-order minimum over all crossings, on tiny rectangles."""
import itertools
import numpy as np
from rclab.lattice import build_rect, make_edge, Vertex
from rclab.rcmodel import Configuration
from rclab.paths import (lowest_crossing, has_horizontal_crossing, below_region,
                         duality_dichotomy_holds, chemical_distance, crossing_rectangle,
                         dual_territory_bottom)


def all_crossings(config, box):
    """All simple open paths from the left column to the right column."""
    left = set(box.left_column())
    right = set(box.right_column())
    out = []

    def extend(path, visited):
        v = path[-1]
        if v in right:
            out.append(tuple(path))  # record, but keep extending: the
            # below-minimal crossing may pass through the right column
        vid = box.vertex_index[v]
        for t in range(box.adj_indptr[vid], box.adj_indptr[vid + 1]):
            if not config.bits[box.adj_edge[t]]:
                continue
            w = box.vertices[box.adj_vertex[t]]
            if w in visited:
                continue
            visited.add(w)
            path.append(w)
            extend(path, visited)
            path.pop()
            visited.remove(w)

    for s in left:
        extend([s], {s})
    return out


def below_set(config, box, path_vertices):
    edges = [make_edge(path_vertices[i], path_vertices[i+1]) for i in range(len(path_vertices)-1)]
    on_path = set(box.edge_id(e.a, e.b) for e in edges)
    W, H = box.x1-box.x0, box.y1-box.y0
    # BFS over faces rows 0..H+1
    from collections import deque
    reached = set()
    dq = deque()
    for c in range(W):
        reached.add((0, c)); dq.append((0, c))
    while dq:
        r, c = dq.popleft()
        if r <= H and (r+1, c) not in reached and box.h_edge_grid[r, c] not in on_path:
            reached.add((r+1, c)); dq.append((r+1, c))
        if r >= 1 and (r-1, c) not in reached and box.h_edge_grid[r-1, c] not in on_path:
            reached.add((r-1, c)); dq.append((r-1, c))
        if 1 <= r <= H:
            if c+1 <= W-1 and (r, c+1) not in reached and box.v_edge_grid[r-1, c+1] not in on_path:
                reached.add((r, c+1)); dq.append((r, c+1))
            if c-1 >= 0 and (r, c-1) not in reached and box.v_edge_grid[r-1, c] not in on_path:
                reached.add((r, c-1)); dq.append((r, c-1))
    return frozenset((r, c) for (r, c) in reached if 1 <= r <= H)


def check_box(box, limit=None):
    ne = box.n_edges
    n = 1 << ne
    mismatches = 0
    for idx in range(n):
        cfg = Configuration.from_index(box, idx)
        crossings = all_crossings(cfg, box)
        exists_bf = bool(crossings)
        assert duality_dichotomy_holds(cfg, box), f"dichotomy fails idx={idx}"
        assert has_horizontal_crossing(cfg, box) == exists_bf, f"crossing existence idx={idx}"
        lc = lowest_crossing(cfg, box)
        assert (lc is not None) == exists_bf, f"lowest existence idx={idx}"
        if exists_bf:
            # chemical distance check
            assert chemical_distance(cfg, box) == min(len(p)-1 for p in crossings)
            bsets = [below_set(cfg, box, p) for p in crossings]
            minimal = [i for i, bs in enumerate(bsets)
                       if all(bs <= other for other in bsets)]
            assert minimal, f"no below-minimum at idx={idx}"
            # among minimal-below crossings, the canonical one has the
            # inclusion-minimal edge set (others differ by boundary spurs)
            def edge_set(p):
                return frozenset(box.edge_id(*make_edge(p[i], p[i+1])[:2])
                                 for i in range(len(p)-1))
            esets = [edge_set(crossings[i]) for i in minimal]
            canon = [es for es in esets if all(es <= other for other in esets)]
            assert len(canon) >= 1, f"no canonical minimum at idx={idx}"
            min_edges = canon[0]
            lc_edges = frozenset(box.edge_id(e.a, e.b) for e in lc.path)
            if lc_edges != min_edges:
                mismatches += 1
                if mismatches <= 5:
                    print(f"MISMATCH idx={idx}: bf={sorted(min_edges)} walk={sorted(lc_edges)}")
                    print("  bits:", cfg.bits)
            if lc.below_area != len(bsets[minimal[0]]):
                mismatches += 1
                print(f"AREA MISMATCH idx={idx}: {lc.below_area} vs {len(bsets[minimal[0]])}")
    return mismatches


b = build_rect(0, 2, 0, 2)  # 3x3 vertices: 12 edges
print("checking 3x3 (12 edges, 4096 configs)...")
m = check_box(b)
print("mismatches:", m)

b2 = build_rect(0, 3, 0, 1)  # 4x2 vertices: 10 edges
print("checking 4x2 (10 edges)...")
m = check_box(b2)
print("mismatches:", m)

b3 = build_rect(0, 1, 0, 3)  # 2x4: 10 edges
print("checking 2x4...")
m = check_box(b3)
print("mismatches:", m)
