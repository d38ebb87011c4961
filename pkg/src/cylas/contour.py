"""Marching squares on a rectilinear grid, joined into polylines."""
from __future__ import annotations

from collections import defaultdict

import numpy as np

__all__ = ["contour_lines", "contour_segments"]

# corner order per cell: 0=(i,j) 1=(i,j+1) 2=(i+1,j+1) 3=(i+1,j); edges
# 0: 0-1 (bottom), 1: 1-2 (right), 2: 3-2 (top), 3: 0-3 (left)
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))

# edge pairs per case index (bit k set when corner k is above the level);
# the two saddle cases are resolved by the cell-centre value below
_CASES = {
    0: (), 15: (),
    1: ((3, 0),), 14: ((3, 0),),
    2: ((0, 1),), 13: ((0, 1),),
    3: ((3, 1),), 12: ((3, 1),),
    4: ((1, 2),), 11: ((1, 2),),
    6: ((0, 2),), 9: ((0, 2),),
    7: ((3, 2),), 8: ((3, 2),),
}


def _edge_key(i: int, j: int, e: int) -> tuple[int, int, int]:
    # shared edges get one key: horizontal edges as (i, j, 0), vertical as (i, j, 1)
    if e == 0:
        return i, j, 0
    if e == 2:
        return i + 1, j, 0
    if e == 3:
        return i, j, 1
    return i, j + 1, 1


def contour_segments(x, y, z, level: float):
    """Segments of the ``level`` set of z[i, j] sampled at (x[j], y[i]).

    Returns a list of ((key0, p0), (key1, p1)) where the keys identify grid
    edges, so neighbouring segments can be chained exactly.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != (len(y), len(x)):
        raise ValueError("z must have shape (len(y), len(x))")
    above = z > level
    idx = (above[:-1, :-1].astype(int) | above[:-1, 1:] << 1
           | above[1:, 1:] << 2 | above[1:, :-1] << 3)
    segs = []
    for i, j in zip(*np.nonzero((idx != 0) & (idx != 15))):
        case = int(idx[i, j])
        corners = ((i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j))
        vals = [z[c] for c in corners]

        def point(e):
            c0, c1 = _EDGE_CORNERS[e]
            (i0, j0), (i1, j1) = corners[c0], corners[c1]
            s = (level - vals[c0]) / (vals[c1] - vals[c0])
            return (x[j0] + s * (x[j1] - x[j0]), y[i0] + s * (y[i1] - y[i0]))

        if case in (5, 10):
            centre_above = (sum(vals) / 4) > level
            # keep the above-level corners connected through the centre
            if (case == 5) == centre_above:
                pairs = ((3, 2), (0, 1))
            else:
                pairs = ((3, 0), (1, 2))
        else:
            pairs = _CASES[case]
        for e0, e1 in pairs:
            segs.append(((_edge_key(i, j, e0), point(e0)), (_edge_key(i, j, e1), point(e1))))
    return segs


def contour_lines(x, y, z, level: float) -> list[np.ndarray]:
    """Level set as a list of (m, 2) polylines; closed loops repeat their first point."""
    segs = contour_segments(x, y, z, level)
    adj: dict = defaultdict(list)
    pts = {}
    for n, ((k0, p0), (k1, p1)) in enumerate(segs):
        adj[k0].append(n)
        adj[k1].append(n)
        pts[k0], pts[k1] = p0, p1
    used = [False] * len(segs)

    def walk(start_key, seg):
        keys = [start_key]
        cur = start_key
        while seg is not None:
            used[seg] = True
            (ka, _), (kb, _) = segs[seg]
            cur = kb if ka == cur else ka
            keys.append(cur)
            seg = next((s for s in adj[cur] if not used[s]), None)
        return keys

    lines = []
    # open curves first (start at an edge key touched once), then loops
    ends = sorted(k for k, v in adj.items() if len(v) == 1)
    for k in ends:
        s = next((s for s in adj[k] if not used[s]), None)
        if s is not None:
            lines.append(walk(k, s))
    for n in range(len(segs)):
        if not used[n]:
            lines.append(walk(segs[n][0][0], n))
    return [np.array([pts[k] for k in keys]) for keys in lines]
