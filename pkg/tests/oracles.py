"""Independent oracles used to freeze derived values.

None of these call the closed forms they check.
"""

import itertools
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

# primitive stencil offsets: exact for axis, diagonal and knight directions
_STENCIL = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)
            if (dx, dy) != (0, 0) and math.gcd(dx, dy) == 1]


class PathGraph:
    """Discretized spiked plane: a plane grid with stencil edges and spike chains.

    Shortest paths in this graph are honest paths in the space, so every
    graph distance is an upper bound for the true distance, attained when
    the true geodesic runs along stencil directions.
    """

    def __init__(self, lo, hi, spikes, h=0.5, top=10.0):
        self.h = h
        nx = int(round((hi[0] - lo[0]) / h)) + 1
        ny = int(round((hi[1] - lo[1]) / h)) + 1
        self.lo, self.nx, self.ny = lo, nx, ny
        rows, cols, w = [], [], []
        idx = lambda i, j: i * ny + j
        for i, j in itertools.product(range(nx), range(ny)):
            for dx, dy in _STENCIL:
                a, b = i + dx, j + dy
                if 0 <= a < nx and 0 <= b < ny:
                    rows.append(idx(i, j))
                    cols.append(idx(a, b))
                    w.append(h * math.sqrt(dx * dx + dy * dy))
        n = nx * ny
        self.spike_nodes = {}
        for m, k in spikes:
            i, j = self.grid_index(m, k)
            prev = idx(i, j)
            levels = int(round(top / h))
            nodes = [prev]
            for lev in range(1, levels + 1):
                rows += [prev, n]
                cols += [n, prev]
                w += [h, h]
                prev = n
                nodes.append(n)
                n += 1
            self.spike_nodes[(m, k)] = nodes
        self.n = n
        self.mat = coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()

    def grid_index(self, x, y):
        i = (x - self.lo[0]) / self.h
        j = (y - self.lo[1]) / self.h
        assert abs(i - round(i)) < 1e-9 and abs(j - round(j)) < 1e-9, "point off the grid"
        return int(round(i)), int(round(j))

    def node(self, p):
        if type(p).__name__ == "Spike" and p.t > 0:
            lev = p.t / self.h
            assert abs(lev - round(lev)) < 1e-9
            return self.spike_nodes[(p.m, p.n)][int(round(lev))]
        x, y = p.foot
        i, j = self.grid_index(x, y)
        return i * self.ny + j

    def distance(self, p, q):
        return float(dijkstra(self.mat, indices=self.node(p))[self.node(q)])

    def distance_to_set(self, p, qs):
        d = dijkstra(self.mat, indices=self.node(p))
        return float(min(d[self.node(q)] for q in qs))


def point_to_segment(px, py, ax, ay, bx, by, samples=20001):
    """Dense-sampling distance from a point to a planar segment."""
    u = np.linspace(0.0, 1.0, samples)
    x = ax + u * (bx - ax)
    y = ay + u * (by - ay)
    return float(np.min(np.sqrt((x - px) ** 2 + (y - py) ** 2)))


def paulin_from_feet(a, b, c, d):
    """½ |d(a,d) + d(b,c) - d(a,b) - d(c,d)| on feet, with numpy hypot."""
    f = lambda u, v: float(np.hypot(u[0] - v[0], u[1] - v[1]))
    return abs(f(a, d) + f(b, c) - f(a, b) - f(c, d)) / 2


def brute_minmax_center(feet, h, span=1.0):
    """Min-max side distance over a fine grid around the feet (planar sides only)."""
    F = np.array(feet, dtype=float)
    xs = np.arange(F[:, 0].min() - span, F[:, 0].max() + span + 1e-9, h)
    ys = np.arange(F[:, 1].min() - span, F[:, 1].max() + span + 1e-9, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])
    worst = np.zeros(len(P))
    for (ax, ay), (bx, by) in [(feet[0], feet[1]), (feet[1], feet[2]), (feet[2], feet[0])]:
        vx, vy = bx - ax, by - ay
        L2 = vx * vx + vy * vy
        t = np.clip(((P[:, 0] - ax) * vx + (P[:, 1] - ay) * vy) / L2, 0, 1)
        dist = np.hypot(P[:, 0] - ax - t * vx, P[:, 1] - ay - t * vy)
        worst = np.maximum(worst, dist)
    return float(worst.min())
