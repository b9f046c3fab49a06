"""Proper colorings of bounded-out-degree digraphs.

If every vertex of a digraph has out-degree at most d, the total number
of arcs is at most nd, so some vertex always has total degree
(in plus out) at most 2d.  Peeling minimum-total-degree vertices and
coloring them back greedily in reverse therefore needs at most 2d+1
colors: each vertex sees at most 2d already-colored neighbors when its
turn comes.

`color_directed_graph` is the deterministic version (smallest free
color).  `color_neg_corr` draws each color uniformly among the
ceil(d^(1-eps)) smallest free colors of an enlarged palette of
ceil(2d + d^(1-eps)) colors, which keeps the chance that two vertices
share any fixed color near the independent product while still being
proper.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .errors import DegreeError, InternalInvariantError, ValidationError


@dataclass(frozen=True)
class DiGraph:
    """Adjacency-list digraph; out[v] lists the out-neighbors of v."""

    n: int
    out: tuple

    def __post_init__(self):
        if self.n != len(self.out):
            raise ValidationError("out-list count disagrees with n")
        for v, nbrs in enumerate(self.out):
            for u in nbrs:
                if u == v:
                    raise ValidationError(f"self-loop at {v}")
                if not (0 <= u < self.n):
                    raise ValidationError(f"arc ({v},{u}) out of range")

    def out_degrees(self):
        return [len(nbrs) for nbrs in self.out]

    def undirected_adjacency(self):
        """Neighbor sets ignoring direction (deduplicated)."""
        adj = [set() for _ in range(self.n)]
        for v, nbrs in enumerate(self.out):
            for u in nbrs:
                adj[v].add(u)
                adj[u].add(v)
        return adj


def make_digraph(n, arcs):
    out = [[] for _ in range(n)]
    seen = set()
    for v, u in arcs:
        if (v, u) not in seen:
            seen.add((v, u))
            out[v].append(u)
    return DiGraph(n=n, out=tuple(tuple(sorted(ns)) for ns in out))


@dataclass(frozen=True)
class Coloring:
    colors: tuple
    palette: int


def peel_order(g):
    """Vertices in repeated minimum-total-degree removal order.

    Ties break toward the lowest vertex index.  Uses a lazy heap; stale
    entries are skipped because degrees only decrease.
    """
    adj = g.undirected_adjacency()
    # total degree counts arc multiplicity in both directions
    deg = [0] * g.n
    for v, nbrs in enumerate(g.out):
        deg[v] += len(nbrs)
        for u in nbrs:
            deg[u] += 1
    heap = [(deg[v], v) for v in range(g.n)]
    heapq.heapify(heap)
    removed = [False] * g.n
    order = []
    while heap:
        dv, v = heapq.heappop(heap)
        if removed[v] or dv != deg[v]:
            continue
        removed[v] = True
        order.append(v)
        for u in adj[v]:
            if not removed[u]:
                # losing v costs u every arc between them
                drop = (u in g.out[v]) + (v in g.out[u])
                deg[u] -= drop
                heapq.heappush(heap, (deg[u], u))
    return order


def _check_degree(g, d):
    bad = [v for v, nbrs in enumerate(g.out) if len(nbrs) > d]
    if bad:
        raise DegreeError(f"out-degree above {d} at vertices {bad[:5]}")


def color_directed_graph(g, d):
    """Deterministic proper coloring with at most 2d+1 colors.

    Requires max out-degree <= d (DegreeError otherwise).  Colors are
    assigned in reverse peel order, each vertex taking the smallest
    color unused by its already-colored neighbors.
    """
    _check_degree(g, d)
    palette = 2 * d + 1
    adj = g.undirected_adjacency()
    colors = [-1] * g.n
    for v in reversed(peel_order(g)):
        used = {colors[u] for u in adj[v] if colors[u] >= 0}
        for c in range(palette):
            if c not in used:
                colors[v] = c
                break
        else:
            raise InternalInvariantError("palette exhausted; degree bound broken")
    return Coloring(colors=tuple(colors), palette=palette)


def neg_corr_palette(d, epsilon):
    """(palette size, per-step choice count) for the randomized coloring."""
    spread = d ** (1.0 - epsilon)
    return math.ceil(2 * d + spread), math.ceil(spread)


def color_neg_corr(g, d, epsilon, rng):
    """Randomized proper coloring with near-independent color classes.

    Palette has ceil(2d + d^(1-eps)) colors; each vertex picks uniformly
    among the ceil(d^(1-eps)) smallest colors unused by its
    already-colored neighbors.  The degree argument guarantees that many
    colors are always free; a shortfall is a broken invariant and raises.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValidationError(f"epsilon={epsilon} outside (0,1)")
    _check_degree(g, d)
    palette, spread = neg_corr_palette(d, epsilon)
    adj = g.undirected_adjacency()
    colors = [-1] * g.n
    for v in reversed(peel_order(g)):
        used = {colors[u] for u in adj[v] if colors[u] >= 0}
        avail = []
        for c in range(palette):
            if c not in used:
                avail.append(c)
                if len(avail) == spread:
                    break
        if len(avail) < spread:
            raise InternalInvariantError(
                f"only {len(avail)} free colors at vertex {v}, need {spread}"
            )
        colors[v] = avail[int(rng.integers(spread))]
    return Coloring(colors=tuple(colors), palette=palette)


def verify_coloring(g, coloring):
    """True iff every vertex is colored within the palette and no arc is
    monochromatic."""
    cs = coloring.colors
    if len(cs) != g.n:
        return False
    if any(not (0 <= c < coloring.palette) for c in cs):
        return False
    for v, nbrs in enumerate(g.out):
        for u in nbrs:
            if cs[v] == cs[u]:
                return False
    return True
