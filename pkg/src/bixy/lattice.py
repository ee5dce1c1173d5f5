"""Lattice graphs: hypercubic tori, the next-nearest-neighbor square torus,
and wired-frame boxes, plus vertex colorings for sweep scheduling.

Vertex indexing is row-major (C order) over the coordinate grid: for a torus
of side N in d dimensions, the site with coordinates ``(x_0, ..., x_{d-1})``
has linear index ``ravel_multi_index(x, (N,)*d)``.  Wired-frame boxes cover
the cube ``{-N..N}^d``; coordinates are stored shifted by +N so the origin
sits at the center of the grid.
"""

from dataclasses import dataclass, field

import numpy as np

HYPERCUBIC = "hypercubic"
NNN_SQUARE = "nnn-square"
PERIODIC = "periodic"
WIRED = "wired-frame"


@dataclass(frozen=True)
class Box:
    """Cube ``corner + {-L..L}^d`` (the stored point is the cube center)."""

    corner: tuple
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("box length must be >= 1")

    @property
    def side(self):
        return 2 * self.length + 1


@dataclass
class LatticeGraph:
    """Immutable vertex/edge structure of one of the supported graphs.

    ``nbr`` is a padded (V, maxdeg) int32 table; row x lists the neighbors of
    x in ``nbr[x, :ndeg[x]]`` (parallel edges of the N=2 torus appear twice).
    ``edges`` is an (E, 2) array with the lower linear index stored first;
    this canonical orientation is arbitrary and no observable depends on it
    (all couplings are even in the phase gradient).
    """

    kind: str
    d: int
    size: int
    boundary: str
    shape: tuple
    nvert: int
    nbr: np.ndarray
    ndeg: np.ndarray
    edges: np.ndarray
    frozen: np.ndarray = field(default=None, repr=False)

    def key(self):
        """Stable descriptor used in manifests and disorder fields."""
        return f"{self.kind}(d={self.d},N={self.size},{self.boundary})"

    def coords(self, idx):
        """Coordinates of linear indices (wired boxes: centered, in -N..N)."""
        c = np.array(np.unravel_index(idx, self.shape))
        if self.boundary == WIRED:
            c = c - self.size
        return c

    def index(self, coord):
        """Linear index of a coordinate tuple (wrapping on tori)."""
        coord = np.asarray(coord)
        if self.boundary == PERIODIC:
            coord = np.mod(coord, self.size)
        else:
            coord = coord + self.size
        return int(np.ravel_multi_index(tuple(coord), self.shape))

    @property
    def dynamic_sites(self):
        if self.frozen is None:
            return np.arange(self.nvert)
        return np.flatnonzero(~self.frozen)


def _offsets(kind, d):
    """Positive half of the neighbor offsets (one per undirected bond)."""
    if kind == HYPERCUBIC:
        return [tuple(int(i == a) for i in range(d)) for a in range(d)]
    if kind == NNN_SQUARE:
        return [(1, 0), (0, 1), (1, 1), (1, -1)]
    raise ValueError(f"unsupported lattice kind: {kind!r}")


def build_lattice(kind, size, boundary=PERIODIC, d=2):
    """Build a LatticeGraph.

    kind: "hypercubic" (d in {2,3,4}) or "nnn-square" (d = 2).
    size: torus side N (periodic) or box half-length N (wired-frame,
          covering {-N..N}^d with the outermost shell flagged frozen).
    """
    if size < 2:
        raise ValueError("size must be >= 2")
    if kind == HYPERCUBIC:
        if d not in (2, 3, 4):
            raise ValueError("hypercubic lattice supports d in {2, 3, 4}")
    elif kind == NNN_SQUARE:
        d = 2
    else:
        raise ValueError(f"unsupported lattice kind: {kind!r}")
    if boundary not in (PERIODIC, WIRED):
        raise ValueError(f"unsupported boundary mode: {boundary!r}")

    side = size if boundary == PERIODIC else 2 * size + 1
    shape = (side,) * d
    nvert = side**d
    grid = np.indices(shape).reshape(d, nvert)

    e0 = []
    e1 = []
    for off in _offsets(kind, d):
        shifted = grid + np.asarray(off)[:, None]
        if boundary == PERIODIC:
            tgt = np.ravel_multi_index(np.mod(shifted, side), shape)
            keep = np.ones(nvert, dtype=bool)
        else:
            keep = np.all((shifted >= 0) & (shifted < side), axis=0)
            tgt = np.ravel_multi_index(tuple(shifted[:, keep]), shape)
        src = np.arange(nvert)[keep]
        e0.append(src)
        e1.append(tgt)
    e0 = np.concatenate(e0)
    e1 = np.concatenate(e1)
    lo = np.minimum(e0, e1)
    hi = np.maximum(e0, e1)
    edges = np.stack([lo, hi], axis=1).astype(np.int64)

    deg = np.bincount(e0, minlength=nvert) + np.bincount(e1, minlength=nvert)
    maxdeg = int(deg.max())
    nbr = np.full((nvert, maxdeg), -1, dtype=np.int32)
    fill = np.zeros(nvert, dtype=np.int64)
    for a, b in ((e0, e1), (e1, e0)):
        order = np.argsort(a, kind="stable")
        for x, y in zip(a[order], b[order]):
            nbr[x, fill[x]] = y
            fill[x] += 1
    ndeg = deg.astype(np.int32)

    frozen = None
    if boundary == WIRED:
        cmax = np.max(np.abs(grid - size), axis=0)
        frozen = cmax == size

    return LatticeGraph(
        kind=kind,
        d=d,
        size=size,
        boundary=boundary,
        shape=shape,
        nvert=nvert,
        nbr=nbr,
        ndeg=ndeg,
        edges=edges,
        frozen=frozen,
    )


@dataclass
class Coloring:
    """Partition of vertices into classes safe for simultaneous updates."""

    radius: int
    classes: list
    warning: bool = False

    @property
    def nclasses(self):
        return len(self.classes)

    def site_order(self, frozen=None):
        """Concatenated class-by-class visit order, skipping frozen sites."""
        parts = self.classes
        if frozen is not None:
            parts = [c[~frozen[c]] for c in parts]
        return np.concatenate([p for p in parts if len(p)]).astype(np.int64)


def _ring_colors(n, radius, periodic):
    """Proper coloring of a path/cycle of length n such that equal colors sit
    at ring distance > radius.  Returns an int array of per-position colors."""
    if not periodic:
        return np.arange(n) % (radius + 1)
    if radius == 1:
        if n % 2 == 0:
            return np.arange(n) % 2
        out = np.arange(n) % 2
        out[-1] = 2  # odd ring: break the parity clash at the seam
        return out
    # radius 2: equal colors must be >= 3 apart around the ring
    if n <= 5:
        return np.arange(n)  # every position its own color
    if n % 3 == 0:
        return np.arange(n) % 3
    if n % 4 == 0:
        return np.arange(n) % 4
    nfours = n % 3  # 4 = 1 mod 3, so this many 4-blocks makes the rest 3|.
    blocks = [np.arange(3)] * ((n - 4 * nfours) // 3) + [np.arange(4)] * nfours
    return np.concatenate(blocks)


def coloring(graph, radius):
    """Color vertices so that same-class vertices are at graph distance
    > radius; classes are visited sequentially during a sweep while sites
    inside one class may be updated concurrently.

    Hypercubic tori at radius 1 get the bipartite 2-coloring (even side);
    otherwise a product of per-axis ring colorings is used: 3^d classes for
    radius 2 when 3 | N, 4 per axis for other even sides.  Always succeeds
    for the supported graphs, so the warning flag is only set by the
    single-site fallback (currently unreachable).
    """
    if radius not in (1, 2):
        raise ValueError("radius must be 1 or 2")
    periodic = graph.boundary == PERIODIC
    side = graph.shape[0]

    if graph.kind == HYPERCUBIC and radius == 1 and (not periodic or side % 2 == 0):
        coords = np.indices(graph.shape).reshape(graph.d, graph.nvert)
        ids = coords.sum(axis=0) % 2
    elif graph.kind == HYPERCUBIC and radius == 1:
        # odd torus: sum of per-axis proper 3-colorings, taken mod 3
        ring = _ring_colors(side, 1, periodic)
        coords = np.indices(graph.shape).reshape(graph.d, graph.nvert)
        ids = np.zeros(graph.nvert, dtype=np.int64)
        for a in range(graph.d):
            ids += ring[coords[a]]
        ids %= 3
    else:
        # product (mixed-radix) of per-axis ring colorings; valid for both
        # the L1 (hypercubic) and Chebyshev (nnn-square) neighborhoods
        coords = np.indices(graph.shape).reshape(graph.d, graph.nvert)
        ids = np.zeros(graph.nvert, dtype=np.int64)
        for a in range(graph.d):
            ring = _ring_colors(side, radius, periodic)
            ids = ids * (ring.max() + 1) + ring[coords[a]]

    classes = [np.flatnonzero(ids == c) for c in np.unique(ids)]
    return Coloring(radius=radius, classes=classes, warning=False)


def graph_distances(graph, source):
    """BFS distances from one vertex (test helper; O(V) per call)."""
    dist = np.full(graph.nvert, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for x in frontier:
            for k in range(graph.ndeg[x]):
                y = int(graph.nbr[x, k])
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    nxt.append(y)
        frontier = nxt
    return dist
