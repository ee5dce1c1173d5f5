"""Cluster labeling of occupied/vacant sites and pre-good / good / optimal
box classification, with Monte Carlo probability scans.

A box of length L is the cube ``center + {-L..L}^d`` (side 2L+1).  The
classifications follow the renormalization definitions literally:

* pre-good (per sign): exactly one cluster of that sign touches all 2d
  faces of the box, and every other cluster of the sign has diameter
  <= floor(L/100), where diameter is the largest per-axis coordinate extent.
* good (per sign): the box is pre-good and every box of length floor(L/10)
  whose intersection with the box is nonempty is pre-good (the scan reads
  disorder from a margin of width 2*floor(L/10) around the box).
* optimal: good for both signs, and the two spanning clusters are adjacent.

The floor(L/100) threshold is 0 for every desk-scale L, which makes
pre-goodness at intermediate p essentially unobservable (any two-site
non-spanning cluster disqualifies the box); the classifications are exact
to the definitions, and the probability scans simply report what that
implies.  ``diameter_limit`` can be overridden for exploration.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .lattice import HYPERCUBIC, NNN_SQUARE, PERIODIC, Box
from .util import counter_rng, wilson_interval

OCCUPIED = "occupied"
VACANT = "vacant"
_SIGN_BIT = {OCCUPIED: 0, VACANT: 1}


def connectivity(kind, d):
    """Binary structure defining site adjacency for cluster labeling."""
    if kind == HYPERCUBIC:
        return ndimage.generate_binary_structure(d, 1)
    if kind == NNN_SQUARE:
        return np.ones((3, 3), dtype=bool)
    raise ValueError(f"unsupported lattice kind: {kind!r}")


@dataclass
class ClusterLabeling:
    """Connected components of one sign inside a region (free boundary)."""

    labels: np.ndarray  # 0 = background, 1..nlabels = clusters
    nlabels: int
    sizes: np.ndarray  # sizes[k] = site count of cluster k (index 0 unused)
    extents: np.ndarray  # (nlabels+1, d, 2) min/max coordinate per axis
    mask: str

    def diameter(self, label):
        """Largest per-axis extent (max - min) of one cluster."""
        e = self.extents[label]
        return int(np.max(e[:, 1] - e[:, 0]))

    def spanning_labels(self):
        """Clusters touching all 2d faces of the region."""
        lab = self.labels
        d = lab.ndim
        alive = None
        for ax in range(d):
            first = np.unique(lab.take(0, axis=ax))
            last = np.unique(lab.take(-1, axis=ax))
            touch = set(first[first > 0]) & set(last[last > 0])
            alive = touch if alive is None else alive & touch
        return sorted(alive)


def _label_array(bits, sign, structure):
    mask = bits == _SIGN_BIT[sign]
    labels, n = ndimage.label(mask, structure=structure)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    extents = np.zeros((n + 1, bits.ndim, 2), dtype=np.int64)
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        for ax, s in enumerate(sl):
            extents[k, ax] = (s.start, s.stop - 1)
    return ClusterLabeling(
        labels=labels, nlabels=n, sizes=sizes, extents=extents, mask=sign
    )


def extract_window(graph, fieldd, center, half_extent):
    """Bit sub-array ``center + {-half..half}^d`` (wrapping on the torus)."""
    bits = fieldd.values.reshape(graph.shape)
    offs = np.arange(-half_extent, half_extent + 1)
    out = bits
    for ax, c in enumerate(center):
        idx = offs + c
        if graph.boundary == PERIODIC:
            idx = np.mod(idx, graph.shape[ax])
        elif np.any((idx < 0) | (idx >= graph.shape[ax])):
            raise ValueError("region extends beyond the non-periodic graph")
        out = np.take(out, idx, axis=ax)
    return out


def label_clusters(graph, fieldd, mask, region=None):
    """Label clusters of one sign inside a region of the graph.

    Connectivity uses only region-internal edges (free boundary).  With no
    region the whole graph array is labeled (tori: still free boundary, no
    wrap, matching the box-local definitions).
    """
    if mask not in _SIGN_BIT:
        raise ValueError("mask must be 'occupied' or 'vacant'")
    if region is None:
        bits = fieldd.values.reshape(graph.shape)
    else:
        if region.length < 1:
            raise ValueError("empty region")
        bits = extract_window(graph, fieldd, region.corner, region.length)
    return _label_array(bits, mask, connectivity(graph.kind, graph.d))


def _pre_good_bits(bits, sign, length, structure, diameter_limit=None):
    if diameter_limit is None:
        diameter_limit = length // 100
    lab = _label_array(bits, sign, structure)
    span = lab.spanning_labels()
    if len(span) != 1:
        return False
    keep = span[0]
    for k in range(1, lab.nlabels + 1):
        if k != keep and lab.diameter(k) > diameter_limit:
            return False
    return True


def classify_pre_good(labeling, box, sign, diameter_limit=None):
    """Pre-goodness from an existing labeling of the box (one sign)."""
    if labeling.mask != sign:
        raise ValueError("labeling was computed for the other sign")
    if diameter_limit is None:
        diameter_limit = box.length // 100
    span = labeling.spanning_labels()
    if len(span) != 1:
        return False
    keep = span[0]
    for k in range(1, labeling.nlabels + 1):
        if k != keep and labeling.diameter(k) > diameter_limit:
            return False
    return True


def _good_bits(padded, pad, length, sign, structure, diameter_limit=None):
    """Goodness on a padded bit array whose central window is the box."""
    d = padded.ndim
    sub = length // 10
    if sub < 1:
        raise ValueError("good classification needs L >= 10")
    center = (padded.shape[0] - 1) // 2
    main = padded[tuple(slice(center - length, center + length + 1) for _ in range(d))]
    if not _pre_good_bits(main, sign, length, structure, diameter_limit):
        return False
    # every box of length sub intersecting the main box, i.e. centers within
    # length + sub of the origin on every axis
    reach = length + sub
    if pad < 2 * sub:
        raise ValueError("padded field too small for the sub-box scan")
    for corner in np.ndindex(*([2 * reach + 1] * d)):
        lo = tuple(center - reach + c - sub for c in corner)
        win = padded[tuple(slice(l, l + 2 * sub + 1) for l in lo)]
        if not _pre_good_bits(win, sign, sub, structure, diameter_limit):
            return False
    return True


def classify_good(graph, fieldd, box, sign, diameter_limit=None):
    """Goodness of a box against a disorder field on the graph."""
    if box.length < 10:
        raise ValueError("good classification needs L >= 10")
    sub = box.length // 10
    padded = extract_window(graph, fieldd, box.corner, box.length + 2 * sub)
    return _good_bits(
        padded, 2 * sub, box.length, sign, connectivity(graph.kind, graph.d),
        diameter_limit,
    )


@dataclass
class BoxClassification:
    box: Box
    pre_good_occupied: bool = False
    pre_good_vacant: bool = False
    good_occupied: bool = False
    good_vacant: bool = False
    good: bool = False
    optimal: bool = False
    spanning_cluster_ids: tuple = None
    interface_edges: list = field(default_factory=list)


def _structure_offsets(structure):
    """Half of the neighbor offsets implied by a labeling structure."""
    d = structure.ndim
    center = tuple(1 for _ in range(d))
    offs = []
    for idx in np.ndindex(*structure.shape):
        if not structure[idx] or idx == center:
            continue
        off = tuple(i - 1 for i in idx)
        if off > tuple(0 for _ in range(d)):  # lexicographic half (symmetric structure)
            offs.append(off)
    return offs


def _optimal_bits(padded, pad, length, structure, diameter_limit=None):
    """Full classification of the central box of a padded bit array."""
    d = padded.ndim
    center = (padded.shape[0] - 1) // 2
    window = tuple(slice(center - length, center + length + 1) for _ in range(d))
    main = padded[window]
    cls = BoxClassification(box=Box(tuple(0 for _ in range(d)), length))
    cls.pre_good_occupied = _pre_good_bits(main, OCCUPIED, length, structure, diameter_limit)
    cls.pre_good_vacant = _pre_good_bits(main, VACANT, length, structure, diameter_limit)
    if cls.pre_good_occupied:
        cls.good_occupied = _good_bits(padded, pad, length, OCCUPIED, structure, diameter_limit)
    if cls.pre_good_vacant:
        cls.good_vacant = _good_bits(padded, pad, length, VACANT, structure, diameter_limit)
    cls.good = cls.good_occupied and cls.good_vacant
    if not cls.good:
        return cls
    occ = _label_array(main, OCCUPIED, structure)
    vac = _label_array(main, VACANT, structure)
    so = occ.spanning_labels()[0]
    sv = vac.spanning_labels()[0]
    cls.spanning_cluster_ids = (so, sv)
    occ_mask = occ.labels == so
    vac_mask = vac.labels == sv
    edges = []
    for off in _structure_offsets(structure):
        sl_a = tuple(slice(max(0, -o), main.shape[k] - max(0, o)) for k, o in enumerate(off))
        sl_b = tuple(slice(max(0, o), main.shape[k] - max(0, -o)) for k, o in enumerate(off))
        hit = occ_mask[sl_a] & vac_mask[sl_b]
        for idx in np.argwhere(hit):
            a = tuple(int(idx[k]) + max(0, -off[k]) - length for k in range(d))
            b = tuple(a[k] + off[k] for k in range(d))
            edges.append((a, b))
        hit = vac_mask[sl_a] & occ_mask[sl_b]
        for idx in np.argwhere(hit):
            a = tuple(int(idx[k]) + max(0, -off[k]) - length for k in range(d))
            b = tuple(a[k] + off[k] for k in range(d))
            edges.append((b, a))
    cls.interface_edges = edges
    cls.optimal = len(edges) > 0
    return cls


def classify_optimal(graph, fieldd, box, diameter_limit=None):
    """Optimality (good for both signs + adjacent spanning clusters) of a
    box against a disorder field; interface edges are listed as coordinate
    pairs (occupied site, vacant site) relative to the box center."""
    if box.length < 10:
        raise ValueError("optimal classification needs L >= 10")
    sub = box.length // 10
    padded = extract_window(graph, fieldd, box.corner, box.length + 2 * sub)
    cls = _optimal_bits(
        padded, 2 * sub, box.length, connectivity(graph.kind, graph.d), diameter_limit
    )
    cls.box = box
    return cls


@dataclass
class ScanRow:
    graph_kind: str
    p: float
    length: int
    trials: int
    pregood: int
    good: int
    optimal: int

    def proportions(self):
        out = {}
        for name, k in (("pregood", self.pregood), ("good", self.good), ("optimal", self.optimal)):
            lo, hi = wilson_interval(k, self.trials)
            out[name] = (k / self.trials, lo, hi)
        return out


def box_probability_scan(graph_kind, p, lengths, trials, seed, d=3, diameter_limit=None):
    """Estimate P(pre-good occupied), P(good), P(optimal) per box length.

    Each trial draws an independent disorder field on a margin-padded
    region (width 2 floor(L/10)); intervals are Wilson 95% scores.
    ``p_pregood`` reports the occupied sign of the main box; ``good`` and
    ``optimal`` follow the BoxClassification semantics (both signs).
    """
    if trials < 30:
        raise ValueError("need at least 30 trials")
    if graph_kind == NNN_SQUARE:
        d = 2
    structure = connectivity(graph_kind, d)
    rows = []
    for length in lengths:
        sub = max(1, length // 10)
        side = 2 * (length + 2 * sub) + 1
        counts = {"pregood": 0, "good": 0, "optimal": 0}
        for t in range(trials):
            rng = counter_rng("perc", seed, graph_kind, d, length, t)
            padded = (rng.random((side,) * d) >= p).astype(np.uint8)
            cls = _optimal_bits(padded, 2 * sub, length, structure, diameter_limit)
            counts["pregood"] += cls.pre_good_occupied
            counts["good"] += cls.good
            counts["optimal"] += cls.optimal
        rows.append(
            ScanRow(
                graph_kind=graph_kind, p=p, length=length, trials=trials,
                pregood=counts["pregood"], good=counts["good"],
                optimal=counts["optimal"],
            )
        )
    return rows
