"""Quenched random phase fields alpha in {0, pi}.

The phase is stored as one bit per site: 0 means occupied (alpha = 0) and
1 means vacant (alpha = pi).  cos(alpha) is therefore exactly +/-1 and
sin(alpha) exactly 0; use :meth:`DisorderField.cos_alpha` at evaluation
sites instead of ever materializing floating-point angles.
"""

from dataclasses import dataclass

import numpy as np

from .util import counter_rng


@dataclass
class DisorderField:
    """Per-site bits (0 occupied / 1 vacant) plus generation parameters."""

    values: np.ndarray
    p: float
    seed: int
    graph_key: str

    @property
    def nsites(self):
        return len(self.values)

    def cos_alpha(self):
        """Exact cos(alpha) per site: +1 occupied, -1 vacant."""
        return 1.0 - 2.0 * self.values.astype(np.float64)

    def occupied_fraction(self):
        return 1.0 - float(self.values.mean())

    def to_hex(self):
        """Compact serialization: ``<nsites>:<hex>`` with bits packed
        little-endian within each byte (site i at bit i % 8 of byte i // 8)."""
        packed = np.packbits(self.values.astype(np.uint8), bitorder="little")
        return f"{self.nsites}:{packed.tobytes().hex()}"

    @classmethod
    def from_hex(cls, text, p, seed, graph_key):
        head, _, body = text.partition(":")
        n = int(head)
        bits = np.unpackbits(
            np.frombuffer(bytes.fromhex(body), dtype=np.uint8), bitorder="little"
        )[:n]
        return cls(values=bits.astype(np.uint8), p=p, seed=seed, graph_key=graph_key)


def sample_disorder(graph, p, seed):
    """Draw i.i.d. Bernoulli phases: each site is occupied (alpha = 0) with
    probability p.  Uses a counter-based (Philox) generator keyed by the
    seed, so regeneration is bit-identical and independent of how sites
    would be iterated.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = counter_rng("disorder", seed)
    u = rng.random(graph.nvert)
    values = (u >= p).astype(np.uint8)
    return DisorderField(values=values, p=p, seed=seed, graph_key=graph.key())


def edge_alpha_gradient(field, edge):
    """Classify one edge: "same" iff both endpoints carry equal alpha.

    Only the same/different class is ever needed; the signed value of the
    gradient never enters any in-scope observable.
    """
    a, b = edge
    return "same" if field.values[a] == field.values[b] else "different"


def edge_same_mask(graph, field):
    """Boolean per-edge array: True where the edge joins equal phases."""
    e = graph.edges
    return field.values[e[:, 0]] == field.values[e[:, 1]]


def neighbor_diff_mask(graph, field):
    """Padded (V, maxdeg) uint8 table: 1 where the corresponding neighbor
    slot crosses an interface (different alpha), 0 otherwise or for padding."""
    mask = np.zeros_like(graph.nbr, dtype=np.uint8)
    v = field.values
    for k in range(graph.nbr.shape[1]):
        col = graph.nbr[:, k]
        ok = col >= 0
        mask[ok, k] = v[ok] != v[col[ok]]
    return mask
