"""Energy functions for the bilayer XY family and the tools built on them.

Variants (kappa = 1 sets the energy unit; h is the disorder/coupling knob):

* ``xy``               H = -sum_e cos(grad theta)
* ``bilayer``          H = sum_l H_xy(theta_l) - h sum_x cos(phi_x - alpha_x)
* ``effective-strong`` H = -2 sum_{same e} cos(grad theta)
                           - (1/2h) sum_x D_x^2,
                       D_x = sum_{diff e ~ x} cos(grad theta)
* ``effective-weak``   H = -2 sum_e cos(grad phi) - h sum_x cos(phi_x - alpha_x)
* ``clean-weak``       H = -sum_e cos(grad phi) - (1/2h) sum_x cos^2 phi_x

"same"/"diff" edges have equal/unequal alpha at their endpoints; since
alpha is {0, pi}-valued, cos(phi - alpha) is evaluated exactly as
``cos(alpha) * cos(phi)`` with cos(alpha) = +/-1.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .disorder import edge_same_mask
from .lattice import WIRED
from .util import wrap_angle

XY = "xy"
BILAYER = "bilayer"
EFFECTIVE_STRONG = "effective-strong"
EFFECTIVE_WEAK = "effective-weak"
CLEAN_WEAK = "clean-weak"

VARIANTS = (XY, BILAYER, EFFECTIVE_STRONG, EFFECTIVE_WEAK, CLEAN_WEAK)
NEEDS_DISORDER = (BILAYER, EFFECTIVE_STRONG, EFFECTIVE_WEAK)
TWO_LAYER = (BILAYER,)

#: interaction radius of the local update footprint, per variant
INTERACTION_RADIUS = {
    XY: 1,
    BILAYER: 1,
    EFFECTIVE_WEAK: 1,
    CLEAN_WEAK: 1,
    EFFECTIVE_STRONG: 2,
}


@dataclass
class SpinConfig:
    """Per-site angles in (-pi, pi]; wrap on every write."""

    angles: np.ndarray

    @classmethod
    def zeros(cls, graph):
        return cls(np.zeros(graph.nvert))

    @classmethod
    def random(cls, graph, rng):
        return cls(rng.uniform(-np.pi, np.pi, graph.nvert))

    def set(self, site, angle):
        self.angles[site] = wrap_angle(angle)

    def copy(self):
        return SpinConfig(self.angles.copy())


@dataclass
class BilayerConfig:
    """Two spin layers on the same graph; phi = wrap(theta+ - theta-)."""

    plus: SpinConfig
    minus: SpinConfig

    @classmethod
    def zeros(cls, graph):
        return cls(SpinConfig.zeros(graph), SpinConfig.zeros(graph))

    @classmethod
    def random(cls, graph, rng):
        return cls(SpinConfig.random(graph, rng), SpinConfig.random(graph, rng))

    def phi(self):
        return wrap_angle(self.plus.angles - self.minus.angles)

    def copy(self):
        return BilayerConfig(self.plus.copy(), self.minus.copy())


@dataclass
class ModelSpec:
    """Variant + coupling + (optional) disorder + graph; immutable in use."""

    variant: str
    graph: object
    h: float = None
    disorder: object = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant in NEEDS_DISORDER:
            if self.disorder is None:
                raise ValueError(f"{self.variant} requires a disorder field")
            if self.disorder.nsites != self.graph.nvert:
                raise ValueError("disorder field does not match the graph")
        elif self.disorder is not None:
            raise ValueError(f"{self.variant} does not take a disorder field")
        if self.variant != XY:
            if self.h is None or self.h <= 0:
                raise ValueError("h must be > 0")

    @property
    def two_layer(self):
        return self.variant in TWO_LAYER

    @property
    def radius(self):
        return INTERACTION_RADIUS[self.variant]

    def new_config(self, rng=None):
        make = BilayerConfig if self.two_layer else SpinConfig
        if rng is None:
            cfg = make.zeros(self.graph)
        else:
            cfg = make.random(self.graph, rng)
        if self.graph.boundary == WIRED:
            frozen = self.graph.frozen
            if self.two_layer:
                cfg.plus.angles[frozen] = 0.0
                cfg.minus.angles[frozen] = 0.0
            else:
                cfg.angles[frozen] = 0.0
        return cfg

    def describe(self):
        d = {"variant": self.variant, "graph": self.graph.key()}
        if self.h is not None:
            d["h"] = self.h
        if self.disorder is not None:
            d["p"] = self.disorder.p
            d["disorder_seed"] = self.disorder.seed
        return d


def _check_config(model, config):
    if model.two_layer != isinstance(config, BilayerConfig):
        raise ValueError("config type does not match the model variant")
    n = config.plus.angles.size if model.two_layer else config.angles.size
    if n != model.graph.nvert:
        raise ValueError("config size does not match the graph")


def divergence(graph, field, theta):
    """D_x = sum over interface edges at x of cos(grad theta)."""
    e = graph.edges
    diff = ~edge_same_mask(graph, field)
    i, j = e[diff, 0], e[diff, 1]
    c = np.cos(theta[i] - theta[j])
    out = np.zeros(graph.nvert)
    np.add.at(out, i, c)
    np.add.at(out, j, c)
    return out


@dataclass
class DivergenceCache:
    """Incrementally maintained D field for the effective strong model.

    |D_x| <= deg(x); after any update sequence the cache must agree with a
    from-scratch recomputation to 1e-9 (asserted by tests and refreshed at
    every measurement during long runs).
    """

    values: np.ndarray

    @classmethod
    def build(cls, graph, fieldd, theta):
        return cls(divergence(graph, fieldd, theta))

    def max_deviation(self, graph, fieldd, theta):
        return float(np.max(np.abs(self.values - divergence(graph, fieldd, theta))))


def energy_total(model, config):
    """Exact total energy of the configuration under the model variant."""
    _check_config(model, config)
    g = model.graph
    e = g.edges
    h = model.h
    if model.variant == XY:
        th = config.angles
        return float(-np.sum(np.cos(th[e[:, 0]] - th[e[:, 1]])))
    if model.variant == CLEAN_WEAK:
        th = config.angles
        bond = -np.sum(np.cos(th[e[:, 0]] - th[e[:, 1]]))
        onsite = -np.sum(np.cos(th) ** 2) / (2.0 * h)
        return float(bond + onsite)
    if model.variant == EFFECTIVE_WEAK:
        th = config.angles
        s = model.disorder.cos_alpha()
        bond = -2.0 * np.sum(np.cos(th[e[:, 0]] - th[e[:, 1]]))
        return float(bond - h * np.sum(s * np.cos(th)))
    if model.variant == BILAYER:
        tp, tm = config.plus.angles, config.minus.angles
        s = model.disorder.cos_alpha()
        bond = -np.sum(np.cos(tp[e[:, 0]] - tp[e[:, 1]]))
        bond -= np.sum(np.cos(tm[e[:, 0]] - tm[e[:, 1]]))
        return float(bond - h * np.sum(s * np.cos(tp - tm)))
    # effective strong
    th = config.angles
    same = edge_same_mask(g, model.disorder)
    i, j = e[same, 0], e[same, 1]
    bond = -2.0 * np.sum(np.cos(th[i] - th[j]))
    d = divergence(g, model.disorder, th)
    return float(bond - np.sum(d * d) / (2.0 * h))


def energy_delta(model, config, site, new_angle, layer=0, cache=None):
    """Energy change of setting one site's angle to ``new_angle``.

    For the bilayer, ``layer`` selects 0 (plus) or 1 (minus).  For the
    effective strong model the footprint covers the site, its neighbors and
    their D values (interaction radius 2); a DivergenceCache may be passed
    to avoid the from-scratch divergence.
    """
    _check_config(model, config)
    g = model.graph
    if g.frozen is not None and g.frozen[site]:
        raise ValueError(f"site {site} is frozen by the wired boundary")
    if not np.isfinite(new_angle):
        raise ValueError("new angle must be finite")
    new = float(wrap_angle(new_angle))
    h = model.h
    nb = g.nbr[site, : g.ndeg[site]]

    if model.variant == BILAYER:
        own = (config.plus if layer == 0 else config.minus).angles
        other = (config.minus if layer == 0 else config.plus).angles
        old = own[site]
        d_bond = -np.sum(np.cos(new - own[nb]) - np.cos(old - own[nb]))
        s = model.disorder.cos_alpha()[site]
        sign = 1.0 if layer == 0 else -1.0
        phi_new = sign * (new - other[site])
        phi_old = sign * (old - other[site])
        return float(d_bond - h * s * (np.cos(phi_new) - np.cos(phi_old)))

    th = config.angles
    old = th[site]
    if model.variant == XY:
        return float(-np.sum(np.cos(new - th[nb]) - np.cos(old - th[nb])))
    if model.variant == CLEAN_WEAK:
        d_bond = -np.sum(np.cos(new - th[nb]) - np.cos(old - th[nb]))
        return float(d_bond - (np.cos(new) ** 2 - np.cos(old) ** 2) / (2.0 * h))
    if model.variant == EFFECTIVE_WEAK:
        s = model.disorder.cos_alpha()[site]
        d_bond = -2.0 * np.sum(np.cos(new - th[nb]) - np.cos(old - th[nb]))
        return float(d_bond - h * s * (np.cos(new) - np.cos(old)))

    # effective strong
    dvals = cache.values if cache is not None else divergence(g, model.disorder, th)
    bits = model.disorder.values
    same = bits[nb] == bits[site]
    d_bond = -2.0 * np.sum(np.cos(new - th[nb[same]]) - np.cos(old - th[nb[same]]))
    diff_nb = nb[~same]
    c_new = np.cos(new - th[diff_nb])
    c_old = np.cos(old - th[diff_nb])
    dx_new = np.sum(c_new)
    dx_old = dvals[site]
    dq = dx_new**2 - dx_old**2
    dy = dvals[diff_nb]
    dq += np.sum((dy + c_new - c_old) ** 2 - dy**2)
    return float(d_bond - dq / (2.0 * h))


def apply_move(model, config, site, new_angle, layer=0, cache=None):
    """Commit one accepted move, keeping the D cache consistent."""
    new = float(wrap_angle(new_angle))
    if model.variant == BILAYER:
        own = (config.plus if layer == 0 else config.minus).angles
        own[site] = new
        return
    th = config.angles
    if model.variant == EFFECTIVE_STRONG and cache is not None:
        g = model.graph
        nb = g.nbr[site, : g.ndeg[site]]
        bits = model.disorder.values
        diff_nb = nb[bits[nb] != bits[site]]
        c_new = np.cos(new - th[diff_nb])
        c_old = np.cos(th[site] - th[diff_nb])
        cache.values[diff_nb] += c_new - c_old
        cache.values[site] = np.sum(c_new)
    th[site] = new


def tau_field(config, fieldd, h, graph):
    """Slanting order parameter tau_x = D_x / h (effective strong context)."""
    if h <= 0:
        raise ValueError("h must be > 0")
    return divergence(graph, fieldd, config.angles) / h


def order_parameter(model, config, cache=None):
    """Volume-averaged order parameter of the variant: mean sin(theta) for
    the plain XY model, mean tau for the effective strong model, and mean
    sin(phi) for the bilayer family."""
    if model.variant == XY:
        return float(np.mean(np.sin(config.angles)))
    if model.variant == EFFECTIVE_STRONG:
        d = cache.values if cache is not None else divergence(
            model.graph, model.disorder, config.angles
        )
        return float(np.mean(d) / model.h)
    if model.variant == BILAYER:
        return float(np.mean(np.sin(config.phi())))
    return float(np.mean(np.sin(config.angles)))


def local_order_parameter(model, config, site, cache=None):
    """Single-site order parameter (used for two-point channels)."""
    if model.variant == EFFECTIVE_STRONG:
        d = cache.values if cache is not None else divergence(
            model.graph, model.disorder, config.angles
        )
        return float(d[site] / model.h)
    if model.variant == BILAYER:
        return float(np.sin(config.phi()[site]))
    return float(np.sin(config.angles[site]))


# ---------------------------------------------------------------------------
# change of variables (sigma+, sigma-) -> (zeta, w)
# ---------------------------------------------------------------------------

SINGULAR_TOL = 1e-12


def cov_forward(theta_plus, theta_minus, alpha_bits):
    """Map layer angles to (zeta, w) angles.

    zeta = arg(e^{-i alpha/2} sigma+ + e^{i alpha/2} sigma-),
    w    = wrap(theta+ - theta- - alpha).

    The map preserves the product of uniform circle measures; inputs on the
    singular set sigma+ = -e^{i alpha} sigma- (|sum| < 1e-12) are rejected.
    """
    tp = np.asarray(theta_plus, dtype=float)
    tm = np.asarray(theta_minus, dtype=float)
    bits = np.asarray(alpha_bits)
    half = 0.5 * np.pi * bits
    z = np.exp(1j * (tp - half)) + np.exp(1j * (tm + half))
    if np.any(np.abs(z) < SINGULAR_TOL):
        raise ValueError("input on the singular set sigma+ = -e^{i alpha} sigma-")
    zeta = np.angle(z)
    w = wrap_angle(tp - tm - np.pi * bits)
    return zeta, w


def cov_inverse(zeta, w, alpha_bits):
    """Inverse map: layer angles from (zeta, w)."""
    zeta = np.asarray(zeta, dtype=float)
    w = np.asarray(w, dtype=float)
    half = 0.5 * (np.pi * np.asarray(alpha_bits) + w)
    return wrap_angle(zeta + half), wrap_angle(zeta - half)


def expansion_residual(config, fieldd, h, graph):
    """Compare the exact bilayer energy against its strong-disorder expansion.

    The expansion is the effective-strong energy of the zeta angles plus the
    quadratic penalty (h/2) sum_x (tau_x - D_x/h)^2 with tau_x = Im e^{i phi_x};
    the additive constant is pinned by the reference state with w = 0 and
    zero zeta gradients, where the two sides agree exactly (constant = -h V).
    """
    tp, tm = config.plus.angles, config.minus.angles
    bits = fieldd.values
    zeta, _w = cov_forward(tp, tm, bits)
    phi = wrap_angle(tp - tm)
    tau = np.sin(phi)

    e = graph.edges
    same = edge_same_mask(graph, fieldd)
    i, j = e[same, 0], e[same, 1]
    d = divergence(graph, fieldd, zeta)
    expansion = (
        -2.0 * np.sum(np.cos(zeta[i] - zeta[j]))
        - np.sum(d * d) / (2.0 * h)
        + 0.5 * h * np.sum((tau - d / h) ** 2)
    )

    s = fieldd.cos_alpha()
    exact = (
        -np.sum(np.cos(tp[e[:, 0]] - tp[e[:, 1]]))
        - np.sum(np.cos(tm[e[:, 0]] - tm[e[:, 1]]))
        - h * np.sum(s * np.cos(phi))
    )
    constant = -h * graph.nvert
    return {
        "exact": float(exact),
        "expansion": float(expansion),
        "residual": float(exact - expansion - constant),
    }


# ---------------------------------------------------------------------------
# small-system quadrature oracle (general XY models)
# ---------------------------------------------------------------------------


def quadrature_expectation(couplings, observable, grid_points=128):
    """<cos(m0 . theta)> for a general XY model on at most 3 sites.

    couplings: iterable of (multi_index, J) with J >= 0; multi_index maps a
    site label to an integer winding.  The Gibbs density exp(sum J cos(m.theta))
    is integrated on a tensor-product uniform grid (the periodic trapezoidal
    rule, error O(grid_points^-2) and in practice spectrally accurate for
    these smooth integrands).
    """
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    couplings = [(dict(m), float(j)) for m, j in couplings]
    observable = dict(observable)
    for _, j in couplings:
        if j < 0:
            raise ValueError("couplings must be nonnegative")
    sites = sorted(set(observable) | {s for m, _ in couplings for s in m})
    if len(sites) > 3:
        raise ValueError("quadrature oracle supports at most 3 sites")
    if not sites:
        return 1.0
    pos = {s: k for k, s in enumerate(sites)}
    n = len(sites)
    grid = np.linspace(-np.pi, np.pi, grid_points, endpoint=False)

    def phase(multi):
        acc = 0.0
        for s, mx in multi.items():
            shape = [1] * n
            shape[pos[s]] = grid_points
            acc = acc + mx * grid.reshape(shape)
        return acc

    action = np.zeros((grid_points,) * n)
    for m, j in couplings:
        action = action + j * np.cos(phase(m))
    weight = np.exp(action - np.max(action))
    num = np.sum(weight * np.cos(phase(observable)))
    den = np.sum(weight)
    return float(num / den)


# ---------------------------------------------------------------------------
# config snapshots
# ---------------------------------------------------------------------------


def save_config(path, model, config, extra=None):
    """Write angles as little-endian float64 (``<path>.f64``; bilayer layers
    concatenated plus then minus) with a JSON manifest (``<path>.json``)."""
    if isinstance(config, BilayerConfig):
        flat = np.concatenate([config.plus.angles, config.minus.angles])
    else:
        flat = config.angles
    flat.astype("<f8").tofile(f"{path}.f64")
    manifest = model.describe()
    manifest["sites"] = model.graph.nvert
    manifest["layers"] = 2 if isinstance(config, BilayerConfig) else 1
    if extra:
        manifest.update(extra)
    with open(f"{path}.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path, model):
    flat = np.fromfile(f"{path}.f64", dtype="<f8")
    n = model.graph.nvert
    if model.two_layer:
        return BilayerConfig(SpinConfig(flat[:n].copy()), SpinConfig(flat[n:].copy()))
    return SpinConfig(flat.copy())
