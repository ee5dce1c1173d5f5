"""Metropolis-Hastings chains with colored sweeps and parallel tempering.

One chain owns one configuration.  A sweep makes one proposal per non-frozen
site (per layer for the bilayer), visiting coloring classes sequentially;
sites inside a class carry their own random numbers, so any update order
within a class yields the same chain.  Replica exchange swaps configurations
between adjacent temperatures of the ladder.

Runs are deterministic functions of ``RunParams.seed``: each temperature
slot owns a counter-based (Philox) random stream spawned from the seed, and
one extra stream drives the exchange decisions.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lattice import PERIODIC, coloring
from .model import (
    BILAYER,
    EFFECTIVE_STRONG,
    EFFECTIVE_WEAK,
    XY,
    DivergenceCache,
    divergence,
    energy_total,
    local_order_parameter,
    order_parameter,
)
from .util import format_float

_LADDER_STREAMS = "replica streams + 1 exchange stream"


@dataclass
class RunParams:
    """Chain schedule; all counts are in sweeps."""

    beta_ladder: tuple
    sweeps_thermalize: int = 1000
    sweeps_measure: int = 1000
    measure_every: int = 10
    exchange_every: int = 10
    proposal_width: float = None  # None = full-circle uniform proposal
    seed: int = 0

    def __post_init__(self):
        ladder = tuple(float(b) for b in self.beta_ladder)
        if len(ladder) == 0:
            raise ValueError("beta ladder is empty")
        if any(b < 0 for b in ladder):
            raise ValueError("beta must be >= 0")
        if any(b2 <= b1 for b1, b2 in zip(ladder, ladder[1:])):
            raise ValueError("beta ladder must be strictly increasing")
        object.__setattr__(self, "beta_ladder", ladder)
        for name in ("sweeps_thermalize", "sweeps_measure", "measure_every", "exchange_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.proposal_width is not None and self.proposal_width <= 0:
            raise ValueError("proposal width must be positive")

    def describe(self):
        return {
            "beta_ladder": list(self.beta_ladder),
            "sweeps_thermalize": self.sweeps_thermalize,
            "sweeps_measure": self.sweeps_measure,
            "measure_every": self.measure_every,
            "exchange_every": self.exchange_every,
            "proposal_width": self.proposal_width,
            "seed": self.seed,
            "rng": _LADDER_STREAMS,
        }


@dataclass
class ObservableSeries:
    """Measurement records of one chain at one temperature."""

    beta: float
    sweep: np.ndarray
    energy: np.ndarray
    op: np.ndarray
    op2: np.ndarray
    op4: np.ndarray
    acceptance: np.ndarray
    twopoint: np.ndarray = None
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.sweep)


class Sweeper:
    """Precomputed tables + kernel dispatch for one model."""

    def __init__(self, model):
        self.model = model
        g = model.graph
        self.coloring = coloring(g, model.radius)
        self.order = self.coloring.site_order(frozen=g.frozen)
        self.nbr = np.ascontiguousarray(g.nbr)
        self.ndeg = np.ascontiguousarray(g.ndeg)
        self.nvert = g.nvert
        self.salpha = None
        self.diffmask = None
        if model.variant in (BILAYER, EFFECTIVE_WEAK):
            self.salpha = model.disorder.cos_alpha()
        if model.variant == EFFECTIVE_STRONG:
            from .disorder import neighbor_diff_mask

            self.diffmask = neighbor_diff_mask(g, model.disorder)
        self.proposals_per_sweep = len(self.order) * (2 if model.two_layer else 1)

    def _draw(self, rng, width):
        if width is None:
            return rng.uniform(-np.pi, np.pi, self.nvert), False
        return rng.uniform(-width, width, self.nvert), True

    def sweep(self, config, beta, rng, cache=None, width=None):
        """One full sweep; returns the acceptance fraction."""
        m = self.model
        if m.variant == BILAYER:
            acc = 0
            for own, other, sign in (
                (config.plus.angles, config.minus.angles, 1.0),
                (config.minus.angles, config.plus.angles, -1.0),
            ):
                prop, rel = self._draw(rng, width)
                unif = rng.random(self.nvert)
                acc += kernels.sweep_bilayer_layer(
                    own, other, sign, self.nbr, self.ndeg, self.order,
                    beta, m.h, self.salpha, prop, rel, unif,
                )
            return acc / self.proposals_per_sweep
        prop, rel = self._draw(rng, width)
        unif = rng.random(self.nvert)
        th = config.angles
        if m.variant == XY:
            acc = kernels.sweep_xy(
                th, self.nbr, self.ndeg, self.order, beta, 1.0, prop, rel, unif
            )
        elif m.variant == EFFECTIVE_WEAK:
            acc = kernels.sweep_effective_weak(
                th, self.nbr, self.ndeg, self.order, beta, m.h, self.salpha,
                prop, rel, unif,
            )
        elif m.variant == EFFECTIVE_STRONG:
            acc = kernels.sweep_effective_strong(
                th, self.nbr, self.ndeg, self.diffmask, cache.values, self.order,
                beta, m.h, prop, rel, unif,
            )
        else:  # clean-weak
            acc = kernels.sweep_clean_weak(
                th, self.nbr, self.ndeg, self.order, beta, m.h, prop, rel, unif
            )
        return acc / self.proposals_per_sweep


def metropolis_sweep(model, config, beta, rng, cache=None, proposal_width=None):
    """One colored Metropolis sweep over all non-frozen sites.

    Proposals are full-circle uniform (default) or windowed by
    ``proposal_width``; each is accepted with probability
    min(1, exp(-beta dE)).  Returns the acceptance fraction.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    sweeper = Sweeper(model)
    if model.variant == EFFECTIVE_STRONG and cache is None:
        cache = DivergenceCache.build(model.graph, model.disorder, config.angles)
    return sweeper.sweep(config, beta, rng, cache=cache, width=proposal_width)


def tempering_exchange(energies, beta_ladder, rng, parity=0):
    """One replica-exchange pass over adjacent ladder pairs.

    Pairs (i, i+1) with i = parity, parity+2, ... swap with probability
    min(1, exp((beta_i - beta_j)(E_i - E_j))).  Returns a list of
    (i, j, accepted) decisions; the caller applies the swaps.
    """
    n = len(beta_ladder)
    if len(energies) != n:
        raise ValueError("replica count does not match the ladder")
    decisions = []
    for i in range(parity, n - 1, 2):
        j = i + 1
        arg = (beta_ladder[i] - beta_ladder[j]) * (energies[i] - energies[j])
        accepted = bool(rng.random() < min(1.0, np.exp(min(arg, 0.0)) if arg < 0 else 1.0))
        decisions.append((i, j, accepted))
    return decisions


def run_chain(model, params, two_point_sites=None, extra_trackers=None):
    """Run one parallel-tempering chain; returns one ObservableSeries per
    ladder temperature (ascending order, matching the ladder).

    Thermalization sweeps are discarded; a measurement is taken every
    ``measure_every`` sweeps thereafter and exchange is attempted every
    ``exchange_every`` sweeps with alternating even/odd pairings.  The
    result is a deterministic function of ``params.seed``.
    """
    betas = params.beta_ladder
    nrep = len(betas)
    ss = np.random.SeedSequence(params.seed)
    children = ss.spawn(nrep + 1)
    rngs = [np.random.Generator(np.random.Philox(c)) for c in children[:nrep]]
    xrng = np.random.Generator(np.random.Philox(children[nrep]))

    sweeper = Sweeper(model)
    configs = [model.new_config(rng=rngs[k]) for k in range(nrep)]
    caches = [None] * nrep
    if model.variant == EFFECTIVE_STRONG:
        caches = [
            DivergenceCache.build(model.graph, model.disorder, c.angles) for c in configs
        ]

    nrec = params.sweeps_measure // params.measure_every
    rec = {
        k: {
            "sweep": np.zeros(nrec, dtype=np.int64),
            "energy": np.zeros(nrec),
            "op": np.zeros(nrec),
            "acceptance": np.zeros(nrec),
            "twopoint": np.zeros(nrec) if two_point_sites is not None else None,
            "extras": {name: np.zeros(nrec) for name in (extra_trackers or {})},
        }
        for k in range(nrep)
    }

    total = params.sweeps_thermalize + params.sweeps_measure
    last_acc = np.zeros(nrep)
    irec = 0
    xcount = 0
    for t in range(1, total + 1):
        for k in range(nrep):
            last_acc[k] = sweeper.sweep(
                configs[k], betas[k], rngs[k], cache=caches[k], width=params.proposal_width
            )
        if nrep > 1 and t % params.exchange_every == 0:
            energies = [energy_total(model, c) for c in configs]
            for i, j, ok in tempering_exchange(energies, betas, xrng, parity=xcount % 2):
                if ok:
                    configs[i], configs[j] = configs[j], configs[i]
                    caches[i], caches[j] = caches[j], caches[i]
            xcount += 1
        dt = t - params.sweeps_thermalize
        if dt > 0 and dt % params.measure_every == 0 and irec < nrec:
            for k in range(nrep):
                cfg = configs[k]
                if caches[k] is not None:
                    # kill incremental drift before observables are read
                    caches[k].values[:] = divergence(
                        model.graph, model.disorder, cfg.angles
                    )
                r = rec[k]
                r["sweep"][irec] = t
                r["energy"][irec] = energy_total(model, cfg)
                r["op"][irec] = order_parameter(model, cfg, cache=caches[k])
                r["acceptance"][irec] = last_acc[k]
                if two_point_sites is not None:
                    x, y = two_point_sites
                    r["twopoint"][irec] = local_order_parameter(
                        model, cfg, x, cache=caches[k]
                    ) * local_order_parameter(model, cfg, y, cache=caches[k])
                for name, fn in (extra_trackers or {}).items():
                    r["extras"][name][irec] = fn(model, cfg, caches[k])
            irec += 1

    out = []
    for k in range(nrep):
        r = rec[k]
        out.append(
            ObservableSeries(
                beta=betas[k],
                sweep=r["sweep"],
                energy=r["energy"],
                op=r["op"],
                op2=r["op"] ** 2,
                op4=r["op"] ** 4,
                acceptance=r["acceptance"],
                twopoint=r["twopoint"],
                extras=r["extras"],
            )
        )
    return out


def write_series_csv(path, series_list, model=None, params=None):
    """Write measurement series as CSV (one block per temperature) plus a
    JSON manifest with the fully resolved parameters."""
    with open(path, "w") as fh:
        fh.write("sweep,beta,energy,op,op2,op4,twopoint,acceptance\n")
        for s in series_list:
            for i in range(len(s)):
                tp = s.twopoint[i] if s.twopoint is not None else float("nan")
                fh.write(
                    ",".join(
                        [
                            str(int(s.sweep[i])),
                            format_float(s.beta),
                            format_float(s.energy[i]),
                            format_float(s.op[i]),
                            format_float(s.op2[i]),
                            format_float(s.op4[i]),
                            format_float(tp),
                            format_float(s.acceptance[i]),
                        ]
                    )
                    + "\n"
                )
    if model is not None or params is not None:
        manifest = {}
        if model is not None:
            manifest["model"] = model.describe()
        if params is not None:
            manifest["params"] = params.describe()
        with open(str(path) + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
