"""Disorder-averaged moments, Binder cumulants, crossing-based transition
temperature estimates, and the torus infrared-bound check.

The estimation pipeline mirrors the simulation procedure: per disorder
sample, chains measure the volume-averaged order parameter; its second and
fourth powers are time-averaged per sample, averaged over samples, and only
then combined into the cumulant U = 1 - m4 / (3 m2^2).  Error bars on the
moments come from a jackknife over disorder samples; within-chain
autocorrelation is absorbed by block-averaging the time series first.
"""

from dataclasses import dataclass, field

import numpy as np

from .disorder import sample_disorder
from .lattice import PERIODIC, build_lattice
from .mc import RunParams, run_chain
from .model import CLEAN_WEAK, ModelSpec
from .util import block_means, derive_seed, jackknife_mean

BLOCK_RECORDS = 20  # block length (in measurement records) for stderr
U_FLOOR = 0.02  # |U| floor below which crossing ratios are meaningless


@dataclass
class MomentEstimate:
    """Disorder-averaged m^(2), m^(4) with jackknife errors."""

    m2: float
    m2_err: float
    m4: float
    m4_err: float
    n: int = None
    h: float = None
    beta: float = None
    samples: int = 0


@dataclass
class BinderPoint:
    U: float
    m2: float
    m4: float
    n: int = None
    h: float = None
    beta: float = None
    u_err: float = 0.0


@dataclass
class CrossingResult:
    beta_star: float = None
    degenerate: bool = False
    index: int = None

    @property
    def crossed(self):
        return self.beta_star is not None


@dataclass
class TcEstimate:
    beta_c: float
    stderr: float
    pairs: list = field(default_factory=list)  # (N, N2, beta_star)
    excluded: list = field(default_factory=list)  # (N, N2) with no crossing


def binder(m2, m4):
    """Binder cumulant U = 1 - m4 / (3 m2^2); 0 for Gaussian moments and
    2/3 for a symmetric two-point distribution."""
    if m2 <= 0:
        raise ValueError("m2 must be positive")
    return 1.0 - m4 / (3.0 * m2 * m2)


def disorder_average(series_list, block=BLOCK_RECORDS, n=None, h=None, beta=None):
    """Combine per-sample series (aligned in N, h, beta) into moments.

    Each sample contributes the time averages of op^2 and op^4; the
    between-sample spread sets the error via jackknife.
    """
    if len(series_list) < 2:
        raise ValueError("need at least 2 disorder samples")
    m2s = np.array([np.mean(block_means(s.op2, block)) for s in series_list])
    m4s = np.array([np.mean(block_means(s.op4, block)) for s in series_list])
    m2, m2_err = jackknife_mean(m2s)
    m4, m4_err = jackknife_mean(m4s)
    return MomentEstimate(
        m2=m2, m2_err=m2_err, m4=m4, m4_err=m4_err,
        n=n, h=h, beta=beta, samples=len(series_list),
    )


def binder_point(est):
    """BinderPoint from a MomentEstimate, with a propagated U error."""
    u = binder(est.m2, est.m4)
    du_dm4 = -1.0 / (3.0 * est.m2**2)
    du_dm2 = 2.0 * est.m4 / (3.0 * est.m2**3)
    u_err = float(np.hypot(du_dm4 * est.m4_err, du_dm2 * est.m2_err))
    return BinderPoint(
        U=u, m2=est.m2, m4=est.m4, n=est.n, h=est.h, beta=est.beta, u_err=u_err
    )


def crossing_temperature(beta_grid, curve_a, curve_b, floor=U_FLOOR):
    """Grid temperature where U_a / U_b is closest to 1.

    Points where either |U| <= floor are ignored; ties break toward smaller
    beta, and a tie across more than one grid point sets the degenerate
    flag.  Returns a CrossingResult (``crossed`` False when no grid point
    passes the floor).
    """
    beta_grid = np.asarray(beta_grid, dtype=float)
    curve_a = np.asarray(curve_a, dtype=float)
    curve_b = np.asarray(curve_b, dtype=float)
    if beta_grid.shape != curve_a.shape or beta_grid.shape != curve_b.shape:
        raise ValueError("curves must share the beta grid")
    if len(beta_grid) < 3:
        raise ValueError("need at least 3 grid points")
    ok = (np.abs(curve_a) > floor) & (np.abs(curve_b) > floor)
    if not np.any(ok):
        return CrossingResult()
    dev = np.full(len(beta_grid), np.inf)
    dev[ok] = np.abs(curve_a[ok] / curve_b[ok] - 1.0)
    best = float(np.min(dev))
    ties = np.flatnonzero(dev <= best + 1e-12)
    idx = int(ties[0])  # smallest beta among ties
    return CrossingResult(
        beta_star=float(beta_grid[idx]), degenerate=len(ties) > 1, index=idx
    )


def estimate_tc(surfaces, h=None, floor=U_FLOOR):
    """Average pairwise crossing temperatures over distinct size pairs.

    surfaces: mapping N -> (beta_grid, U values).  Pairs with no crossing
    are excluded and reported.  With a single valid pair the spread is
    undefined and stderr is reported as 0.
    """
    sides = sorted(surfaces)
    if len(sides) < 2:
        raise ValueError("need at least 2 lattice sides")
    grid0 = np.asarray(surfaces[sides[0]][0], dtype=float)
    for n in sides[1:]:
        if not np.array_equal(np.asarray(surfaces[n][0], dtype=float), grid0):
            raise ValueError("surfaces must share the beta grid")
    pairs = []
    excluded = []
    for a in range(len(sides)):
        for b in range(a + 1, len(sides)):
            na, nb = sides[a], sides[b]
            res = crossing_temperature(grid0, surfaces[na][1], surfaces[nb][1], floor)
            if res.crossed:
                pairs.append((na, nb, res.beta_star))
            else:
                excluded.append((na, nb))
    if not pairs:
        raise ValueError("no size pair produced a crossing")
    vals = np.array([p[2] for p in pairs])
    stderr = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
    return TcEstimate(
        beta_c=float(np.mean(vals)), stderr=stderr, pairs=pairs, excluded=excluded
    )


def infrared_check(model, series, block=BLOCK_RECORDS):
    """Compare a clean-weak torus run against the bound h / (beta V).

    Returns a dict with the time-averaged estimate of (mean sin phi)^2, the
    bound, its margin in stderr units, and the stderr itself.
    """
    if model.variant != CLEAN_WEAK:
        raise ValueError("infrared bound applies to the clean-weak variant")
    if model.graph.boundary != PERIODIC:
        raise ValueError("infrared bound requires the torus (periodic) geometry")
    blocks = block_means(series.op2, block)
    estimate = float(np.mean(blocks))
    stderr = float(np.std(blocks, ddof=1) / np.sqrt(len(blocks))) if len(blocks) > 1 else 0.0
    bound = model.h / (series.beta * model.graph.nvert)
    margin = (bound - estimate) / stderr if stderr > 0 else np.inf
    return {"estimate": estimate, "stderr": stderr, "bound": bound, "margin": margin}


def two_point_tau(series_list, block=BLOCK_RECORDS):
    """Disorder-and-time average of the recorded two-point channel."""
    for s in series_list:
        if s.twopoint is None:
            raise ValueError("series lacks the twopoint channel")
    per_sample = np.array(
        [np.mean(block_means(s.twopoint, block)) for s in series_list]
    )
    mean, err = jackknife_mean(per_sample)
    return mean, err


# ---------------------------------------------------------------------------
# sampling pipeline (one unit of work = one disorder sample)
# ---------------------------------------------------------------------------


def sample_moments(
    variant,
    kind,
    d,
    size,
    h,
    p,
    beta_grid,
    sample_index,
    master_seed,
    sweeps_thermalize,
    sweeps_measure,
    measure_every=5,
    exchange_every=5,
    proposal_width=None,
    two_point_sites=None,
):
    """Run one disorder sample across the whole beta grid (the tempering
    ladder is the grid itself) and return per-beta time averages.

    Returns a list of dicts with keys beta, op2, op4 (and twopoint when
    sites were given), ordered like the grid.  Fully deterministic in
    (master_seed, size, h, sample_index).
    """
    graph = build_lattice(kind, size, d=d)
    fld = sample_disorder(
        graph, p, derive_seed(master_seed, "disorder", kind, d, size, h, sample_index)
    )
    model = ModelSpec(variant, graph, h=h, disorder=fld)
    params = RunParams(
        beta_ladder=tuple(beta_grid),
        sweeps_thermalize=sweeps_thermalize,
        sweeps_measure=sweeps_measure,
        measure_every=measure_every,
        exchange_every=exchange_every,
        proposal_width=proposal_width,
        seed=derive_seed(master_seed, "chain", kind, d, size, h, sample_index),
    )
    series = run_chain(model, params, two_point_sites=two_point_sites)
    out = []
    for s in series:
        row = {
            "beta": s.beta,
            "op2": float(np.mean(s.op2)),
            "op4": float(np.mean(s.op4)),
        }
        if two_point_sites is not None:
            row["twopoint"] = float(np.mean(s.twopoint))
        out.append(row)
    return out


def surface_from_samples(rows_by_sample, beta_grid, n=None, h=None):
    """Aggregate per-sample rows from :func:`sample_moments` into
    MomentEstimates and BinderPoints per beta."""
    estimates = []
    points = []
    for ib, beta in enumerate(beta_grid):
        m2s = np.array([rows[ib]["op2"] for rows in rows_by_sample])
        m4s = np.array([rows[ib]["op4"] for rows in rows_by_sample])
        m2, m2_err = jackknife_mean(m2s)
        m4, m4_err = jackknife_mean(m4s)
        est = MomentEstimate(
            m2=m2, m2_err=m2_err, m4=m4, m4_err=m4_err,
            n=n, h=h, beta=float(beta), samples=len(rows_by_sample),
        )
        estimates.append(est)
        points.append(binder_point(est))
    return estimates, points
