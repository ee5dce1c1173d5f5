"""Massive lattice Green functions by three independent routes, their
asymptotic checks, and the complex-shift decay bound.

The operator is (-s Delta + m^2) with the normalization s an explicit
field: s = 1/(2d) matches the random-walk representation (G = q sum q^n P^n
with q = 1/(1+m^2)), while the decay-bound functional uses s = 1.  Tables
convert between the two via (-s Delta + m^2)^{-1} = (1/s) (-Delta + m^2/s)^{-1}.

Domains: ``torus`` tables live on the M^d torus with the source at index 0
(coordinates wrap); ``box`` tables live on {-N..N}^d with zero values on and
outside the shell (Dirichlet), source at the center.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import identity as sp_identity
from scipy.sparse import kron as sp_kron
from scipy.sparse import diags
from scipy.sparse.linalg import cg

EULER_GAMMA = 0.5772156649015328606

#: displacement stencil used by the cross-method comparison (d = 2)
STENCIL9 = ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2))


@dataclass
class GreenTable:
    m: float
    s: float
    d: int
    domain: str  # "torus" or "box"
    size: int  # torus side M, or box half-length N
    values: np.ndarray
    errbound: float = 0.0

    def value(self, x):
        x = tuple(int(c) for c in x)
        if self.domain == "torus":
            return float(self.values[tuple(np.mod(x, self.size))])
        return float(self.values[tuple(c + self.size for c in x)])


def _signed_coords(M):
    """Fundamental-domain displacement along one torus axis."""
    return (np.arange(M) + M // 2) % M - M // 2


def green_fourier(m, d, M, s=None):
    """Torus Green function via the discrete Fourier sum over momenta
    2 pi j / M; reproduces the Brillouin-zone integral as M grows, with the
    finite-size error estimated from the decay at the torus boundary."""
    if m <= 0:
        raise ValueError("mass must be positive")
    if M < 16:
        raise ValueError("torus side must be >= 16")
    if s is None:
        s = 1.0 / (2 * d)
    k = 2.0 * np.pi * np.arange(M) / M
    k2_axis = (2.0 * np.sin(k / 2.0)) ** 2
    symbol = np.full((M,) * d, m * m)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = M
        symbol = symbol + s * k2_axis.reshape(shape)
    values = np.fft.ifftn(1.0 / symbol).real
    # image-sum estimate: everything at the far shell, times the 3^d - 1
    # nearest images (the decay is exponential, so this dominates the tail)
    coords = _signed_coords(M)
    shell = np.zeros((M,) * d, dtype=bool)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = M
        shell |= np.broadcast_to((np.abs(coords) == M // 2).reshape(shape), (M,) * d)
    errbound = float(3**d * np.max(np.abs(values[shell])))
    return GreenTable(m=m, s=s, d=d, domain="torus", size=M, values=values, errbound=errbound)


def green_walk(x, m, d, n_max):
    """Partial sum of the killed-walk representation at one displacement.

    Returns (value, tail_bound): value = sum_{n <= n_max} q^{n+1} P_0[S_n = x]
    with q = 1/(1+m^2) and the step distribution computed by exact
    convolution (no sampling); tail_bound = q^{n_max+2}/(1-q) bounds the
    truncation error.  Normalization is s = 1/(2d).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x = tuple(int(c) for c in x)
    q = 1.0 / (1.0 + m * m)
    r = n_max + 1  # walk support never reaches the array edge
    shape = (2 * r + 1,) * d
    dist = np.zeros(shape)
    center = tuple(r for _ in range(d))
    dist[center] = 1.0
    target = tuple(r + c for c in x)
    value = q * dist[target]
    w = q  # w = q^(n+1) for the current step count n
    for _n in range(1, n_max + 1):
        nxt = np.zeros_like(dist)
        for ax in range(d):
            nxt += np.roll(dist, 1, axis=ax) + np.roll(dist, -1, axis=ax)
        dist = nxt / (2 * d)
        w *= q
        value += w * dist[target]
    tail = q ** (n_max + 2) / (1.0 - q)
    return float(value), float(tail)


def _box_operator(N, m, s, d):
    """Sparse (-s Delta_N + m^2) on the interior {-(N-1)..N-1}^d."""
    side = 2 * N - 1
    lap1 = diags([np.full(side - 1, -1.0), np.full(side, 2.0), np.full(side - 1, -1.0)], (-1, 0, 1))
    eye1 = sp_identity(side, format="csr")
    op = None
    for ax in range(d):
        parts = [lap1 if k == ax else eye1 for k in range(d)]
        term = parts[0]
        for p in parts[1:]:
            term = sp_kron(term, p)
        op = term if op is None else op + term
    return (s * op + m * m * sp_identity(side**d)).tocsr()


def green_box(N, m, s=None, d=2, rtol=1e-12):
    """Dirichlet Green function of the box: solves (-s Delta_N + m^2) G = delta_0
    on {-(N-1)..N-1}^d with zero values outside, by conjugate gradients to a
    relative residual below 1e-10 (raises on non-convergence)."""
    if N < 2:
        raise ValueError("box half-length must be >= 2")
    if s is None:
        s = 1.0 / (2 * d)
    side = 2 * N - 1
    A = _box_operator(N, m, s, d)
    b = np.zeros(side**d)
    b[(side**d - 1) // 2] = 1.0
    sol, info = cg(A, b, rtol=rtol, atol=0.0, maxiter=200 * side)
    resid = np.linalg.norm(A @ sol - b) / np.linalg.norm(b)
    if info != 0 or resid > 1e-10:
        raise RuntimeError(f"box solve did not converge (residual {resid:.3e})")
    full = np.zeros((2 * N + 1,) * d)
    inner = tuple(slice(1, 2 * N) for _ in range(d))
    full[inner] = sol.reshape((side,) * d)
    return GreenTable(m=m, s=s, d=d, domain="box", size=N, values=full, errbound=0.0)


def apply_operator(table):
    """(-s Delta + m^2) applied to the table values (torus: wrapped; box:
    evaluated on the stored grid, zeros outside acting as Dirichlet data)."""
    g = table.values
    d = table.d
    lap = -2.0 * d * g
    if table.domain == "torus":
        for ax in range(d):
            lap = lap + np.roll(g, 1, axis=ax) + np.roll(g, -1, axis=ax)
    else:
        padded = np.pad(g, 1)
        for ax in range(d):
            lap = lap + _shift(padded, ax, 1) + _shift(padded, ax, -1)
    return -table.s * lap + table.m**2 * g


def _shift(padded, ax, step):
    d = padded.ndim
    sl = [slice(1, -1)] * d
    sl[ax] = slice(1 + step, padded.shape[ax] - 1 + step)
    return padded[tuple(sl)]


def defining_identity_residual(table):
    """Max deviation of (-s Delta + m^2) G from the unit source at 0
    (box tables: over interior sites only)."""
    out = apply_operator(table)
    d = table.d
    if table.domain == "torus":
        out[(0,) * d] -= 1.0
        return float(np.max(np.abs(out)))
    N = table.size
    out[(N,) * d] -= 1.0
    coords = np.abs(np.indices(out.shape) - N).max(axis=0)
    return float(np.max(np.abs(out[coords <= N - 1])))


def gradient_sup(table):
    """Max |G(x) - G(y)| over nearest-neighbor edges of the domain."""
    g = table.values
    best = 0.0
    for ax in range(table.d):
        if table.domain == "torus":
            diff = np.abs(g - np.roll(g, 1, axis=ax))
        else:
            sl_a = [slice(None)] * table.d
            sl_b = [slice(None)] * table.d
            sl_a[ax] = slice(1, None)
            sl_b[ax] = slice(None, -1)
            diff = np.abs(g[tuple(sl_a)] - g[tuple(sl_b)])
        best = max(best, float(diff.max()))
    return best


def exit_distribution(x, N, m, d=2, tol=1e-18, max_steps=100000):
    """Discounted exit law of the killed walk started at x: weights
    H(x, z) = E_x[q^tau, S_tau = z] on the shell of the box {-N..N}^d,
    computed by exact dynamic programming (absorption on the shell)."""
    q = 1.0 / (1.0 + m * m)
    side = 2 * N + 1
    interior = np.zeros((side,) * d, dtype=bool)
    coords = np.abs(np.indices((side,) * d) - N).max(axis=0)
    interior[coords <= N - 1] = True
    cur = np.zeros((side,) * d)
    cur[tuple(c + N for c in x)] = 1.0
    exit_w = np.zeros((side,) * d)
    for _ in range(max_steps):
        spread = np.zeros_like(cur)
        for ax in range(d):
            spread += np.roll(cur, 1, axis=ax) + np.roll(cur, -1, axis=ax)
        spread *= q / (2 * d)
        # rolls wrap across the array edge, but the walk is absorbed on the
        # shell before reaching it, so wrapped mass is identically zero
        exit_w += np.where(interior, 0.0, spread)
        cur = np.where(interior, spread, 0.0)
        if cur.sum() < tol:
            break
    return exit_w


def boundary_decomposition_check(N, m, d=2, fourier_side=256):
    """Max violation of G_N(x, y) = G(x, y) - sum_z P_x[S_tau = z] G(z, y)
    at x = 0 over all interior y, with P computed by exact dynamic
    programming and G from a large torus (s = 1/(2d))."""
    box = green_box(N, m, d=d)
    big = green_fourier(m, d, fourier_side)
    H = exit_distribution((0,) * d, N, m, d=d)
    shell = np.argwhere(H > 0)
    worst = 0.0
    side = 2 * N + 1
    for idx in np.ndindex(*((side,) * d)):
        y = tuple(i - N for i in idx)
        if max(abs(c) for c in y) > N - 1:
            continue
        rhs = big.value(y)
        for zidx in shell:
            z = tuple(int(c) - N for c in zidx)
            rhs -= H[tuple(zidx)] * big.value(tuple(zc - yc for zc, yc in zip(z, y)))
        worst = max(worst, abs(box.value(y) - rhs))
    return worst


# ---------------------------------------------------------------------------
# modified Bessel function K0 (series + asymptotic expansion)
# ---------------------------------------------------------------------------

_K0_SWITCH = 10.0


def bessel_k0(x):
    """K0(x) for x > 0 to absolute accuracy 1e-9: ascending series below
    x = 10, asymptotic expansion above (truncated at its smallest term)."""
    x = float(x)
    if x <= 0:
        raise ValueError("K0 requires x > 0")
    if x < _K0_SWITCH:
        quarter = 0.25 * x * x
        term = 1.0
        i0 = 1.0
        ksum = 0.0
        hk = 0.0
        for k in range(1, 80):
            term *= quarter / (k * k)
            hk += 1.0 / k
            i0 += term
            ksum += term * hk
            if term * (hk + 1.0) < 1e-20 * max(i0, 1.0):
                break
        return -(math.log(0.5 * x) + EULER_GAMMA) * i0 + ksum
    pref = math.sqrt(0.5 * math.pi / x) * math.exp(-x)
    total = 1.0
    term = 1.0
    for k in range(1, 30):
        nxt = term * (-((2 * k - 1) ** 2) / (8.0 * k * x))
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-18:
            break
    return pref * total


def k0_integral(x, t_max=40.0, points=200001):
    """Oracle: K0(x) = int_0^inf exp(-x cosh t) dt by composite quadrature."""
    t = np.linspace(0.0, t_max, points)
    return float(np.trapezoid(np.exp(-x * np.cosh(t)), t))


def asymptote_compare(table, m):
    """Fit the computed 2-d table against the near-field log form
    A log(1/(m r)) + B (m r <= 0.2) and the far-field form
    D1 exp(-D2 m r) / sqrt(m r) (m r >= 3); returns both fits."""
    if table.d != 2:
        raise ValueError("asymptotic comparison is for d = 2 tables")
    if m > 1:
        raise ValueError("asymptotic regime fits require m <= 1")
    coords = _signed_coords(table.size) if table.domain == "torus" else np.arange(
        -table.size, table.size + 1
    )
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    r = np.sqrt(xx.astype(float) ** 2 + yy.astype(float) ** 2)
    g = table.values
    out = {}

    small = (r > 0) & (m * r <= 0.2)
    if small.sum() < 8:
        raise ValueError("not enough points in the small-mr regime")
    xs = np.log(1.0 / (m * r[small]))
    ys = g[small]
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, icept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ [slope, icept]
    out["small"] = {
        "slope": float(slope),
        "intercept": float(icept),
        "max_resid": float(np.max(np.abs(resid))),
        "points": int(small.sum()),
    }

    large = (m * r >= 3.0) & (g > 1e-13)
    if large.sum() < 8:
        raise ValueError("not enough points in the large-mr regime")
    xl = m * r[large]
    yl = np.log(g[large] * np.sqrt(xl))
    A = np.vstack([xl, np.ones_like(xl)]).T
    (slope, icept), *_ = np.linalg.lstsq(A, yl, rcond=None)
    pred = A @ [slope, icept]
    ss_res = float(np.sum((yl - pred) ** 2))
    ss_tot = float(np.sum((yl - yl.mean()) ** 2))
    out["large"] = {
        "decay_rate": float(-slope),
        "prefactor": float(np.exp(icept)),
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
        "points": int(large.sum()),
    }
    return out


# ---------------------------------------------------------------------------
# modified McBryan-Spencer bound
# ---------------------------------------------------------------------------


@dataclass
class McBryanReport:
    """Terms of the complex-shift bound on <cos phi_0> for the clean-weak
    model with wired boundary on the box {-N..N}^2.

    raw_bound = exp(beta [ -u_0/beta + sum_edges (cosh grad u - 1)
                           + (1/4h) sum_sites (cosh 2u - 1) ])
    with u = G_N / ((1+delta) beta), G_N the s = 1 box Green function at
    mass^2 = 1/(h (1+delta)); u vanishes identically on the frame.
    """

    beta: float
    h: float
    delta: float
    N: int
    u: np.ndarray
    u0: float
    linear: float
    quadratic: float
    cosh_edge: float
    cosh_site: float
    raw_bound: float


def mcbryan_bound(beta, h, delta, N):
    """Evaluate the decay bound; raises if beta is too small for the edge
    gradients to satisfy cosh(g) - 1 <= (1+delta)/2 g^2."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if beta <= 0 or h <= 0:
        raise ValueError("beta and h must be positive")
    m2 = 1.0 / (h * (1.0 + delta))
    table = green_box(N, math.sqrt(m2), s=1.0, d=2)
    u = table.values / ((1.0 + delta) * beta)
    u0 = float(u[N, N])

    grads = [np.diff(u, axis=ax) for ax in range(2)]
    gmax = max(float(np.max(np.abs(g))) for g in grads)
    if math.cosh(gmax) - 1.0 > 0.5 * (1.0 + delta) * gmax * gmax:
        raise ValueError(
            f"beta too small: max edge gradient {gmax:.3g} violates the "
            f"cosh quadratic bound at delta={delta}"
        )
    cosh_edge = sum(float(np.sum(np.cosh(g) - 1.0)) for g in grads)
    cosh_site = float(np.sum(np.cosh(2.0 * u) - 1.0)) / (4.0 * h)
    quadratic = 0.5 * (
        sum(float(np.sum(g * g)) for g in grads) + float(np.sum(u * u)) / h
    )
    linear = -u0 / beta
    raw_bound = float(np.exp(beta * (linear + cosh_edge + cosh_site)))
    return McBryanReport(
        beta=beta, h=h, delta=delta, N=N, u=u, u0=u0, linear=linear,
        quadratic=quadratic, cosh_edge=cosh_edge, cosh_site=cosh_site,
        raw_bound=raw_bound,
    )
