"""Small shared numerics helpers: angle wrapping, seeding, error estimates."""

import hashlib

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Wrap angles to the half-open interval (-pi, pi].

    Works on scalars and arrays; -pi maps to +pi.
    """
    return x - TWO_PI * np.ceil((x - np.pi) / TWO_PI)


def derive_seed(*parts):
    """Stable 64-bit seed from an arbitrary tuple of hashable parts.

    Uses blake2b over the repr of the parts, so the result does not depend
    on process, platform, or enumeration order.
    """
    text = "|".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def counter_rng(*parts):
    """Counter-based generator (Philox) keyed by ``derive_seed(*parts)``."""
    return np.random.Generator(np.random.Philox(key=np.uint64(derive_seed(*parts))))


def block_means(x, block):
    """Means of consecutive blocks; the ragged tail record block is dropped."""
    x = np.asarray(x, dtype=float)
    nb = len(x) // block
    if nb == 0:
        return x.copy()
    return x[: nb * block].reshape(nb, block).mean(axis=1)


def mean_stderr(x, block=1):
    """Mean and standard error of a series, optionally block-averaged first."""
    b = block_means(x, block) if block > 1 else np.asarray(x, dtype=float)
    m = float(np.mean(b))
    if len(b) < 2:
        return m, 0.0
    return m, float(np.std(b, ddof=1) / np.sqrt(len(b)))


def jackknife_mean(values):
    """Jackknife mean and error over a 1-d collection of sample estimates."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2:
        return float(np.mean(v)), 0.0
    total = v.sum()
    loo = (total - v) / (n - 1)
    m = float(np.mean(v))
    err = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    return m, err


def wilson_interval(successes, trials, z=1.96):
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def linear_fit(x, y):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        r2 = 1.0
    else:
        ss_res = res[0] if len(res) else np.sum((y - A @ [slope, intercept]) ** 2)
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


def format_float(x):
    """Repr-stable float formatting for reproducible CSV output."""
    return "%.17g" % float(x)
