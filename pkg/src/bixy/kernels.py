"""Single-sweep Metropolis kernels (numba, one njit function per variant).

All kernels visit sites in the caller-provided class-by-class order and use
per-site random numbers (``prop[x]``, ``unif[x]``), so the outcome does not
depend on the visit order inside one coloring class: updating a class
site-parallel or site-sequential produces bit-identical chains.

``prop`` holds absolute proposal angles when ``relative`` is false, or
additive offsets (windowed proposal) when true.  Angles are wrapped to
(-pi, pi] on every write.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi


@njit(cache=True, inline="always")
def _wrap(x):
    return x - TWO_PI * np.ceil((x - np.pi) / TWO_PI)


@njit(cache=True, inline="always")
def _accept(d_energy, beta, u):
    if d_energy <= 0.0:
        return True
    return u < np.exp(-beta * d_energy)


@njit(cache=True)
def sweep_xy(theta, nbr, ndeg, order, beta, coupling, prop, relative, unif):
    accepted = 0
    for t in range(order.size):
        x = order[t]
        old = theta[x]
        new = _wrap(old + prop[x]) if relative else _wrap(prop[x])
        de = 0.0
        for k in range(ndeg[x]):
            y = nbr[x, k]
            de -= np.cos(new - theta[y]) - np.cos(old - theta[y])
        if _accept(coupling * de, beta, unif[x]):
            theta[x] = new
            accepted += 1
    return accepted


@njit(cache=True)
def sweep_clean_weak(theta, nbr, ndeg, order, beta, h, prop, relative, unif):
    accepted = 0
    for t in range(order.size):
        x = order[t]
        old = theta[x]
        new = _wrap(old + prop[x]) if relative else _wrap(prop[x])
        de = 0.0
        for k in range(ndeg[x]):
            y = nbr[x, k]
            de -= np.cos(new - theta[y]) - np.cos(old - theta[y])
        cn = np.cos(new)
        co = np.cos(old)
        de -= (cn * cn - co * co) / (2.0 * h)
        if _accept(de, beta, unif[x]):
            theta[x] = new
            accepted += 1
    return accepted


@njit(cache=True)
def sweep_effective_weak(theta, nbr, ndeg, order, beta, h, salpha, prop, relative, unif):
    accepted = 0
    for t in range(order.size):
        x = order[t]
        old = theta[x]
        new = _wrap(old + prop[x]) if relative else _wrap(prop[x])
        de = 0.0
        for k in range(ndeg[x]):
            y = nbr[x, k]
            de -= np.cos(new - theta[y]) - np.cos(old - theta[y])
        de *= 2.0
        de -= h * salpha[x] * (np.cos(new) - np.cos(old))
        if _accept(de, beta, unif[x]):
            theta[x] = new
            accepted += 1
    return accepted


@njit(cache=True)
def sweep_bilayer_layer(
    own, other, sign, nbr, ndeg, order, beta, h, salpha, prop, relative, unif
):
    """One colored pass over a single layer; sign = +1 for the plus layer
    (phi = own - other) and -1 for the minus layer (phi = other - own)."""
    accepted = 0
    for t in range(order.size):
        x = order[t]
        old = own[x]
        new = _wrap(old + prop[x]) if relative else _wrap(prop[x])
        de = 0.0
        for k in range(ndeg[x]):
            y = nbr[x, k]
            de -= np.cos(new - own[y]) - np.cos(old - own[y])
        de -= h * salpha[x] * (
            np.cos(sign * (new - other[x])) - np.cos(sign * (old - other[x]))
        )
        if _accept(de, beta, unif[x]):
            own[x] = new
            accepted += 1
    return accepted


@njit(cache=True)
def sweep_effective_strong(
    theta, nbr, ndeg, diffmask, dvals, order, beta, h, prop, relative, unif
):
    """Radius-2 variant: maintains the divergence cache ``dvals`` in place."""
    accepted = 0
    for t in range(order.size):
        x = order[t]
        old = theta[x]
        new = _wrap(old + prop[x]) if relative else _wrap(prop[x])
        de = 0.0
        dx_new = 0.0
        dquad = 0.0
        for k in range(ndeg[x]):
            y = nbr[x, k]
            cn = np.cos(new - theta[y])
            co = np.cos(old - theta[y])
            if diffmask[x, k]:
                dx_new += cn
                dy = dvals[y]
                dquad += (dy + cn - co) ** 2 - dy * dy
            else:
                de -= 2.0 * (cn - co)
        dquad += dx_new * dx_new - dvals[x] * dvals[x]
        de -= dquad / (2.0 * h)
        if _accept(de, beta, unif[x]):
            for k in range(ndeg[x]):
                if diffmask[x, k]:
                    y = nbr[x, k]
                    dvals[y] += np.cos(new - theta[y]) - np.cos(old - theta[y])
            theta[x] = new
            dvals[x] = dx_new
            accepted += 1
    return accepted
