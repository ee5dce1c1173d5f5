"""Monte Carlo and numerical-analysis toolkit for disordered bilayer XY models.

Subpackages:

* :mod:`bixy.lattice` -- torus / wired-box graphs and update colorings
* :mod:`bixy.disorder` -- quenched {0, pi} random-phase fields
* :mod:`bixy.model` -- Hamiltonians, local updates, change of variables, quadrature
* :mod:`bixy.mc` -- Metropolis chains with parallel tempering
* :mod:`bixy.analysis` -- disorder averages, Binder cumulants, T_c crossings
* :mod:`bixy.percolation` -- cluster labeling and box classification
* :mod:`bixy.green` -- massive lattice Green functions and the decay bound
* :mod:`bixy.cli` -- batch front-end
"""

__version__ = "0.1.0"
