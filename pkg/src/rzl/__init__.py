"""Random-zeros laboratory.

Scaling-limit formulas, exact finite-degree reproducing kernels, Kac-Rice
densities and pair correlations, and Monte Carlo root statistics for Gaussian
random polynomials on boundaries of torus-invariant (complete Reinhardt)
domains.
"""

__version__ = "0.1.0"

from . import errors, geometry, kacrice, limits, montecarlo, szego  # noqa: F401
