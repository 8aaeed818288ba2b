"""Constructive approximation by shallow and deep networks.

Modules: ``special`` (Hermite and ultraspherical machinery), ``sphere``
(lift to S^q, harmonic analysis, D_phi), ``relu`` (zonal ReLU nets),
``gaussian`` (lattice Gaussian nets), ``dag`` (compositional functions and
deep nets), ``rates`` (power-law fits, parameter counts) and ``experiment``
(config-driven sweeps).
"""

__version__ = "0.1.0"
