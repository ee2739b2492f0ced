"""Random-matrix ensembles, spectral couplings and free-probability numerics."""

__version__ = "0.1.0"
