"""heckelab: a computational laboratory for rank-two parabolic Hecke operators.

Subpackages are organized by arithmetic setting: ``localfield`` (norms,
measures, p-adic arithmetic), ``kernels`` (shared chart algebra),
``finitefield`` (mod-p operator matrices and exact spectra), ``padic``
(mollified kernels and the first-batch spectral decomposition),
``archimedean`` (discretized operators over R and C), ``opers``
(differential-equation side), ``tsystem`` (continuants and discrete
evolution), and ``cli`` (command-line interface).
"""

__version__ = "0.1.0"
