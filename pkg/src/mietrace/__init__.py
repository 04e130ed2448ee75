"""Partial-wave trace identities for scattering off a perfectly conducting sphere.

Subpackages
-----------
specfun     dimension-aware spherical Bessel / Riccati-Bessel kernels and zero finding
formsphere  exact-rational exterior-algebra-valued spherical harmonics
hodgealg    finite-dimensional harness for nilpotent operators T with T^2 = 0
mie         per-channel scattering matrix values, phase shifts, interior spectra
bk          phase-shift trace integrals vs. a box-quantization spectral oracle
cli         command-line front end
"""

__version__ = "0.1.0"
