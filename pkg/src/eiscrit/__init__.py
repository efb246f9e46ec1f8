"""Certified critical points of Eisenstein series for the full modular group.

Subpackages:
- exact:     Bernoulli numbers and divisor sums over exact rationals
- series:    certified q-expansion evaluators (mpmath)
- lattice:   truncated lattice-sum oracles with certified tails
- fastpath:  float64 batch evaluators for bulk curve sampling
- quasimod:  exact isobaric polynomial algebra in the three generators
- critzeros: bracketing, refinement and sign tables for critical points
- winding:   continuous-argument tracking and contour zero counts
- phimap:    the equivariant map z + k E_k/E_k', counting and the real locus
- cli:       verification sweeps and data export
"""

__version__ = "0.1.0"
