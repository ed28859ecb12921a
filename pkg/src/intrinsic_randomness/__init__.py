"""Intrinsic randomness of a parity bit on maximally Mermin-violating behaviors.

Modules: ``behavior`` (tables and correlators), ``mermin`` (operators and
maximal-violation conditions), ``randomness`` (the bit ``f``, guessing
probabilities, audits), ``certify`` (linear programs over the maximally
violating polytope), ``coefficients`` (the alpha/beta bookkeeping) and
``cli``.
"""

__version__ = "0.1.0"
