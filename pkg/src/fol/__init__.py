"""Desk-scale numerical laboratory for the thin/fractional obstacle problem.

Subpackages:
  params, moments, quadrature  -- weighted-sphere plumbing
  polys, spectrum              -- exact eigenbasis of the weighted spherical operator
  profiles                     -- closed-form model solutions and polynomial builders
  pairing, weiss               -- energy pairings, Weiss/Almgren monitors
  epiperimetric                -- competitor constructions and inequality checkers
  gap                          -- forbidden homogeneity intervals
  solver                       -- thin-obstacle grid solver and blow-up classification
  acceptance, cli, figures     -- verification suite, command line, plots
"""

from .params import ParameterError, Params

__version__ = "0.1.0"

__all__ = ["Params", "ParameterError", "__version__"]
