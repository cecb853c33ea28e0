"""henonlab: a numerical laboratory for Henon-like renormalization.

Modules
-------
maps1d    quadratic-family core: ladder, special parameters, 1-D pieces,
          composed-quadratic swallow geometry
henon     Henon-like maps with perturbation hooks, orbits, Lyapunov
          exponents, attractor enumeration
crossmap  affine-like representation (A, B) of a piece via the chain solver
strips    stable-leaf lattice, tame boxes, cone verification, 2-D products
renorm    tangency data, single and multi renormalization, windows, twins,
          cone-expansion certification
atlas     deterministic parameter-plane rasters and PPM/CSV emission
cli       command-line frontend
"""

from __future__ import annotations

__version__ = "0.1.0"
