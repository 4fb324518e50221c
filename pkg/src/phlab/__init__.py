"""phlab: a numerical laboratory for invariant splittings of torus maps.

Measures invariant bundles, pinching/Birkhoff exponents, Holder regularity,
box dimensions, holonomy obstructions, and joint-integrability defects of
partially hyperbolic torus diffeomorphisms against analytically known models.
"""

__version__ = "0.1.0"
