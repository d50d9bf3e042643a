"""Sharp and empirical Bernstein inequalities on the unit ball and the simplex.

Submodules are imported on demand so that ``ballbernstein.cli`` can cap
thread pools before numpy loads.
"""

__version__ = "0.1.0"

__all__ = ["polycore", "classical1d", "ballbasis", "quadrature", "operators", "spectral",
           "lpscan", "extremal", "cli"]
