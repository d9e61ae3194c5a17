"""Mixed finite element solver for the 2D Monge-Ampere equation det(D^2 u) = f."""

__version__ = "0.1.0"
