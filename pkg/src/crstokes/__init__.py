"""Nonconforming and mixed finite elements for the 2-D Stokes problem."""

from .mesh import Triangulation, build_uniform, refine

__all__ = ["Triangulation", "build_uniform", "refine"]
