"""Trainable generalizations of classical ODE/PDE schemes with offline training.

The package implements parameter-bearing versions of standard numerical
methods (three-point BDF, two-level finite-difference stencils for the heat
and advection equations, weight-modulated Rusanov finite-volume schemes for
Burgers and the 1-D Euler system), generators for random initial-data
families, fine-grid reference solvers, a small gradient-descent/SGD trainer,
gain/speedup evaluation, a computational-graph view of one scheme step, and
a CLI that reproduces the desk-scale experiments end to end.
"""

__version__ = "0.1.0"
