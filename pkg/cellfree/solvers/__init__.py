"""Real second-order cone programming layer (cvxopt backend)."""

from .conic import (ConicProgram, ConicSolution, NonNegative, QuadraticObjective,
                    SecondOrderCone, SolverStatus, ZeroCone, quad_epigraph, solve)

__all__ = ['ConicProgram', 'ConicSolution', 'NonNegative', 'QuadraticObjective',
           'SecondOrderCone', 'SolverStatus', 'ZeroCone', 'quad_epigraph', 'solve']
