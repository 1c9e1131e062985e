"""Non-local heat equation with a moving Dirichlet boundary, driven by subordinators.

The submodules build on each other:

``bernstein``
    Bernstein functions and Levy data of the driving subordinator.
``boundary``
    Nondecreasing moving boundaries.
``nonlocal_op``
    Discrete non-local time derivative with memory weights.
``densities``
    Subordinator and inverse-subordinator densities.
``heatkernel``
    Free kernel ``p_Phi`` of delayed Brownian motion and its derivatives.
``mc``
    Monte Carlo engine for delayed Brownian motion and crossing times.
``solver``
    Finite-difference and stochastic-representation solvers.
``msd``
    Potential measure and mean-square-displacement asymptotics.
``cli``
    Command-line front end.
"""
from .bernstein import (BernsteinModel, RelativisticStable, Stable, TabulatedLevyDensity, parse_model,
                        orey_lower_bound)
from .boundary import Constant, ContractError, PiecewiseLinearMonotone, SaturatingAffine, parse_boundary
from .densities import DensityTable, build_table, inverse_density, subordinator_density
from .heatkernel import KernelEvaluator, p_phi, p_phi_dt, p_phi_dx, p_phi_dxx
from .mc import MCConfig, PathEnsemble, first_crossing
from .msd import potential, scaling_verdict
from .nonlocal_op import TimeGridFunction, apply_nonlocal_derivative, memory_weights
from .solver import Bump, fd_solve, solve_via_representation

__version__ = "0.1.0"

__all__ = [
    "BernsteinModel", "Stable", "RelativisticStable", "TabulatedLevyDensity", "parse_model",
    "orey_lower_bound", "Constant", "SaturatingAffine", "PiecewiseLinearMonotone", "ContractError",
    "parse_boundary", "DensityTable", "build_table", "inverse_density", "subordinator_density",
    "KernelEvaluator", "p_phi", "p_phi_dx", "p_phi_dxx", "p_phi_dt", "MCConfig", "PathEnsemble",
    "first_crossing", "potential", "scaling_verdict", "TimeGridFunction", "memory_weights",
    "apply_nonlocal_derivative", "Bump", "fd_solve", "solve_via_representation",
]
