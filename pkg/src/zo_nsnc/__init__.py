"""Zeroth-order solvers for constrained nonsmooth nonconvex stochastic problems."""

from .geometry import Ball, Box, ConvexSet, WholeSpace, infeasibility, moreau_indicator_grad, project, residual
from .problems import (LogisticL1, MinTwoQuadratics, StochasticProblem, classification_metrics,
                       make_logistic_l1, make_min_two_quadratics)
from .schedules import BatchSchedule, StepSchedule
from .smoothing import sample_sphere, zo_grad_batch, zo_grad_sample, zo_grad_sqn
from .sqn_core import SqnMemory, two_loop
from .vrg import RunReport, VrgConfig, vrg_run
from .vrsqn import VrsqnConfig, infeasibility_bound, vrsqn_run

__version__ = "0.1.0"
