"""Numerical toolkit for rank-2 Fuchsian systems on the Riemann sphere.

Monodromy by path transport, Schlesinger isomonodromic flow, Hecke
modifications, separated variables and the four-point (sixth Painleve) case.
"""

__version__ = "0.1.0"

from .errors import (ChartMismatch, ClearanceViolation, DegenerateConfiguration, DegenerateInfinity,
                     DegeneratePoles, DegenerateResidue, InconsistentRow, InputError, IsomonoError,
                     NonInvariantDirection, NumericalFailure, NumericalNoise, PointCollision, PoleEvaluation,
                     ResidueCheckFailed, ResidueMismatch, SingularLinearSystem, StepUnderflow,
                     UndefinedCrossRatio)
from .fuchsian import (INF, EigenLine, FuchsianSystem, Residue, Violation, complete_residue, eigenline,
                       eval_L, laurent_coefficients, validate)
from .rational import RationalMatrixFunction
from .transport import Loop, MonodromyRep, PathPlan, monodromy, monodromy_rep, transport
from .schlesinger import DeformationPath, FlowTrajectory, conserved_report, flow, schlesinger_rhs
from .sov import (BoundaryChart, SeparatedData, SpectralCurveData, apparent_connection, boundary_chart,
                  bracket_matrix, gauge_normalize, p_extractor, poisson_bracket, reconstruct,
                  separated_variables, spectral_curve, x_extractor)
from .hecke import HeckeMove, PairedMove, modify, monodromy_effect, paired_modify, weyl_compose
from .pvi import QuadConfig, cross_ratio, normalize_moebius, pvi_flow, s4_orbit
