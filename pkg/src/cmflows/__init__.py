"""Calogero-Moser phase space, complete generator flows and their compositions."""
from .closure import ClosureRecipe, Expr, closure_search, realize
from .errors import (BlowUp, BudgetExhausted, ChartCollision, ChartDegeneracy, CMError, DomainError,
                     InvalidGroupElement, NonConvergence, NonFinite, NotOnRealCM, ParseError, ShapeError,
                     StageRejected, TargetMiss)
from .flows import (CONVENTION_PIN, Generator, TangentPair, generator_flow, hamiltonian_field,
                    poisson_bracket, reference_flow, symplectic_defect, symplectic_form,
                    tau_compat_defect)
from .phase import (SIGMA, TAU, HatPoint, HermitianTriple, PhasePoint, group_act, hat_involution,
                    moment_map, moment_real, mu_one, norm_sq, rank_one_defect, sigma, tau)
from .pipeline import (ApproxRequest, Budget, StageSpec, approximate_flow, push_out,
                       verify_real_preservation)
from .space import (ExhaustionConfig, RealChart, TraceCoords, chart_to_hat, chart_to_point,
                    exhaustion_rho, orbit_normalize, point_to_chart, trace_embedding)
from .splitting import (FlowProgram, SeminormReport, bracket_algorithm, ck_seminorm,
                        iterate_algorithm, run_program, sum_algorithm)
from .tracepoly import TracePolynomial, poisson_bracket_symbolic

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
