"""Dynamic direct elaboration mechanisms under asymmetric awareness."""
from .errors import *  # noqa: F401,F403
from .lattice import AwarenessLattice, build_lattice, join, leq, meet, powerset_lattice
from .typesystem import NatureDraw, PayoffType, TypeSystem, perceive, pooled_awareness, project, upset
from .welfare import efficient_outcome, marginal_efficient_outcome, utility, welfare
from .engine import InformationSet, Trace, run, step, truth_telling
from .transfers import clarke_family, first_full_revealer, m_table, surplus, vcg_transfers
from .scenario import Scenario, TransferConfig, example1, load_scenario, parse_scenario
from .generate import Bounds, generate_instances
from .verify import (VerificationReport, check_conditional_dominance, check_efficiency,
                     check_no_deficit, check_pooled_implementation, check_stage_bound, oracle_m)

__version__ = "0.1.0"
