"""Discrete Brownian snake simulation and upcrossing statistics."""

from .analytic import c1, exit_hit_prob, hitting_mass, mu_mean, solve_c1
from .excursion import (
    ContourExcursion,
    ReflectedPath,
    dyck_excursion,
    excursion_conditioned_hit,
    reflected_walk_until_local_time,
)
from .occupation import LocalTimeEstimate, local_time, profile
from .snake import LabeledSnake, RangeMinIndex, argmin_label, attach_labels, d_circ, reroot, tree_segment_min
from .superprocess import SnakeForest, count_M, count_script_N, sbm_local_time, simulate_forest
from .upcross import (
    UpcrossingReport,
    cactus_vertex_count,
    count_components_above,
    count_upcrossings,
    count_upcrossings_fresh,
)

__version__ = "0.1.0"
