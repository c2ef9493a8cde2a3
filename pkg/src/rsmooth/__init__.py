"""Riemannian smoothing gradient methods for nonsmooth problems on the Stiefel manifold."""

__version__ = "0.1.0"

from .linmap import LinearMap, correct_point, power_iteration
from .manifold import Stiefel, check_feasible, project_tangent, retract
from .problem import (
    SmoothedProblem,
    cm_generate,
    cm_problem,
    load_instance,
    save_instance,
    spca_generate,
    spca_problem,
)
from .prox import L1Norm, ShiftedL1, Zero, moreau_grad, moreau_value, prox_l1
from .solver import (
    ALGORITHMS,
    ScheduleConfig,
    StopRule,
    solve,
    solve_rsg,
    solve_rsg_epochs,
    solve_rssg,
    solve_rssg_epochs,
    solve_rsub,
    stationarity_residuals,
    theory_constants,
)
from .trace import RunRecord, read_csv

__all__ = [
    "ALGORITHMS",
    "L1Norm",
    "LinearMap",
    "RunRecord",
    "ScheduleConfig",
    "ShiftedL1",
    "SmoothedProblem",
    "Stiefel",
    "StopRule",
    "Zero",
    "check_feasible",
    "cm_generate",
    "cm_problem",
    "correct_point",
    "load_instance",
    "moreau_grad",
    "moreau_value",
    "power_iteration",
    "project_tangent",
    "prox_l1",
    "read_csv",
    "retract",
    "save_instance",
    "solve",
    "solve_rsg",
    "solve_rsg_epochs",
    "solve_rssg",
    "solve_rssg_epochs",
    "solve_rsub",
    "spca_generate",
    "spca_problem",
    "stationarity_residuals",
    "theory_constants",
]
