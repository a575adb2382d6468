"""Trust-region driver loops."""

from .common import (LEGAL_STATUSES, IterationRecord, SolveReport, Status, Termination,
                     criticality_measure, termination_check)
from .config import TrConfig
from .persistent import run_ibo_inaccurate, run_self_correcting
from .stencil import (noise_radius_floor, run_classical_tr, run_convex_constrained,
                      run_ibo_first_order, run_ibo_second_order, run_noisy_deterministic)
from .storm import run_storm

ALGORITHMS = {
    "classical": run_classical_tr,
    "first-order": run_ibo_first_order,
    "second-order": run_ibo_second_order,
    "inaccurate": run_ibo_inaccurate,
    "self-correcting": run_self_correcting,
    "constrained": run_convex_constrained,
    "noisy": run_noisy_deterministic,
    "storm": run_storm,
}
