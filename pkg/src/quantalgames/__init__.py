"""Solvers and benchmarks for leader/follower games against
quantal-response opponents."""

__version__ = "0.1.0"

from .nfg import (
    NormalFormGame,
    nfg_expected_utility,
    uniform_mixed,
    validate_mixed,
    zero_sum_nfg,
)
from .efg import (
    BehavioralStrategy,
    ExtensiveFormGame,
    GameValidationError,
    RealizationPlan,
    TreeBuilder,
    counterfactual_values,
    expected_utility,
    from_realization_plan,
    reach_probabilities,
    sequence_reaches,
    to_realization_plan,
    uniform_table,
)
from .kernels import backend_name
from .response import (
    QuantalModel,
    best_response,
    clqr,
    epsilon_br_certificate,
    lambert_w,
    nfg_quantal_response,
    quantal_response,
    softmax,
    softmax_suboptimality_bound,
)
from .report import SolveReport
from .regret import (
    convex_combine_efg,
    nash_value,
    solve_cfr_br,
    solve_comb,
    solve_nash,
    solve_qne,
    solve_restricted,
    solve_rqr,
)
from .qse import (
    GAConfig,
    best_ne_search,
    project_to_simplex,
    qse_objective_nfg,
    solve_qse_ga,
)
from .metrics import (
    attach_metrics,
    exploitability,
    format_results_csv,
    gain,
    lambda_sweep,
    reference_game_value,
    reference_nash,
    write_results_csv,
)
from . import zoo
