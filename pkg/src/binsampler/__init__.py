"""Sampling the complete feasible-configuration set of bin packing instances.

The package benchmarks four strategies for discovering every feasible
single-container configuration of a 1-D bin packing instance: blind
uniform sampling, a constructive random walk, a classically simulated
digitized quantum annealer, and a hybrid that walks first and anneals
once the walk stagnates.
"""

from .annealer import (
    AnnealConfig,
    DiagonalHamiltonian,
    Schedule,
    TrotterEvolver,
    anneal_sample,
    apply_penalties,
    build_diagonal,
    config_from_json,
    default_config,
    evolve,
    gap_diagnostic,
    measure,
)
from .bench import (
    BenchmarkPlan,
    benchmark_instances,
    load_plan,
    report,
    run_benchmark,
    write_benchmark_suite,
    write_report,
)
from .curves import NormalizedCurve, PercentileBand, normalize_curves, percentile_band
from .fitting import FitResult, eval_f1, eval_f2, eval_f3, fit_curve
from .hybrid import (
    SwitchPolicy,
    fit_through_origin,
    hybrid_run,
    policy_from_json,
    rmsd,
    should_switch,
)
from .instance import (
    FeasibleSet,
    Instance,
    NormalWeights,
    UniformWeights,
    enumerate_feasible,
    generate_instance,
    is_feasible_partial,
    load_instance,
    new_instance,
    save_instance,
    subset_weight,
)
from .sampling import (
    STRATEGIES,
    SamplerState,
    SampleTrace,
    load_trace,
    prob_complete_bound,
    prob_new_random,
    random_step,
    run_until_complete,
    save_trace,
    walk_step,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "BenchmarkPlan",
    "DiagonalHamiltonian",
    "FeasibleSet",
    "FitResult",
    "Instance",
    "NormalWeights",
    "NormalizedCurve",
    "PercentileBand",
    "STRATEGIES",
    "SampleTrace",
    "SamplerState",
    "Schedule",
    "SwitchPolicy",
    "TrotterEvolver",
    "UniformWeights",
    "anneal_sample",
    "apply_penalties",
    "benchmark_instances",
    "build_diagonal",
    "config_from_json",
    "default_config",
    "enumerate_feasible",
    "eval_f1",
    "eval_f2",
    "eval_f3",
    "evolve",
    "fit_curve",
    "fit_through_origin",
    "gap_diagnostic",
    "generate_instance",
    "hybrid_run",
    "is_feasible_partial",
    "load_instance",
    "load_plan",
    "load_trace",
    "measure",
    "new_instance",
    "normalize_curves",
    "percentile_band",
    "policy_from_json",
    "prob_complete_bound",
    "prob_new_random",
    "random_step",
    "report",
    "rmsd",
    "run_benchmark",
    "run_until_complete",
    "save_instance",
    "save_trace",
    "should_switch",
    "subset_weight",
    "walk_step",
    "write_benchmark_suite",
    "write_report",
]
