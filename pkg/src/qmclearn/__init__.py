"""Surrogate training on low-discrepancy point sets.

Point-set generation and star discrepancy, Vitali/Hardy--Krause variation
estimates, small feedforward networks with exact gradients, full-batch
Adam training with ensemble sweeps, benchmark maps with independent
oracles, and convergence-study orchestration.
"""

from .sampling import (Halton, PointSet, SamplerKind, Sobol, UniformRandom,
                       VanDerCorput, generate, parse_kind,
                       star_discrepancy_exact, star_discrepancy_lower_bound)
from .variation import (GridFunction, Ladder, hardy_krause_upper_bound,
                        hardy_krause_with_refinement, total_variation_1d,
                        vitali_variation_on_ladder)
from .network import (NetworkConfig, NetworkParams, backward, forward,
                      forward_with_cache, init_xavier, load_model, save_model)
from .training import (AdamState, FAST_GRID, GridCell, HyperGrid, TABLE1_GRID,
                       TrainConfig, TrainedModel, RetrainStats, adam_step,
                       derive_seed, ensemble_select, errors_on, loss,
                       retrain_statistics, train_one)
from .benchmarks import (BasketParams, BenchmarkMap, ProjectileParams,
                         ballistic_range_closed_form, basket_call_price,
                         basket_mc_price, get_benchmark, normal_cdf, owen_f,
                         projectile_range, sum_of_sines)
from .experiments import (ExperimentPlan, ExperimentRecord, RateFit, emit,
                          fit_rate, group_records, load, load_plan,
                          load_summary, plan_from_dict, run_plan)

__version__ = "0.1.0"
