"""Group recommendation from implicit feedback.

Two stages: a collaborative Bayesian model infers each user's per-topic
interest and social influence from binary interactions (:mod:`grouprec.cbn`),
then group members play a topic-selection game whose pure Nash equilibrium
gives the recommended topic ratios (:mod:`grouprec.game`).
"""
from .cbn import (CbnHyperparams, CbnModel, TrainingExample, TrainReport,
                  compute_contribution_rates, example_gradients, example_loss,
                  rejection_probability, sample_negatives, selection_probability, train)
from .data import (Group, InteractionDataset, SplitDataset, SyntheticSpec, build_groups,
                   filter_inactive, generate_synthetic, load_hetrec, split)
from .evaluate import (METRICS, EvalReport, Metric, distance, fregroup_baseline,
                       frequency_baseline, ground_truth_distribution, run_experiment)
from .game import (Equilibrium, GameConfig, NormalizedModel, StrategyProfile, best_response,
                   cost, find_equilibrium, is_nash, normalize, profit, recommend, utility)

__version__ = "0.1.0"
