"""Sparse two-level Boolean rule (CNF/DNF) classifiers.

Learners trade classification error against the number of features
used, via LP relaxations of clause selection plus descent schemes on a
minimal-Hamming-distance objective. See README.md and demos/ for
worked examples.
"""

from .bench import (DEFAULT_THETA_GRID, ParetoFront, SweepGrid, SweepRecord,
                    SweepResult, min_error_table, pareto_front, run_sweep)
from .binarize import (RedundancyIndex, build_redundancy_index,
                       enumerate_candidates, redundancy_binarize, simple_binarize)
from .data import (BinaryDataset, FeatureMeta, FoldPlan, RawDataset,
                   append_disable_column, apply_binarization, binarize,
                   load_csv, stratified_folds)
from .learners import (ALGORITHMS, FractionalSolution, LearnConfig, LearnTrace,
                       am_update_v, bcd_filter_samples, learn, learn_am,
                       learn_bcd, learn_one_level, learn_set_cover, learn_tlp)
from .lp import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, LinearProgram,
                 LpSolution, is_integral, solve, write_lp_text)
from .rules import (CNF, DC, DNF, Clause, CostReport, IdealOutputs,
                    TwoLevelRule, de_morgan, describe_rule, error_rate,
                    eval_clause, hamming_cost, joint_cost, predict,
                    predict_all, rule_to_json, zero_one_cost)

__version__ = "0.1.0"
