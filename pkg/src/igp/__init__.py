"""Active learning on graphs with relaxed binary queries.

Instead of asking an annotator "which class is this node?", the engine
proposes its current best guess and asks "is this correct?", a cheaper
binary question.  Refusals are folded into normalized soft labels, queries
are chosen to maximize the entropy reduction they propagate through the
graph, and the classifier trains on hard and soft labels jointly.
"""

from .graph import Dataset, DatasetError, Graph, SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .infogain import (
    SoftLabel,
    aggregated_belief,
    entropy,
    expected_igp,
    info_gain,
    masked_label,
    normalize_accept,
    normalize_reject,
    pseudo_label,
)
from .model import Classifier, TrainConfig, evaluate, predict, train
from .oracle import (
    AnnotationState,
    BudgetError,
    BudgetLedger,
    OracleAnswer,
    RelaxedQuery,
    apply_answer,
    hard_label_query,
    pose_query,
    simulated_answer,
)
from .propagation import (
    InfluenceCache,
    InfluenceColumn,
    TransitionMatrix,
    build_transition,
    influence_from,
    propagate_features,
    receptive_field,
)
from .selection import (
    GreedyState,
    SelectionConfig,
    filter_candidates,
    marginal_gain,
    select_batch,
)
from .harness import (
    Episode,
    EpisodeRecord,
    ExperimentConfig,
    ExperimentReport,
    ReplayError,
    replay_episode,
    run_episode,
    run_suite,
    uncertainty_baseline_select,
)

__version__ = "0.1.0"
