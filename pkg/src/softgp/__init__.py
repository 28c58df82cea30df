"""GP and SGP binary classifiers over typed logical expression trees."""

from .tree import (
    ARITY,
    BOOL_DEPTH_CAP,
    DEFAULT_BOUNDS,
    FLOAT_MAX,
    NODE_CAP,
    OP_CLASS,
    SOFT_ONLY,
    ExprTree,
    GenBounds,
    LocatorError,
    Node,
    OpClass,
    OpKind,
    TreeError,
    Variant,
    Violation,
    WeightLocator,
    collect_weights,
    const,
    eval_batch,
    eval_row,
    iter_nodes,
    max_bool_depth,
    max_math_chain,
    min_features,
    node_count,
    op,
    random_tree,
    replace_subtree,
    set_weight,
    subtree_at,
    symbol,
    validate,
)
from .sexpr import (
    ParseError,
    format_model,
    format_tree,
    load_model,
    parse_model,
    parse_tree,
    save_model,
)
from .metrics import ConfusionMatrix, MetricsError, balanced_accuracy, confusion
from .genetics import (
    EvalContext,
    Individual,
    MutationWeights,
    crossover,
    extension_mutation,
    mutate,
    positive_crossover,
    positive_mutation,
    rank_select,
    weight_adjustment,
)
from .evolve import (
    Algo,
    Classifier,
    EvolutionConfig,
    EvolveError,
    fit,
    fit_gp,
    fit_sgp,
    load_config,
    parse_config,
    predict,
    predict_batch,
    score,
)
from .data import (
    DataError,
    Dataset,
    SplitPair,
    fetch_pmlb,
    gen_synthetic,
    load_table,
    save_csv,
    shuffle_split,
)
from .bench import (
    PAPER_DATASETS,
    BenchResult,
    BoundaryGrid,
    boundary_grid,
    run_benchmark,
    run_seed,
    strict_border_fraction,
    write_boundary_csv,
)

__version__ = "0.1.0"
