"""Selection and variation operators.

Classical side: rank selection with elitism, class-matched subtree
crossover, and mutation driven by the per-class probability table
(boolean 0.1, comparison 0.2, mathematical 0.3, terms 0.5 - treated as
categorical weights and normalized over the classes present in the tree).

Soft side: the fitness-gated operators - positive crossover (keep the
top two of parents plus children), positive mutation (first strict
improvement wins), weight adjustment (bounded hill climbing over weight
slots), and extension mutation (graft a new OR root, kept only when
fitness does not drop).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .metrics import ConfusionMatrix, MetricsError, balanced_accuracy
from .sexpr import format_tree
from .tree import (
    BOOL_DEPTH_CAP,
    DEFAULT_BOUNDS,
    NODE_CAP,
    _CLASS_BY_KIND,
    ExprTree,
    GenBounds,
    Node,
    OpClass,
    OpKind,
    TreeError,
    Variant,
    collect_weights,
    const,
    eval_batch,
    iter_nodes,
    max_bool_depth,
    max_math_chain,
    node_count,
    random_subtree,
    random_tree,
    replace_subtree,
    set_weight,
    symbol,
)


@dataclass
class Individual:
    """A candidate tree plus its cached fitness on the bound training split.

    fitness None means unevaluated; any tree change must reset it.
    """

    tree: ExprTree
    fitness: Optional[float] = None
    # cached serialization used as a deterministic tie-break in sorts;
    # valid only for the current tree, so copies may share it but any
    # new tree starts at None
    sort_key: Optional[str] = field(default=None, repr=False, compare=False)


def _sort_key(ind: Individual) -> str:
    if ind.sort_key is None:
        ind.sort_key = format_tree(ind.tree)
    return ind.sort_key


@dataclass(frozen=True)
class MutationWeights:
    boolean: float = 0.1
    comparison: float = 0.2
    mathematical: float = 0.3
    terms: float = 0.5

    def __post_init__(self):
        vals = (self.boolean, self.comparison, self.mathematical, self.terms)
        if any(v < 0 for v in vals):
            raise ValueError("mutation weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one mutation weight must be positive")

    def of(self, cls: OpClass) -> float:
        return {OpClass.BOOLEAN: self.boolean, OpClass.COMPARISON: self.comparison,
                OpClass.MATHEMATICAL: self.mathematical, OpClass.TERM: self.terms}[cls]


class EvalContext:
    """Binds one training split and scores trees on it.

    Fitness is the balanced accuracy of thresholded activations (>= 0.5
    maps to label 1; hard activations are already exactly 0/1). The counts
    feed the same balanced_accuracy formula the metrics module exposes, so
    both routes agree bit for bit.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray, threshold: float = 0.5):
        self.x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y)
        if self.x.ndim != 2 or y.ndim != 1 or self.x.shape[0] != y.shape[0]:
            raise ValueError("x must be (rows, features) with one label per row")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be binary")
        self.y = y.astype(np.int64)
        self.threshold = float(threshold)
        self._pos = self.y == 1
        self._neg = ~self._pos
        self.n_pos = int(self._pos.sum())
        self.n_neg = int(self._neg.sum())
        if self.n_pos == 0 or self.n_neg == 0:
            raise MetricsError("degenerate labels: training split contains a single class")

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def fitness_of(self, tree: ExprTree, memo: Optional[dict] = None,
                   fill_memo: bool = False) -> float:
        acts = eval_batch(tree, self.x, memo=memo, fill_memo=fill_memo)
        pred = acts >= self.threshold
        tp = int(np.count_nonzero(pred & self._pos))
        fp = int(np.count_nonzero(pred & self._neg))
        cm = ConfusionMatrix(tp=tp, tn=self.n_neg - fp, fp=fp, fn=self.n_pos - tp)
        return balanced_accuracy(cm)

    def evaluate(self, ind: Individual) -> Individual:
        if ind.fitness is None:
            ind.fitness = self.fitness_of(ind.tree)
        return ind


def _require_evaluated(pop: Sequence[Individual]) -> None:
    for ind in pop:
        if ind.fitness is None:
            raise ValueError("population contains unevaluated individuals")


def rank_select(pop: Sequence[Individual], rng: np.random.Generator) -> List[Individual]:
    """Linear rank selection with elite size 1.

    The best individual is always copied into slot 0; the remaining
    size-1 slots are drawn with replacement, probability proportional to
    rank (worst 1 ... best N). Fitness ties order by serialized tree so
    the ranking, and therefore the draw, is deterministic.
    """
    if not pop:
        raise ValueError("empty population")
    _require_evaluated(pop)
    ranked = sorted(pop, key=lambda ind: (ind.fitness, _sort_key(ind)))
    n = len(ranked)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    probs = ranks / ranks.sum()
    best = ranked[-1]
    out = [Individual(best.tree, best.fitness, best.sort_key)]
    idx = rng.choice(n, size=n - 1, replace=True, p=probs)
    out.extend(Individual(ranked[i].tree, ranked[i].fitness, ranked[i].sort_key)
               for i in idx)
    return out


def _bool_limit(bounds: GenBounds, *roots: Node) -> int:
    # Fresh trees stay inside bounds.bool_max; trees already grown past it
    # by extension keep their status quo but never exceed the absolute cap.
    depth = max((max_bool_depth(r) for r in roots), default=0)
    return min(BOOL_DEPTH_CAP, max(bounds.bool_max, depth))


def crossover(t1: ExprTree, t2: ExprTree, rng: np.random.Generator,
              bounds: GenBounds = DEFAULT_BOUNDS) -> Tuple[ExprTree, ExprTree]:
    """Swap class-matched random subtrees between two trees.

    The crossover point p1 is uniform over t1's nodes; p2 is uniform over
    t2's nodes of the same operator class. Swaps that would push a path
    past the boolean/math depth limits are resampled (new p2) up to 20
    times, after which the parents are returned unchanged.
    """
    if t1.variant is not t2.variant:
        raise TreeError("cannot cross trees of different variants")
    nodes1 = list(iter_nodes(t1.root))
    path1, node1 = nodes1[int(rng.integers(0, len(nodes1)))]
    cls = _CLASS_BY_KIND[node1.kind]
    candidates = [(p, n) for p, n in iter_nodes(t2.root) if _CLASS_BY_KIND[n.kind] is cls]
    if not candidates:
        return t1, t2
    bool_max = _bool_limit(bounds, t1.root, t2.root)
    for _ in range(20):
        path2, node2 = candidates[int(rng.integers(0, len(candidates)))]
        c1 = replace_subtree(t1.root, path1, node2)
        c2 = replace_subtree(t2.root, path2, node1)
        if (max_bool_depth(c1) <= bool_max and max_bool_depth(c2) <= bool_max
                and max_math_chain(c1) <= bounds.math_max
                and max_math_chain(c2) <= bounds.math_max):
            return ExprTree(t1.variant, c1), ExprTree(t2.variant, c2)
    return t1, t2


_CLASS_ORDER = (OpClass.BOOLEAN, OpClass.COMPARISON, OpClass.MATHEMATICAL, OpClass.TERM)
# kind int value -> position of its class in _CLASS_ORDER
_CLASS_IDX = tuple(-1 if c is None else _CLASS_ORDER.index(c) for c in _CLASS_BY_KIND)


def _class_counts(root: Node) -> List[int]:
    """Node counts per class, ordered like _CLASS_ORDER."""
    counts = [0, 0, 0, 0]
    stack = [root]
    while stack:
        node = stack.pop()
        counts[_CLASS_IDX[node.kind]] += 1
        stack.extend(node.children)
    return counts


def _kth_of_class(root: Node, cidx: int, k: int) -> Tuple[Tuple[int, ...], Node]:
    """Locate the k-th node (preorder) whose class index is cidx."""
    path: List[int] = []
    remaining = k

    def walk(node: Node) -> Optional[Node]:
        nonlocal remaining
        if _CLASS_IDX[node.kind] == cidx:
            if remaining == 0:
                return node
            remaining -= 1
        for i, child in enumerate(node.children):
            path.append(i)
            hit = walk(child)
            if hit is not None:
                return hit
            path.pop()
        return None

    node = walk(root)
    if node is None:
        raise LookupError(f"tree has fewer than {k + 1} nodes of class "
                          f"{_CLASS_ORDER[cidx].value}")
    return tuple(path), node


def mutate(ind: Individual, weights: MutationWeights, n_features: int,
           const_range: Tuple[float, float], rng: np.random.Generator,
           bounds: GenBounds = DEFAULT_BOUNDS) -> Individual:
    """Mutate one node picked by the per-class probability table.

    Boolean/comparison/mathematical targets are replaced by fresh random
    subtrees of the same class sized to respect the path depth limits.
    Term targets mutate in place: a symbol re-draws its feature index, a
    constant c becomes c + r with r standard normal.
    """
    return _mutate(ind, weights, n_features, const_range, rng, bounds,
                   _class_counts(ind.tree.root))


def _mutate(ind: Individual, weights: MutationWeights, n_features: int,
            const_range: Tuple[float, float], rng: np.random.Generator,
            bounds: GenBounds, counts: List[int]) -> Individual:
    # counts is _class_counts(ind.tree.root), hoisted so repeated mutation
    # of one individual walks the tree once
    tree = ind.tree
    present = [i for i, c in enumerate(_CLASS_ORDER)
               if counts[i] > 0 and weights.of(c) > 0]
    w = np.array([weights.of(_CLASS_ORDER[i]) for i in present], dtype=np.float64)
    cidx = present[int(rng.choice(len(present), p=w / w.sum()))]
    cls = _CLASS_ORDER[cidx]
    path, node = _kth_of_class(tree.root, cidx, int(rng.integers(0, counts[cidx])))

    if cls is OpClass.TERM:
        if node.kind is OpKind.SYMBOL:
            new: Node = symbol(int(rng.integers(0, n_features)))
        else:
            new = const(float(node.payload) + float(rng.standard_normal()))
    elif cls is OpClass.COMPARISON:
        new = random_subtree(cls, tree.variant, bounds, n_features, const_range, rng,
                             depth_budget=bounds.math_max)
    else:
        if cls is OpClass.BOOLEAN:
            # every ancestor of a boolean node is boolean
            budget = _bool_limit(bounds, tree.root) - len(path)
        else:
            maths_above = 0
            cursor = tree.root
            for i in path:
                if _CLASS_BY_KIND[cursor.kind] is OpClass.MATHEMATICAL:
                    maths_above += 1
                cursor = cursor.children[i]
            budget = bounds.math_max - maths_above
        new = random_subtree(cls, tree.variant, bounds, n_features, const_range, rng,
                             depth_budget=max(1, budget))
    return Individual(ExprTree(tree.variant, replace_subtree(tree.root, path, new)))


def positive_crossover(ind1: Individual, ind2: Individual, ctx: EvalContext,
                       rng: np.random.Generator,
                       bounds: GenBounds = DEFAULT_BOUNDS) -> Tuple[Individual, Individual]:
    """Crossover that never loses ground: returns the two fittest of
    {parents, children}, preferring children on ties for diversity."""
    _require_evaluated((ind1, ind2))
    c1, c2 = crossover(ind1.tree, ind2.tree, rng, bounds)
    pool = [ctx.evaluate(Individual(c1)), ctx.evaluate(Individual(c2)), ind1, ind2]
    is_child = {id(pool[0]): 0, id(pool[1]): 0}
    pool.sort(key=lambda ind: (-ind.fitness, is_child.get(id(ind), 1), _sort_key(ind)))
    return pool[0], pool[1]


def positive_mutation(ind: Individual, max_tries: int, ctx: EvalContext,
                      weights: MutationWeights, n_features: int,
                      const_range: Tuple[float, float], rng: np.random.Generator,
                      bounds: GenBounds = DEFAULT_BOUNDS) -> Individual:
    """Return the first of up to max_tries mutants that strictly improves
    fitness, else the original."""
    _require_evaluated((ind,))
    if ind.fitness >= 1.0 or max_tries <= 0:
        # nothing can strictly improve; returning early is observationally
        # identical to trying and rejecting every mutant
        return ind
    # mutants share every untouched subtree with the original, so their
    # evaluation reuses the original's per-node activations
    memo: dict = {}
    ctx.fitness_of(ind.tree, memo=memo, fill_memo=True)
    counts = _class_counts(ind.tree.root)
    for _ in range(max_tries):
        mutant = _mutate(ind, weights, n_features, const_range, rng, bounds, counts)
        mutant.fitness = ctx.fitness_of(mutant.tree, memo=memo)
        if mutant.fitness > ind.fitness:
            return mutant
    return ind


def weight_adjustment(ind: Individual, max_tries: int, ctx: EvalContext,
                      rng: np.random.Generator) -> Individual:
    """Hill climbing over weight slots.

    Each try perturbs one uniformly chosen weight of the original tree by
    Normal(0, 0.1) (operator weights clamp to [0,1]) and accepts the first
    strict fitness improvement. Candidates share all untouched subtrees
    with the original, so their evaluation reuses the original's per-node
    activations via the memo.
    """
    _require_evaluated((ind,))
    if ind.tree.variant is not Variant.SOFT:
        raise TreeError("weight adjustment requires a soft tree")
    if ind.fitness >= 1.0 or max_tries <= 0:
        return ind
    slots = collect_weights(ind.tree)
    if not slots:
        return ind
    memo: dict = {}
    ctx.fitness_of(ind.tree, memo=memo, fill_memo=True)
    for _ in range(max_tries):
        loc, w = slots[int(rng.integers(0, len(slots)))]
        candidate = set_weight(ind.tree, loc, w + float(rng.normal(0.0, 0.1)))
        f = ctx.fitness_of(candidate, memo=memo)
        if f > ind.fitness:
            return Individual(candidate, f)
    return ind


def extension_mutation(ind: Individual, ctx: EvalContext, n_features: int,
                       const_range: Tuple[float, float], rng: np.random.Generator,
                       bounds: GenBounds = DEFAULT_BOUNDS) -> Individual:
    """Graft a new OR root joining the tree with a fresh random subtree.

    The new root's weight is 1.0 so the old behavior is preserved wherever
    the old branch dominates. The result is kept only if fitness does not
    decrease, and never grows past the absolute boolean-depth/node caps.
    """
    _require_evaluated((ind,))
    if ind.tree.variant is not Variant.SOFT:
        raise TreeError("extension mutation requires a soft tree")
    fresh = random_subtree(OpClass.BOOLEAN, Variant.SOFT, bounds, n_features,
                           const_range, rng, depth_budget=bounds.bool_max)
    root = Node(OpKind.OR, (ind.tree.root, fresh), weight=1.0)
    if max_bool_depth(root) > BOOL_DEPTH_CAP or node_count(root) > NODE_CAP:
        return ind
    extended = ExprTree(Variant.SOFT, root)
    f = ctx.fitness_of(extended)
    if f >= ind.fitness:
        return Individual(extended, f)
    return ind
