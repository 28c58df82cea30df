"""Typed logical expression trees for GP/SGP binary classifiers.

A tree is layered along every root-to-leaf path: boolean operators on top,
then exactly one comparison, then a chain of mathematical operators, then a
single term (feature reference or constant). Hard trees evaluate to {0,1}
with strict comparisons; soft trees carry a weight on every boolean and
comparison node and evaluate to [0,1] via weighted continuous operators
(OR -> w*max, AND -> w*min, NOT -> w*(1-x), GT -> w*[x>y], ...).

Trees are immutable; every "mutation" here returns a new tree that shares
unchanged subtrees with the original. Evaluation is pure and vectorized
over a whole row matrix at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np

FLOAT_MAX = float(np.finfo(np.float64).max)

# Absolute structural caps. Generation and ordinary variation respect the
# tighter GenBounds below; only root extension may grow boolean depth past
# bool_max, and never past these.
BOOL_DEPTH_CAP = 6
NODE_CAP = 200


class TreeError(ValueError):
    """Raised for malformed trees or invalid tree operations."""


class LocatorError(TreeError):
    """Raised when a weight locator does not resolve to a weight slot."""


class Variant(enum.Enum):
    HARD = "hard"
    SOFT = "soft"


class OpClass(enum.Enum):
    BOOLEAN = "boolean"
    COMPARISON = "comparison"
    MATHEMATICAL = "mathematical"
    TERM = "term"


class OpKind(enum.IntEnum):
    # IntEnum so dict lookups keyed by kind hash like plain ints; the
    # operator's spelled name is .name
    OR = 1
    AND = 2
    NOT = 3
    OR3 = 4
    AND3 = 5
    GT = 6
    LT = 7
    ADD = 8
    MUL = 9
    NEG = 10
    SIGM = 11
    LIN2 = 12
    LIN3 = 13
    SYMBOL = 14
    CONST = 15


ARITY = {
    OpKind.OR: 2, OpKind.AND: 2, OpKind.NOT: 1, OpKind.OR3: 3, OpKind.AND3: 3,
    OpKind.GT: 2, OpKind.LT: 2,
    OpKind.ADD: 2, OpKind.MUL: 2, OpKind.NEG: 1, OpKind.SIGM: 1,
    OpKind.LIN2: 2, OpKind.LIN3: 3,
    OpKind.SYMBOL: 0, OpKind.CONST: 0,
}

OP_CLASS = {
    OpKind.OR: OpClass.BOOLEAN, OpKind.AND: OpClass.BOOLEAN, OpKind.NOT: OpClass.BOOLEAN,
    OpKind.OR3: OpClass.BOOLEAN, OpKind.AND3: OpClass.BOOLEAN,
    OpKind.GT: OpClass.COMPARISON, OpKind.LT: OpClass.COMPARISON,
    OpKind.ADD: OpClass.MATHEMATICAL, OpKind.MUL: OpClass.MATHEMATICAL,
    OpKind.NEG: OpClass.MATHEMATICAL, OpKind.SIGM: OpClass.MATHEMATICAL,
    OpKind.LIN2: OpClass.MATHEMATICAL, OpKind.LIN3: OpClass.MATHEMATICAL,
    OpKind.SYMBOL: OpClass.TERM, OpKind.CONST: OpClass.TERM,
}

# Operators that only exist in the soft variant.
SOFT_ONLY = frozenset({OpKind.OR3, OpKind.AND3, OpKind.SIGM, OpKind.LIN2, OpKind.LIN3})

# OP_CLASS mirrored as a tuple indexed by the kind's int value; indexing
# skips enum hashing, which matters in the traversal-heavy operators.
_CLASS_BY_KIND: Tuple[Optional[OpClass], ...] = (None,) + tuple(
    OP_CLASS[k] for k in sorted(OpKind, key=int))

_HARD_BOOL_OPS = (OpKind.OR, OpKind.AND, OpKind.NOT)
_SOFT_BOOL_OPS = (OpKind.OR, OpKind.AND, OpKind.NOT, OpKind.OR3, OpKind.AND3)
_CMP_OPS = (OpKind.GT, OpKind.LT)
_HARD_MATH_OPS = (OpKind.ADD, OpKind.MUL, OpKind.NEG)
_SOFT_MATH_OPS = (OpKind.ADD, OpKind.MUL, OpKind.NEG, OpKind.SIGM, OpKind.LIN2, OpKind.LIN3)


@dataclass(frozen=True, slots=True)
class Node:
    """One tree node.

    weight is present on boolean/comparison nodes of soft trees (clamped to
    [0,1] at construction), coeffs on LIN2/LIN3 nodes, payload on terms
    (feature index for SYMBOL, float for CONST).
    """

    kind: OpKind
    children: Tuple["Node", ...] = ()
    weight: Optional[float] = None
    coeffs: Optional[Tuple[float, ...]] = None
    payload: Union[int, float, None] = None

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))
        if self.coeffs is not None and not isinstance(self.coeffs, tuple):
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.weight is not None:
            object.__setattr__(self, "weight", min(1.0, max(0.0, float(self.weight))))


@dataclass(frozen=True, slots=True)
class ExprTree:
    variant: Variant
    root: Node


@dataclass(frozen=True)
class GenBounds:
    """Per-path operator-type chain bounds used by the random generator."""

    bool_min: int = 1
    bool_max: int = 3
    cmp_exact: int = 1
    math_min: int = 1
    math_max: int = 4
    term_exact: int = 1

    def __post_init__(self):
        if not (1 <= self.bool_min <= self.bool_max):
            raise TreeError(f"bad boolean bounds [{self.bool_min}, {self.bool_max}]")
        if not (0 <= self.math_min <= self.math_max):
            raise TreeError(f"bad math bounds [{self.math_min}, {self.math_max}]")


DEFAULT_BOUNDS = GenBounds()

# Bounds accepted by validate(): math chains may be empty (a comparison
# straight over terms stays legal after crossover and in hand-written
# models) and boolean depth may reach the extension cap.
VALIDATION_BOUNDS = GenBounds(bool_min=1, bool_max=BOOL_DEPTH_CAP, math_min=0, math_max=4)


@dataclass(frozen=True)
class WeightLocator:
    """Addresses one adjustable real in a tree.

    path: child indices from the root. coeff None means the node's operator
    weight; otherwise the index into a LIN2/LIN3 coefficient list.
    """

    path: Tuple[int, ...]
    coeff: Optional[int] = None


@dataclass(frozen=True)
class Violation:
    path: Tuple[int, ...]
    message: str

    def __str__(self) -> str:
        loc = "/".join(map(str, self.path)) if self.path else "root"
        return f"at {loc}: {self.message}"


# ---------------------------------------------------------------------------
# Node constructors
# ---------------------------------------------------------------------------

def symbol(index: int) -> Node:
    return Node(OpKind.SYMBOL, payload=int(index))


def const(value: float) -> Node:
    return Node(OpKind.CONST, payload=float(value))


def op(kind: OpKind, *children: Node, weight: Optional[float] = None,
       coeffs: Optional[Sequence[float]] = None) -> Node:
    return Node(kind, tuple(children), weight=weight,
                coeffs=None if coeffs is None else tuple(float(c) for c in coeffs))


# ---------------------------------------------------------------------------
# Structure helpers
# ---------------------------------------------------------------------------

def iter_nodes(node: Node, path: Tuple[int, ...] = ()) -> Iterator[Tuple[Tuple[int, ...], Node]]:
    """Preorder traversal yielding (path-from-root, node)."""
    yield path, node
    for i, child in enumerate(node.children):
        yield from iter_nodes(child, path + (i,))


def node_count(node: Node) -> int:
    return 1 + sum(node_count(c) for c in node.children)


def subtree_at(root: Node, path: Sequence[int]) -> Node:
    node = root
    for i in path:
        try:
            node = node.children[i]
        except IndexError:
            raise LocatorError(f"path {tuple(path)} leaves the tree") from None
    return node


def replace_subtree(root: Node, path: Sequence[int], new: Node) -> Node:
    """Return a copy of root with the subtree at path replaced by new."""
    if not path:
        return new
    i = path[0]
    if i >= len(root.children):
        raise LocatorError(f"path {tuple(path)} leaves the tree")
    children = list(root.children)
    children[i] = replace_subtree(children[i], path[1:], new)
    return Node(root.kind, tuple(children), root.weight, root.coeffs, root.payload)


def max_bool_depth(node: Node) -> int:
    """Longest run of boolean nodes on any path starting at node."""
    if _CLASS_BY_KIND[node.kind] is not OpClass.BOOLEAN:
        return 0
    best = 0
    for c in node.children:
        d = max_bool_depth(c)
        if d > best:
            best = d
    return 1 + best


def max_math_chain(node: Node) -> int:
    """Longest run of mathematical nodes on any path below (or at) node."""
    cls = _CLASS_BY_KIND[node.kind]
    if cls is OpClass.TERM:
        return 0
    best = 0
    for c in node.children:
        d = max_math_chain(c)
        if d > best:
            best = d
    return best + 1 if cls is OpClass.MATHEMATICAL else best


def min_features(tree: ExprTree) -> int:
    """Smallest feature count the tree can be evaluated against."""
    best = -1
    for _, node in iter_nodes(tree.root):
        if node.kind is OpKind.SYMBOL:
            best = max(best, int(node.payload))
    return best + 1


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(tree: ExprTree, n_features: int, bounds: Optional[GenBounds] = None) -> list[Violation]:
    """Check every structural invariant; returns a list of violations.

    An empty list means the tree is well formed for its variant. With
    bounds=None the permissive validation bounds apply (boolean depth up to
    the extension cap, empty math chains allowed); pass explicit GenBounds
    to check the stricter generation-time chain limits.
    """
    b = bounds or VALIDATION_BOUNDS
    soft = tree.variant is Variant.SOFT
    out: list[Violation] = []

    def bad(path, msg):
        out.append(Violation(tuple(path), msg))

    def walk(node: Node, path, phase: str, booleans: int, maths: int):
        cls = OP_CLASS[node.kind]
        if not soft and node.kind in SOFT_ONLY:
            bad(path, f"soft-only operator {node.kind.name} in hard tree")
        if len(node.children) != ARITY[node.kind]:
            bad(path, f"{node.kind.name} expects {ARITY[node.kind]} children, has {len(node.children)}")
            return  # child phases are meaningless past an arity error
        # weight slots
        if cls in (OpClass.BOOLEAN, OpClass.COMPARISON):
            if soft and node.weight is None:
                bad(path, f"missing weight on soft {node.kind.name}")
            if not soft and node.weight is not None:
                bad(path, f"weight on hard {node.kind.name}")
        elif node.weight is not None:
            bad(path, f"weight on {node.kind.name}")
        if node.weight is not None and not (0.0 <= node.weight <= 1.0):
            bad(path, f"weight {node.weight} outside [0,1]")
        # coefficient slots
        if node.kind in (OpKind.LIN2, OpKind.LIN3):
            want = ARITY[node.kind]
            if node.coeffs is None or len(node.coeffs) != want:
                bad(path, f"{node.kind.name} needs {want} coefficients")
        elif node.coeffs is not None:
            bad(path, f"coefficients on {node.kind.name}")
        # terms
        if node.kind is OpKind.SYMBOL:
            i = node.payload
            if not isinstance(i, int) or not (0 <= i < n_features):
                bad(path, f"symbol index {i!r} outside [0, {n_features})")
        if node.kind is OpKind.CONST and not isinstance(node.payload, float):
            bad(path, f"constant payload {node.payload!r} is not a real")

        # layer-chain phases
        if phase == "bool":
            if cls is OpClass.BOOLEAN:
                if booleans + 1 > b.bool_max:
                    bad(path, f"boolean depth exceeds {b.bool_max}")
                for i, c in enumerate(node.children):
                    walk(c, path + (i,), "bool", booleans + 1, 0)
                return
            if cls is OpClass.COMPARISON:
                if booleans < b.bool_min:
                    bad(path, f"boolean depth {booleans} below {b.bool_min}")
                for i, c in enumerate(node.children):
                    walk(c, path + (i,), "math", booleans, 0)
                return
            bad(path, f"{node.kind.name} where a boolean or comparison operator is required")
        elif phase == "math":
            if cls is OpClass.MATHEMATICAL:
                if maths + 1 > b.math_max:
                    bad(path, f"math depth exceeds {b.math_max}")
                for i, c in enumerate(node.children):
                    walk(c, path + (i,), "math", booleans, maths + 1)
                return
            if cls is OpClass.TERM:
                if maths < b.math_min:
                    bad(path, f"math depth {maths} below {b.math_min}")
                return
            bad(path, f"{node.kind.name} below a comparison operator")

    if OP_CLASS[tree.root.kind] is not OpClass.BOOLEAN:
        bad((), "root is not a boolean operator")
    walk(tree.root, (), "bool", 0, 0)
    return out


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _sat(v):
    # Saturate math-layer overflow to the largest finite magnitude so that
    # evaluation stays total (MUL/ADD chains cannot smuggle inf/NaN upward).
    # Two ufunc calls; np.clip's dispatch overhead dominates at these sizes.
    if isinstance(v, np.ndarray):
        return np.minimum(np.maximum(v, -FLOAT_MAX), FLOAT_MAX)
    # scalar from a constants-only subtree
    v = float(v)
    if v > FLOAT_MAX:
        return FLOAT_MAX
    if v < -FLOAT_MAX:
        return -FLOAT_MAX
    return v


def eval_batch(tree: ExprTree, x: np.ndarray, memo: Optional[dict] = None,
               fill_memo: bool = False) -> np.ndarray:
    """Evaluate the tree on a (rows, n_features) matrix; returns (rows,).

    Hard trees yield values in {0,1}, soft trees in [0,1]. When memo is
    given, per-node activations are looked up by object identity, which
    makes re-evaluating a slightly edited copy of a tree cheap (unchanged
    subtrees are shared). Pass fill_memo=True on the evaluation whose nodes
    should populate the memo; the caller must keep every contributing tree
    alive for as long as the memo is reused, and must not mutate returned
    arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise TreeError(f"expected a 2-D row matrix, got shape {x.shape}")
    rows = x.shape[0]

    def ev(node: Node):
        if memo is not None:
            hit = memo.get(id(node))
            if hit is not None:
                return hit
        k = node.kind
        ch = node.children
        # leaves first: terms are about half of all nodes
        if k is OpKind.SYMBOL:
            r = x[:, node.payload]
        elif k is OpKind.CONST:
            r = node.payload
        elif k is OpKind.GT:
            r = np.greater(ev(ch[0]), ev(ch[1])).astype(np.float64)
        elif k is OpKind.LT:
            r = np.less(ev(ch[0]), ev(ch[1])).astype(np.float64)
        elif k is OpKind.ADD:
            r = _sat(ev(ch[0]) + ev(ch[1]))
        elif k is OpKind.MUL:
            r = _sat(ev(ch[0]) * ev(ch[1]))
        elif k is OpKind.NEG:
            r = -ev(ch[0])
        elif k is OpKind.SIGM:
            r = 1.0 / (1.0 + np.exp(-ev(ch[0])))
        elif k is OpKind.LIN2:
            a, b = node.coeffs
            r = _sat(_sat(a * ev(ch[0])) + _sat(b * ev(ch[1])))
        elif k is OpKind.LIN3:
            a, b, c = node.coeffs
            r = _sat(_sat(_sat(a * ev(ch[0])) + _sat(b * ev(ch[1]))) + _sat(c * ev(ch[2])))
        elif k is OpKind.OR:
            r = np.maximum(ev(ch[0]), ev(ch[1]))
        elif k is OpKind.AND:
            r = np.minimum(ev(ch[0]), ev(ch[1]))
        elif k is OpKind.NOT:
            r = 1.0 - ev(ch[0])
        elif k is OpKind.OR3:
            r = np.maximum(np.maximum(ev(ch[0]), ev(ch[1])), ev(ch[2]))
        elif k is OpKind.AND3:
            r = np.minimum(np.minimum(ev(ch[0]), ev(ch[1])), ev(ch[2]))
        else:  # pragma: no cover
            raise TreeError(f"unknown operator {k}")
        w = node.weight
        if w is not None and w != 1.0:
            r = w * r
        if fill_memo and memo is not None:
            memo[id(node)] = r
        return r

    with np.errstate(over="ignore"):
        out = ev(tree.root)
    out = np.asarray(out, dtype=np.float64)
    if out.ndim == 0:
        out = np.full(rows, float(out))
    return out


def eval_row(tree: ExprTree, row: Sequence[float]) -> float:
    """Evaluate the tree on a single feature vector."""
    r = np.asarray(row, dtype=np.float64)
    if r.ndim != 1:
        raise TreeError(f"expected a 1-D feature vector, got shape {r.shape}")
    return float(eval_batch(tree, r.reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------

class _Gen:
    """Shared machinery for random node generation.

    At each level the path's stop rule redraws the target depth uniformly
    over what is still reachable and stops on equality, which makes the
    per-path depth uniform over the allowed range.
    """

    __slots__ = ("bounds", "n_features", "lo", "hi", "rng", "soft",
                 "bool_ops", "math_ops")

    def __init__(self, variant: Variant, bounds: GenBounds, n_features: int,
                 const_range: Tuple[float, float], rng: np.random.Generator):
        if n_features < 1:
            raise TreeError("need at least one feature")
        lo, hi = const_range
        if lo > hi:
            raise TreeError(f"bad constant range ({lo}, {hi})")
        self.bounds = bounds
        self.n_features = n_features
        self.lo, self.hi = float(lo), float(hi)
        self.rng = rng
        self.soft = variant is Variant.SOFT
        self.bool_ops = _SOFT_BOOL_OPS if self.soft else _HARD_BOOL_OPS
        self.math_ops = _SOFT_MATH_OPS if self.soft else _HARD_MATH_OPS

    def weight(self):
        return float(self.rng.uniform(0.0, 1.0)) if self.soft else None

    def term(self) -> Node:
        if self.rng.integers(0, 2) == 0:
            return symbol(int(self.rng.integers(0, self.n_features)))
        return const(float(self.rng.uniform(self.lo, self.hi)))

    def math_child(self, level: int) -> Node:
        b = self.bounds
        target = int(self.rng.integers(max(level, b.math_min), b.math_max + 1))
        if target == level:
            return self.term()
        return self.math(level + 1)

    def math(self, level: int) -> Node:
        kind = self.math_ops[int(self.rng.integers(0, len(self.math_ops)))]
        coeffs = None
        if kind in (OpKind.LIN2, OpKind.LIN3):
            coeffs = tuple(float(self.rng.uniform(-1.0, 1.0)) for _ in range(ARITY[kind]))
        children = tuple(self.math_child(level) for _ in range(ARITY[kind]))
        return Node(kind, children, coeffs=coeffs)

    def cmp(self) -> Node:
        kind = _CMP_OPS[int(self.rng.integers(0, 2))]
        w = self.weight()
        children = tuple(self.math_child(0) for _ in range(2))
        return Node(kind, children, weight=w)

    def bool_child(self, level: int) -> Node:
        b = self.bounds
        target = int(self.rng.integers(max(level, b.bool_min), b.bool_max + 1))
        if target == level:
            return self.cmp()
        return self.bool(level + 1)

    def bool(self, level: int) -> Node:
        kind = self.bool_ops[int(self.rng.integers(0, len(self.bool_ops)))]
        w = self.weight()
        children = tuple(self.bool_child(level) for _ in range(ARITY[kind]))
        return Node(kind, children, weight=w)


def random_tree(variant: Variant, bounds: GenBounds, n_features: int,
                const_range: Tuple[float, float], rng: np.random.Generator) -> ExprTree:
    """Generate a random valid tree.

    Along every root-to-leaf path the boolean depth is uniform on
    [bool_min, bool_max] and the math depth uniform on [max(math_min,1),
    math_max] (the comparison layer is always exactly one level). Weights
    are uniform on [0,1], linear coefficients on [-1,1], constants on
    const_range, symbols uniform over the features.
    """
    return ExprTree(variant, _Gen(variant, bounds, n_features, const_range, rng).bool(1))


def random_subtree(cls: OpClass, variant: Variant, bounds: GenBounds, n_features: int,
                   const_range: Tuple[float, float], rng: np.random.Generator,
                   depth_budget: int) -> Node:
    """Generate a random subtree whose root has the given operator class.

    depth_budget caps how many levels of cls-typed operators the subtree may
    stack (relevant for boolean and mathematical subtrees planted mid-tree).
    """
    if cls is OpClass.TERM:
        return _Gen(variant, bounds, n_features, const_range, rng).term()
    if cls is OpClass.COMPARISON:
        return _Gen(variant, bounds, n_features, const_range, rng).cmp()
    bool_max = bounds.bool_max
    math_max = bounds.math_max
    if cls is OpClass.BOOLEAN:
        bool_max = max(1, min(bool_max, depth_budget))
    else:
        math_max = max(1, min(math_max, depth_budget))
    inner = GenBounds(bool_min=1, bool_max=bool_max,
                      math_min=min(max(bounds.math_min, 1), math_max), math_max=math_max)
    gen = _Gen(variant, inner, n_features, const_range, rng)
    return gen.bool(1) if cls is OpClass.BOOLEAN else gen.math(1)


# ---------------------------------------------------------------------------
# Weight access
# ---------------------------------------------------------------------------

def collect_weights(tree: ExprTree) -> list[Tuple[WeightLocator, float]]:
    """All operator weights and linear coefficients, in preorder."""
    out: list[Tuple[WeightLocator, float]] = []
    for path, node in iter_nodes(tree.root):
        if node.weight is not None:
            out.append((WeightLocator(path), node.weight))
        if node.coeffs is not None:
            for i, c in enumerate(node.coeffs):
                out.append((WeightLocator(path, i), c))
    return out


def set_weight(tree: ExprTree, loc: WeightLocator, value: float) -> ExprTree:
    """Return a copy of tree with one weight slot updated.

    Operator weights are clamped to [0,1]; linear coefficients are stored
    as given. The input tree is never modified.
    """
    node = subtree_at(tree.root, loc.path)
    if loc.coeff is None:
        if node.weight is None:
            raise LocatorError(f"node {node.kind.name} at {loc.path} has no operator weight")
        # Node clamps the weight on construction
        new = Node(node.kind, node.children, float(value), node.coeffs, node.payload)
    else:
        if node.coeffs is None or not (0 <= loc.coeff < len(node.coeffs)):
            raise LocatorError(f"node {node.kind.name} at {loc.path} has no coefficient {loc.coeff}")
        coeffs = list(node.coeffs)
        coeffs[loc.coeff] = float(value)
        new = Node(node.kind, node.children, node.weight, tuple(coeffs), node.payload)
    return ExprTree(tree.variant, replace_subtree(tree.root, loc.path, new))
