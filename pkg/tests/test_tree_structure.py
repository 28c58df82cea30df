import numpy as np
import pytest

from softgp.sexpr import format_tree
from softgp.tree import (
    BOOL_DEPTH_CAP,
    DEFAULT_BOUNDS,
    VALIDATION_BOUNDS,
    ExprTree,
    GenBounds,
    LocatorError,
    Node,
    OpClass,
    OpKind,
    TreeError,
    Variant,
    WeightLocator,
    collect_weights,
    const,
    iter_nodes,
    max_bool_depth,
    max_math_chain,
    min_features,
    node_count,
    op,
    random_subtree,
    random_tree,
    replace_subtree,
    set_weight,
    subtree_at,
    symbol,
    validate,
)

BOOL_KINDS = {OpKind.OR, OpKind.AND, OpKind.NOT, OpKind.OR3, OpKind.AND3}
CMP_KINDS = {OpKind.GT, OpKind.LT}
MATH_KINDS = {OpKind.ADD, OpKind.MUL, OpKind.NEG, OpKind.SIGM, OpKind.LIN2, OpKind.LIN3}
TERM_KINDS = {OpKind.SYMBOL, OpKind.CONST}


def path_chains(tree):
    """Independent reference for the layer rule: the class sequence of every
    root-to-leaf path, collapsed to (boolean run, comparison run, math run,
    term run). Returns None for a path that does not fit that shape at all."""
    chains = []

    def walk(node, classes):
        if node.kind in BOOL_KINDS:
            classes = classes + "b"
        elif node.kind in CMP_KINDS:
            classes = classes + "c"
        elif node.kind in MATH_KINDS:
            classes = classes + "m"
        else:
            classes = classes + "t"
        if not node.children:
            b = len(classes) - len(classes.lstrip("b"))
            rest = classes[b:]
            c = len(rest) - len(rest.lstrip("c"))
            rest = rest[c:]
            m = len(rest) - len(rest.lstrip("m"))
            rest = rest[m:]
            chains.append((b, c, m) if rest == "t" else None)
        for child in node.children:
            walk(child, classes)

    walk(tree.root, "")
    return chains


def chain_ok(tree, bounds):
    for chain in path_chains(tree):
        if chain is None:
            return False
        b, c, m = chain
        if not (bounds.bool_min <= b <= bounds.bool_max and c == 1
                and bounds.math_min <= m <= bounds.math_max):
            return False
    return True


def test_generated_trees_satisfy_the_chain_oracle():
    rng = np.random.default_rng(11)
    for variant in (Variant.HARD, Variant.SOFT):
        for _ in range(500):
            t = random_tree(variant, DEFAULT_BOUNDS, 3, (-1.0, 1.0), rng)
            assert chain_ok(t, DEFAULT_BOUNDS)
            assert validate(t, 3) == []
            assert validate(t, 3, DEFAULT_BOUNDS) == []


def test_validate_agrees_with_oracle_on_malformed_trees():
    cases = [
        # boolean below a comparison
        op(OpKind.GT, op(OpKind.OR, const(1.0), const(1.0)), const(0.0)),
        # comparison below a comparison
        op(OpKind.GT, op(OpKind.LT, const(1.0), const(0.0)), const(0.0)),
        # term directly under a boolean
        op(OpKind.AND, symbol(0), op(OpKind.GT, symbol(0), const(0.0))),
        # math at the root
        op(OpKind.ADD, const(1.0), const(2.0)),
    ]
    for root in cases:
        t = ExprTree(Variant.HARD, root)
        assert not chain_ok(t, VALIDATION_BOUNDS)
        assert validate(t, 2) != []


def test_exact_depths_when_bounds_are_degenerate():
    rng = np.random.default_rng(12)
    bounds = GenBounds(bool_min=2, bool_max=2, math_min=3, math_max=3)
    for _ in range(60):
        t = random_tree(Variant.SOFT, bounds, 2, (-1.0, 1.0), rng)
        assert all(chain == (2, 1, 3) for chain in path_chains(t))


def test_leftmost_path_depths_are_uniform():
    rng = np.random.default_rng(13)
    bool_runs = {1: 0, 2: 0, 3: 0}
    math_runs = {1: 0, 2: 0, 3: 0, 4: 0}
    n = 6000
    for _ in range(n):
        node = random_tree(Variant.SOFT, DEFAULT_BOUNDS, 2, (-1.0, 1.0), rng).root
        b = 0
        while node.kind in BOOL_KINDS:
            b += 1
            node = node.children[0]
        node = node.children[0]  # past the comparison
        m = 0
        while node.kind in MATH_KINDS:
            m += 1
            node = node.children[0]
        bool_runs[b] += 1
        math_runs[m] += 1
    for depth, count in bool_runs.items():
        assert count / n == pytest.approx(1 / 3, abs=0.03), f"bool depth {depth}"
    for depth, count in math_runs.items():
        assert count / n == pytest.approx(1 / 4, abs=0.03), f"math depth {depth}"


def test_generation_is_deterministic_under_seed():
    a = random_tree(Variant.SOFT, DEFAULT_BOUNDS, 4, (-2.0, 2.0), np.random.default_rng(99))
    b = random_tree(Variant.SOFT, DEFAULT_BOUNDS, 4, (-2.0, 2.0), np.random.default_rng(99))
    assert format_tree(a) == format_tree(b)


def test_generation_argument_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(TreeError, match="feature"):
        random_tree(Variant.HARD, DEFAULT_BOUNDS, 0, (-1.0, 1.0), rng)
    with pytest.raises(TreeError, match="constant range"):
        random_tree(Variant.HARD, DEFAULT_BOUNDS, 2, (1.0, -1.0), rng)


def test_random_subtree_root_class_and_budget():
    rng = np.random.default_rng(14)
    for _ in range(200):
        b = random_subtree(OpClass.BOOLEAN, Variant.SOFT, DEFAULT_BOUNDS, 2,
                           (-1.0, 1.0), rng, depth_budget=2)
        assert b.kind in BOOL_KINDS and max_bool_depth(b) <= 2
        m = random_subtree(OpClass.MATHEMATICAL, Variant.SOFT, DEFAULT_BOUNDS, 2,
                           (-1.0, 1.0), rng, depth_budget=3)
        assert m.kind in MATH_KINDS and max_math_chain(m) <= 3
        c = random_subtree(OpClass.COMPARISON, Variant.HARD, DEFAULT_BOUNDS, 2,
                           (-1.0, 1.0), rng, depth_budget=1)
        assert c.kind in CMP_KINDS
        t = random_subtree(OpClass.TERM, Variant.HARD, DEFAULT_BOUNDS, 2,
                           (-1.0, 1.0), rng, depth_budget=1)
        assert t.kind in TERM_KINDS


def test_term_kinds_are_balanced():
    rng = np.random.default_rng(15)
    n = 4000
    kinds = [random_subtree(OpClass.TERM, Variant.HARD, DEFAULT_BOUNDS, 2,
                            (-1.0, 1.0), rng, depth_budget=1).kind
             for _ in range(n)]
    frac = sum(1 for k in kinds if k is OpKind.SYMBOL) / n
    assert frac == pytest.approx(0.5, abs=0.03)


# --- structure helpers --------------------------------------------------------

def sample_tree():
    # OR(GT(ADD(x0, 2.0), x1), NOT(LT(x1, LIN2(0.5, -0.5; x0, 1.0))))
    return ExprTree(Variant.SOFT, op(
        OpKind.OR,
        op(OpKind.GT, op(OpKind.ADD, symbol(0), const(2.0)), symbol(1), weight=0.7),
        op(OpKind.NOT,
           op(OpKind.LT, symbol(1),
              op(OpKind.LIN2, symbol(0), const(1.0), coeffs=(0.5, -0.5)),
              weight=0.2),
           weight=0.9),
        weight=0.4))


def test_iter_nodes_is_preorder_with_paths():
    t = sample_tree()
    walked = list(iter_nodes(t.root))
    assert walked[0] == ((), t.root)
    paths = [p for p, _ in walked]
    assert paths == [(), (0,), (0, 0), (0, 0, 0), (0, 0, 1), (0, 1),
                     (1,), (1, 0), (1, 0, 0), (1, 0, 1), (1, 0, 1, 0), (1, 0, 1, 1)]
    for path, node in walked:
        assert subtree_at(t.root, path) is node


def test_node_count_and_depth_helpers():
    t = sample_tree()
    assert node_count(t.root) == 12
    assert max_bool_depth(t.root) == 2
    assert max_math_chain(t.root) == 1
    assert min_features(t) == 2


def test_min_features_without_symbols():
    t = ExprTree(Variant.HARD, op(OpKind.NOT, op(OpKind.GT, const(1.0), const(0.0))))
    assert min_features(t) == 0


def test_subtree_at_and_replace_errors():
    t = sample_tree()
    with pytest.raises(LocatorError, match="leaves the tree"):
        subtree_at(t.root, (0, 5))
    with pytest.raises(LocatorError, match="leaves the tree"):
        replace_subtree(t.root, (2,), const(1.0))


def test_replace_subtree_shares_untouched_parts():
    t = sample_tree()
    new = op(OpKind.GT, symbol(1), const(0.0), weight=1.0)
    root2 = replace_subtree(t.root, (0,), new)
    assert subtree_at(root2, (0,)) is new
    assert root2.children[1] is t.root.children[1]  # untouched branch shared
    assert t.root.children[0].kind is OpKind.GT  # original unchanged
    assert replace_subtree(t.root, (), new) is new


def test_node_constructor_clamps_operator_weights():
    assert op(OpKind.OR, const(0.0), const(0.0), weight=1.7).weight == 1.0
    assert op(OpKind.OR, const(0.0), const(0.0), weight=-0.3).weight == 0.0
    assert op(OpKind.OR, const(0.0), const(0.0), weight=0.25).weight == 0.25


# --- weight slots ---------------------------------------------------------------

def test_collect_weights_preorder_order_and_values():
    t = sample_tree()
    slots = collect_weights(t)
    assert [(loc.path, loc.coeff, w) for loc, w in slots] == [
        ((), None, 0.4),
        ((0,), None, 0.7),
        ((1,), None, 0.9),
        ((1, 0), None, 0.2),
        ((1, 0, 1), 0, 0.5),
        ((1, 0, 1), 1, -0.5),
    ]


def test_hard_trees_have_no_weight_slots():
    rng = np.random.default_rng(16)
    for _ in range(50):
        t = random_tree(Variant.HARD, DEFAULT_BOUNDS, 2, (-1.0, 1.0), rng)
        assert collect_weights(t) == []


def test_set_weight_updates_and_clamps_operator_weights():
    t = sample_tree()
    t2 = set_weight(t, WeightLocator((0,)), 1.7)
    assert subtree_at(t2.root, (0,)).weight == 1.0  # clamped into [0,1]
    t3 = set_weight(t, WeightLocator((0,)), 0.55)
    assert subtree_at(t3.root, (0,)).weight == 0.55
    assert subtree_at(t.root, (0,)).weight == 0.7  # original untouched


def test_set_weight_leaves_coefficients_unclamped():
    t = sample_tree()
    t2 = set_weight(t, WeightLocator((1, 0, 1), 1), 2.5)
    assert subtree_at(t2.root, (1, 0, 1)).coeffs == (0.5, 2.5)


def test_set_weight_locator_errors():
    t = sample_tree()
    with pytest.raises(LocatorError, match="no operator weight"):
        set_weight(t, WeightLocator((0, 0)), 0.5)  # ADD has no weight
    with pytest.raises(LocatorError, match="no coefficient"):
        set_weight(t, WeightLocator((0,), 0), 0.5)  # GT has no coeffs
    with pytest.raises(LocatorError, match="no coefficient"):
        set_weight(t, WeightLocator((1, 0, 1), 2), 0.5)  # LIN2 has 2
    with pytest.raises(LocatorError, match="leaves the tree"):
        set_weight(t, WeightLocator((3, 3)), 0.5)


def test_set_weight_round_trips_through_collect():
    rng = np.random.default_rng(17)
    for _ in range(50):
        t = random_tree(Variant.SOFT, DEFAULT_BOUNDS, 3, (-1.0, 1.0), rng)
        slots = collect_weights(t)
        loc, w = slots[int(rng.integers(0, len(slots)))]
        t2 = set_weight(t, loc, 0.123456)
        updated = dict(collect_weights(t2))
        assert updated[loc] == 0.123456
        before = dict(slots)
        for other in before:
            if other != loc:
                assert updated[other] == before[other]


# --- validation of malformed trees ----------------------------------------------

def v_messages(tree, n_features=2, bounds=None):
    return [v.message for v in validate(tree, n_features, bounds)]


def test_validate_flags_soft_only_operators_in_hard_trees():
    t = ExprTree(Variant.HARD, op(OpKind.OR3,
                                  op(OpKind.GT, symbol(0), const(0.0)),
                                  op(OpKind.GT, symbol(0), const(0.0)),
                                  op(OpKind.GT, symbol(0), const(0.0))))
    assert any("soft-only" in m for m in v_messages(t))


def test_validate_flags_arity_errors():
    t = ExprTree(Variant.HARD, Node(OpKind.AND, (op(OpKind.GT, symbol(0), const(0.0)),)))
    assert any("expects 2 children" in m for m in v_messages(t))


def test_validate_flags_weight_presence_by_variant():
    gt = op(OpKind.GT, symbol(0), const(0.0))
    t = ExprTree(Variant.SOFT, op(OpKind.NOT, Node(OpKind.GT, gt.children, None)))
    msgs = v_messages(t)
    assert any("missing weight" in m for m in msgs)
    t = ExprTree(Variant.HARD, op(OpKind.NOT, op(OpKind.GT, symbol(0), const(0.0),
                                                 weight=0.5)))
    assert any("weight on hard" in m for m in v_messages(t))


def test_validate_flags_weight_on_math_node():
    t = ExprTree(Variant.SOFT, op(OpKind.NOT,
                                  op(OpKind.GT,
                                     Node(OpKind.ADD, (symbol(0), const(1.0)), 0.5),
                                     const(0.0), weight=1.0),
                                  weight=1.0))
    assert any("weight on ADD" in m for m in v_messages(t))


def test_validate_flags_coefficient_problems():
    t = ExprTree(Variant.SOFT, op(OpKind.NOT,
                                  op(OpKind.GT,
                                     Node(OpKind.LIN2, (symbol(0), const(1.0))),
                                     const(0.0), weight=1.0),
                                  weight=1.0))
    assert any("needs 2 coefficients" in m for m in v_messages(t))
    t = ExprTree(Variant.SOFT, op(OpKind.NOT,
                                  op(OpKind.GT,
                                     Node(OpKind.ADD, (symbol(0), const(1.0)),
                                          None, (1.0, 2.0)),
                                     const(0.0), weight=1.0),
                                  weight=1.0))
    assert any("coefficients on ADD" in m for m in v_messages(t))


def test_validate_flags_symbol_index_out_of_range():
    t = ExprTree(Variant.HARD, op(OpKind.NOT, op(OpKind.GT, symbol(7), const(0.0))))
    msgs = v_messages(t, n_features=3)
    assert any("symbol index 7" in m for m in msgs)


def test_validate_reports_paths():
    t = ExprTree(Variant.HARD, op(OpKind.AND,
                                  op(OpKind.GT, symbol(0), const(0.0)),
                                  op(OpKind.GT, symbol(9), const(0.0))))
    bad = validate(t, 2)
    assert len(bad) == 1 and bad[0].path == (1, 0)
    assert "1/0" in str(bad[0])


def test_validate_depth_limits():
    # boolean chain of 7 NOTs over one comparison: too deep even for the cap
    node = op(OpKind.GT, symbol(0), const(0.0))
    for _ in range(BOOL_DEPTH_CAP + 1):
        node = op(OpKind.NOT, node)
    t = ExprTree(Variant.HARD, node)
    assert any("boolean depth exceeds" in m for m in v_messages(t))
    # depth 4 is fine by default (extension headroom) but not for generation bounds
    node = op(OpKind.GT, symbol(0), const(0.0))
    for _ in range(4):
        node = op(OpKind.NOT, node)
    t = ExprTree(Variant.HARD, node)
    assert v_messages(t) == []
    assert any("boolean depth exceeds 3" in m for m in v_messages(t, bounds=DEFAULT_BOUNDS))


def test_validate_math_chain_limits():
    node = symbol(0)
    for _ in range(5):
        node = op(OpKind.NEG, node)
    t = ExprTree(Variant.HARD, op(OpKind.NOT, op(OpKind.GT, node, const(0.0))))
    assert any("math depth exceeds 4" in m for m in v_messages(t))
    # an empty math chain is legal by default but not under generation bounds
    t = ExprTree(Variant.HARD, op(OpKind.NOT, op(OpKind.GT, symbol(0), const(0.0))))
    assert v_messages(t) == []
    assert any("math depth 0 below 1" in m for m in v_messages(t, bounds=DEFAULT_BOUNDS))


def test_validate_rejects_non_boolean_root():
    t = ExprTree(Variant.HARD, op(OpKind.GT, symbol(0), const(0.0)))
    assert any("root is not a boolean" in m for m in v_messages(t))


def test_genbounds_validation():
    with pytest.raises(TreeError):
        GenBounds(bool_min=0)
    with pytest.raises(TreeError):
        GenBounds(bool_min=3, bool_max=2)
    with pytest.raises(TreeError):
        GenBounds(math_min=3, math_max=2)
