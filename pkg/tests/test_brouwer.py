"""Ordinal trees, the alternative cover presentation, and the labelled-tree sheaf."""
import pytest

from sheafbench.brouwer import (
    LEAF,
    AltBaireReport,
    BrouwerTree,
    LabelledTree,
    NotBelowRoot,
    alt_baire_equiv_check,
    bo_sheaf_checks,
    disjoint_covers,
    enumerate_labelled,
    enumerate_trees,
    glue_trees,
    graft,
    k_map,
    labelled_tree,
    restrict_tree,
    sup,
    sup_at,
    sup_star,
    tree_cover_test,
    tree_equiv,
)
from sheafbench.double import build_double
from sheafbench.maps import STAR, one_point_space
from sheafbench.points import eventually_constant_points
from sheafbench.site import Sieve
from sheafbench.spaces import DepthExceeded, baire_space, cantor_space


def _pair(space, branch=2):
    memo, rmemo = {}, {}

    def eq(v, w):
        return tree_equiv(space, branch, v, w, memo, rmemo)

    return eq


# ------------------------------------------------------------- ordinal trees


def test_k_map_of_the_leaf_is_the_empty_sequence():
    assert k_map(LEAF, 2) == frozenset({()})
    assert k_map(LEAF, 3) == frozenset({()})


def test_k_map_unfolds_one_level_to_the_children():
    assert k_map(sup((LEAF, LEAF)), 2) == frozenset({(0,), (1,)})
    assert k_map(sup((LEAF, LEAF, LEAF)), 3) == frozenset({(0,), (1,), (2,)})


def test_k_map_of_an_uneven_tree():
    tree = sup((sup((LEAF, LEAF)), LEAF))
    assert k_map(tree, 2) == frozenset({(0, 0), (0, 1), (1,)})


def test_k_map_rejects_wrong_arity_and_excess_depth():
    with pytest.raises(ValueError):
        k_map(sup((LEAF,)), 2)
    deep = sup((LEAF, sup((LEAF, LEAF))))
    with pytest.raises(DepthExceeded):
        k_map(deep, 2, depth=1)
    assert k_map(deep, 2, depth=2) == frozenset({(0,), (1, 0), (1, 1)})


def test_tree_enumeration_counts_and_shapes():
    counts = [len(enumerate_trees(2, d)) for d in range(4)]
    assert counts == [1, 2, 5, 26]
    trees = enumerate_trees(2, 2)
    assert len(set(trees)) == len(trees)
    assert all(t.depth <= 2 for t in trees)
    assert trees[0] is LEAF


def test_grafting_realises_unions_of_member_covers():
    base = sup((LEAF, sup((LEAF, LEAF))))
    grafts = {(0,): sup((LEAF, LEAF)), (1, 0): LEAF, (1, 1): sup((LEAF, LEAF))}
    composed = graft(base, grafts)
    expected = {(0, 0), (0, 1), (1, 0), (1, 1, 0), (1, 1, 1)}
    assert k_map(composed, 2) == frozenset(expected)


# ---------------------------------------------- alternative cover presentation


def test_child_family_sieve_is_covered_with_a_depth_one_tree():
    space = baire_space(2, 2)
    sieve = Sieve.from_generators(space.basis, (), ((0,), (1,)))
    assert space.topology.cover((), sieve).covered
    assert tree_cover_test(space, (), sieve) == sup((LEAF, LEAF))


def test_maximal_sieve_is_witnessed_by_the_leaf():
    space = baire_space(2, 2)
    assert tree_cover_test(space, (), Sieve.maximal(space.basis, ())) is LEAF


def test_one_sided_sieve_has_no_tree_witness():
    space = baire_space(2, 2)
    sieve = Sieve.from_generators(space.basis, (), ((0,),))
    assert not space.topology.cover((), sieve).covered
    assert tree_cover_test(space, (), sieve) is None


@pytest.mark.parametrize("branch,depth", [(2, 1), (2, 2), (3, 2), (2, 3)])
def test_tree_covers_agree_with_the_generated_topology(branch, depth):
    report = alt_baire_equiv_check(branch, depth)
    assert isinstance(report, AltBaireReport)
    assert report.cover_disagreements == ()
    assert report.union_failures == ()
    assert report.restriction_failures == ()
    assert report.ok
    assert report.checked_sieves > 0


# ------------------------------------------------------------ labelled trees


def test_labelled_tree_factory_rejects_bad_labels():
    space = cantor_space(1)
    with pytest.raises(ValueError, match="overlap"):
        labelled_tree(space, 2, (), ((), (0,)), (0, 0))
    with pytest.raises(ValueError, match="cover"):
        labelled_tree(space, 2, (), ((0,),), (0,))
    with pytest.raises(NotBelowRoot):
        labelled_tree(space, 2, (0,), ((1,),), (0,))
    with pytest.raises(ValueError, match="flagged edges"):
        labelled_tree(space, 2, (), ((),), (1,), {})
    with pytest.raises(ValueError, match="rooted"):
        labelled_tree(
            space, 2, (), ((),), (1,),
            {((), 0): sup_star(space, 2, (0,)), ((), 1): sup_star(space, 2, ())},
        )


def test_disjoint_covers_of_the_cantor_root():
    space = cantor_space(1)
    assert set(disjoint_covers(space, ())) == {((),), ((0,), (1,))}
    assert disjoint_covers(space, (0,)) == (((0,),),)


def test_restricting_a_leaf_tree_gives_the_leaf_tree():
    space = cantor_space(1)
    got = restrict_tree(space, 2, sup_star(space, 2, ()), (0,))
    assert got == sup_star(space, 2, (0,))


def test_restriction_to_the_root_is_the_identity_up_to_equivalence():
    space = cantor_space(1)
    eq = _pair(space)
    for tree in enumerate_labelled(space, 2, (), 2):
        assert eq(restrict_tree(space, 2, tree, ()), tree)


def test_restriction_descends_into_subtrees():
    space = cantor_space(2)
    inner = sup_at(
        space, 2, (), (sup_star(space, 2, ()), sup_star(space, 2, ()))
    )
    restricted = restrict_tree(space, 2, inner, (0,))
    assert restricted.root == (0,)
    assert restricted.child((0,), 0).root == (0,)
    expected = sup_at(
        space, 2, (0,), (sup_star(space, 2, (0,)), sup_star(space, 2, (0,)))
    )
    assert tree_equiv(space, 2, restricted, expected)


def test_restriction_of_a_two_level_tree_matches_a_hand_built_one():
    space = cantor_space(2)
    deep = sup_at(
        space, 2, (0,), (sup_star(space, 2, (0,)), sup_star(space, 2, (0,)))
    )
    tree = labelled_tree(
        space, 2, (), ((0,), (1,)), (1, 0),
        {((0,), 0): deep, ((0,), 1): sup_star(space, 2, (0,))},
    )
    restricted = restrict_tree(space, 2, tree, (0,))
    expected = labelled_tree(
        space, 2, (0,), ((0,),), (1,),
        {((0,), 0): deep, ((0,), 1): sup_star(space, 2, (0,))},
    )
    assert tree_equiv(space, 2, restricted, expected)
    with pytest.raises(NotBelowRoot):
        restrict_tree(space, 2, deep, (1,))


def test_equivalence_matches_partition_membership_exhaustively():
    space = cantor_space(1)
    eq = _pair(space)
    for root in space.basis.elements:
        trees = enumerate_labelled(space, 2, root, 2)
        reps = []
        owner = {}
        for tree in trees:
            for rep in reps:
                if eq(rep, tree):
                    owner[tree] = rep
                    break
            else:
                reps.append(tree)
                owner[tree] = tree
        for v in trees:
            for w in trees:
                assert eq(v, w) == (owner[v] is owner[w])


def test_refining_a_piece_preserves_equivalence_but_not_identity():
    space = cantor_space(1)
    coarse = sup_star(space, 2, ())
    fine = labelled_tree(space, 2, (), ((0,), (1,)), (0, 0))
    assert coarse != fine
    assert tree_equiv(space, 2, coarse, fine)


def test_flag_disagreement_breaks_equivalence():
    space = cantor_space(1)
    leaf = sup_star(space, 2, ())
    join = sup_at(space, 2, (), (leaf, leaf))
    assert not tree_equiv(space, 2, leaf, join)


def test_amalgamation_of_leaf_and_join_parts_is_unique():
    space = cantor_space(1)
    eq = _pair(space)
    left = sup_star(space, 2, (0,))
    right = sup_at(
        space, 2, (1,), (sup_star(space, 2, (1,)), sup_star(space, 2, (1,)))
    )
    glued = glue_trees(space, 2, (), {(0,): left, (1,): right})
    assert eq(restrict_tree(space, 2, glued, (0,)), left)
    assert eq(restrict_tree(space, 2, glued, (1,)), right)
    matches = [
        z
        for z in enumerate_labelled(space, 2, (), 2)
        if eq(restrict_tree(space, 2, z, (0,)), left)
        and eq(restrict_tree(space, 2, z, (1,)), right)
    ]
    assert matches
    assert all(eq(z, glued) for z in matches)


def test_glue_rejects_a_part_rooted_elsewhere():
    space = cantor_space(1)
    with pytest.raises(ValueError, match="rooted"):
        glue_trees(
            space, 2, (),
            {(0,): sup_star(space, 2, ()), (1,): sup_star(space, 2, (1,))},
        )


def test_join_arity_is_checked():
    space = cantor_space(1)
    with pytest.raises(ValueError, match="subtrees"):
        sup_at(space, 2, (), (sup_star(space, 2, ()),))


# ------------------------------------------------------------- law batteries


def test_one_point_space_trees_are_plain_ordinal_trees():
    space = one_point_space()
    report = bo_sheaf_checks(space, branch=2, depth=2)
    assert report.ok
    counts = dict(report.class_counts)
    assert counts[STAR] == len(enumerate_trees(2, 2)) == 5
    assert dict(report.tree_counts)[STAR] == 5


def test_labelled_tree_laws_hold_over_truncated_cantor():
    space = cantor_space(1)
    report = bo_sheaf_checks(space, branch=2, depth=2)
    assert report.ok
    assert report.subalgebra_ok
    assert dict(report.tree_counts)[()] == 107
    assert dict(report.tree_counts)[(0,)] == 5


def test_labelled_tree_laws_hold_over_the_double():
    inner = cantor_space(1)
    double = build_double(inner, eventually_constant_points(2, 1))
    report = bo_sheaf_checks(double, branch=2, depth=1)
    assert report.ok
    assert report.subalgebra_ok
