from itertools import chain, combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajtax.errors import ConfigurationError
from trajtax.features import FEATURE_COLUMNS, FeatureMatrix
from trajtax.taxonomy import Taxonomy, TaxonomyLeaf, columns_for, default_taxonomy, enumerate_combinations


def leaves(n):
    return [TaxonomyLeaf(f"leaf{i}", "root", f"p{i}_", f"L{i}") for i in range(n)]


def powerset_oracle(names):
    return {frozenset(c) for c in chain.from_iterable(combinations(names, k) for k in range(1, len(names) + 1))}


def matrix(columns, tax=None):
    tax = tax or default_taxonomy()
    n = 2
    return FeatureMatrix(("a", "b"), ("x", "y"), tuple(columns), np.zeros((n, len(columns))), tax.tag(columns))


@pytest.mark.parametrize("n", range(1, 7))
def test_enumeration_matches_powerset(n):
    combos = enumerate_combinations(leaves(n))
    sets = [frozenset(c.names) for c in combos]
    assert len(combos) == 2**n - 1
    assert len(set(sets)) == len(sets)
    assert set(sets) == powerset_oracle([leaf.name for leaf in leaves(n)])
    sizes = [len(c) for c in combos]
    assert sizes == sorted(sizes)


def test_default_fifteen_labels():
    labels = [c.label for c in default_taxonomy().enumerate_combinations()]
    assert labels == [
        "Ac", "C", "I", "S",
        "C+Ac", "I+Ac", "S+Ac", "C+I", "C+S", "I+S",
        "C+I+Ac", "C+S+Ac", "I+S+Ac", "C+I+S",
        "C+I+S+Ac",
    ]


def test_empty_leaf_set_rejected():
    with pytest.raises(ConfigurationError):
        enumerate_combinations([])


def test_parents():
    assert default_taxonomy().parents == {"geometric": ("curvature", "indentation"),
                                          "kinematic": ("speed", "acceleration")}


def test_columns_for_counts_and_partition():
    tax = default_taxonomy()
    fm = matrix(FEATURE_COLUMNS)
    assert len(columns_for(tax.combination(["curvature"]), fm)) == 15
    assert len(columns_for(tax.combination(["speed", "acceleration"]), fm)) == 38
    assert columns_for(tax.combination([l.name for l in tax.leaves]), fm) == list(range(72))
    singles = [columns_for(tax.combination([l.name]), fm) for l in tax.leaves]
    assert sum(map(len, singles)) == 72
    assert sorted(chain(*singles)) == list(range(72))


def test_columns_for_keeps_matrix_order():
    tax = default_taxonomy()
    fm = matrix(["spd_mean", "dg_1_1", "acc_max", "spd_min"])
    assert columns_for(tax.combination(["speed"]), fm) == [0, 3]


def test_untagged_column_is_configuration_error():
    fm = matrix(["dg_1_1", "heading_entropy"])
    with pytest.raises(ConfigurationError):
        columns_for(default_taxonomy().combination(["curvature"]), fm)


def test_label_round_trip_and_dict_round_trip():
    tax = default_taxonomy()
    for combo in tax.enumerate_combinations():
        assert tax.combination_from_label(combo.label) == combo
    assert Taxonomy.from_dict(tax.to_dict()) == tax
    with pytest.raises(ConfigurationError):
        tax.combination_from_label("C+Q")


def test_duplicate_leaf_rejected():
    with pytest.raises(ConfigurationError):
        Taxonomy((TaxonomyLeaf("a", "r", "a_", "A"), TaxonomyLeaf("a", "r", "b_", "B")))


def test_single_leaf_taxonomy():
    tax = Taxonomy((TaxonomyLeaf("all", "root", "", "All"),))
    assert [c.label for c in tax.enumerate_combinations()] == ["All"]
    assert set(tax.tag(FEATURE_COLUMNS)) == {"all"}


def test_longest_prefix_wins():
    tax = Taxonomy((TaxonomyLeaf("speed", "k", "spd_", "S"), TaxonomyLeaf("speedmax", "k", "spd_max", "M")))
    assert tax.tag(["spd_mean", "spd_max"]) == ("speed", "speedmax")


@given(st.integers(1, 6), st.data())
def test_combination_columns_are_exact_union(n, data):
    tax = Taxonomy(tuple(leaves(n)))
    cols = [f"p{i}_{k}" for i in range(n) for k in range(3)]
    fm = matrix(cols, tax)
    combo = data.draw(st.sampled_from(tax.enumerate_combinations()))
    got = columns_for(combo, fm)
    expected = [j for j, c in enumerate(cols) if any(c.startswith(l.prefix) for l in combo.leaves)]
    assert got == expected and len(set(got)) == len(got)
