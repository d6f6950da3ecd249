import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from muss.core import (
    Dataset,
    Item,
    SelectionParams,
    SelectionResult,
    distance,
    diversity_sum,
    evaluate_selection,
    marginal_gain,
    mean_scaled,
    objective,
    quality_sum,
)
from muss.errors import DimensionMismatchError, InvalidSelectionError, MussError
from tests.helpers import make_dataset, random_dataset


def item(i, emb, q=1.0):
    return Item(id=i, embedding=emb, quality=q)


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ([0, 0], [3, 4], 5.0),
        ([1.5, -2.0], [1.5, -2.0], 0.0),
        ([1], [-1], 2.0),
    ],
)
def test_distance(a, b, expected):
    assert distance(item(0, a), item(1, b)) == pytest.approx(expected)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        distance(item(0, [0, 0]), item(1, [0, 0, 0]))


def test_distance_metric_axioms():
    ds = random_dataset(12, dim=4, seed=1)
    items = ds.items()
    for a, b, c in itertools.permutations(items[:6], 3):
        assert distance(a, b) == pytest.approx(distance(b, a))
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9
    assert distance(items[0], items[0]) == 0.0


def test_item_rejects_negative_quality():
    with pytest.raises(ValidationError):
        Item(id=0, embedding=[0.0], quality=-0.1)


def test_dataset_validation():
    with pytest.raises(MussError):
        Dataset(np.zeros((3, 2)), [0.1, 0.2])
    with pytest.raises(MussError):
        Dataset(np.zeros((2, 2)), [0.1, -0.2])
    with pytest.raises(MussError):
        Dataset(np.array([[0.0, np.nan]]), [0.1])


def test_dataset_is_read_only():
    ds = random_dataset(5)
    with pytest.raises(ValueError):
        ds.embeddings[0, 0] = 1.0


def test_from_items_requires_dense_ids():
    good = [item(0, [0, 0]), item(1, [1, 1])]
    assert Dataset.from_items(good).n == 2
    with pytest.raises(MussError):
        Dataset.from_items([item(1, [0, 0])])
    with pytest.raises(DimensionMismatchError):
        Dataset.from_items([item(0, [0, 0]), item(1, [1])])


def test_quality_sum():
    ds = make_dataset([[0.0], [1.0], [2.0]], [0.2, 0.5, 0.9])
    assert quality_sum(ds, []) == 0.0
    assert quality_sum(ds, [0, 1]) == pytest.approx(0.7)


def test_quality_sum_matches_loop():
    ds = random_dataset(30, seed=4)
    selection = [3, 17, 5, 22, 9]
    total = 0.0
    for i in selection:
        total += ds.item(i).quality
    assert quality_sum(ds, selection) == pytest.approx(total, rel=1e-12)


def test_invalid_ids_rejected():
    ds = random_dataset(4)
    with pytest.raises(InvalidSelectionError):
        quality_sum(ds, [4])
    with pytest.raises(InvalidSelectionError):
        diversity_sum(ds, [1, 1])


def test_diversity_counts_ordered_pairs():
    ds = make_dataset([[0, 0], [3, 4]], [0.0, 0.0])
    assert diversity_sum(ds, [0]) == 0.0
    assert diversity_sum(ds, [0, 1]) == pytest.approx(10.0)


def test_diversity_matches_double_loop():
    ds = random_dataset(25, dim=5, seed=2)
    selection = [1, 8, 13, 21]
    items = [ds.item(i) for i in selection]
    naive = sum(distance(a, b) for a in items for b in items if a.id != b.id)
    assert diversity_sum(ds, selection) == pytest.approx(naive, rel=1e-9)


def test_objective_decomposition():
    ds = make_dataset([[0, 0], [3, 4]], [0.2, 0.5])
    f, q, d = objective(ds, [0, 1], 0.5)
    assert (q, d) == (pytest.approx(0.7), pytest.approx(10.0))
    assert f == pytest.approx(5.35)
    assert objective(ds, [0, 1], 1.0)[0] == pytest.approx(q)
    assert objective(ds, [0, 1], 0.0)[0] == pytest.approx(d)


def test_objective_rejects_bad_lambda():
    ds = random_dataset(3)
    with pytest.raises(MussError):
        objective(ds, [0], 1.5)


def test_objective_permutation_invariant():
    ds = random_dataset(10, seed=3)
    base = objective(ds, [0, 4, 7], 0.3)[0]
    for perm in itertools.permutations([0, 4, 7]):
        assert objective(ds, list(perm), 0.3)[0] == pytest.approx(base, rel=1e-12)


def test_quality_is_modular():
    ds = random_dataset(10, seed=5)
    selection = [1, 2, 3]
    for z in [0, 6, 9]:
        gain = quality_sum(ds, selection + [z]) - quality_sum(ds, selection)
        assert gain == pytest.approx(ds.qualities[z])


@pytest.mark.parametrize("factor", [0.5, 2.0, 7.0])
def test_diversity_scales_linearly(factor):
    ds = random_dataset(10, seed=6)
    selection = [0, 3, 5, 9]
    scaled = ds.scaled(factor)
    assert diversity_sum(scaled, selection) == pytest.approx(factor * diversity_sum(ds, selection))


def test_marginal_gain_examples():
    # t=0 at distance 2 and 4 from items 1 and 2
    ds = make_dataset([[0.0], [2.0], [-4.0]], [1.0, 0.3, 0.6])
    assert marginal_gain(ds, [], 0, 0.4, normalize=True) == pytest.approx(0.4)
    assert marginal_gain(ds, [1], 0, 0.0, normalize=False) == pytest.approx(2.0)
    assert marginal_gain(ds, [1], 0, 0.0, normalize=True) == pytest.approx(2.0)
    assert marginal_gain(ds, [1, 2], 0, 0.5, normalize=True) == pytest.approx(2.0)
    assert marginal_gain(ds, [1, 2], 0, 0.5, normalize=False) == pytest.approx(3.5)


def test_marginal_gain_rejects_selected_item():
    ds = random_dataset(3)
    with pytest.raises(InvalidSelectionError):
        marginal_gain(ds, [0, 1], 1, 0.5, normalize=False)


def test_mean_scaled_convention():
    scaled, q_mean, d_mean = mean_scaled(quality=3.0, diversity=12.0, size=3, lambda_=0.5)
    assert q_mean == pytest.approx(1.0)
    assert d_mean == pytest.approx(2.0)
    assert scaled == pytest.approx(1.5)
    assert mean_scaled(0.4, 0.0, 1, 0.5) == (pytest.approx(0.2), pytest.approx(0.4), 0.0)


def test_evaluate_selection_is_consistent():
    ds = random_dataset(8, seed=9)
    result = evaluate_selection(ds, [2, 5, 7], 0.3, method="manual")
    assert result.objective == pytest.approx(
        0.3 * result.quality_term + 0.7 * result.diversity_term, rel=1e-12
    )
    assert result.method == "manual"


def test_selection_result_rejects_inconsistent_objective():
    with pytest.raises(ValidationError):
        SelectionResult(
            selected=[0, 1],
            lambda_=0.5,
            objective=10.0,
            quality_term=1.0,
            diversity_term=1.0,
            objective_mean_scaled=0.0,
            quality_mean=0.0,
            diversity_mean=0.0,
        )


def test_selection_params_bounds():
    with pytest.raises(ValidationError):
        SelectionParams(k=0)
    with pytest.raises(ValidationError):
        SelectionParams(k=1, lambda_=1.2)
    assert SelectionParams.model_validate({"k": 2, "lambda": 0.3}).lambda_ == 0.3


def test_l2_normalized_keeps_zero_vectors():
    ds = make_dataset([[3.0, 4.0], [0.0, 0.0]], [0.1, 0.2])
    normed = ds.l2_normalized()
    np.testing.assert_allclose(normed.embeddings, [[0.6, 0.8], [0.0, 0.0]])
