import itertools

import numpy as np
import pytest

from muss.clustering import kmeans_fit, max_radius, summarize_clusters
from muss.core import SelectionParams, objective
from muss.errors import EnumerationCapError, InvalidSelectionError, PreconditionError
from muss.greedy import greedy_select
from muss.oracle import (
    THEOREM4,
    THEOREM5,
    TrialCheck,
    VerifyReport,
    VerifySuite,
    check_instance,
    opt_brute_force,
    random_instance,
    verify_bounds,
    verify_lemma1_suite,
    verify_lemma8_suite,
)
from tests.helpers import make_dataset, random_dataset


def test_whole_pool_when_k_equals_size(small_ds):
    pool = [3, 9, 1, 14]
    opt = opt_brute_force(small_ds, pool, 4, 0.5)
    assert opt.best_set == [1, 3, 9, 14]
    assert opt.subsets == 1
    assert opt.objective == pytest.approx(objective(small_ds, pool, 0.5)[0])


def test_lambda_one_is_top_quality(small_ds):
    opt = opt_brute_force(small_ds, range(small_ds.n), 4, 1.0)
    top = np.argsort(-small_ds.qualities, kind="stable")[:4]
    assert opt.best_set == sorted(top.tolist())


def test_matches_naive_enumeration():
    ds = random_dataset(9, dim=2, seed=5)
    values = {
        combo: objective(ds, list(combo), 0.3)[0]
        for combo in itertools.combinations(range(9), 3)
    }
    opt = opt_brute_force(ds, range(9), 3, 0.3)
    assert opt.objective == pytest.approx(max(values.values()))
    assert opt.subsets == 84


@pytest.mark.parametrize("seed", range(30))
def test_optimum_dominates_greedy(seed):
    ds = random_dataset(10, dim=2, seed=seed)
    opt = opt_brute_force(ds, range(10), 3, 0.5)
    greedy, _ = greedy_select(ds, range(10), SelectionParams(k=3, normalize_by_size=False))
    assert opt.objective >= greedy.objective - 1e-9


def test_pool_order_does_not_matter(small_ds):
    pool = [5, 2, 17, 8, 11, 0]
    assert opt_brute_force(small_ds, pool, 3, 0.5) == opt_brute_force(
        small_ds, list(reversed(pool)), 3, 0.5
    )


def test_ties_resolve_to_smallest_set():
    ds = make_dataset(np.zeros((6, 2)), np.full(6, 0.5))
    assert opt_brute_force(ds, range(6), 3, 0.5).best_set == [0, 1, 2]


def test_cap_and_bad_k():
    ds = random_dataset(30, dim=2)
    with pytest.raises(EnumerationCapError):
        opt_brute_force(ds, range(30), 15, 0.5)
    with pytest.raises(InvalidSelectionError):
        opt_brute_force(ds, [0, 1], 3, 0.5)


def test_identical_points_score_every_subset_alike():
    ds = make_dataset(np.ones((12, 2)), np.full(12, 0.5))
    assert max_radius(summarize_clusters(ds, kmeans_fit(ds, 3, seed=0))) == 0.0
    opt = opt_brute_force(ds, range(12), 3, 0.5)
    assert opt.best_set == [0, 1, 2]
    assert opt.objective == pytest.approx(objective(ds, [7, 9, 11], 0.5)[0])
    checks = check_instance(ds, VerifySuite(n=12))
    assert checks
    assert all(check.passed for check in checks)


def test_random_instance_is_seeded():
    a, b = random_instance(8, 3, 42), random_instance(8, 3, 42)
    np.testing.assert_array_equal(a.embeddings, b.embeddings)
    assert np.all((a.qualities >= 0.0) & (a.qualities < 1.0))


def test_zero_trials_pass():
    report = verify_bounds(VerifySuite(trials=0))
    assert report.passed
    assert report.checks == []


def test_bounds_hold_on_random_instances():
    report = verify_bounds(VerifySuite(trials=20, seed=1))
    assert report.passed
    summary = report.summary()
    assert summary[THEOREM4]["passed"] == 20
    assert summary[THEOREM5]["passed"] == 20
    assert summary[THEOREM4]["min_slack"] >= 0.0


def test_distributed_bound_also_checked_at_half_lambda():
    ds = random_instance(10, 2, 3)
    checks = check_instance(ds, VerifySuite(n=10, lambda_=0.3), bounds=[THEOREM4])
    names = {check.bound for check in checks}
    assert {THEOREM4, THEOREM4 + "@0.5"} <= names
    assert all(check.informational for check in checks if check.bound.startswith("lemma"))


def test_verify_preconditions():
    with pytest.raises(PreconditionError):
        verify_bounds(VerifySuite(m=1))
    with pytest.raises(PreconditionError):
        verify_bounds(VerifySuite(n=4, k=5, m=2), bounds=[THEOREM4])
    with pytest.raises(EnumerationCapError):
        verify_bounds(VerifySuite(n=40, k=10, cap=1000), bounds=[THEOREM4])


def test_lemma1_suite():
    report = verify_lemma1_suite(VerifySuite(n=15, k=4, trials=25, seed=2))
    assert report.passed
    assert {check.bound for check in report.checks} == {"lemma1-quality", "lemma1-distance"}
    with pytest.raises(PreconditionError):
        verify_lemma1_suite(VerifySuite(lambda_=1.0))


def test_lemma1_suite_skips_when_pool_is_exhausted():
    report = verify_lemma1_suite(VerifySuite(n=3, k=3, trials=2))
    assert all(check.skipped for check in report.checks)
    assert report.summary()["lemma1-quality"]["skipped"] == 2


def test_lemma8_suite():
    report = verify_lemma8_suite(VerifySuite(n=10, k=3, trials=25, seed=4))
    assert report.passed
    assert all(check.ratio >= 0.5 - 1e-9 for check in report.checks)


def test_violations_exclude_informational_and_skipped():
    def check(bound, passed, **extra):
        return TrialCheck(
            trial=0, bound=bound, lhs=0.0, rhs=1.0, slack=-1.0, passed=passed,
            instance_seed=0, **extra
        )

    report = VerifyReport(
        suite="x",
        params={},
        trials=1,
        checks=[
            check("a", False),
            check("b", False, informational=True),
            check("c", True, skipped=True),
            check("a", True),
        ],
    )
    assert [c.bound for c in report.violations] == ["a"]
    assert not report.passed
    assert report.summary()["a"] == {"passed": 1, "failed": 1, "skipped": 0, "min_slack": -1.0}
