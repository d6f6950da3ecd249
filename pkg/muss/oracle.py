"""Exhaustive optimum on small instances and the approximation-guarantee harness."""

import itertools
import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from muss.clustering import kmeans_fit, max_radius, random_partition, summarize_clusters
from muss.core import Criterion, Dataset, SelectionParams, objective, pairwise_distances
from muss.errors import EnumerationCapError, InvalidSelectionError, PreconditionError
from muss.greedy import check_lemma1, greedy_select, greedy_select_sigma_sweep
from muss.selectors.bounds import approximation_bound
from muss.selectors.distributed import DgdsParams, dgds_select
from muss.selectors.multilevel import MussParams, muss_select
from muss.selectors.parallel import merge_unique, select_within_groups

logger = logging.getLogger(__name__)

DEFAULT_SUBSET_CAP = 2_000_000
# Combinations scored per numpy batch.
_BATCH = 65536
DGDS_FACTOR = 1.0 / 16.0

THEOREM4 = "theorem4"
THEOREM5 = "theorem5"


class OptResult(BaseModel):
    """Exact maximizer of the objective over all k-subsets of a pool."""

    best_set: list[int]
    objective: float
    quality: float
    diversity: float
    subsets: int


class VerifySuite(BaseModel):
    """Instance family and parameters for a verification run."""

    model_config = ConfigDict(populate_by_name=True)

    n: int = Field(default=12, ge=1)
    k: int = Field(default=3, ge=1)
    m: int = Field(default=2, ge=1)
    l: int = Field(default=3, ge=1)
    k_within: int = Field(default=3, ge=1)
    lambda_: float = Field(default=0.5, ge=0.0, le=1.0, alias="lambda")
    lambda_c: float = Field(default=0.5, ge=0.0, le=1.0)
    trials: int = Field(default=100, ge=0)
    seed: int = 0
    dim: int = Field(default=2, ge=1)
    cap: int = Field(default=DEFAULT_SUBSET_CAP, ge=1)


class TrialCheck(BaseModel):
    """One inequality evaluated on one instance: achieved (lhs) against guaranteed (rhs)."""

    trial: int
    bound: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    ratio: Optional[float] = None
    informational: bool = False
    skipped: bool = False
    instance_seed: int
    instance: Optional[dict] = None


class VerifyReport(BaseModel):
    """All checks of a verification run plus per-bound aggregates."""

    suite: str
    params: dict
    trials: int
    checks: list[TrialCheck] = Field(default_factory=list)

    @property
    def violations(self) -> list[TrialCheck]:
        return [c for c in self.checks if not c.passed and not c.informational and not c.skipped]

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> dict[str, dict[str, float]]:
        """Per-bound pass/fail/skip counts and the smallest slack seen."""
        out: dict[str, dict[str, float]] = {}
        for check in self.checks:
            row = out.setdefault(
                check.bound, {"passed": 0, "failed": 0, "skipped": 0, "min_slack": math.inf}
            )
            if check.skipped:
                row["skipped"] += 1
                continue
            row["passed" if check.passed else "failed"] += 1
            row["min_slack"] = min(row["min_slack"], check.slack)
        return out


def _check(
    trial: int,
    bound: str,
    lhs: float,
    rhs: float,
    instance_seed: int,
    ds: Dataset,
    informational: bool = False,
) -> TrialCheck:
    passed = lhs >= rhs - 1e-9 * max(1.0, abs(rhs))
    check = TrialCheck(
        trial=trial,
        bound=bound,
        lhs=lhs,
        rhs=rhs,
        slack=lhs - rhs,
        passed=passed,
        informational=informational,
        instance_seed=instance_seed,
    )
    if not passed and not informational:
        check.instance = {
            "embeddings": ds.embeddings.tolist(),
            "qualities": ds.qualities.tolist(),
        }
        logger.error("%s violated on trial %d (slack %.3g)", bound, trial, check.slack)
    return check


def _skipped(trial: int, bound: str, instance_seed: int) -> TrialCheck:
    return TrialCheck(
        trial=trial,
        bound=bound,
        lhs=0.0,
        rhs=0.0,
        slack=0.0,
        passed=True,
        skipped=True,
        instance_seed=instance_seed,
    )


def opt_brute_force(
    ds: Dataset,
    pool: Sequence[int],
    k: int,
    lambda_: float,
    cap: int = DEFAULT_SUBSET_CAP,
) -> OptResult:
    """
    Enumerate every k-subset of the pool and return the best by the raw objective.

    Subsets are visited in lexicographic id order and the running best only changes on a
    strict improvement, so ties resolve to the lexicographically smallest set.

    Raises:
        EnumerationCapError: If C(|pool|, k) exceeds `cap`
        InvalidSelectionError: If k is not in [1, |pool|]
    """
    ids = np.sort(ds.check_ids(pool))
    if not 1 <= k <= ids.size:
        raise InvalidSelectionError(f"k must be in [1, {ids.size}], got {k}")
    total = math.comb(ids.size, k)
    if total > cap:
        raise EnumerationCapError(total, cap)

    dist = pairwise_distances(ds.embeddings[ids])
    qual = ds.qualities[ids]
    combos = itertools.combinations(range(ids.size), k)
    best_value = -math.inf
    best: Optional[np.ndarray] = None
    while True:
        batch = np.array(list(itertools.islice(combos, _BATCH)), dtype=np.int64)
        if batch.size == 0:
            break
        quality = qual[batch].sum(axis=1)
        diversity = dist[batch[:, :, None], batch[:, None, :]].sum(axis=(1, 2))
        values = lambda_ * quality + (1 - lambda_) * diversity
        top = int(np.argmax(values))
        if values[top] > best_value:
            best_value = float(values[top])
            best = batch[top]

    assert best is not None
    best_set = ids[best].tolist()
    value, quality_term, diversity_term = objective(ds, best_set, lambda_)
    return OptResult(
        best_set=best_set,
        objective=value,
        quality=quality_term,
        diversity=diversity_term,
        subsets=total,
    )


def random_instance(n: int, dim: int, seed: int) -> Dataset:
    """Gaussian embeddings with qualities uniform on [0, 1)."""
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, dim)), rng.uniform(0.0, 1.0, size=n))


def _instance_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(child.generate_state(1)[0]) for child in children]


def _raw_params(k: int, lambda_: float, sigma: float = 1.0) -> SelectionParams:
    return SelectionParams(
        k=k,
        lambda_=lambda_,
        criterion=Criterion.SUM_DISTANCE,
        sigma=sigma,
        normalize_by_size=False,
    )


def _require_enumerable(suite: VerifySuite) -> None:
    if suite.k > suite.n:
        raise PreconditionError("k <= n", f"k={suite.k}, n={suite.n}")
    total = math.comb(suite.n, suite.k)
    if total > suite.cap:
        raise EnumerationCapError(total, suite.cap)


def _dgds_checks(
    ds: Dataset, suite: VerifySuite, lambda_: float, trial: int, instance_seed: int, suffix: str
) -> list[TrialCheck]:
    opt = opt_brute_force(ds, range(ds.n), suite.k, lambda_, suite.cap)
    params = DgdsParams(
        k=suite.k,
        k_within=suite.k_within,
        l=min(suite.l, ds.n),
        lambda_=lambda_,
        normalize_by_size=False,
        seed=instance_seed,
    )
    result = dgds_select(ds, params)
    floor = opt.objective * DGDS_FACTOR
    checks = [_check(trial, THEOREM4 + suffix, result.objective, floor, instance_seed, ds)]

    # Stepping stones against the best subset of the union of partition picks.
    parts = random_partition(ds, params.l, params.seed)
    union = merge_unique(*select_within_groups(ds, parts, _raw_params(suite.k_within, lambda_)))
    if len(union) < suite.k or math.comb(len(union), suite.k) > suite.cap:
        checks.append(_skipped(trial, "lemma2" + suffix, instance_seed))
        checks.append(_skipped(trial, "lemma3" + suffix, instance_seed))
        return checks
    union_opt = opt_brute_force(ds, union, suite.k, lambda_, suite.cap).objective
    checks.append(
        _check(trial, "lemma2" + suffix, 6 * union_opt, opt.diversity, instance_seed, ds, True)
    )
    checks.append(
        _check(trial, "lemma3" + suffix, 2 * union_opt, opt.quality, instance_seed, ds, True)
    )
    return checks


def _muss_prime_check(
    ds: Dataset, suite: VerifySuite, trial: int, instance_seed: int
) -> TrialCheck:
    opt = opt_brute_force(ds, range(ds.n), suite.k, suite.lambda_, suite.cap)
    l = min(suite.l, ds.n)
    model = kmeans_fit(ds, l, seed=instance_seed)
    radius = max_radius(summarize_clusters(ds, model))
    params = MussParams(
        k=suite.k,
        k_within=suite.k_within,
        l=l,
        m=suite.m,
        lambda_=suite.lambda_,
        lambda_c=suite.lambda_c,
        sigma_final=0.5,
        normalize_by_size=False,
        seed=instance_seed,
    )
    result = muss_select(ds, model, params)
    bound = approximation_bound(suite.k, suite.m, suite.lambda_, suite.lambda_c, radius)
    return _check(trial, THEOREM5, result.objective, bound.rhs(opt.objective), instance_seed, ds)


def check_instance(
    ds: Dataset,
    suite: VerifySuite,
    bounds: Iterable[str] = (THEOREM4, THEOREM5),
    trial: int = 0,
    instance_seed: int = 0,
) -> list[TrialCheck]:
    """Evaluate the distributed and multilevel guarantees on one dataset."""
    bounds = set(bounds)
    checks: list[TrialCheck] = []
    if THEOREM4 in bounds:
        checks.extend(_dgds_checks(ds, suite, suite.lambda_, trial, instance_seed, ""))
        if suite.lambda_ != 0.5:
            checks.extend(_dgds_checks(ds, suite, 0.5, trial, instance_seed, "@0.5"))
    if THEOREM5 in bounds:
        checks.append(_muss_prime_check(ds, suite, trial, instance_seed))
    return checks


def verify_bounds(
    suite: VerifySuite, bounds: Iterable[str] = (THEOREM4, THEOREM5)
) -> VerifyReport:
    """
    Check F(distributed) >= F(OPT)/16 and F(multilevel, quality halved) >=
    F(OPT)/alpha - r*beta/alpha on `suite.trials` seeded random instances.

    The distributed check runs at the suite's lambda and, when that differs, also at 0.5.
    Raises PreconditionError up front when the multilevel assumptions do not hold.
    """
    bounds = tuple(bounds)
    if THEOREM5 in bounds:
        approximation_bound(suite.k, suite.m, suite.lambda_, suite.lambda_c, 0.0)
    _require_enumerable(suite)

    report = VerifyReport(
        suite=",".join(bounds), params=suite.model_dump(by_alias=True), trials=suite.trials
    )
    for trial, instance_seed in enumerate(_instance_seeds(suite.seed, suite.trials)):
        ds = random_instance(suite.n, suite.dim, instance_seed)
        report.checks.extend(check_instance(ds, suite, bounds, trial, instance_seed))
    logger.info(
        "Bound verification: %d checks, %d violations", len(report.checks), len(report.violations)
    )
    return report


def verify_lemma1_suite(suite: VerifySuite) -> VerifyReport:
    """Run plain greedy on random instances and check both per-candidate inequalities."""
    if not 0.0 < suite.lambda_ < 1.0:
        raise PreconditionError("0 < lambda < 1", f"lambda={suite.lambda_}")
    if suite.k <= 1:
        raise PreconditionError("k > 1", f"k={suite.k}")

    report = VerifyReport(
        suite="lemma1", params=suite.model_dump(by_alias=True), trials=suite.trials
    )
    for trial, instance_seed in enumerate(_instance_seeds(suite.seed, suite.trials)):
        ds = random_instance(suite.n, suite.dim, instance_seed)
        pool = range(ds.n)
        result, _ = greedy_select(ds, pool, _raw_params(suite.k, suite.lambda_))
        lemma = check_lemma1(ds, pool, result, suite.lambda_)
        if not lemma.checks:
            report.checks.append(_skipped(trial, "lemma1-quality", instance_seed))
            report.checks.append(_skipped(trial, "lemma1-distance", instance_seed))
            continue
        worst_quality = max(c.quality_gain for c in lemma.checks)
        worst_distance = max(c.min_distance for c in lemma.checks)
        report.checks.append(
            _check(trial, "lemma1-quality", lemma.quality_bound, worst_quality, instance_seed, ds)
        )
        report.checks.append(
            _check(
                trial, "lemma1-distance", lemma.distance_bound, worst_distance, instance_seed, ds
            )
        )
    return report


def verify_lemma8_suite(suite: VerifySuite) -> VerifyReport:
    """Check that greedy with quality scaler 0.5, and the 0/0.5/1 sweep, reach F(OPT)/2."""
    _require_enumerable(suite)
    report = VerifyReport(
        suite="lemma8", params=suite.model_dump(by_alias=True), trials=suite.trials
    )
    for trial, instance_seed in enumerate(_instance_seeds(suite.seed, suite.trials)):
        ds = random_instance(suite.n, suite.dim, instance_seed)
        pool = range(ds.n)
        half = 0.5 * opt_brute_force(ds, pool, suite.k, suite.lambda_, suite.cap).objective
        scaled, _ = greedy_select(ds, pool, _raw_params(suite.k, suite.lambda_, sigma=0.5))
        sweep = greedy_select_sigma_sweep(ds, pool, _raw_params(suite.k, suite.lambda_))
        values = {"lemma8-sigma0.5": scaled.objective, "lemma8-sweep": sweep.objective}
        for bound, value in values.items():
            check = _check(trial, bound, value, half, instance_seed, ds)
            check.ratio = value / (2 * half) if half > 0 else 1.0
            report.checks.append(check)
    return report
