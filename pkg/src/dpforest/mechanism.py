"""Noisy majority voting via the exponential mechanism.

The release primitive is a single categorical query: given per-label record
counts inside one leaf, release a label. Selection probabilities follow

    P(label) proportional to exp(eps * u(label) / (2 * sensitivity))

where u scores each label 0 or 1. Two sensitivity regimes are supported:
the global sensitivity of u (which is 1), and a smooth upper bound on the
local sensitivity that decays with the margin of the vote. For a count
vector whose largest entry exceeds the runner-up by g, the local
sensitivity at distance k is 0 for k < g and 1 afterwards, so the smooth
bound works out to exp(-g * eps).

All selection code is written so that enormous exponents degrade gracefully:
weights are computed relative to the top score, and callers in extreme
regimes can pass the sensitivity in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

GLOBAL_SENSITIVITY = 1.0

# exp(x) overflows a double just above 709.78; exponent magnitudes beyond
# that saturate the corresponding weight at zero.
_MAX_FINITE_EXPONENT_LOG = 709.0


def _check_counts(counts: Mapping[str, int]) -> None:
    if len(counts) < 2:
        raise ValueError("need counts for at least two labels")
    for label, value in counts.items():
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ValueError(f"count for label {label!r} must be an integer")
        if value < 0:
            raise ValueError(f"count for label {label!r} is negative")


def _check_epsilon(epsilon: float) -> None:
    if not math.isfinite(epsilon) or epsilon <= 0.0:
        raise ValueError("epsilon must be positive and finite")


def label_gap(counts: Mapping[str, int]) -> int:
    """Margin of the vote: largest count minus second largest."""
    _check_counts(counts)
    first, second = sorted(counts.values(), reverse=True)[:2]
    return int(first) - int(second)


def local_sensitivity_at_distance(gap: int, distance: int) -> float:
    """Local sensitivity of the 0/1 score at a given dataset distance.

    Changing fewer records than the vote margin cannot move any label in
    or out of the argmax set, so the score function is flat there.
    """
    if gap < 0:
        raise ValueError("gap must be non-negative")
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return 0.0 if distance < gap else 1.0


def smooth_sensitivity(gap: int, epsilon: float) -> float:
    """Smooth upper bound on local sensitivity, exp(-gap * epsilon).

    Equals max over distances k of exp(-k * epsilon) * LS(k); the maximum
    sits at k = gap, the first distance where the local sensitivity jumps
    to one. May underflow to 0.0 for very large gap * epsilon; callers that
    need the extreme regime should work with log_smooth_sensitivity.
    """
    if gap < 0:
        raise ValueError("gap must be non-negative")
    _check_epsilon(epsilon)
    return math.exp(-float(gap) * epsilon)


def log_smooth_sensitivity(gap: int, epsilon: float) -> float:
    """Natural log of smooth_sensitivity, exact for any gap."""
    if gap < 0:
        raise ValueError("gap must be non-negative")
    _check_epsilon(epsilon)
    return -float(gap) * epsilon


def score_labels(counts: Mapping[str, int], mode: str = "most") -> dict[str, float]:
    """Score every label 0 or 1.

    Mode "most" gives 1 to the labels tied for the largest count, mode
    "least" to the labels tied for the smallest. When no records are
    present every score is zero and selection degenerates to uniform.
    """
    _check_counts(counts)
    if mode not in ("most", "least"):
        raise ValueError(f"unknown scoring mode {mode!r}")
    values = list(counts.values())
    if max(values) == 0:
        return {label: 0.0 for label in counts}
    target = max(values) if mode == "most" else min(values)
    return {label: 1.0 if count == target else 0.0 for label, count in counts.items()}


def _log_weights(
    scores: Mapping[str, float],
    sensitivity: float | None,
    epsilon: float,
    log_sensitivity: float | None,
) -> dict[str, float]:
    """Log selection weights, normalised so the best score has weight one.

    Shifting by the top score keeps every exponent non-positive, which is
    what makes the computation stable: the worst that can happen to a
    trailing label is underflow to zero weight.
    """
    if not scores:
        raise ValueError("scores must not be empty")
    _check_epsilon(epsilon)
    for label, score in scores.items():
        if not math.isfinite(score):
            raise ValueError(f"score for label {label!r} is not finite")
    if log_sensitivity is None:
        if sensitivity is None:
            raise ValueError("sensitivity is required")
        if not math.isfinite(sensitivity) or sensitivity <= 0.0:
            raise ValueError("sensitivity must be positive and finite")
    elif not math.isfinite(log_sensitivity):
        raise ValueError("log_sensitivity must be finite")

    top = max(scores.values())
    out = {}
    for label, score in scores.items():
        shortfall = top - score
        if shortfall == 0.0:
            out[label] = 0.0
        elif log_sensitivity is not None:
            log_exponent = math.log(epsilon * shortfall / 2.0) - log_sensitivity
            if log_exponent > _MAX_FINITE_EXPONENT_LOG:
                out[label] = -math.inf
            else:
                out[label] = -math.exp(log_exponent)
        else:
            out[label] = -epsilon * shortfall / (2.0 * sensitivity)
    return out


def exp_mechanism_distribution(
    scores: Mapping[str, float],
    sensitivity: float | None,
    epsilon: float,
    *,
    log_sensitivity: float | None = None,
) -> dict[str, float]:
    """Exact selection probabilities of the exponential mechanism."""
    log_p = exp_mechanism_log_distribution(
        scores, sensitivity, epsilon, log_sensitivity=log_sensitivity
    )
    return {label: math.exp(lp) for label, lp in log_p.items()}


def exp_mechanism_log_distribution(
    scores: Mapping[str, float],
    sensitivity: float | None,
    epsilon: float,
    *,
    log_sensitivity: float | None = None,
) -> dict[str, float]:
    """Log selection probabilities. Finite down to the double floor.

    A label whose exponent magnitude exceeds the largest double reports
    -inf; its probability is beyond anything a float could express.
    """
    log_w = _log_weights(scores, sensitivity, epsilon, log_sensitivity)
    total = math.fsum(math.exp(lw) for lw in log_w.values())
    log_total = math.log(total)
    return {label: lw - log_total for label, lw in log_w.items()}


def exp_mechanism_select(
    scores: Mapping[str, float],
    sensitivity: float | None,
    epsilon: float,
    rng: np.random.Generator,
    *,
    log_sensitivity: float | None = None,
) -> str:
    """Draw one label from the exponential mechanism.

    Iteration follows the insertion order of ``scores``, so callers that
    build score dicts in a fixed label order get reproducible draws from a
    seeded generator. When ``log_sensitivity`` is given it takes precedence
    over ``sensitivity``; pass it when the sensitivity itself would
    underflow a double.
    """
    log_w = _log_weights(scores, sensitivity, epsilon, log_sensitivity)
    weights = {label: math.exp(lw) for label, lw in log_w.items()}
    total = math.fsum(weights.values())
    threshold = rng.random() * total
    acc = 0.0
    last = None
    for label, weight in weights.items():
        acc += weight
        last = label
        if threshold < acc:
            return label
    # float accumulation can leave threshold == total; fall to the last label
    assert last is not None
    return last


@dataclass(frozen=True)
class QueryDiagnostics:
    """Side information about one majority query. Not privacy safe.

    These values are derived from the raw counts and exist only for
    evaluation and debugging. They must never be released alongside the
    label or stored in a model file.
    """

    record_count: int
    gap: int
    smooth_sensitivity: float
    preferred_labels: tuple[str, ...]
    flipped: bool

    @property
    def empty(self) -> bool:
        return self.record_count == 0


def _query_parameters(
    counts: Mapping[str, int], epsilon: float, mode: str, sensitivity_mode: str
) -> tuple[dict[str, float], float | None, float | None, int]:
    """Scores plus sensitivity arguments for one majority query."""
    if sensitivity_mode not in ("smooth", "global"):
        raise ValueError(f"unknown sensitivity mode {sensitivity_mode!r}")
    scores = score_labels(counts, mode)
    if mode == "most":
        gap = label_gap(counts)
    else:
        # the least-frequent query on K is the most-frequent query on
        # max(K) - K, and its margin is the gap of the reflected counts
        ceiling = max(counts.values())
        gap = label_gap({label: ceiling - count for label, count in counts.items()})
    if sensitivity_mode == "smooth":
        return scores, None, log_smooth_sensitivity(gap, epsilon), gap
    return scores, GLOBAL_SENSITIVITY, None, gap


def majority_label_query(
    counts: Mapping[str, int],
    epsilon: float,
    rng: np.random.Generator,
    *,
    mode: str = "most",
    sensitivity_mode: str = "smooth",
) -> tuple[str, QueryDiagnostics]:
    """Release a noisy majority label for one leaf.

    Returns the released label together with diagnostics computed from the
    raw counts (margin, smooth sensitivity at this query's epsilon, the
    true winners, and whether the release missed them). The diagnostics are
    for offline analysis only.
    """
    scores, sensitivity, log_sens, gap = _query_parameters(
        counts, epsilon, mode, sensitivity_mode
    )
    label = exp_mechanism_select(
        scores, sensitivity, epsilon, rng, log_sensitivity=log_sens
    )
    preferred = tuple(lab for lab, s in scores.items() if s == 1.0)
    diag = QueryDiagnostics(
        record_count=int(sum(counts.values())),
        gap=gap,
        smooth_sensitivity=math.exp(-float(gap) * epsilon),
        preferred_labels=preferred,
        flipped=bool(preferred) and label not in preferred,
    )
    return label, diag


@dataclass(frozen=True)
class AuditReport:
    """Worst-case output ratios against every add/remove-one neighbour."""

    epsilon: float
    sensitivity_mode: str
    max_log_ratio: float
    worst_neighbor: dict | None
    per_label_ratios: dict[str, float]

    def to_dict(self) -> dict:
        def encode(value: float):
            return value if math.isfinite(value) else repr(value)

        return {
            "epsilon": self.epsilon,
            "sensitivity_mode": self.sensitivity_mode,
            "max_log_ratio": encode(self.max_log_ratio),
            "worst_neighbor": self.worst_neighbor,
            "per_label_ratios": {
                label: encode(ratio) for label, ratio in self.per_label_ratios.items()
            },
        }


def _audit_log_distribution(
    counts: Mapping[str, int], epsilon: float, mode: str, sensitivity_mode: str
) -> dict[str, float]:
    scores, sensitivity, log_sens, _ = _query_parameters(
        counts, epsilon, mode, sensitivity_mode
    )
    return exp_mechanism_log_distribution(
        scores, sensitivity, epsilon, log_sensitivity=log_sens
    )


def neighbor_ratio_audit(
    counts: Mapping[str, int],
    epsilon: float,
    *,
    sensitivity_mode: str = "smooth",
    mode: str = "most",
    max_total: int = 1000,
) -> AuditReport:
    """Measure output probability ratios against all one-record neighbours.

    For every dataset reachable by adding or removing a single record, the
    analytic selection distributions are compared label by label and the
    largest absolute log ratio is reported. This is a measurement tool: it
    reports what the mechanism does and asserts nothing about it. Under the
    smooth sensitivity regime the reported maximum can exceed epsilon.

    Ratios whose magnitude exceeds the double range are reported as inf.
    """
    _check_counts(counts)
    _check_epsilon(epsilon)
    total = sum(counts.values())
    if total > max_total:
        raise ValueError(
            f"refusing to audit {total} records (limit {max_total}); "
            "the audit enumerates neighbours exhaustively"
        )

    base = _audit_log_distribution(counts, epsilon, mode, sensitivity_mode)

    neighbors = []
    for label in counts:
        bumped = dict(counts)
        bumped[label] += 1
        neighbors.append(("add", label, bumped))
    for label in counts:
        if counts[label] > 0:
            dropped = dict(counts)
            dropped[label] -= 1
            neighbors.append(("remove", label, dropped))

    per_label = {label: 0.0 for label in counts}
    max_ratio = 0.0
    worst = None
    for change, changed_label, neighbor_counts in neighbors:
        other = _audit_log_distribution(neighbor_counts, epsilon, mode, sensitivity_mode)
        for label in counts:
            a = base[label]
            b = other[label]
            if math.isinf(a) and math.isinf(b):
                ratio = math.inf
            else:
                ratio = abs(a - b)
            if ratio > per_label[label]:
                per_label[label] = ratio
            if ratio > max_ratio:
                max_ratio = ratio
                worst = {
                    "change": change,
                    "label": changed_label,
                    "counts": dict(neighbor_counts),
                }
    return AuditReport(
        epsilon=epsilon,
        sensitivity_mode=sensitivity_mode,
        max_log_ratio=max_ratio,
        worst_neighbor=worst,
        per_label_ratios=per_label,
    )
