"""Private forest training, prediction, and model files.

Training draws every tree structure from the schema alone, then fills each
leaf with one noisy majority query. Two ways of paying for those queries
are supported: "disjoint" trains each tree on its own slice of the data so
every query can spend the full budget (parallel composition), and "split"
trains every tree on all of the data with the budget divided evenly across
trees (sequential composition). Either way the composed cost recorded in
the ledger is exactly the configured epsilon.

Model files carry structure, leaf labels, and the training configuration.
They never contain record counts, vote margins, or any other per-leaf
diagnostic; those live only on the in-memory model and die with it.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np

from .budget import BudgetLedger
from .data import Dataset, FeatureSchema, Record, partition_disjoint
from .errors import DataValidationError, InternalInvariantError
from .mechanism import QueryDiagnostics, majority_label_query
from .tree import (
    TreeNode,
    build_tree,
    leaf_assignments,
    node_from_dict,
    node_to_dict,
    optimal_depth,
    route_record,
)

FORMAT_VERSION = 1

SensitivityMode = Literal["smooth", "global"]
BudgetMode = Literal["disjoint", "split"]


@dataclass(frozen=True)
class TrainConfig:
    """Everything that determines a training run, including the seed."""

    epsilon: float
    tau: int = 100
    depth_override: int | None = None
    sensitivity_mode: SensitivityMode = "smooth"
    budget_mode: BudgetMode = "disjoint"
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.tau < 1:
            raise ValueError("tau must be at least 1")
        if self.depth_override is not None and self.depth_override < 1:
            raise ValueError("depth override must be at least 1")
        if self.sensitivity_mode not in ("smooth", "global"):
            raise ValueError(f"unknown sensitivity mode {self.sensitivity_mode!r}")
        if self.budget_mode not in ("disjoint", "split"):
            raise ValueError(f"unknown budget mode {self.budget_mode!r}")


@dataclass(frozen=True)
class ForestDiagnostics:
    """Per-leaf query diagnostics, grouped by tree. Not privacy safe."""

    per_tree: tuple[tuple[QueryDiagnostics, ...], ...]


@dataclass
class ForestModel:
    schema: FeatureSchema
    trees: tuple[TreeNode, ...]
    epsilon: float
    tau: int
    depth: int
    sensitivity_mode: str
    budget_mode: str
    seed: int
    diagnostics: ForestDiagnostics | None = field(default=None, repr=False)


def fill_leaf_labels(
    tree: TreeNode,
    data: Dataset,
    epsilon: float,
    rng: np.random.Generator,
    *,
    sensitivity_mode: str = "smooth",
) -> tuple[TreeNode, tuple[QueryDiagnostics, ...]]:
    """Give every leaf a label through one noisy majority query each.

    Routes the records once, then queries leaf by leaf in construction
    order. Empty leaves still get a query: with no records every label
    scores zero and the draw is uniform, so the filled tree leaks nothing
    about which regions were empty. The tree must not be filled already.
    """
    class_labels = data.schema.class_labels
    label_codes = data.label_codes
    diagnostics: list[QueryDiagnostics] = []
    for leaf, idx in leaf_assignments(tree, data):
        if leaf.label is not None:
            raise ValueError("tree already has leaf labels")
        tally = np.bincount(label_codes[idx], minlength=len(class_labels))
        counts = {c: int(tally[i]) for i, c in enumerate(class_labels)}
        label, diag = majority_label_query(
            counts, epsilon, rng, sensitivity_mode=sensitivity_mode
        )
        leaf.label = label
        diagnostics.append(diag)
    return tree, tuple(diagnostics)


def build_forest(
    data: Dataset,
    config: TrainConfig,
    ledger: BudgetLedger | None = None,
    *,
    collect_diagnostics: bool = False,
    threads: int = 1,
) -> ForestModel:
    """Train a forest of ``config.tau`` trees.

    All randomness flows from ``config.seed`` through one seed sequence:
    one child stream for the partition, one per tree. Trees are therefore
    independent of thread count and of each other, and a rerun with the
    same config reproduces the model bit for bit.

    A ledger may be passed in to be inspected afterwards; otherwise an
    internal one guards the run. Either way the composed privacy cost must
    come out at exactly ``config.epsilon`` or training aborts.
    """
    if not data.has_labels:
        raise DataValidationError("training data must be labeled")
    n = len(data)
    if config.tau > n:
        raise ValueError(f"tau={config.tau} exceeds the {n} available records")
    if threads < 0:
        raise ValueError("threads must be non-negative")
    workers = threads if threads > 0 else (os.cpu_count() or 1)

    schema = data.schema
    depth = (
        config.depth_override
        if config.depth_override is not None
        else optimal_depth(schema.num_continuous, schema.num_discrete)
    )
    if ledger is None:
        ledger = BudgetLedger(config.epsilon)

    root_seq = np.random.SeedSequence(config.seed)
    partition_seq, *tree_seqs = root_seq.spawn(config.tau + 1)

    if config.budget_mode == "disjoint":
        partition = partition_disjoint(
            data, config.tau, np.random.default_rng(partition_seq)
        )
        subsets = partition.subsets
        epsilon_per_query = config.epsilon
    else:
        subsets = (data,) * config.tau
        epsilon_per_query = config.epsilon / config.tau

    def build_one(index: int) -> tuple[TreeNode, tuple[QueryDiagnostics, ...]]:
        rng = np.random.default_rng(tree_seqs[index])
        tree = build_tree(schema, depth, rng)
        return fill_leaf_labels(
            tree,
            subsets[index],
            epsilon_per_query,
            rng,
            sensitivity_mode=config.sensitivity_mode,
        )

    if workers == 1:
        results = [build_one(i) for i in range(config.tau)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build_one, range(config.tau)))

    # spends are recorded after the parallel section, single threaded
    epsilon_exact = Fraction(config.epsilon)
    if config.budget_mode == "disjoint":
        for i in range(config.tau):
            ledger.record(f"tree/{i}", epsilon_exact)
    else:
        share = epsilon_exact / config.tau
        for _ in range(config.tau):
            ledger.record("training-data", share)
    if ledger.composed_cost() != epsilon_exact or not ledger.within_budget():
        raise InternalInvariantError(
            f"privacy accounting drifted: composed cost {ledger.composed_cost()} "
            f"for budget {epsilon_exact}"
        )

    diagnostics = None
    if collect_diagnostics:
        diagnostics = ForestDiagnostics(per_tree=tuple(diags for _, diags in results))
    return ForestModel(
        schema=schema,
        trees=tuple(tree for tree, _ in results),
        epsilon=config.epsilon,
        tau=config.tau,
        depth=depth,
        sensitivity_mode=config.sensitivity_mode,
        budget_mode=config.budget_mode,
        seed=config.seed,
        diagnostics=diagnostics,
    )


def predict(model: ForestModel, record: Record) -> str:
    """Majority vote over the trees. Ties go to the first listed class label."""
    votes = {label: 0 for label in model.schema.class_labels}
    for tree in model.trees:
        votes[route_record(tree, record).label] += 1
    best = max(votes.values())
    for label in model.schema.class_labels:
        if votes[label] == best:
            return label
    raise InternalInvariantError("vote tally lost its maximum")


def predict_scores(model: ForestModel, record: Record) -> dict[str, Fraction]:
    """Per-label vote fractions as exact rationals summing to one."""
    votes = {label: 0 for label in model.schema.class_labels}
    for tree in model.trees:
        votes[route_record(tree, record).label] += 1
    return {label: Fraction(count, model.tau) for label, count in votes.items()}


def vote_matrix(model: ForestModel, data: Dataset) -> np.ndarray:
    """Vote counts per record and class label, in schema label order."""
    class_index = {label: i for i, label in enumerate(model.schema.class_labels)}
    votes = np.zeros((len(data), len(class_index)), dtype=np.int32)
    for tree in model.trees:
        for leaf, idx in leaf_assignments(tree, data):
            if idx.size:
                votes[idx, class_index[leaf.label]] += 1
    return votes


def predict_batch(model: ForestModel, data: Dataset) -> np.ndarray:
    """Predicted label codes for every record. Matches predict row by row."""
    # argmax takes the first maximum, which is the schema-order tie break
    return np.argmax(vote_matrix(model, data), axis=1)


def model_to_dict(model: ForestModel) -> dict:
    for tree in model.trees:
        for node in _walk(tree):
            if hasattr(node, "label") and node.label is None:
                raise InternalInvariantError("refusing to serialize unlabeled leaves")
    return {
        "format_version": FORMAT_VERSION,
        "schema": model.schema.to_dict(),
        "config": {
            "epsilon": model.epsilon,
            "tau": model.tau,
            "depth": model.depth,
            "sensitivity_mode": model.sensitivity_mode,
            "budget_mode": model.budget_mode,
            "seed": model.seed,
        },
        "trees": [node_to_dict(tree) for tree in model.trees],
    }


def _walk(node: TreeNode):
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        if hasattr(current, "below"):
            stack.append(current.below)
            stack.append(current.at_or_above)
        elif hasattr(current, "children"):
            stack.extend(current.children.values())


def save_model(model: ForestModel, path: str) -> None:
    """Write the model as JSON. Output bytes are a pure function of the model."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_dict(model), handle, indent=2)
        handle.write("\n")


def model_from_dict(obj: dict) -> ForestModel:
    if not isinstance(obj, dict):
        raise DataValidationError("model document must be a JSON object")
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise DataValidationError(
            f"unsupported model format version {version!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    schema = FeatureSchema.from_dict(obj.get("schema"))
    raw_config = obj.get("config")
    if not isinstance(raw_config, dict):
        raise DataValidationError("model 'config' must be a JSON object")
    try:
        epsilon = raw_config["epsilon"]
        tau = raw_config["tau"]
        depth = raw_config["depth"]
        sensitivity_mode = raw_config["sensitivity_mode"]
        budget_mode = raw_config["budget_mode"]
        seed = raw_config["seed"]
    except KeyError as missing:
        raise DataValidationError(f"model config is missing key {missing}") from None
    raw_trees = obj.get("trees")
    if not isinstance(raw_trees, list) or not raw_trees:
        raise DataValidationError("model 'trees' must be a non-empty list")
    if len(raw_trees) != tau:
        raise DataValidationError(
            f"model declares tau={tau} but contains {len(raw_trees)} trees"
        )
    trees = tuple(node_from_dict(raw, schema) for raw in raw_trees)
    if not isinstance(depth, int) or isinstance(depth, bool) or depth < 1:
        raise DataValidationError("model depth must be a positive integer")
    if sensitivity_mode not in ("smooth", "global"):
        raise DataValidationError(f"unknown sensitivity mode {sensitivity_mode!r}")
    if budget_mode not in ("disjoint", "split"):
        raise DataValidationError(f"unknown budget mode {budget_mode!r}")
    if isinstance(epsilon, bool) or not isinstance(epsilon, (int, float)) or epsilon <= 0:
        raise DataValidationError("model epsilon must be a positive number")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise DataValidationError("model seed must be an integer")
    return ForestModel(
        schema=schema,
        trees=trees,
        epsilon=float(epsilon),
        tau=tau,
        depth=depth,
        sensitivity_mode=sensitivity_mode,
        budget_mode=budget_mode,
        seed=seed,
    )


def load_model(path: str) -> ForestModel:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataValidationError(f"{path}: not valid JSON: {exc}") from None
    return model_from_dict(obj)
