"""Majority-vote ensembles over cached prediction rows.

Every trained model contributes one row of predictions per evaluation split.
Ensembles are multisets of row ids (a model may occupy several slots), combined
by unweighted majority vote with ties resolved toward the smallest label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

LossFn = Callable[[Sequence[int], "PredictionMatrix"], float]


class PredictionMatrix:
    """Per-model prediction rows plus the true labels of the split.

    ``rows[m, i]`` is model ``m``'s predicted label for sample ``i``; labels
    are integer codes in ``[0, n_labels)``.
    """

    def __init__(self, rows: np.ndarray, labels: np.ndarray, n_labels: int):
        rows = np.asarray(rows, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if rows.shape[0] < 1:
            raise ValueError("at least one prediction row is required")
        if labels.shape != (rows.shape[1],):
            raise ValueError("labels must match the number of columns")
        if n_labels < 1:
            raise ValueError("n_labels must be positive")
        if rows.size and (rows.min() < 0 or rows.max() >= n_labels):
            raise ValueError("prediction values outside the label set")
        if labels.size and (labels.min() < 0 or labels.max() >= n_labels):
            raise ValueError("label values outside the label set")
        self.rows = rows
        self.labels = labels
        self.n_labels = n_labels

    @property
    def n_models(self) -> int:
        return self.rows.shape[0]

    @property
    def n_samples(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class Ensemble:
    """Fixed-size slot vector; empty slots are ``None``."""

    slots: tuple[int | None, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(self.slots))
        if len(self.slots) == 0:
            raise ValueError("ensemble must have at least one slot")

    @classmethod
    def empty(cls, size: int) -> "Ensemble":
        return cls(tuple([None] * size))

    @property
    def size(self) -> int:
        return len(self.slots)

    def members(self) -> tuple[int, ...]:
        return tuple(s for s in self.slots if s is not None)

    def with_slot(self, index: int, model: int | None) -> "Ensemble":
        if not 0 <= index < len(self.slots):
            raise ValueError(f"slot index {index} out of range")
        slots = list(self.slots)
        slots[index] = model
        return Ensemble(tuple(slots))


def _check_members(members: Sequence[int], preds: PredictionMatrix) -> None:
    for m in members:
        if not 0 <= m < preds.n_models:
            raise ValueError(f"model id {m} outside the pool")


def _vote_counts(members: Sequence[int], preds: PredictionMatrix) -> np.ndarray:
    counts = np.zeros((preds.n_labels, preds.n_samples), dtype=np.int64)
    cols = np.arange(preds.n_samples)
    for m in members:
        counts[preds.rows[m], cols] += 1
    return counts


def _votes_from_counts(counts: np.ndarray) -> np.ndarray:
    # argmax scans labels in canonical order, so ties go to the smallest label
    return np.argmax(counts, axis=0)


def majority_vote(members: Sequence[int], preds: PredictionMatrix, i: int) -> int:
    """Majority-vote label of the member multiset on sample ``i``."""
    if len(members) == 0:
        raise ValueError("cannot vote with an empty member list")
    _check_members(members, preds)
    counts = np.bincount(preds.rows[list(members), i], minlength=preds.n_labels)
    return int(np.argmax(counts))


def _correct_counts(members: Sequence[int], preds: PredictionMatrix) -> np.ndarray:
    correct = np.zeros(preds.n_samples, dtype=np.int64)
    for m in members:
        correct += preds.rows[m] == preds.labels
    return correct


def _margins_from_correct(correct: np.ndarray, k: int) -> np.ndarray:
    return (2.0 / k) * correct - 1.0


def margin(members: Sequence[int], preds: PredictionMatrix, i: int) -> float:
    """Average signed correctness of the members on sample ``i``, in [-1, 1]."""
    if len(members) == 0:
        raise ValueError("cannot compute a margin with an empty member list")
    _check_members(members, preds)
    correct = int(np.sum(preds.rows[list(members), i] == preds.labels[i]))
    return float(_margins_from_correct(np.array([correct]), len(members))[0])


def zero_one_ensemble_loss(members: Sequence[int], preds: PredictionMatrix) -> float:
    """Fraction of samples the majority vote misclassifies."""
    if len(members) == 0:
        raise ValueError("cannot score an empty member list")
    _check_members(members, preds)
    votes = _votes_from_counts(_vote_counts(members, preds))
    return float(np.mean(votes != preds.labels))


def _margin_loss_from_correct(correct: np.ndarray, k: int, n: int) -> float:
    # (1 - margin) / 2 == (k - correct) / k; integer sums keep equal losses
    # exactly equal in float, so argmin ties are well defined
    return int(np.sum(k - correct)) / (n * k)


def _squared_margin_loss_from_correct(correct: np.ndarray, k: int, n: int) -> float:
    # (1 - margin)^2 / 4 == (k - correct)^2 / k^2
    wrong = k - correct
    return int(np.sum(wrong * wrong)) / (n * k * k)


def margin_loss(members: Sequence[int], preds: PredictionMatrix) -> float:
    """Mean of (1 - margin) / 2; linear in each member's own error."""
    if len(members) == 0:
        raise ValueError("cannot score an empty member list")
    _check_members(members, preds)
    correct = _correct_counts(members, preds)
    return _margin_loss_from_correct(correct, len(members), preds.n_samples)


def squared_margin_loss(members: Sequence[int], preds: PredictionMatrix) -> float:
    """Mean of (1 - margin)^2 / 4; penalizes narrow-majority samples."""
    if len(members) == 0:
        raise ValueError("cannot score an empty member list")
    _check_members(members, preds)
    correct = _correct_counts(members, preds)
    return _squared_margin_loss_from_correct(correct, len(members), preds.n_samples)


LOSSES: dict[str, LossFn] = {
    "zero_one": zero_one_ensemble_loss,
    "margin": margin_loss,
    "squared_margin": squared_margin_loss,
}


def resolve_loss(loss: str | LossFn) -> LossFn:
    if callable(loss):
        return loss
    try:
        return LOSSES[loss]
    except KeyError:
        raise ValueError(f"unknown loss {loss!r}") from None


def eval_with_candidate(
    ensemble: Ensemble,
    candidate: int,
    preds: PredictionMatrix,
    loss: str | LossFn,
) -> float:
    """Loss of the ensemble's occupied slots with ``candidate`` appended.

    With an empty ensemble this is the candidate's single-model loss.
    """
    loss_fn = resolve_loss(loss)
    members = ensemble.members() + (candidate,)
    return loss_fn(members, preds)


def observation_vector(
    ensemble: Ensemble,
    preds: PredictionMatrix,
    loss: str | LossFn,
) -> np.ndarray:
    """``eval_with_candidate`` for every pool model, as one vector.

    The fixed part of the ensemble is aggregated once, so the cost grows
    linearly with the pool size.  Entry ``h`` is bit-identical to calling
    :func:`eval_with_candidate` with candidate ``h``.
    """
    loss_fn = resolve_loss(loss)
    base = ensemble.members()
    _check_members(base, preds)
    t = preds.n_models
    out = np.empty(t, dtype=float)
    k = len(base) + 1
    if loss_fn is zero_one_ensemble_loss:
        counts = _vote_counts(base, preds)
        cols = np.arange(preds.n_samples)
        for h in range(t):
            row = preds.rows[h]
            counts[row, cols] += 1
            votes = _votes_from_counts(counts)
            out[h] = float(np.mean(votes != preds.labels))
            counts[row, cols] -= 1
        return out
    if loss_fn is margin_loss or loss_fn is squared_margin_loss:
        base_correct = _correct_counts(base, preds)
        hits = (preds.rows == preds.labels[None, :]).astype(np.int64)
        n = preds.n_samples
        for h in range(t):
            correct = base_correct + hits[h]
            if loss_fn is margin_loss:
                out[h] = _margin_loss_from_correct(correct, k, n)
            else:
                out[h] = _squared_margin_loss_from_correct(correct, k, n)
        return out
    for h in range(t):
        out[h] = eval_with_candidate(ensemble, h, preds, loss_fn)
    return out


def _argmin_candidate(
    scores: Sequence[tuple[float, int]],
) -> tuple[float, int]:
    """Smallest (loss, id) pair; equal losses resolve to the lowest id."""
    best_loss, best_id = scores[0]
    for loss_val, h in scores[1:]:
        if loss_val < best_loss:
            best_loss, best_id = loss_val, h
    return best_loss, best_id


def greedy_select(
    pool: Sequence[int],
    preds: PredictionMatrix,
    size: int,
    warm_k: int,
    loss: str | LossFn,
) -> Ensemble:
    """Grow an ensemble greedily, selecting from the pool with replacement.

    The first ``warm_k`` slots take the individually best distinct pool
    models (ranked by single-model loss, ties to the lowest id).  Every
    later slot takes the pool model whose addition minimizes the ensemble
    loss, again breaking ties toward the lowest id.
    """
    pool = sorted(set(int(h) for h in pool))
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    _check_members(pool, preds)
    if size < 1:
        raise ValueError("size must be at least 1")
    if warm_k < 0 or warm_k > size:
        raise ValueError("warm_k must lie in [0, size]")
    if warm_k > len(pool):
        raise ValueError("warm_k exceeds the pool size")
    loss_fn = resolve_loss(loss)

    singles = sorted((loss_fn((h,), preds), h) for h in pool)
    slots: list[int] = [h for _, h in singles[:warm_k]]
    while len(slots) < size:
        scores = [(loss_fn(tuple(slots) + (h,), preds), h) for h in pool]
        _, chosen = _argmin_candidate(scores)
        slots.append(chosen)
    return Ensemble(tuple(slots))


def round_robin_replace(
    ensemble: Ensemble,
    slot: int,
    pool: Sequence[int],
    preds: PredictionMatrix,
    loss: str | LossFn,
) -> Ensemble:
    """Refill one slot with the pool model minimizing the ensemble loss.

    The slot is vacated first, so the previous occupant competes on equal
    terms and may win its place back.  Ties resolve to the lowest id.
    """
    if not 0 <= slot < ensemble.size:
        raise ValueError(f"slot index {slot} out of range")
    pool = sorted(set(int(h) for h in pool))
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    _check_members(pool, preds)
    loss_fn = resolve_loss(loss)
    vacated = ensemble.with_slot(slot, None)
    base = vacated.members()
    scores = [(loss_fn(base + (h,), preds), h) for h in pool]
    _, chosen = _argmin_candidate(scores)
    return vacated.with_slot(slot, chosen)
