"""On-disk layout of a finished run.

A run directory holds ``run.json`` (metadata, per-iteration audit log and
final selections), the prediction rows of every trained model aligned with
``history/configs.json``, and the labels of both evaluation splits.  The
files are sufficient to rebuild selections without retraining anything.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any

import numpy as np

from .hyperspace import Config, SearchSpace
from .optimizer import History, RunArtifact

RUN_FILE = "run.json"
CONFIGS_FILE = os.path.join("history", "configs.json")
VAL_PREDICTIONS_FILE = os.path.join("history", "predictions_val.csv")
TEST_PREDICTIONS_FILE = os.path.join("history", "predictions_test.csv")
VAL_LABELS_FILE = "labels_val.csv"
TEST_LABELS_FILE = "labels_test.csv"


def _write_int_rows(path: str, rows: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(rows):
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def _read_int_rows(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(v) for v in line.split(",")])
    return np.array(rows, dtype=np.int64)


def space_digest(space_doc: dict[str, Any]) -> str:
    canon = json.dumps(space_doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def save_artifact(directory: str, artifact: RunArtifact, history: History) -> None:
    """Write one run directory; overwrites files already present."""
    os.makedirs(os.path.join(directory, "history"), exist_ok=True)
    doc = {
        "engine": artifact.engine,
        "budget": artifact.budget,
        "init": artifact.init,
        "seed": artifact.seed,
        "loss": artifact.loss,
        "space": artifact.space,
        "space_digest": space_digest(artifact.space),
        "n_labels": artifact.n_labels,
        "ensemble_size": artifact.ensemble_size,
        "iterations": [it.to_dict() for it in artifact.iterations],
        "final": artifact.final,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(directory, RUN_FILE), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    configs = [
        {
            "id": r.id,
            "values": r.config.values,
            "point": [float(x) for x in r.point],
            "val_loss": r.val_loss,
            "degenerate": r.degenerate,
        }
        for r in history.records
    ]
    with open(os.path.join(directory, CONFIGS_FILE), "w", encoding="utf-8") as fh:
        json.dump(configs, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_int_rows(
        os.path.join(directory, VAL_PREDICTIONS_FILE),
        np.array([r.val_row for r in history.records]),
    )
    _write_int_rows(
        os.path.join(directory, TEST_PREDICTIONS_FILE),
        np.array([r.test_row for r in history.records]),
    )
    _write_int_rows(os.path.join(directory, VAL_LABELS_FILE), history.labels_val[None, :])
    _write_int_rows(os.path.join(directory, TEST_LABELS_FILE), history.labels_test[None, :])


@dataclass
class LoadedRun:
    """A run directory pulled back into memory."""

    run: dict[str, Any]
    history: History
    space: SearchSpace

    @property
    def engine(self) -> str:
        return self.run["engine"]


def load_artifact(directory: str) -> LoadedRun:
    """Rebuild the history of a run from its directory alone."""
    with open(os.path.join(directory, RUN_FILE), "r", encoding="utf-8") as fh:
        run = json.load(fh)
    with open(os.path.join(directory, CONFIGS_FILE), "r", encoding="utf-8") as fh:
        configs = json.load(fh)
    val_rows = _read_int_rows(os.path.join(directory, VAL_PREDICTIONS_FILE))
    test_rows = _read_int_rows(os.path.join(directory, TEST_PREDICTIONS_FILE))
    labels_val = _read_int_rows(os.path.join(directory, VAL_LABELS_FILE))[0]
    labels_test = _read_int_rows(os.path.join(directory, TEST_LABELS_FILE))[0]
    if val_rows.shape[0] != len(configs) or test_rows.shape[0] != len(configs):
        raise ValueError(f"{directory}: prediction rows do not match configs.json")
    history = History(labels_val, labels_test, int(run["n_labels"]))
    for entry, val_row, test_row in zip(configs, val_rows, test_rows):
        record = history.append(
            Config(dict(entry["values"])),
            np.asarray(entry["point"], dtype=float),
            val_row,
            test_row,
            degenerate=bool(entry.get("degenerate", False)),
        )
        if record.id != entry["id"]:
            raise ValueError(f"{directory}: non-contiguous model ids in configs.json")
    return LoadedRun(run=run, history=history, space=SearchSpace.from_dict(run["space"]))
