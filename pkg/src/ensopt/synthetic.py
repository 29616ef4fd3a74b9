"""Small synthetic classification datasets for demos and tests."""

from __future__ import annotations

import numpy as np

from .learners import Dataset


def gaussian_blobs(
    n: int,
    centers: np.ndarray | None = None,
    spread: float = 1.1,
    seed: int = 0,
) -> Dataset:
    """Isotropic Gaussian clusters, one class per centre, sizes within one."""
    if centers is None:
        centers = np.array([[0.0, 0.0], [2.5, 0.0], [1.25, 2.0]])
    centers = np.asarray(centers, dtype=float)
    rng = np.random.default_rng(seed)
    k = centers.shape[0]
    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]
    features = []
    labels = []
    for c, count in enumerate(counts):
        features.append(centers[c] + spread * rng.standard_normal((count, centers.shape[1])))
        labels.append(np.full(count, c, dtype=np.int64))
    return Dataset(
        np.vstack(features),
        np.concatenate(labels),
        tuple(str(c) for c in range(k)),
    )


def two_moons(n: int, noise: float = 0.3, seed: int = 0) -> Dataset:
    """Two interleaved half-circles with additive Gaussian noise."""
    rng = np.random.default_rng(seed)
    n0 = n // 2
    n1 = n - n0
    t0 = rng.random(n0) * np.pi
    t1 = rng.random(n1) * np.pi
    outer = np.column_stack([np.cos(t0), np.sin(t0)])
    inner = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    features = np.vstack([outer, inner]) + noise * rng.standard_normal((n, 2))
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return Dataset(features, labels, ("0", "1"))


def to_csv(data: Dataset, path: str, label_col: str = "label") -> None:
    """Write a dataset in the CSV layout :func:`ensopt.data.load_csv` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        cols = [f"x{i}" for i in range(data.n_features)] + [label_col]
        fh.write(",".join(cols) + "\n")
        for row, code in zip(data.features, data.labels):
            cells = [repr(float(v)) for v in row] + [data.label_names[code]]
            fh.write(",".join(cells) + "\n")
