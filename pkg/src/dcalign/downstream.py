"""Nearest-centroid classifier over aligned representations.

Predictions depend on the data only through Euclidean distances, so any
common orthogonal change of basis leaves them unchanged (up to rounding on
near-ties).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DimensionError, IoError, ValidationError
from .matio import read_dcm, write_dcm
from .numkernels import as_matrix


@dataclass(frozen=True)
class CentroidModel:
    centroids: np.ndarray
    class_ids: np.ndarray


def fit_nearest_centroid(x_hat, labels, classes=None) -> CentroidModel:
    """Class means of ``x_hat``; rows ordered by ascending class id.

    If ``classes`` is given every listed class must have at least one row.
    """
    x_hat = as_matrix(x_hat, "x_hat")
    labels = np.asarray(labels)
    if labels.shape != (x_hat.shape[0],):
        raise ValidationError(f"{labels.shape[0] if labels.ndim else 0} labels for {x_hat.shape[0]} rows")
    class_ids = np.unique(labels) if classes is None else np.unique(np.asarray(classes))
    centroids = np.empty((len(class_ids), x_hat.shape[1]))
    for row, cls in enumerate(class_ids):
        members = labels == cls
        if not members.any():
            raise ValidationError(f"class {cls} has no samples")
        centroids[row] = x_hat[members].mean(axis=0)
    return CentroidModel(centroids=centroids, class_ids=class_ids)


def squared_distances(model: CentroidModel, y) -> np.ndarray:
    y = as_matrix(y, "y")
    if y.shape[1] != model.centroids.shape[1]:
        raise DimensionError(f"query has {y.shape[1]} columns, model expects {model.centroids.shape[1]}")
    diff = y[:, None, :] - model.centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def predict(model: CentroidModel, y_aligned) -> np.ndarray:
    """Class of the nearest centroid; ties go to the smallest class id."""
    d2 = squared_distances(model, y_aligned)
    return model.class_ids[np.argmin(d2, axis=1)]


def margins(model: CentroidModel, y_aligned) -> np.ndarray:
    """Gap between the second-best and best squared distance (inf with one class)."""
    d2 = squared_distances(model, y_aligned)
    if d2.shape[1] == 1:
        return np.full(d2.shape[0], np.inf)
    part = np.partition(d2, 1, axis=1)
    return part[:, 1] - part[:, 0]


def accuracy(model: CentroidModel, y_aligned, labels) -> float:
    return float(np.mean(predict(model, y_aligned) == np.asarray(labels)))


def pairwise_distances(x) -> np.ndarray:
    return squareform(pdist(as_matrix(x)))


def distance_distortion(reference, other, floor: float = 1e-12) -> float:
    """Largest factor by which any pairwise distance changes between two point sets.

    Pairs whose reference distance is below ``floor`` times the largest
    distance are ignored.
    """
    reference, other = as_matrix(reference), as_matrix(other)
    if reference.shape[0] != other.shape[0]:
        raise DimensionError("point sets must have the same number of rows")
    ref, new = pdist(reference), pdist(other)
    keep = ref > floor * ref.max() if ref.size else np.zeros(0, dtype=bool)
    if not keep.any():
        return 1.0
    ratio = new[keep] / ref[keep]
    with np.errstate(divide="ignore"):
        return float(np.max(np.maximum(ratio, 1.0 / ratio)))


def save_model(model: CentroidModel, directory) -> None:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        write_dcm(directory / "centroids.dcm", model.centroids)
        (directory / "classes.json").write_text(json.dumps([int(c) for c in model.class_ids]))
    except OSError as exc:
        raise IoError(f"cannot save model to {directory}: {exc}") from exc


def load_model(directory) -> CentroidModel:
    directory = Path(directory)
    try:
        class_ids = np.asarray(json.loads((directory / "classes.json").read_text()))
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot load model from {directory}: {exc}") from exc
    return CentroidModel(centroids=read_dcm(directory / "centroids.dcm"), class_ids=class_ids)
