"""Seeded synthetic classification data and non-IID Dirichlet partitioning.

Datasets are Gaussian mixtures with one center per class; identical specs
produce bit-identical data. Partitioning assigns each class's samples
across devices with proportions drawn from a symmetric Dirichlet, using
largest-remainder rounding.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .models import Batch


@dataclass(frozen=True)
class DatasetSpec:
    num_samples: int
    input_dim: int
    num_classes: int
    class_separation: float
    noise_std: float
    seed: int

    def __post_init__(self):
        if self.num_samples < 1 or self.input_dim < 1:
            raise InvalidArgumentError("num_samples and input_dim must be positive")
        if self.num_classes < 2:
            raise InvalidArgumentError("num_classes must be >= 2")
        if self.class_separation <= 0 or self.noise_std <= 0:
            raise InvalidArgumentError("class_separation and noise_std must be positive")


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray  # (n, input_dim) float64
    labels: np.ndarray  # (n,) int64
    spec: DatasetSpec = None

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class Partition:
    device_id: int
    sample_indices: np.ndarray  # distinct indices into the parent dataset

    def __len__(self):
        return len(self.sample_indices)


def _class_centers(spec, rng):
    c, d = spec.num_classes, spec.input_dim
    scale = spec.class_separation / np.sqrt(2.0)
    if c <= d:
        # Orthogonal axis placement: pairwise center distance is exactly
        # class_separation.
        centers = np.zeros((c, d))
        centers[np.arange(c), np.arange(c)] = scale
        return centers
    directions = rng.standard_normal((c, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return scale * directions


def make_synthetic(spec):
    """Gaussian-mixture dataset; per-class counts differ by at most 1."""
    if spec.num_samples < spec.num_classes:
        raise InvalidArgumentError(
            f"num_samples ({spec.num_samples}) < num_classes ({spec.num_classes})"
        )
    rng = np.random.default_rng(spec.seed)
    centers = _class_centers(spec, rng)
    n, c = spec.num_samples, spec.num_classes
    counts = np.full(c, n // c)
    counts[: n % c] += 1
    labels = np.repeat(np.arange(c, dtype=np.int64), counts)
    labels = labels[rng.permutation(n)]
    inputs = centers[labels] + spec.noise_std * rng.standard_normal((n, spec.input_dim))
    return Dataset(inputs=inputs, labels=labels, spec=spec)


def train_test_split(dataset, test_fraction, seed):
    """Seeded split into (train, test) datasets; test gets >= 1 sample."""
    n = len(dataset)
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        raise InvalidArgumentError("test_fraction leaves no training data")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    train = Dataset(dataset.inputs[train_idx], dataset.labels[train_idx], dataset.spec)
    test = Dataset(dataset.inputs[test_idx], dataset.labels[test_idx], dataset.spec)
    return train, test


def _largest_remainder(proportions, total):
    raw = proportions * total
    counts = np.floor(raw).astype(np.int64)
    deficit = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:deficit]] += 1
    return counts


def dirichlet_partition(dataset, m, concentration, seed):
    """Partition a dataset across m devices with Dirichlet label skew.

    For each class, proportions over devices are drawn from a symmetric
    Dirichlet(concentration) and converted to integer counts by largest
    remainder. Any device left empty steals one sample from the largest
    partition, so every partition is nonempty and together they cover the
    dataset exactly.
    """
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    if concentration <= 0:
        raise InvalidArgumentError("concentration must be > 0")
    if m > len(dataset):
        raise InvalidArgumentError(f"m ({m}) exceeds dataset size ({len(dataset)})")
    rng = np.random.default_rng(seed)
    assigned = [[] for _ in range(m)]
    for cls in range(int(dataset.labels.max()) + 1):
        idx = np.nonzero(dataset.labels == cls)[0]
        if len(idx) == 0:
            continue
        rng.shuffle(idx)
        proportions = rng.dirichlet(np.full(m, concentration))
        counts = _largest_remainder(proportions, len(idx))
        start = 0
        for dev in range(m):
            assigned[dev].extend(idx[start : start + counts[dev]])
            start += counts[dev]
    for dev in range(m):
        while not assigned[dev]:
            donor = max(range(m), key=lambda i: (len(assigned[i]), -i))
            assigned[dev].append(assigned[donor].pop())
    return [
        Partition(device_id=dev, sample_indices=np.sort(np.asarray(assigned[dev], dtype=np.int64)))
        for dev in range(m)
    ]


def sample_minibatch(partition, dataset, batch_size, rng, full_batch=False):
    """Uniform sample with replacement from a partition; advances rng.

    With full_batch=True the whole partition is returned in index order
    and the rng is not consumed.
    """
    if len(partition) == 0:
        raise InvalidArgumentError("cannot sample from an empty partition")
    if full_batch:
        idx = partition.sample_indices
    else:
        if batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")
        idx = partition.sample_indices[rng.integers(0, len(partition), size=batch_size)]
    return Batch(dataset.inputs[idx], dataset.labels[idx])


def label_entropy(labels, num_classes):
    """Shannon entropy (nats) of the label distribution."""
    counts = np.bincount(labels, minlength=num_classes).astype(float)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def mean_label_entropy(dataset, partitions, num_classes):
    return float(
        np.mean(
            [label_entropy(dataset.labels[p.sample_indices], num_classes) for p in partitions]
        )
    )


def dataset_to_json(dataset):
    """Serialize a dataset (spec, samples, labels) to a JSON string."""
    doc = {
        "spec": None if dataset.spec is None else dataset.spec.__dict__.copy(),
        "inputs": dataset.inputs.tolist(),
        "labels": dataset.labels.tolist(),
    }
    return json.dumps(doc)


def dataset_from_json(text):
    doc = json.loads(text)
    spec = None if doc["spec"] is None else DatasetSpec(**doc["spec"])
    return Dataset(
        inputs=np.asarray(doc["inputs"], dtype=np.float64),
        labels=np.asarray(doc["labels"], dtype=np.int64),
        spec=spec,
    )


def partitions_to_json(partitions):
    return json.dumps(
        [{"device_id": p.device_id, "sample_indices": p.sample_indices.tolist()} for p in partitions]
    )


def partitions_from_json(text):
    return [
        Partition(device_id=d["device_id"], sample_indices=np.asarray(d["sample_indices"], dtype=np.int64))
        for d in json.loads(text)
    ]
