import numpy as np
import pytest

from fedsim.data import (
    Dataset,
    DatasetSpec,
    Partition,
    dataset_from_json,
    dataset_to_json,
    dirichlet_partition,
    make_synthetic,
    mean_label_entropy,
    partitions_from_json,
    partitions_to_json,
    sample_minibatch,
    train_test_split,
)
from fedsim.errors import InvalidArgumentError
from fedsim.models import LOGISTIC, Batch, ModelSpec, grad, sgd_step, evaluate


def spec(**overrides):
    base = dict(
        num_samples=400,
        input_dim=6,
        num_classes=4,
        class_separation=3.0,
        noise_std=1.0,
        seed=123,
    )
    base.update(overrides)
    return DatasetSpec(**base)


def assert_valid_partitioning(dataset, parts, m):
    assert len(parts) == m
    seen = np.concatenate([p.sample_indices for p in parts])
    assert len(seen) == len(dataset)
    assert len(np.unique(seen)) == len(dataset)
    for p in parts:
        assert len(p) > 0


class TestMakeSynthetic:
    def test_deterministic(self):
        a = make_synthetic(spec())
        b = make_synthetic(spec())
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.labels, b.labels)

    def test_class_counts_balanced(self):
        ds = make_synthetic(spec(num_samples=402))
        counts = np.bincount(ds.labels, minlength=4)
        assert counts.max() - counts.min() <= 1
        assert counts.sum() == 402

    def test_too_few_samples_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_synthetic(spec(num_samples=3, num_classes=5))

    def test_separable_data_trains_to_high_accuracy(self):
        # Oracle: centralized SGD on a nearly noise-free, well-separated
        # mixture should classify almost perfectly.
        ds = make_synthetic(spec(num_samples=600, class_separation=10.0, noise_std=0.01))
        model = ModelSpec(LOGISTIC, input_dim=6, num_classes=4)
        rng = np.random.default_rng(0)
        params = np.zeros(model.param_count)
        full = Batch(ds.inputs, ds.labels)
        for _ in range(300):
            params = sgd_step(params, grad(model, params, full), 0.5)
        _, acc = evaluate(model, params, ds)
        assert acc > 0.99


class TestTrainTestSplit:
    def test_split_covers_and_is_seeded(self):
        ds = make_synthetic(spec())
        tr1, te1 = train_test_split(ds, 0.1, seed=9)
        tr2, te2 = train_test_split(ds, 0.1, seed=9)
        assert np.array_equal(tr1.inputs, tr2.inputs)
        assert np.array_equal(te1.labels, te2.labels)
        assert len(tr1) + len(te1) == len(ds)
        assert len(te1) == 40


class TestDirichletPartition:
    def test_single_device_gets_everything(self):
        ds = make_synthetic(spec())
        (part,) = dirichlet_partition(ds, 1, 1.0, seed=0)
        assert np.array_equal(part.sample_indices, np.arange(len(ds)))

    def test_deterministic(self):
        ds = make_synthetic(spec())
        a = dirichlet_partition(ds, 7, 0.5, seed=42)
        b = dirichlet_partition(ds, 7, 0.5, seed=42)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.sample_indices, pb.sample_indices)

    def test_disjoint_cover_over_random_draws(self):
        rng = np.random.default_rng(77)
        ds = make_synthetic(spec())
        for _ in range(50):
            m = int(rng.integers(1, 30))
            concentration = float(10 ** rng.uniform(-1.5, 2))
            parts = dirichlet_partition(ds, m, concentration, seed=int(rng.integers(1 << 30)))
            assert_valid_partitioning(ds, parts, m)

    def test_m_larger_than_dataset_rejected(self):
        ds = make_synthetic(spec(num_samples=10))
        with pytest.raises(InvalidArgumentError):
            dirichlet_partition(ds, 11, 1.0, seed=0)
        with pytest.raises(InvalidArgumentError):
            dirichlet_partition(ds, 0, 1.0, seed=0)
        with pytest.raises(InvalidArgumentError):
            dirichlet_partition(ds, 2, 0.0, seed=0)

    def test_high_concentration_more_uniform_labels(self):
        ds = make_synthetic(spec(num_samples=2000, num_classes=10, input_dim=10))
        lo, hi = [], []
        for s in range(20):
            lo.append(mean_label_entropy(ds, dirichlet_partition(ds, 20, 0.1, seed=s), 10))
            hi.append(mean_label_entropy(ds, dirichlet_partition(ds, 20, 100.0, seed=s), 10))
        assert np.mean(hi) > np.mean(lo)

    def test_entropy_monotone_in_concentration(self):
        ds = make_synthetic(spec(num_samples=2000, num_classes=10, input_dim=10))
        means = []
        for concentration in (0.1, 0.5, 1.0, 10.0, 100.0):
            vals = [
                mean_label_entropy(ds, dirichlet_partition(ds, 20, concentration, seed=s), 10)
                for s in range(20)
            ]
            means.append(np.mean(vals))
        assert all(b >= a for a, b in zip(means, means[1:]))


class TestSampleMinibatch:
    def test_full_batch_returns_partition(self):
        ds = make_synthetic(spec())
        part = dirichlet_partition(ds, 5, 1.0, seed=3)[2]
        batch = sample_minibatch(part, ds, len(part), np.random.default_rng(0), full_batch=True)
        assert np.array_equal(batch.inputs, ds.inputs[part.sample_indices])
        assert np.array_equal(batch.labels, ds.labels[part.sample_indices])

    def test_same_rng_state_same_batch(self):
        ds = make_synthetic(spec())
        part = dirichlet_partition(ds, 5, 1.0, seed=3)[0]
        a = sample_minibatch(part, ds, 8, np.random.default_rng(11))
        b = sample_minibatch(part, ds, 8, np.random.default_rng(11))
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.labels, b.labels)

    def test_uniform_frequencies(self):
        ds = make_synthetic(spec(num_samples=40))
        part = Partition(0, np.array([1, 5, 9, 13]))
        rng = np.random.default_rng(4)
        counts = {i: 0 for i in part.sample_indices}
        for _ in range(10000):
            batch = sample_minibatch(part, ds, 1, rng)
            key = int(np.nonzero((ds.inputs == batch.inputs[0]).all(axis=1))[0][0])
            counts[key] += 1
        expected = 10000 / 4
        sigma = np.sqrt(10000 * 0.25 * 0.75)
        for c in counts.values():
            assert abs(c - expected) <= 3 * sigma

    def test_empty_partition_rejected(self):
        ds = make_synthetic(spec())
        with pytest.raises(InvalidArgumentError):
            sample_minibatch(Partition(0, np.array([], dtype=np.int64)), ds, 4, np.random.default_rng(0))


class TestJsonRoundTrip:
    def test_dataset(self):
        ds = make_synthetic(spec(num_samples=30))
        restored = dataset_from_json(dataset_to_json(ds))
        assert np.array_equal(restored.inputs, ds.inputs)
        assert np.array_equal(restored.labels, ds.labels)
        assert restored.spec == ds.spec

    def test_partitions(self):
        ds = make_synthetic(spec(num_samples=30))
        parts = dirichlet_partition(ds, 4, 0.7, seed=1)
        restored = partitions_from_json(partitions_to_json(parts))
        for a, b in zip(parts, restored):
            assert a.device_id == b.device_id
            assert np.array_equal(a.sample_indices, b.sample_indices)
