"""Synthetic alignment task generator."""

import numpy as np
import pytest

from brainalign.errors import ValidationError
from brainalign.task import make_synthetic_task


def test_task_shapes_and_counts():
    task = make_synthetic_task(0, n_subjects=2, signal_length=10, tokens=4,
                               dim=3, samples_per_subject=5)
    assert task.n_samples == 10
    assert task.subjects == ("subject00", "subject01")
    assert task.subject_dims == {"subject00": 10, "subject01": 10}
    s = task.samples[0]
    assert s.signal.shape == (10,)
    assert s.target.shape == (4, 3)


def test_task_is_deterministic():
    a = make_synthetic_task(7, samples_per_subject=4)
    b = make_synthetic_task(7, samples_per_subject=4)
    np.testing.assert_array_equal(a.samples[3].target, b.samples[3].target)
    c = make_synthetic_task(8, samples_per_subject=4)
    assert not np.array_equal(a.samples[3].target, c.samples[3].target)


def test_targets_are_noisy_tanh_of_signal():
    task = make_synthetic_task(1, n_subjects=1, signal_length=12, tokens=4,
                               dim=2, samples_per_subject=50, noise_std=0.05)
    sample = task.samples[7]
    clean = task.clean_target(sample.subject, sample.signal)
    resid = sample.target - clean
    assert np.max(np.abs(resid)) < 5 * 0.05
    assert np.std(resid) == pytest.approx(0.05, rel=0.5)
    assert np.max(np.abs(clean)) <= 1.0  # tanh range


def test_zero_noise_targets_exactly_clean():
    task = make_synthetic_task(2, n_subjects=1, samples_per_subject=3, noise_std=0.0)
    s = task.samples[1]
    np.testing.assert_allclose(s.target, task.clean_target(s.subject, s.signal))


def test_task_validation():
    with pytest.raises(ValidationError):
        make_synthetic_task(0, n_subjects=0)
    with pytest.raises(ValidationError):
        make_synthetic_task(0, samples_per_subject=0)
    with pytest.raises(ValidationError):
        make_synthetic_task(0, noise_std=-0.1)
