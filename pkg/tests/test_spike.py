import numpy as np
import pytest

from tcsnn.spike import (
    BinarySpikeTrain,
    EventFileError,
    SpikeDataset,
    dense_to_trains,
    load_event_file,
    poisson_encode,
    save_event_file,
    synthetic_task,
    trains_to_dense,
)


class TestTrainTypes:
    def test_rejects_decreasing_timesteps(self):
        with pytest.raises(ValueError):
            BinarySpikeTrain(0, [3, 2], 10)

    def test_rejects_event_past_end(self):
        with pytest.raises(ValueError):
            BinarySpikeTrain(0, [9, 10], 10)

    def test_events_are_read_only(self):
        tr = BinarySpikeTrain(0, [1, 5], 10)
        with pytest.raises(ValueError):
            tr.events[0] = 2

    def test_dense_round_trip(self):
        dense = np.zeros((3, 8), dtype=np.int64)
        dense[0, 2] = 1
        dense[2, 7] = 1
        trains = dense_to_trains(dense)
        assert np.array_equal(trains_to_dense(trains, 8), dense)


class TestPoissonEncode:
    def test_zero_rate_gives_empty_train(self):
        trains = poisson_encode([0.0, 0.0], 50, seed=3)
        assert all(tr.spike_count == 0 for tr in trains)

    def test_rate_one_fires_every_step(self):
        (tr,) = poisson_encode([1.0], 10, seed=3)
        assert np.array_equal(tr.events, np.arange(10))

    def test_counts_match_binomial_statistics(self):
        # rate 0.1 over 10000 steps: mean 1000, sigma 30; stay within 3 sigma
        (tr,) = poisson_encode([0.1], 10000, seed=1234)
        assert abs(tr.spike_count - 1000) <= 90

    def test_reproducible(self):
        a = poisson_encode([0.2, 0.7], 100, seed=9)
        b = poisson_encode([0.2, 0.7], 100, seed=9)
        assert a == b

    def test_rate_out_of_range(self):
        with pytest.raises(ValueError):
            poisson_encode([1.5], 10, seed=0)
        with pytest.raises(ValueError):
            poisson_encode([-0.1], 10, seed=0)


class TestSyntheticTask:
    def test_zero_noise_examples_equal_template(self):
        ds = synthetic_task(2, 5, 50, jitter_steps=0, examples_per_class=4, seed=7,
                            deletion_prob=0.0, insertion_prob=0.0)
        for label in range(2):
            same = [trains for trains, lab in ds.examples if lab == label]
            for trains in same[1:]:
                assert trains == same[0]

    def test_example_counting(self):
        ds = synthetic_task(5, 10, 40, 2, examples_per_class=20, seed=1)
        assert len(ds) == 100
        labels = [lab for _, lab in ds.examples]
        assert all(labels.count(c) == 20 for c in range(5))

    def test_distinct_seeds_distinct_templates(self):
        a = synthetic_task(2, 8, 60, 0, 1, seed=1, deletion_prob=0.0, insertion_prob=0.0)
        b = synthetic_task(2, 8, 60, 0, 1, seed=2, deletion_prob=0.0, insertion_prob=0.0)
        assert a != b

    def test_classes_differ_for_generic_seed(self):
        ds = synthetic_task(2, 8, 60, 0, 1, seed=5, deletion_prob=0.0, insertion_prob=0.0)
        (t0, _), (t1, _) = ds.examples
        assert t0 != t1

    def test_jitter_bound_validated(self):
        with pytest.raises(ValueError):
            synthetic_task(2, 4, 20, jitter_steps=20, examples_per_class=1, seed=0)

    def test_deterministic(self):
        a = synthetic_task(3, 6, 30, 2, 5, seed=42)
        b = synthetic_task(3, 6, 30, 2, 5, seed=42)
        assert a == b


class TestEventFile:
    def test_round_trip(self, tmp_path):
        ds = synthetic_task(3, 7, 25, 1, 4, seed=11)
        path = tmp_path / "task.events"
        save_event_file(ds, path)
        assert load_event_file(path) == ds

    def test_single_event(self, tmp_path):
        path = tmp_path / "one.events"
        path.write_text("channels=5 classes=2 steps=10\nexample label=1\n3 7\n")
        ds = load_event_file(path)
        trains, label = ds.examples[0]
        assert label == 1
        assert trains[3].spike_count == 1 and trains[3].events[0] == 7
        assert sum(tr.spike_count for tr in trains) == 1

    def test_empty_example(self, tmp_path):
        path = tmp_path / "empty.events"
        path.write_text("channels=3 classes=2 steps=10\nexample label=0\n")
        ds = load_event_file(path)
        trains, _ = ds.examples[0]
        assert all(tr.spike_count == 0 for tr in trains)

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "c.events"
        path.write_text("# header next\nchannels=2 classes=2 steps=5\nexample label=0  # first\n0 1\n# done\n")
        ds = load_event_file(path)
        assert ds.examples[0][0][0].spike_count == 1

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_event_file("/nonexistent/file.events")

    def test_non_monotonic_reports_line(self, tmp_path):
        path = tmp_path / "bad.events"
        path.write_text("channels=2 classes=2 steps=10\nexample label=0\n0 5\n0 3\n")
        with pytest.raises(EventFileError, match=":4:"):
            load_event_file(path)

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "bad.events"
        path.write_text("channels=2 classes=2 steps=10\nexample label=2\n")
        with pytest.raises(EventFileError, match="label 2"):
            load_event_file(path)

    def test_malformed_event_line(self, tmp_path):
        path = tmp_path / "bad.events"
        path.write_text("channels=2 classes=2 steps=10\nexample label=0\n0 1 2\n")
        with pytest.raises(EventFileError, match=":3:"):
            load_event_file(path)

    def test_dataset_invariants(self):
        tr = BinarySpikeTrain(0, [1], 10)
        with pytest.raises(ValueError):
            SpikeDataset(examples=(((tr,), 5),), num_channels=1, num_classes=2, length_steps=10)
