"""Spike-train data types, synthetic task generation, Poisson encoding and
line-oriented event-file I/O.

All timing is in dimensionless timesteps; rates are expected spikes per
timestep. Types are immutable after construction (event arrays are marked
read-only) and generation is pure given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BinarySpikeTrain",
    "WeightedSpikeTrain",
    "SpikeDataset",
    "poisson_encode",
    "synthetic_task",
    "load_event_file",
    "save_event_file",
    "trains_to_dense",
    "dense_to_trains",
]


def _frozen_int_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BinarySpikeTrain:
    """Per-channel binary spike sequence: at most one spike per timestep."""

    channel_id: int
    events: np.ndarray  # strictly increasing timestep indices
    length_steps: int

    def __post_init__(self):
        object.__setattr__(self, "events", _frozen_int_array(self.events))
        ev = self.events
        if ev.ndim != 1:
            raise ValueError("events must be a 1-d sequence of timesteps")
        if ev.size:
            if (np.diff(ev) <= 0).any():
                raise ValueError(f"channel {self.channel_id}: timesteps must be strictly increasing")
            if ev[0] < 0 or ev[-1] >= self.length_steps:
                raise ValueError(f"channel {self.channel_id}: event outside [0, {self.length_steps})")

    @property
    def spike_count(self) -> int:
        return int(self.events.size)

    def __eq__(self, other):
        if not isinstance(other, BinarySpikeTrain):
            return NotImplemented
        return (
            self.channel_id == other.channel_id
            and self.length_steps == other.length_steps
            and np.array_equal(self.events, other.events)
        )


@dataclass(frozen=True, eq=False)
class WeightedSpikeTrain:
    """Spike sequence where each event carries a positive integer weight."""

    channel_id: int
    events: np.ndarray  # shape (n, 2): (timestep, weight >= 1)
    length_steps: int
    gamma: int = 1

    def __post_init__(self):
        arr = np.asarray(self.events, dtype=np.int64).reshape(-1, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "events", arr)
        if arr.size:
            if (np.diff(arr[:, 0]) <= 0).any():
                raise ValueError(f"channel {self.channel_id}: timesteps must be strictly increasing")
            if arr[0, 0] < 0 or arr[-1, 0] >= self.length_steps:
                raise ValueError(f"channel {self.channel_id}: event outside [0, {self.length_steps})")
            if (arr[:, 1] < 1).any():
                raise ValueError(f"channel {self.channel_id}: weights must be >= 1")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")

    @property
    def timesteps(self) -> np.ndarray:
        return self.events[:, 0]

    @property
    def weights(self) -> np.ndarray:
        return self.events[:, 1]

    @property
    def total_weight(self) -> int:
        return int(self.events[:, 1].sum()) if self.events.size else 0

    def __eq__(self, other):
        if not isinstance(other, WeightedSpikeTrain):
            return NotImplemented
        return (
            self.channel_id == other.channel_id
            and self.length_steps == other.length_steps
            and self.gamma == other.gamma
            and np.array_equal(self.events, other.events)
        )


@dataclass(frozen=True, eq=False)
class SpikeDataset:
    """Labeled multi-channel spike-train examples sharing one geometry."""

    examples: tuple  # of (tuple[BinarySpikeTrain, ...], label)
    num_channels: int
    num_classes: int
    length_steps: int

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple((tuple(trains), int(label)) for trains, label in self.examples))
        for idx, (trains, label) in enumerate(self.examples):
            if len(trains) != self.num_channels:
                raise ValueError(f"example {idx}: expected {self.num_channels} channels, got {len(trains)}")
            if not 0 <= label < self.num_classes:
                raise ValueError(f"example {idx}: label {label} out of range [0, {self.num_classes})")
            for tr in trains:
                if tr.length_steps != self.length_steps:
                    raise ValueError(f"example {idx}: train length {tr.length_steps} != {self.length_steps}")

    def __len__(self) -> int:
        return len(self.examples)

    def __eq__(self, other):
        if not isinstance(other, SpikeDataset):
            return NotImplemented
        return (
            self.num_channels == other.num_channels
            and self.num_classes == other.num_classes
            and self.length_steps == other.length_steps
            and self.examples == other.examples
        )


def trains_to_dense(trains, length_steps: int | None = None) -> np.ndarray:
    """Stack trains into a dense (channels, steps) count array."""
    trains = list(trains)
    if length_steps is None:
        length_steps = trains[0].length_steps if trains else 0
    dense = np.zeros((len(trains), length_steps), dtype=np.int64)
    for row, tr in enumerate(trains):
        if isinstance(tr, WeightedSpikeTrain):
            if tr.events.size:
                dense[row, tr.events[:, 0]] = tr.events[:, 1]
        elif tr.events.size:
            dense[row, tr.events] = 1
    return dense


def dense_to_trains(dense: np.ndarray) -> list[BinarySpikeTrain]:
    """Inverse of :func:`trains_to_dense` for binary (0/1) matrices."""
    return [
        BinarySpikeTrain(channel_id=ch, events=np.flatnonzero(dense[ch]), length_steps=dense.shape[1])
        for ch in range(dense.shape[0])
    ]


def poisson_encode(rates, length_steps: int, seed: int) -> list[BinarySpikeTrain]:
    """Encode per-channel rates as independent Bernoulli(rate) processes.

    Rates are expected spikes per timestep, each in [0, 1]. The same
    (rates, length_steps, seed) triple always produces identical trains.
    """
    rates = np.asarray(rates, dtype=np.float64)
    if rates.ndim != 1:
        raise ValueError("rates must be a 1-d per-channel sequence")
    if (rates < 0.0).any() or (rates > 1.0).any():
        raise ValueError("rates must lie in [0, 1]")
    if length_steps < 1:
        raise ValueError("length_steps must be >= 1")
    rng = np.random.default_rng(seed)
    draws = rng.random((rates.size, length_steps))
    fired = draws < rates[:, None]
    return [
        BinarySpikeTrain(channel_id=ch, events=np.flatnonzero(fired[ch]), length_steps=length_steps)
        for ch in range(rates.size)
    ]


def synthetic_task(
    num_classes: int,
    num_channels: int,
    length_steps: int,
    jitter_steps: int,
    examples_per_class: int,
    seed: int,
    template_rate: float = 0.05,
    deletion_prob: float = 0.05,
    insertion_prob: float = 0.005,
) -> SpikeDataset:
    """Generate a deterministic desk-scale classification task.

    One frozen random template pattern per class; examples are noisy copies:
    each template spike survives with probability 1-deletion_prob and is
    jittered uniformly in [-jitter_steps, +jitter_steps] (clamped to the
    train), and each remaining empty timestep gains a spurious spike with
    probability insertion_prob.
    """
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if num_channels < 1:
        raise ValueError("num_channels must be >= 1")
    if jitter_steps >= length_steps:
        raise ValueError("jitter_steps must be smaller than length_steps")
    if jitter_steps < 0:
        raise ValueError("jitter_steps must be >= 0")

    rng = np.random.default_rng(seed)
    templates = rng.random((num_classes, num_channels, length_steps)) < template_rate

    examples = []
    for label in range(num_classes):
        for _ in range(examples_per_class):
            dense = np.zeros((num_channels, length_steps), dtype=bool)
            for ch in range(num_channels):
                times = np.flatnonzero(templates[label, ch])
                if times.size:
                    keep = rng.random(times.size) >= deletion_prob
                    times = times[keep]
                if times.size and jitter_steps > 0:
                    offsets = rng.integers(-jitter_steps, jitter_steps + 1, size=times.size)
                    times = np.clip(times + offsets, 0, length_steps - 1)
                dense[ch, times] = True
                if insertion_prob > 0.0:
                    empty = np.flatnonzero(~dense[ch])
                    if empty.size:
                        extra = empty[rng.random(empty.size) < insertion_prob]
                        dense[ch, extra] = True
            trains = dense_to_trains(dense.astype(np.int64))
            examples.append((tuple(trains), label))
    return SpikeDataset(
        examples=tuple(examples),
        num_channels=num_channels,
        num_classes=num_classes,
        length_steps=length_steps,
    )


class EventFileError(ValueError):
    """Raised on malformed event files, with the offending line number."""


def _fail(path, lineno: int, msg: str):
    raise EventFileError(f"{path}:{lineno}: {msg}")


def load_event_file(path) -> SpikeDataset:
    """Load a dataset from the line-oriented event-file format.

    Format: header ``channels=<n> classes=<k> steps=<T>``, then blocks
    opened by ``example label=<c>`` containing ``<channel> <timestep>``
    lines. ``#`` starts a comment; blank lines are ignored.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except FileNotFoundError:
        raise FileNotFoundError(f"event file not found: {path}") from None

    header = None
    examples = []
    current: np.ndarray | None = None  # dense (channels, steps) for the open example
    current_label = 0
    last_time: np.ndarray | None = None  # per-channel last timestep seen

    def close_example():
        nonlocal current
        if current is not None:
            examples.append((tuple(dense_to_trains(current)), current_label))
            current = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            fields = dict(tok.split("=", 1) for tok in line.split() if "=" in tok)
            if set(fields) != {"channels", "classes", "steps"}:
                _fail(path, lineno, "header must be 'channels=<n> classes=<k> steps=<T>'")
            try:
                header = {k: int(v) for k, v in fields.items()}
            except ValueError:
                _fail(path, lineno, "header values must be integers")
            if min(header.values()) < 1:
                _fail(path, lineno, "header values must be positive")
            continue
        if line.startswith("example"):
            close_example()
            parts = line.split()
            if len(parts) != 2 or not parts[1].startswith("label="):
                _fail(path, lineno, "expected 'example label=<c>'")
            try:
                current_label = int(parts[1][len("label="):])
            except ValueError:
                _fail(path, lineno, "label must be an integer")
            if not 0 <= current_label < header["classes"]:
                _fail(path, lineno, f"label {current_label} out of range [0, {header['classes']})")
            current = np.zeros((header["channels"], header["steps"]), dtype=np.int64)
            last_time = np.full(header["channels"], -1, dtype=np.int64)
            continue
        if current is None:
            _fail(path, lineno, "event line before any 'example' block")
        parts = line.split()
        if len(parts) != 2:
            _fail(path, lineno, "expected '<channel> <timestep>'")
        try:
            ch, t = int(parts[0]), int(parts[1])
        except ValueError:
            _fail(path, lineno, "channel and timestep must be integers")
        if not 0 <= ch < header["channels"]:
            _fail(path, lineno, f"channel {ch} out of range [0, {header['channels']})")
        if not 0 <= t < header["steps"]:
            _fail(path, lineno, f"timestep {t} out of range [0, {header['steps']})")
        if t <= last_time[ch]:
            _fail(path, lineno, f"non-monotonic timestamp {t} on channel {ch}")
        last_time[ch] = t
        current[ch, t] = 1

    if header is None:
        raise EventFileError(f"{path}: missing header line")
    close_example()
    return SpikeDataset(
        examples=tuple(examples),
        num_channels=header["channels"],
        num_classes=header["classes"],
        length_steps=header["steps"],
    )


def save_event_file(dataset: SpikeDataset, path):
    """Write a dataset in the same format :func:`load_event_file` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"channels={dataset.num_channels} classes={dataset.num_classes} steps={dataset.length_steps}\n")
        for trains, label in dataset.examples:
            fh.write(f"example label={label}\n")
            for tr in trains:
                for t in tr.events:
                    fh.write(f"{tr.channel_id} {int(t)}\n")
