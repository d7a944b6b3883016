"""Labeled range-profile synthesis and the RPDS dataset file format.

A range profile is the complex baseband signal received over one pulse
repetition interval: ``m`` samples holding superposed, scaled copies of a
(possibly distorted) pulse plus circular white Gaussian noise.  Labels mark
the leading edge of every target echo.
"""

import itertools
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .signal import Waveform, make_lfm_chirp, make_tone_pulse

__all__ = [
    "ProfileKind",
    "RangeProfile",
    "DatasetSpec",
    "Dataset",
    "DatasetFormatError",
    "place_targets_regular",
    "jitter_positions",
    "synthesize_profile",
    "profile_rng",
    "generate_dataset",
    "RECIPES",
    "recipe_spec",
    "write_dataset",
    "read_dataset",
]


class ProfileKind(IntEnum):
    TARGETS = 0
    EMPTY = 1
    CONTRASTIVE = 2


@dataclass
class RangeProfile:
    samples: np.ndarray  # complex, shape (m,)
    labels: np.ndarray  # bool, shape (m,)
    target_bins: np.ndarray  # int64, sorted
    bandwidth_hz: float
    reflection_coeff: float
    noise_std: float
    kind: ProfileKind = ProfileKind.TARGETS

    @property
    def m(self) -> int:
        return len(self.samples)


def place_targets_regular(num_targets: int, stride: int, offset: int, m: int, n: int) -> list[int]:
    """Evenly spaced leading-edge bins ``offset, offset + stride, ...``."""
    if num_targets < 1 or stride < 1 or offset < 0:
        raise ValueError("need num_targets >= 1, stride >= 1 and offset >= 0")
    last = offset + (num_targets - 1) * stride
    if last + n > m:
        raise ValueError(f"last echo at bin {last} overflows a {m}-bin profile (pulse length {n})")
    return list(range(offset, last + 1, stride))


def jitter_positions(positions: Sequence[int], jitter_max: int, m: int, n: int,
                     rng: np.random.Generator) -> list[int]:
    """Shift each bin by a uniform integer in ``[-jitter_max, jitter_max]``.

    Shifted bins are clamped to ``[0, m - n]``; collisions are collapsed so
    the result stays strictly increasing.
    """
    pos = np.asarray(positions, dtype=np.int64)
    if jitter_max == 0 or pos.size == 0:
        return pos.tolist()
    shifted = pos + rng.integers(-jitter_max, jitter_max + 1, size=pos.size)
    return np.unique(np.clip(shifted, 0, m - n)).tolist()


def synthesize_profile(w: Waveform | np.ndarray, positions: Sequence[int], reflection_coeff: float,
                       noise_std: float, m: int, rng: np.random.Generator | None = None,
                       bandwidth_hz: float | None = None,
                       kind: ProfileKind = ProfileKind.TARGETS) -> RangeProfile:
    """Superpose scaled echoes of ``w`` at ``positions`` and add complex noise.

    Noise has independent real and imaginary parts, each with standard
    deviation ``noise_std``.  Contrastive and empty profiles carry no labels.
    """
    pulse = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.complex128)
    n = len(pulse)
    if reflection_coeff < 0 or noise_std < 0:
        raise ValueError("reflection coefficient and noise std must be non-negative")
    bins = np.asarray(sorted(positions), dtype=np.int64)
    if bins.size and (bins[0] < 0 or bins[-1] + n > m):
        raise ValueError(f"echo positions must lie in [0, {m - n}]")
    x = np.zeros(m, dtype=np.complex128)
    for b in bins:
        x[b:b + n] += reflection_coeff * pulse
    if noise_std > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_std > 0")
        x += noise_std * (rng.standard_normal(m) + 1j * rng.standard_normal(m))

    labels = np.zeros(m, dtype=bool)
    if kind == ProfileKind.TARGETS:
        labels[bins] = True
    else:
        bins = np.zeros(0, dtype=np.int64)
    if bandwidth_hz is None:
        bandwidth_hz = w.bandwidth_hz if isinstance(w, Waveform) else float("nan")
    return RangeProfile(x, labels, bins, float(bandwidth_hz), float(reflection_coeff),
                        float(noise_std), ProfileKind(kind))


@dataclass
class DatasetSpec:
    """Generation grid for one dataset.

    Target profiles enumerate the Cartesian product of bandwidths, reflection
    coefficients, noise levels, target counts, strides and start offsets.
    Offsets run from 0 to the last legal start in steps of ``offset_step``;
    (count, stride) pairs that cannot fit are skipped.  Empty and contrastive
    profiles cycle through the (bandwidth, reflection, noise) grid.
    """

    m: int = 1000
    sample_rate_hz: float = 2e6
    duration_s: float = 1e-4
    train_bandwidth_hz: float = 1e6
    bandwidths_hz: Sequence[float] = (1e6,)
    reflection_coeffs: Sequence[float] = (0.5, 1.0)
    noise_stds: Sequence[float] = (0.04, 0.06)
    target_counts: Sequence[int] = tuple(range(1, 120))
    strides: Sequence[int] = tuple(range(5, 51))
    offset_step: int = 1
    jitter_max: int = 0
    n_empty: int = 0
    n_contrastive: int = 0
    tone_freq_hz: float | None = None
    seed: int = 0

    @property
    def n(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    def validate(self) -> None:
        if not (self.bandwidths_hz and self.reflection_coeffs and self.noise_stds):
            raise ValueError("bandwidth, reflection and noise grids must be non-empty")
        if min(self.strides, default=1) < 1 or min(self.target_counts, default=1) < 1:
            raise ValueError("strides and target counts must be >= 1")
        if self.offset_step < 1 or self.jitter_max < 0 or self.n_empty < 0 or self.n_contrastive < 0:
            raise ValueError("offset_step must be >= 1; jitter and profile counts non-negative")
        if self.n > self.m:
            raise ValueError(f"pulse length {self.n} exceeds profile length {self.m}")
        if self.target_counts and self.strides:
            if max(self.target_counts) * min(self.strides) + self.n > self.m:
                raise ValueError("largest target count at the smallest stride does not fit")
        if any(r < 0 for r in self.reflection_coeffs) or any(s < 0 for s in self.noise_stds):
            raise ValueError("reflection coefficients and noise stds must be non-negative")

    def placements(self) -> Iterator[tuple[int, int, int]]:
        """Legal ``(count, stride, offset)`` triples in generation order."""
        for count, stride in itertools.product(self.target_counts, self.strides):
            last_offset = self.m - self.n - (count - 1) * stride
            for offset in range(0, last_offset + 1, self.offset_step):
                yield count, stride, offset

    def count_profiles(self) -> dict[str, int]:
        per_grid = sum(1 for _ in self.placements())
        grid = len(self.bandwidths_hz) * len(self.reflection_coeffs) * len(self.noise_stds)
        return {"targets": grid * per_grid, "empty": self.n_empty,
                "contrastive": self.n_contrastive}


@dataclass
class Dataset:
    """Columnar store of range profiles.

    Samples are complex64 so that the in-memory dataset and its RPDS file
    representation agree bit for bit.
    """

    samples: np.ndarray  # complex64, (N, m)
    labels: np.ndarray  # bool, (N, m)
    target_bins: list[np.ndarray]
    kind: np.ndarray  # uint8, (N,)
    bandwidth_hz: np.ndarray  # float64, (N,)
    reflection_coeff: np.ndarray
    noise_std: np.ndarray
    n: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __getitem__(self, i: int) -> RangeProfile:
        return RangeProfile(self.samples[i], self.labels[i], self.target_bins[i],
                            float(self.bandwidth_hz[i]), float(self.reflection_coeff[i]),
                            float(self.noise_std[i]), ProfileKind(int(self.kind[i])))

    def __iter__(self) -> Iterator[RangeProfile]:
        return (self[i] for i in range(len(self)))

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        return Dataset(self.samples[index], self.labels[index],
                       [self.target_bins[i] for i in index], self.kind[index],
                       self.bandwidth_hz[index], self.reflection_coeff[index],
                       self.noise_std[index], self.n, dict(self.meta))

    @classmethod
    def empty(cls, m: int, n: int = 0) -> "Dataset":
        return cls(np.zeros((0, m), np.complex64), np.zeros((0, m), bool), [],
                   np.zeros(0, np.uint8), np.zeros(0), np.zeros(0), np.zeros(0), n)

    @classmethod
    def from_profiles(cls, profiles: Sequence[RangeProfile], m: int | None = None,
                      n: int = 0) -> "Dataset":
        if not profiles:
            if m is None:
                raise ValueError("profile length is required for an empty dataset")
            return cls.empty(m, n)
        lengths = {p.m for p in profiles}
        if len(lengths) != 1:
            raise ValueError(f"inconsistent profile lengths {sorted(lengths)}")
        return cls(
            np.stack([p.samples for p in profiles]).astype(np.complex64),
            np.stack([p.labels for p in profiles]).astype(bool),
            [np.asarray(p.target_bins, dtype=np.int64) for p in profiles],
            np.array([p.kind for p in profiles], dtype=np.uint8),
            np.array([p.bandwidth_hz for p in profiles], dtype=np.float64),
            np.array([p.reflection_coeff for p in profiles], dtype=np.float64),
            np.array([p.noise_std for p in profiles], dtype=np.float64),
            n,
        )

    def equals(self, other: "Dataset") -> bool:
        """Bit-exact comparison of content (``meta`` ignored)."""
        if len(self) != len(other) or self.m != other.m or self.n != other.n:
            return False
        arrays = ["samples", "labels", "kind", "bandwidth_hz", "reflection_coeff", "noise_std"]
        if not all(np.array_equal(getattr(self, a).view(np.uint8), getattr(other, a).view(np.uint8))
                   for a in arrays):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.target_bins, other.target_bins))


def profile_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for profile ``index`` of a dataset seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _iter_profiles(spec: DatasetSpec) -> Iterator[RangeProfile]:
    pulses = {b: make_lfm_chirp(b, spec.duration_s, spec.sample_rate_hz) for b in spec.bandwidths_hz}
    tone_freq = spec.tone_freq_hz if spec.tone_freq_hz is not None else spec.train_bandwidth_hz / 2
    tone = make_tone_pulse(tone_freq, spec.duration_s, spec.sample_rate_hz)
    n, m = spec.n, spec.m
    placements = list(spec.placements())
    grid = list(itertools.product(spec.bandwidths_hz, spec.reflection_coeffs, spec.noise_stds))

    index = 0
    for bw, refl, noise in grid:
        for count, stride, offset in placements:
            rng = profile_rng(spec.seed, index)
            bins = place_targets_regular(count, stride, offset, m, n)
            bins = jitter_positions(bins, spec.jitter_max, m, n, rng)
            yield synthesize_profile(pulses[bw], bins, refl, noise, m, rng)
            index += 1

    for i in range(spec.n_empty):
        bw, refl, noise = grid[i % len(grid)]
        rng = profile_rng(spec.seed, index)
        yield synthesize_profile(pulses[bw], [], refl, noise, m, rng, kind=ProfileKind.EMPTY)
        index += 1

    for i in range(spec.n_contrastive):
        bw, refl, noise = grid[i % len(grid)]
        rng = profile_rng(spec.seed, index)
        if placements:
            count, stride, offset = placements[rng.integers(len(placements))]
            bins = place_targets_regular(count, stride, offset, m, n)
            bins = jitter_positions(bins, spec.jitter_max, m, n, rng)
        else:
            bins = [int(rng.integers(m - n + 1))]
        yield synthesize_profile(tone, bins, refl, noise, m, rng, bandwidth_hz=bw,
                                 kind=ProfileKind.CONTRASTIVE)
        index += 1


def generate_dataset(spec: DatasetSpec) -> Dataset:
    """Materialize every profile described by ``spec``; deterministic in ``spec.seed``."""
    spec.validate()
    counts = spec.count_profiles()
    total = sum(counts.values())
    ds = Dataset(
        np.empty((total, spec.m), np.complex64), np.zeros((total, spec.m), bool), [],
        np.empty(total, np.uint8), np.empty(total), np.empty(total), np.empty(total), spec.n,
    )
    for i, p in enumerate(_iter_profiles(spec)):
        ds.samples[i] = p.samples
        ds.labels[i] = p.labels
        ds.target_bins.append(p.target_bins)
        ds.kind[i] = p.kind
        ds.bandwidth_hz[i] = p.bandwidth_hz
        ds.reflection_coeff[i] = p.reflection_coeff
        ds.noise_std[i] = p.noise_std
    ds.meta["counts"] = counts
    return ds


# Grid values and empty/contrastive proportions (relative to the number of
# target profiles) of the four reference datasets.
RECIPES = {
    "baseline": dict(bandwidths_hz=(1e6,), reflection_coeffs=(0.5, 1.0), noise_stds=(0.04, 0.06),
                     max_targets=119, jitter=False, empty_ratio=0.0, contrastive_ratio=0.0),
    "enriched": dict(bandwidths_hz=(0.96e6, 1e6), reflection_coeffs=(0.5, 1.0),
                     noise_stds=(0.04, 0.06), max_targets=119, jitter=False,
                     empty_ratio=1.0, contrastive_ratio=0.25),
    "validation": dict(bandwidths_hz=(0.97e6,), reflection_coeffs=(0.7,), noise_stds=(0.08,),
                       max_targets=117, jitter=True, empty_ratio=2.0, contrastive_ratio=1.0),
    "test": dict(bandwidths_hz=(0.98e6, 1e6), reflection_coeffs=(0.1, 0.8), noise_stds=(0.1, 0.2),
                 max_targets=119, jitter=True, empty_ratio=1.0, contrastive_ratio=0.25),
}


def recipe_spec(name: str, offset_step: int = 1, count_step: int = 1, stride_step: int = 1,
                jitter_max: int = 2, seed: int = 0) -> DatasetSpec:
    """Scaled-down version of a reference dataset.

    Parameters
    ----------
    name : str
        One of ``RECIPES``.
    offset_step, count_step, stride_step : int
        Subsampling of the placement grid (start offsets, target counts
        1..max and strides 5..50).
    jitter_max : int
        Position jitter for the recipes with irregular spacing.
    seed : int
        Dataset seed.
    """
    try:
        r = RECIPES[name]
    except KeyError:
        raise ValueError(f"unknown recipe {name!r}; expected one of {sorted(RECIPES)}") from None
    spec = DatasetSpec(
        bandwidths_hz=r["bandwidths_hz"], reflection_coeffs=r["reflection_coeffs"],
        noise_stds=r["noise_stds"], target_counts=tuple(range(1, r["max_targets"] + 1, count_step)),
        strides=tuple(range(5, 51, stride_step)), offset_step=offset_step,
        jitter_max=jitter_max if r["jitter"] else 0, seed=seed,
    )
    targets = spec.count_profiles()["targets"]
    spec.n_empty = int(round(r["empty_ratio"] * targets))
    spec.n_contrastive = int(round(r["contrastive_ratio"] * targets))
    return spec


# --- RPDS binary format -------------------------------------------------------

MAGIC = b"RPDS"
VERSION = 1
_HEADER = struct.Struct("<4sHIIQ")
_RECORD_HEAD = struct.Struct("<BdddI")


class DatasetFormatError(ValueError):
    pass


def write_dataset(path: str | Path, ds: Dataset) -> None:
    m = ds.m
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, m, ds.n, len(ds)))
        for i in range(len(ds)):
            bins = np.asarray(ds.target_bins[i], dtype="<u4")
            f.write(_RECORD_HEAD.pack(int(ds.kind[i]), ds.bandwidth_hz[i], ds.reflection_coeff[i],
                                      ds.noise_std[i], bins.size))
            f.write(bins.tobytes())
            f.write(np.ascontiguousarray(ds.samples[i], dtype="<c8").tobytes())
            f.write(np.packbits(ds.labels[i], bitorder="little").tobytes())


def _read_exact(f, size: int, what: str) -> bytes:
    buf = f.read(size)
    if len(buf) != size:
        raise DatasetFormatError(f"truncated file while reading {what}")
    return buf


def read_dataset(path: str | Path) -> Dataset:
    with open(path, "rb") as f:
        magic, version, m, n, count = _HEADER.unpack(_read_exact(f, _HEADER.size, "header"))
        if magic != MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise DatasetFormatError(f"unsupported RPDS version {version}")
        label_bytes = (m + 7) // 8
        ds = Dataset(
            np.empty((count, m), np.complex64), np.empty((count, m), bool), [],
            np.empty(count, np.uint8), np.empty(count), np.empty(count), np.empty(count), n,
        )
        for i in range(count):
            kind, bw, refl, noise, nbins = _RECORD_HEAD.unpack(
                _read_exact(f, _RECORD_HEAD.size, f"record {i}"))
            if kind not in tuple(ProfileKind):
                raise DatasetFormatError(f"record {i}: unknown profile kind {kind}")
            bins = np.frombuffer(_read_exact(f, 4 * nbins, f"record {i} bins"), "<u4")
            ds.target_bins.append(bins.astype(np.int64))
            ds.samples[i] = np.frombuffer(_read_exact(f, 8 * m, f"record {i} samples"), "<c8")
            packed = np.frombuffer(_read_exact(f, label_bytes, f"record {i} labels"), np.uint8)
            ds.labels[i] = np.unpackbits(packed, count=m, bitorder="little").astype(bool)
            ds.kind[i], ds.bandwidth_hz[i], ds.reflection_coeff[i], ds.noise_std[i] = \
                kind, bw, refl, noise
        if f.read(1):
            raise DatasetFormatError("trailing bytes after last record")
    return ds
