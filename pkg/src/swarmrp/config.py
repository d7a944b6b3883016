"""Flat ``key = value`` run configuration shared by every subcommand."""

import typing
import zlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .cvnn import TrainConfig
from .datagen import DatasetSpec
from .mfcfar import CfarConfig

__all__ = ["RunConfig", "ConfigError", "subseed", "parse_int_list", "parse_float_list"]


class ConfigError(ValueError):
    pass


def subseed(seed: int, purpose: str) -> int:
    """Stable 32-bit seed derived from a global seed and a purpose label."""
    ss = np.random.SeedSequence([seed, zlib.crc32(purpose.encode())])
    return int(ss.generate_state(1)[0])


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"1-5,8,10-12"`` -> (1, 2, 3, 4, 5, 8, 10, 11, 12)."""
    out = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in str(text).replace(" ", "").split(",") if p)


def _scalar_type(tp) -> type:
    options = typing.get_args(tp) or (tp,)
    for t in (int, float):
        if t in options:
            return t
    return str


def _format_int_list(values) -> str:
    values = list(values)
    parts, i = [], 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[j + 1] == values[j] + 1:
            j += 1
        parts.append(str(values[i]) if j == i else f"{values[i]}-{values[j]}")
        i = j + 1
    return ",".join(parts)


@dataclass
class RunConfig:
    # dataset generation
    m: int = 1000
    sample_rate_hz: float = 2e6
    duration_s: float = 1e-4
    train_bandwidth_hz: float = 1e6
    bandwidths_hz: tuple[float, ...] = (1e6,)
    reflection_coeffs: tuple[float, ...] = (0.5, 1.0)
    noise_stds: tuple[float, ...] = (0.04, 0.06)
    target_counts: tuple[int, ...] = tuple(range(1, 120))
    strides: tuple[int, ...] = tuple(range(5, 51))
    offset_step: int = 1
    jitter_max: int = 0
    n_empty: int = 0
    n_contrastive: int = 0
    tone_freq_hz: float | None = None
    # CA-CFAR
    guard_per_side: int = 2
    ref_per_side: int = 10
    pfa_target: float = 1e-3
    cell_stride: int = 2
    # training
    epochs: int = 100
    batch_size: int = 512
    lr0: float = 1e-3
    lr_halving_period: int = 20
    positive_weight: float = 10.0
    threshold: float = 0.5
    hidden_width: int = 256
    # scoring
    exclusion_window: int = 199
    # paths and run control
    dataset: str | None = None
    valid_dataset: str | None = None
    model: str | None = None
    history: str | None = None
    report: str | None = None
    output: str | None = None
    profile_index: int = 0
    detectors: tuple[str, ...] = ("mf", "nn")
    seed: int = 0
    threads: int | None = None

    _INT_LISTS = ("target_counts", "strides")
    _FLOAT_LISTS = ("bandwidths_hz", "reflection_coeffs", "noise_stds")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def convert(cls, key: str, value):
        """Coerce a text value to the type of field ``key``."""
        types = {f.name: f.type for f in fields(cls)}
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
            return None
        if not isinstance(value, str):
            return value
        value = value.strip()
        try:
            if key in cls._INT_LISTS:
                return parse_int_list(value)
            if key in cls._FLOAT_LISTS:
                return parse_float_list(value)
            if key == "detectors":
                return tuple(v for v in value.replace(" ", "").split(",") if v)
            scalar = _scalar_type(types[key])
            return value if scalar is str else scalar(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = cls.convert(key, value)
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())

    def to_lines(self) -> list[str]:
        lines = []
        for name in self.field_names():
            v = getattr(self, name)
            if v is None:
                text = ""
            elif name in self._INT_LISTS:
                text = _format_int_list(v)
            elif name in self._FLOAT_LISTS:
                text = ",".join(repr(float(x)) for x in v)
            elif name == "detectors":
                text = ",".join(v)
            else:
                text = repr(v) if isinstance(v, float) else str(v)
            lines.append(f"{name} = {text}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def dataset_spec(self) -> DatasetSpec:
        return DatasetSpec(
            m=self.m, sample_rate_hz=self.sample_rate_hz, duration_s=self.duration_s,
            train_bandwidth_hz=self.train_bandwidth_hz, bandwidths_hz=self.bandwidths_hz,
            reflection_coeffs=self.reflection_coeffs, noise_stds=self.noise_stds,
            target_counts=self.target_counts, strides=self.strides,
            offset_step=self.offset_step, jitter_max=self.jitter_max, n_empty=self.n_empty,
            n_contrastive=self.n_contrastive, tone_freq_hz=self.tone_freq_hz,
            seed=subseed(self.seed, "datagen"),
        )

    def cfar_config(self) -> CfarConfig:
        return CfarConfig(self.guard_per_side, self.ref_per_side, self.pfa_target, self.cell_stride)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, lr0=self.lr0,
            lr_halving_period=self.lr_halving_period, positive_weight=self.positive_weight,
            threshold=self.threshold, hidden_width=self.hidden_width,
            seed=subseed(self.seed, "train"), exclusion_window=self.exclusion_window,
        )
