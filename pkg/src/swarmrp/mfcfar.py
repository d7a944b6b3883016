"""Pulse-energy-normalized matched filtering and stride-selected CA-CFAR."""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .signal import Waveform, pulse_energy

__all__ = [
    "CompressedProfile",
    "CfarConfig",
    "cfar_alpha",
    "matched_filter_profile",
    "matched_filter_batch",
    "ca_cfar_detect",
    "ca_cfar_batch",
    "mf_cfar_detect_full",
    "write_trace_csv",
]


@dataclass
class CompressedProfile:
    linear: np.ndarray
    db: np.ndarray

    def __len__(self) -> int:
        return len(self.linear)


def cfar_alpha(R: int, pfa: float) -> float:
    """Cell-averaging threshold multiplier ``R * (pfa**(-1/R) - 1)``."""
    if R < 1:
        raise ValueError("need at least one reference cell")
    if not 0 < pfa <= 1:
        raise ValueError(f"pfa must lie in (0, 1], got {pfa}")
    return R * (pfa ** (-1.0 / R) - 1.0)


@dataclass
class CfarConfig:
    """CA-CFAR geometry.

    Guard and reference cells are taken at multiples of ``cell_stride`` from
    the cell under test, so with ``cell_stride=2`` and ``fs = 2B`` they land
    on the matched filter's zeros.
    """

    guard_per_side: int = 2
    ref_per_side: int = 10
    pfa_target: float = 1e-3
    cell_stride: int = 2
    threshold_factor: float = field(init=False)

    def __post_init__(self):
        if min(self.guard_per_side, self.ref_per_side, self.cell_stride) < 1:
            raise ValueError("guard, reference and stride counts must all be >= 1")
        self.threshold_factor = cfar_alpha(self.num_reference, self.pfa_target)

    @property
    def num_reference(self) -> int:
        return 2 * self.ref_per_side

    @property
    def reach(self) -> int:
        """Distance from the cell under test to its outermost reference cell."""
        return (self.guard_per_side + self.ref_per_side) * self.cell_stride

    def reference_offsets(self) -> np.ndarray:
        k = np.arange(self.guard_per_side + 1, self.guard_per_side + self.ref_per_side + 1)
        one_side = k * self.cell_stride
        return np.concatenate([-one_side[::-1], one_side])


def _to_db(linear: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(linear)


def matched_filter_batch(x: np.ndarray, s: Waveform | np.ndarray, chunk: int = 128) -> np.ndarray:
    """Normalized matched-filter power for each row of ``x`` (direct correlation).

    Returns an array of shape ``(N, m - n + 1)`` whose entry ``i`` is
    ``|sum_k x[i+k] * conj(s[k])|**2 / sum_k |s[k]|**2``.
    """
    pulse = s.samples if isinstance(s, Waveform) else np.asarray(s, dtype=np.complex128)
    x = np.atleast_2d(x)
    n = len(pulse)
    if x.shape[1] < n:
        raise ValueError(f"received signal ({x.shape[1]} samples) is shorter than the pulse ({n})")
    energy = pulse_energy(pulse)
    template = np.conj(pulse).astype(np.complex128)
    out = np.empty((x.shape[0], x.shape[1] - n + 1))
    for start in range(0, x.shape[0], chunk):
        block = x[start:start + chunk].astype(np.complex128)
        corr = sliding_window_view(block, n, axis=1) @ template
        out[start:start + chunk] = (corr.real**2 + corr.imag**2) / energy
    return out


def matched_filter_profile(x: np.ndarray, s: Waveform | np.ndarray) -> CompressedProfile:
    """Matched filter over one received profile, without padding.

    The output has ``len(x) - n + 1`` cells; cell ``i`` is aligned with an
    echo whose leading edge sits at bin ``i``.  The dB trace is
    ``20*log10(linear)``.
    """
    linear = matched_filter_batch(np.asarray(x)[None, :], s)[0]
    return CompressedProfile(linear, _to_db(linear))


def ca_cfar_batch(linear: np.ndarray, cfg: CfarConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CA-CFAR over rows of matched-filter power.

    Returns
    -------
    detections : bool ndarray
    thresholds : float ndarray, NaN where the window does not fit
    valid : bool ndarray, cells with a full reference window
    """
    linear = np.atleast_2d(linear)
    L = linear.shape[1]
    reach = cfg.reach
    if L < 2 * reach + 1:
        raise ValueError(f"profile of {L} cells cannot host a CFAR window of reach {reach}")
    centre = np.arange(reach, L - reach)
    ref = linear[:, centre[:, None] + cfg.reference_offsets()[None, :]]
    thresholds = np.full(linear.shape, np.nan)
    thresholds[:, reach:L - reach] = cfg.threshold_factor * ref.mean(axis=-1)
    valid = np.zeros(L, dtype=bool)
    valid[reach:L - reach] = True
    valid = np.broadcast_to(valid, linear.shape)
    detections = np.zeros(linear.shape, dtype=bool)
    detections[:, reach:L - reach] = linear[:, reach:L - reach] > thresholds[:, reach:L - reach]
    return detections, thresholds, valid


def ca_cfar_detect(cp: CompressedProfile | np.ndarray, cfg: CfarConfig) -> tuple[np.ndarray, np.ndarray]:
    """Detections and thresholds for one compressed profile.

    Cells closer than ``cfg.reach`` to either edge never detect and get a
    NaN threshold.
    """
    linear = cp.linear if isinstance(cp, CompressedProfile) else np.asarray(cp)
    det, thr, _ = ca_cfar_batch(linear[None, :], cfg)
    return det[0], thr[0]


def mf_cfar_detect_full(x: np.ndarray, s: Waveform, cfg: CfarConfig) -> dict[str, np.ndarray]:
    """Run the full baseline chain and lift its outputs back to ``m`` bins.

    Output arrays have shape ``(N, m)``; ``valid`` is False in the last
    ``n - 1`` bins (no matched-filter output) and in the CFAR edge cells.
    """
    x = np.atleast_2d(x)
    N, m = x.shape
    linear = matched_filter_batch(x, s)
    det, thr, valid = ca_cfar_batch(linear, cfg)
    L = linear.shape[1]
    full = {
        "linear": np.full((N, m), np.nan),
        "threshold": np.full((N, m), np.nan),
        "detections": np.zeros((N, m), dtype=bool),
        "valid": np.zeros((N, m), dtype=bool),
    }
    full["linear"][:, :L] = linear
    full["threshold"][:, :L] = thr
    full["detections"][:, :L] = det
    full["valid"][:, :L] = valid
    return full


def write_trace_csv(path, cp: CompressedProfile, thresholds: np.ndarray, detections: np.ndarray) -> None:
    """Plot-ready ``bin,db,threshold_db,detection`` rows; blank where undefined."""
    thr_db = _to_db(thresholds)
    with open(path, "w") as f:
        f.write("bin,db,threshold_db,detection\n")
        for i in range(len(cp)):
            t = "" if np.isnan(thresholds[i]) else repr(float(thr_db[i]))
            d = "" if np.isnan(thresholds[i]) else str(int(detections[i]))
            f.write(f"{i},{float(cp.db[i])!r},{t},{d}\n")
