"""Swarm range-profile simulation with matched-filter/CA-CFAR and hybrid
complex-valued neural detectors."""

from .signal import Waveform, make_lfm_chirp, make_tone_pulse, pulse_energy
from .datagen import (Dataset, DatasetSpec, ProfileKind, RangeProfile, generate_dataset,
                      jitter_positions, place_targets_regular, read_dataset, synthesize_profile,
                      write_dataset)
from .mfcfar import (CfarConfig, CompressedProfile, ca_cfar_detect, cfar_alpha,
                     matched_filter_profile, mf_cfar_detect_full)
from .cvnn import (AdamState, NetworkParams, TrainConfig, adam_step, backward, detect, forward,
                   load_checkpoint, modrelu, predict, save_checkpoint, train, weighted_mse)
from .metrics import (DetectionCounts, SubsetFilter, aggregate, filter_subset, report_table,
                      score_batch, score_profile)

__version__ = "0.1.0"
