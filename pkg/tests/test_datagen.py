import dataclasses
import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmrp.datagen import (Dataset, DatasetFormatError, DatasetSpec, ProfileKind,
                             generate_dataset, jitter_positions, place_targets_regular,
                             profile_rng, read_dataset, synthesize_profile, write_dataset)
from swarmrp.signal import make_lfm_chirp, pulse_energy


def test_place_targets_regular():
    assert place_targets_regular(3, 50, 0, 1000, 200) == [0, 50, 100]
    assert place_targets_regular(1, 5, 790, 1000, 200) == [790]
    bins = place_targets_regular(119, 5, 0, 1000, 200)
    assert len(bins) == 119 and bins[-1] == 590


@pytest.mark.parametrize("args", [(1, 5, 801, 1000, 200), (119, 8, 0, 1000, 200), (0, 5, 0, 1000, 200)])
def test_place_targets_rejects_overflow(args):
    with pytest.raises(ValueError):
        place_targets_regular(*args)


def test_jitter_identity(rng):
    assert jitter_positions([0, 50, 100], 0, 1000, 200, rng) == [0, 50, 100]


def test_jitter_stays_near_inputs():
    base = [0, 50, 100]
    for seed in range(200):
        out = jitter_positions(base, 2, 1000, 200, np.random.default_rng(seed))
        assert all(min(abs(o - b) for b in base) <= 2 for o in out)
        assert out == sorted(set(out)) and out[0] >= 0


def test_jitter_clamps_to_legal_range():
    for seed in range(100):
        out = jitter_positions([790], 10, 1000, 200, np.random.default_rng(seed))
        assert out[0] <= 800 and out[0] + 200 <= 1000


@settings(max_examples=100, deadline=None)
@given(positions=st.lists(st.integers(0, 800), min_size=1, max_size=40, unique=True),
       jitter=st.integers(0, 6), seed=st.integers(0, 2**32 - 1))
def test_jitter_output_strictly_increasing_and_legal(positions, jitter, seed):
    out = jitter_positions(sorted(positions), jitter, 1000, 200, np.random.default_rng(seed))
    assert all(a < b for a, b in zip(out, out[1:]))
    assert all(0 <= b <= 800 for b in out)
    assert 1 <= len(out) <= len(positions)


def test_empty_noiseless_profile(chirp):
    p = synthesize_profile(chirp, [], 1.0, 0.0, 1000)
    assert not p.samples.any() and not p.labels.any()


def test_single_clean_echo(chirp):
    p = synthesize_profile(chirp, [300], 1.0, 0.0, 1000)
    np.testing.assert_array_equal(p.samples[300:500], chirp.samples)
    assert not p.samples[:300].any() and not p.samples[500:].any()
    assert np.flatnonzero(p.labels).tolist() == [300]


def test_overlapping_echoes_add_coherently(chirp):
    p = synthesize_profile(chirp, [300, 310], 1.0, 0.0, 1000)
    oracle = np.zeros(1000, complex)
    for b in (300, 310):
        for k in range(200):
            oracle[b + k] += chirp.samples[k]
    np.testing.assert_allclose(p.samples, oracle, rtol=0, atol=1e-15)
    np.testing.assert_allclose(p.samples[310:500], chirp.samples[10:200] + chirp.samples[0:190])


@settings(max_examples=30, deadline=None)
@given(b=st.integers(0, 800), refl=st.floats(0.0, 3.0))
def test_energy_scaling(chirp, b, refl):
    p = synthesize_profile(chirp, [b], refl, 0.0, 1000)
    energy = np.sum(np.abs(p.samples) ** 2)
    assert energy == pytest.approx(refl**2 * pulse_energy(chirp), rel=1e-12, abs=1e-300)


def test_noise_statistics(chirp):
    rng = np.random.default_rng(0)
    x = np.concatenate([synthesize_profile(chirp, [], 1.0, 0.2, 1000, rng,
                                           kind=ProfileKind.EMPTY).samples for _ in range(120)])
    assert x.size >= 1e5
    assert np.var(x.real) == pytest.approx(0.04, rel=0.05)
    assert np.var(x.imag) == pytest.approx(0.04, rel=0.05)


def test_contrastive_profiles_have_no_labels(chirp):
    p = synthesize_profile(chirp, [100, 400], 0.8, 0.0, 1000, kind=ProfileKind.CONTRASTIVE)
    assert not p.labels.any() and p.target_bins.size == 0 and p.samples[100] != 0


def test_rejects_illegal_positions(chirp):
    with pytest.raises(ValueError):
        synthesize_profile(chirp, [801], 1.0, 0.0, 1000)


def test_degenerate_grid_counts():
    spec = DatasetSpec(target_counts=(1,), strides=(5,), offset_step=1000, n_empty=2,
                       n_contrastive=3, reflection_coeffs=(1.0,), noise_stds=(0.1,))
    ds = generate_dataset(spec)
    assert len(ds) == 1 + 2 + 3
    assert ds.kind.tolist() == [0, 1, 1, 2, 2, 2]


def test_spec_validation():
    with pytest.raises(ValueError):
        generate_dataset(DatasetSpec(target_counts=(200,), strides=(5,)))
    with pytest.raises(ValueError):
        generate_dataset(DatasetSpec(strides=(0,)))


def test_label_target_consistency(small_dataset):
    for p in small_dataset:
        assert np.flatnonzero(p.labels).tolist() == list(p.target_bins)
        if p.kind != ProfileKind.TARGETS:
            assert not p.labels.any()
        assert all(0 <= b <= p.m - small_dataset.n for b in p.target_bins)


def test_echo_support(small_spec):
    spec = dataclasses.replace(small_spec, noise_stds=(0.0,), n_empty=0, n_contrastive=0)
    ds = generate_dataset(spec)
    for p in ds:
        support = np.zeros(p.m, bool)
        for b in p.target_bins:
            support[b:b + ds.n] = True
        assert not p.samples[~support].any()


def test_generation_is_deterministic(small_spec, small_dataset):
    assert small_dataset.equals(generate_dataset(small_spec))
    other = generate_dataset(dataclasses.replace(small_spec, seed=8))
    assert not small_dataset.equals(other)


def test_profile_streams_independent_of_order():
    a = profile_rng(5, 17).standard_normal(4)
    profile_rng(5, 3).standard_normal(100)
    np.testing.assert_array_equal(a, profile_rng(5, 17).standard_normal(4))


def test_roundtrip(tmp_path, small_dataset):
    path = tmp_path / "d.rpds"
    write_dataset(path, small_dataset)
    assert read_dataset(path).equals(small_dataset)
    # rewriting the read-back dataset reproduces the same bytes
    path2 = tmp_path / "d2.rpds"
    write_dataset(path2, read_dataset(path))
    assert path.read_bytes() == path2.read_bytes()


def test_roundtrip_empty(tmp_path):
    path = tmp_path / "e.rpds"
    write_dataset(path, Dataset.empty(1000, 200))
    assert path.stat().st_size == 4 + 2 + 4 + 4 + 8
    back = read_dataset(path)
    assert len(back) == 0 and back.m == 1000 and back.n == 200


def test_record_layout(tmp_path, chirp):
    p = synthesize_profile(chirp, [3], 0.5, 0.0, 16 + 200)
    ds = Dataset.from_profiles([p], n=200)
    path = tmp_path / "one.rpds"
    write_dataset(path, ds)
    raw = path.read_bytes()
    assert raw[:4] == b"RPDS"
    m = 216
    assert len(raw) == 22 + (1 + 8 * 3 + 4) + 4 + 8 * m + (m + 7) // 8
    assert raw[22] == 0  # kind = targets
    labels = np.unpackbits(np.frombuffer(raw[-27:], np.uint8), bitorder="little")[:m]
    assert np.flatnonzero(labels).tolist() == [3]


def test_bad_magic(tmp_path, small_dataset):
    path = tmp_path / "bad.rpds"
    write_dataset(path, small_dataset)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_truncated(tmp_path, small_dataset):
    path = tmp_path / "trunc.rpds"
    write_dataset(path, small_dataset)
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_file_hash_stable(tmp_path, small_spec):
    digests = []
    for i in range(2):
        path = tmp_path / f"{i}.rpds"
        write_dataset(path, generate_dataset(small_spec))
        digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_recipe_proportions():
    from swarmrp.datagen import recipe_spec

    base = recipe_spec("baseline", offset_step=200, count_step=10, stride_step=9)
    enr = recipe_spec("enriched", offset_step=200, count_step=10, stride_step=9)
    test = recipe_spec("test", offset_step=200, count_step=10, stride_step=9)
    assert base.n_empty == base.n_contrastive == 0 and base.jitter_max == 0
    t = enr.count_profiles()["targets"]
    assert t == 2 * base.count_profiles()["targets"]
    assert enr.n_empty == t and enr.n_contrastive == round(0.25 * t)
    assert test.jitter_max == 2 and test.bandwidths_hz == (0.98e6, 1e6)
    with pytest.raises(ValueError):
        recipe_spec("nope")
