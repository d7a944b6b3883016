import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmrp.datagen import synthesize_profile
from swarmrp.mfcfar import (CfarConfig, ca_cfar_batch, ca_cfar_detect, cfar_alpha,
                            matched_filter_batch, matched_filter_profile, mf_cfar_detect_full,
                            write_trace_csv)


def naive_matched_filter(x, s):
    """Direct double loop over the normalized correlation."""
    n = len(s)
    energy = sum(abs(v) ** 2 for v in s)
    out = []
    for i in range(len(x) - n + 1):
        acc = 0j
        for k in range(n):
            acc += x[i + k] * s[k].conjugate()
        out.append(abs(acc) ** 2 / energy)
    return np.array(out)


def naive_cfar(linear, guard, ref, stride, alpha):
    L = len(linear)
    reach = (guard + ref) * stride
    det = np.zeros(L, bool)
    thr = np.full(L, np.nan)
    for i in range(reach, L - reach):
        cells = [linear[i + sgn * k * stride] for sgn in (-1, 1) for k in range(guard + 1, guard + ref + 1)]
        thr[i] = alpha * sum(cells) / len(cells)
        det[i] = linear[i] > thr[i]
    return det, thr


def test_alpha_values():
    assert cfar_alpha(20, 1e-3) == pytest.approx(20 * (10 ** (3 / 20) - 1), rel=1e-14)
    assert cfar_alpha(20, 1e-3) == pytest.approx(8.25075, abs=1e-5)
    assert cfar_alpha(7, 1.0) == 0.0
    assert cfar_alpha(1, 0.5) == pytest.approx(1.0)


@pytest.mark.parametrize("pfa", [0.0, -0.1, 1.5])
def test_alpha_rejects_bad_pfa(pfa):
    with pytest.raises(ValueError):
        cfar_alpha(20, pfa)


def test_alpha_gives_exact_pfa_for_exponential_cells():
    # P(X > alpha * mean(Y_1..Y_R)) = (1 + alpha/R)^-R for i.i.d. exponentials
    R, pfa = 20, 1e-3
    assert (1 + cfar_alpha(R, pfa) / R) ** (-R) == pytest.approx(pfa, rel=1e-12)


def test_config_defaults():
    cfg = CfarConfig()
    assert cfg.num_reference == 20 and cfg.reach == 24
    assert cfg.threshold_factor == pytest.approx(cfar_alpha(20, 1e-3))
    assert cfg.reference_offsets().tolist() == [-24, -22, -20, -18, -16, -14, -12, -10, -8, -6,
                                               6, 8, 10, 12, 14, 16, 18, 20, 22, 24]


def test_clean_echo_peak(chirp):
    x = synthesize_profile(chirp, [0], 1.0, 0.0, 1000).samples
    cp = matched_filter_profile(x, chirp)
    assert len(cp) == 801
    assert cp.linear[0] == pytest.approx(200.0, rel=1e-12)
    assert cp.db[0] == pytest.approx(20 * math.log10(200), abs=1e-9)
    assert cp.db[0] == pytest.approx(46.0206, abs=1e-4)


def test_zero_input(chirp):
    cp = matched_filter_profile(np.zeros(1000, complex), chirp)
    assert not cp.linear.any()


def test_rejects_short_input(chirp):
    with pytest.raises(ValueError):
        matched_filter_profile(np.zeros(150, complex), chirp)


def test_matches_naive_correlation(chirp, rng):
    s = chirp.samples[:40]
    x = rng.standard_normal(120) + 1j * rng.standard_normal(120)
    np.testing.assert_allclose(matched_filter_profile(x, s).linear, naive_matched_filter(x, s),
                               rtol=1e-10)


def test_db_consistency(chirp, rng):
    x = synthesize_profile(chirp, [100, 160], 0.7, 0.1, 1000, rng).samples
    cp = matched_filter_profile(x, chirp)
    pos = cp.linear > 0
    np.testing.assert_allclose(cp.db[pos], 20 * np.log10(cp.linear[pos]), rtol=1e-14)


def test_batch_matches_single(chirp, rng):
    x = rng.standard_normal((5, 400)) + 1j * rng.standard_normal((5, 400))
    batch = matched_filter_batch(x, chirp, chunk=2)
    for i in range(5):
        np.testing.assert_array_equal(batch[i], matched_filter_profile(x[i], chirp).linear)


def test_cfar_all_zero():
    det, thr = ca_cfar_detect(np.zeros(801), CfarConfig())
    assert not det.any()
    assert np.isnan(thr[:24]).all() and np.isnan(thr[-24:]).all()
    assert (thr[24:-24] == 0).all()


def test_cfar_single_clean_echo(chirp):
    x = synthesize_profile(chirp, [300], 1.0, 0.0, 1000).samples
    det, thr = ca_cfar_detect(matched_filter_profile(x, chirp), CfarConfig())
    assert det[300]
    # stride-2 references sit near (not exactly on) the truncated-chirp correlation zeros
    assert thr[300] < 0.01 * 200
    hits = np.flatnonzero(det)
    assert np.abs(hits - 300).max() <= 3


def test_cfar_matches_naive(rng):
    linear = rng.exponential(size=300)
    cfg = CfarConfig(guard_per_side=2, ref_per_side=10, pfa_target=1e-2, cell_stride=2)
    det, thr = ca_cfar_detect(linear, cfg)
    ndet, nthr = naive_cfar(linear, 2, 10, 2, cfg.threshold_factor)
    np.testing.assert_array_equal(det, ndet)
    np.testing.assert_allclose(thr, nthr, rtol=1e-12)


def test_cfar_rejects_short_profile():
    with pytest.raises(ValueError):
        ca_cfar_detect(np.ones(40), CfarConfig())


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), scale=st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]))
def test_scale_equivariance(chirp, seed, scale):
    rng = np.random.default_rng(seed)
    x = synthesize_profile(chirp, [100, 130, 400], 0.5, 0.2, 1000, rng).samples
    cfg = CfarConfig()
    base = matched_filter_profile(x, chirp)
    scaled = matched_filter_profile(scale * x, chirp)
    np.testing.assert_allclose(scaled.linear, scale**2 * base.linear, rtol=1e-12)
    np.testing.assert_array_equal(ca_cfar_detect(base, cfg)[0], ca_cfar_detect(scaled, cfg)[0])


def test_threshold_locality(chirp, rng):
    cfg = CfarConfig()
    x = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    i = 400
    _, thr = ca_cfar_detect(matched_filter_profile(x, chirp), cfg)
    far = (cfg.guard_per_side + cfg.ref_per_side) * cfg.cell_stride + chirp.n
    y = x.copy()
    y[:i - far] = 0
    y[i + far + 1:] = 5.0
    _, thr2 = ca_cfar_detect(matched_filter_profile(y, chirp), cfg)
    assert thr2[i] == thr[i]


def test_full_chain_masks_edges(chirp):
    x = synthesize_profile(chirp, [300], 1.0, 0.0, 1000).samples
    out = mf_cfar_detect_full(x, chirp, CfarConfig())
    valid = out["valid"][0]
    assert not valid[:24].any() and not valid[801 - 24:].any() and valid[24:801 - 24].all()
    assert np.isnan(out["linear"][0, 801:]).all()
    assert out["detections"][0, 300]
    assert np.abs(np.flatnonzero(out["detections"][0]) - 300).max() <= 3


def test_monte_carlo_pfa_short(chirp):
    """Quick version of the acceptance calibration: 2e5 cells, factor-of-2 band."""
    rng = np.random.default_rng(99)
    x = rng.standard_normal((270, 1000)) + 1j * rng.standard_normal((270, 1000))
    det, _, valid = ca_cfar_batch(matched_filter_batch(x, chirp), CfarConfig())
    rate = det[valid].mean()
    assert valid.sum() > 2e5
    assert 5e-4 <= rate <= 2e-3


def test_trace_csv(tmp_path, chirp):
    x = synthesize_profile(chirp, [300], 1.0, 0.0, 1000).samples
    cp = matched_filter_profile(x, chirp)
    det, thr = ca_cfar_detect(cp, CfarConfig())
    path = tmp_path / "trace.csv"
    write_trace_csv(path, cp, thr, det)
    rows = path.read_text().splitlines()
    assert rows[0] == "bin,db,threshold_db,detection"
    assert len(rows) == 802
    assert rows[1].endswith(",,")
    assert rows[301].split(",")[3] == "1"
