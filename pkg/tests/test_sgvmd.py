import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sslstm.errors import NoConvergence, ZeroEnergy
from sslstm.sgvmd import (
    FREQUENCY,
    RESIDUE,
    TREND,
    ClassifyConfig,
    SgvmdConfig,
    Spectrum,
    center_frequency,
    classify_detailed,
    classify_series,
    decompose,
    extract_one_mode,
    mirror_extend,
    peak_init,
    update_mode,
)

T = np.arange(1024)
TWO_TONE = np.sin(0.2 * T) + np.sin(1.0 * T)


def corr(a, b):
    return float(np.corrcoef(a, b)[0, 1])


def band_energy_fraction(x, lo, hi):
    """Share of the energy of ``x`` inside ``lo <= w < hi`` (ideal band-pass)."""
    X = np.fft.rfft(x)
    w = 2 * np.pi * np.arange(X.size) / x.size
    p = np.abs(X) ** 2
    return float(p[(w >= lo) & (w < hi)].sum() / p.sum())


def wiener_reference(x, alpha, n_modes, tol=1e-14, max_iter=5000):
    """Sequential Wiener-filter iteration written out independently:
    ``u = f / (1 + alpha (w - wc)^2)``, ``wc`` = power-weighted mean frequency."""
    h = len(x) // 2
    ext = np.concatenate([x[:h][::-1], x, x[len(x) - h:][::-1]])
    F = np.fft.rfft(ext)
    w = 2 * np.pi * np.arange(F.size) / ext.size
    out = []
    for _ in range(n_modes):
        k = int(np.argmax(np.abs(F)))
        u = np.where(np.abs(np.arange(F.size) - k) <= 3, F, 0)
        for _ in range(max_iter):
            wc = np.sum(w * np.abs(u) ** 2) / np.sum(np.abs(u) ** 2)
            new = F / (1 + alpha * (w - wc) ** 2)
            done = np.sum(np.abs(new - u) ** 2) <= tol * np.sum(np.abs(F) ** 2)
            u = new
            if done:
                break
        out.append(np.sum(w * np.abs(u) ** 2) / np.sum(np.abs(u) ** 2))
        F = F - u
    return np.array(out)


def test_two_tone_separation():
    dec = decompose(TWO_TONE)
    assert len(dec.modes) == 2
    by_freq = sorted(dec.modes, key=lambda m: m.center_frequency)
    low, high = by_freq[0].time_domain, by_freq[1].time_domain
    assert corr(low, np.sin(0.2 * T)) > 0.99
    assert corr(high, np.sin(1.0 * T)) > 0.99
    assert band_energy_fraction(low, 0.6, np.inf) < 0.01
    assert band_energy_fraction(high, 0.0, 0.6) < 0.01
    rec = sum(m.time_domain for m in dec.modes) + dec.residual
    assert np.linalg.norm(rec - TWO_TONE) / np.linalg.norm(TWO_TONE) < 1e-8
    np.testing.assert_allclose(sorted(dec.centroids), [0.2, 1.0], atol=5e-3)


def test_tones_plus_trend():
    x = np.sin(0.2 * T) + 0.5 * np.sin(0.9 * T) + 0.001 * T
    dec = decompose(x)
    assert len(dec.modes) == 3
    assert min(dec.centroids) < 0.02
    ext, _ = mirror_extend(x)
    F = np.fft.rfft(ext)
    peak = 2 * np.pi * np.argmax(np.abs(F)) / ext.size
    assert abs(dec.modes[0].center_frequency - peak) < 0.05


def test_zero_input_has_no_modes():
    dec = decompose(np.zeros(32))
    assert dec.modes == [] and np.all(dec.residual == 0)
    modes, residual = dec
    assert modes == []


def test_short_or_bad_input():
    with pytest.raises(ValueError):
        decompose(np.ones(7))
    with pytest.raises(ValueError):
        decompose(np.array([1.0] * 9 + [np.inf]))


def test_centroid_and_zero_energy():
    s = Spectrum.from_signal(np.zeros(16))
    with pytest.raises(ZeroEnergy):
        center_frequency(s)
    x = np.cos(2 * np.pi * 4 * np.arange(64) / 64)
    assert center_frequency(Spectrum.from_signal(x)) == pytest.approx(2 * np.pi * 4 / 64)


def test_spectrum_round_trip(rng):
    x = rng.normal(size=50)
    np.testing.assert_allclose(Spectrum.from_signal(x).inverse(), x, atol=1e-12)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    s = Spectrum.from_signal(z)
    assert not s.real and s.omega[-1] < 2 * np.pi
    np.testing.assert_allclose(s.inverse(), z, atol=1e-12)


def test_mirror_extension_is_even_reflection():
    x = np.arange(10.0)
    ext, sl = mirror_extend(x)
    assert ext.tolist() == [4, 3, 2, 1, 0, *range(10), 9, 8, 7, 6, 5]
    assert np.array_equal(ext[sl], x)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(1e-3, 1e4),
    beta=st.floats(1e-12, 1e3),
    wc=st.floats(0, np.pi),
    wr=st.floats(0, np.pi),
)
def test_filter_gain_in_unit_interval(alpha, beta, wc, wr):
    f = Spectrum.from_signal(np.random.default_rng(0).normal(size=64))
    u = update_mode(f, wc, wr, alpha, beta)
    gain = np.abs(u.bins) / np.abs(f.bins)
    assert np.all(gain >= 0) and np.all(gain <= 1 + 1e-15)


def test_residual_energy_strictly_decreases():
    x = np.sin(0.2 * T) + 0.5 * np.sin(0.9 * T) + 0.3 * np.sin(2.0 * T) + 0.001 * T
    dec = decompose(x, SgvmdConfig(epsilon=1e-4))
    ext, _ = mirror_extend(x)
    res = np.fft.rfft(ext)
    energies = [np.sum(np.abs(res) ** 2)]
    for m in dec.modes:
        res = res - m.spectrum.bins
        energies.append(np.sum(np.abs(res) ** 2))
    assert np.all(np.diff(energies) < 0)


@settings(max_examples=8, deadline=None)
@given(c=st.floats(1e-3, 1e3))
def test_scale_equivariance(c):
    base = decompose(TWO_TONE)
    scaled = decompose(c * TWO_TONE)
    assert len(scaled.modes) == len(base.modes)
    for a, b in zip(base.modes, scaled.modes):
        assert abs(a.center_frequency - b.center_frequency) < 1e-10
        np.testing.assert_allclose(b.time_domain, c * a.time_domain, rtol=1e-8, atol=1e-10 * c)


def test_matches_reference_wiener_iteration():
    cfg = SgvmdConfig(beta=1e-12, eta=1e-14, max_inner_iters=5000)
    dec = decompose(TWO_TONE, cfg)
    ref = wiener_reference(TWO_TONE, cfg.alpha, len(dec.modes))
    assert len(dec.modes) == 2
    np.testing.assert_allclose(dec.centroids, ref, atol=1e-4)


def test_iteration_cap_warns():
    f = Spectrum.from_signal(mirror_extend(TWO_TONE)[0])
    with pytest.warns(NoConvergence):
        mode = extract_one_mode(f, SgvmdConfig(max_inner_iters=1), peak_init(f))
    assert not mode.converged and mode.iterations == 1


def test_peak_init_masks_band():
    f = Spectrum.from_signal(np.cos(2 * np.pi * 10 * np.arange(128) / 128))
    u = peak_init(f, 3)
    assert np.count_nonzero(u.bins) <= 7
    assert np.argmax(np.abs(u.bins)) == 10


def test_complex_input_uses_full_circle():
    z = np.exp(1j * 2.5 * np.arange(512)) + 0.5 * np.exp(-1j * 0.7 * np.arange(512))
    dec = decompose(z)
    # reflection reverses rotation in the mirrored halves, so small extra modes may appear
    main = sorted(dec.modes, key=lambda m: -m.energy())[:2]
    np.testing.assert_allclose(sorted(m.center_frequency for m in main), [2.5, 2 * np.pi - 0.7], atol=0.02)
    rec = sum(m.time_domain for m in dec.modes) + dec.residual
    assert np.linalg.norm(rec - z) / np.linalg.norm(z) < 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        SgvmdConfig(alpha=0)
    with pytest.raises(ValueError):
        SgvmdConfig(max_modes=0)


def test_classify_examples():
    t = np.arange(400)
    assert classify_series(np.linspace(0, 1, 400)) == TREND
    assert classify_series(np.sin(0.8 * t)) == FREQUENCY
    noise = np.random.default_rng(3).normal(size=400)
    assert classify_series(noise) == RESIDUE
    assert classify_series(np.zeros(50)) == RESIDUE


def test_classify_with_precomputed_modes():
    x = np.sin(0.8 * np.arange(400))
    modes = decompose(x).modes
    assert classify_series(x, modes) == FREQUENCY
    with pytest.raises(ValueError):
        classify_series(x + 0j * x, modes)


def test_classify_thresholds_are_configurable():
    x = np.sin(0.8 * np.arange(400))
    assert classify_series(x, config=ClassifyConfig(frequency_share=0.999)) == RESIDUE


def test_complex_classification_channel_rule():
    t = np.arange(400)
    ramp = np.linspace(0, 1, 400)
    tone = np.sin(0.8 * t)
    noise = np.random.default_rng(1).normal(size=400)
    assert classify_series(tone + 1j * ramp) == TREND
    assert classify_series(noise + 1j * tone) == FREQUENCY
    assert classify_series(noise + 1j * noise[::-1]) == RESIDUE
    label, details = classify_detailed(tone + 1j * ramp)
    assert [d["label"] for d in details] == [FREQUENCY, TREND]
    assert all("converged" in d for d in details)


def test_nonconvergence_does_not_escape_classification():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        classify_series(np.sin(0.8 * np.arange(200)),
                        config=ClassifyConfig(sgvmd=SgvmdConfig(max_inner_iters=2)))
