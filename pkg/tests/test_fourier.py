import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beatmaps.diagnostics import envelope_minima, modulation_depth
from beatmaps.errors import TooShort
from beatmaps.fourier import (
    AmplitudeSpectrum,
    FrequencyMap,
    GaussianWindow,
    bandpass_filter,
    bin_spacing,
    frequency_map,
    map_maxima,
    ft_spectrum,
    native_resolution,
    spectral_peaks,
)
from beatmaps.spectra import PixelCoord, SpectralCube, TimeTrace, trace_to_cube
from beatmaps.units import C_CM_PER_FS

from conftest import T_ANALYSIS, tone, tone_trace

NM = np.arange(670.0, 681.0)


def dft_oracle(y, n_pad):
    """Textbook O(N^2) DFT on the padded length, nonnegative half."""
    n = np.arange(len(y))
    k = np.arange(n_pad // 2 + 1)
    return np.array([np.sum(y * np.exp(-2j * np.pi * kk * n / n_pad)) for kk in k])


# --- ft_spectrum ---------------------------------------------------------

def test_tone_peak_bin():
    spec = ft_spectrum(tone_trace(340.0), pad_factor=4)
    assert abs(spec.nu[np.argmax(spec.amp)] - 340.0) <= 5.0


def test_zero_trace():
    spec = ft_spectrum(TimeTrace(T_ANALYSIS, np.zeros(47)))
    assert np.all(spec.amp == 0)


def test_native_resolution():
    assert native_resolution(47, 20.0) == pytest.approx(36.26, abs=0.01)
    spec = ft_spectrum(tone_trace(340.0))
    assert spec.native_dnu == pytest.approx(36.26, abs=0.01)
    assert spec.dnu == pytest.approx(1 / (C_CM_PER_FS * 4 * 47 * 20.0))


def test_against_dft_oracle():
    rng = np.random.default_rng(1)
    y = rng.normal(size=47)
    for pad in (1, 3, 4):
        spec = ft_spectrum(TimeTrace(T_ANALYSIS, y), pad)
        ref = dft_oracle(y, pad * 47)
        assert np.allclose(spec.amp, np.abs(ref), rtol=1e-10, atol=1e-12)
        assert np.array_equal(spec.nu, np.arange(ref.size) * bin_spacing(pad * 47, 20.0))


def test_too_short():
    with pytest.raises(TooShort):
        ft_spectrum(TimeTrace([0.0, 20.0, 40.0], [1.0, 0.0, 1.0]))


def test_apodize_flag_changes_only_when_set():
    tr = tone_trace(300.0)
    assert np.array_equal(ft_spectrum(tr).amp, ft_spectrum(tr, apodize=False).amp)
    assert not np.allclose(ft_spectrum(tr).amp, ft_spectrum(tr, apodize=True).amp)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3))
def test_complex_spectrum_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 47))
    n_pad = 4 * 47
    fx, fy = np.fft.fft(x, n_pad), np.fft.fft(y, n_pad)
    spec = ft_spectrum(TimeTrace(T_ANALYSIS, a * x + b * y))
    combined = (a * fx + b * fy)[: n_pad // 2 + 1]
    assert np.allclose(spec.amp, np.abs(combined), atol=1e-9)
    assert np.allclose(spec.amp * np.exp(1j * spec.phase), combined, atol=1e-9)


@pytest.mark.parametrize("nu", [150.0, 263.0, 340.0, 437.0])
def test_padding_never_moves_peak_more_than_one_native_bin(nu):
    tr = tone_trace(nu)
    native = native_resolution(47, 20.0)
    previous = None
    for pad in (1, 2, 4, 8, 16):
        spec = ft_spectrum(tr, pad)
        peak = spec.nu[np.argmax(spec.amp)]
        assert abs(peak - nu) <= native
        if previous is not None:
            assert spec.dnu < previous
        previous = spec.dnu


# --- frequency_map -------------------------------------------------------

def test_map_locality():
    cube = trace_to_cube(tone_trace(340.0), NM, NM, PixelCoord(674.0, 677.0))
    m = frequency_map(cube, 340.0)
    hot = np.argwhere(m.amp > 0)
    assert hot.tolist() == [[4, 7]]
    assert m.band == pytest.approx(0.5 * native_resolution(47, 20.0))
    assert m.meta["quantity"] == "abs(FT)"


def test_map_against_oracle():
    rng = np.random.default_rng(7)
    cube = SpectralCube(rng.normal(size=(47, 4, 5)), T_ANALYSIS, NM[:4], NM[:5])
    m = frequency_map(cube, 340.0, pad_factor=4)
    n_pad = 4 * 47
    k = int(np.rint(340.0 / bin_spacing(n_pad, 20.0)))
    for i in range(4):
        for j in range(5):
            ref = abs(dft_oracle(cube.values[:, i, j], n_pad)[k])
            assert m.amp[i, j] == pytest.approx(ref, rel=1e-10)


def test_map_above_nyquist():
    cube = trace_to_cube(tone_trace(340.0), NM, NM, PixelCoord(674.0, 677.0))
    with pytest.raises(ValueError):
        frequency_map(cube, 1e4)


# --- band-pass -----------------------------------------------------------

def test_window_rejects_nonpositive():
    with pytest.raises(ValueError):
        GaussianWindow(340.0, 0.0)
    with pytest.raises(ValueError):
        GaussianWindow(-1.0, 20.0)


def test_window_is_symmetric_in_frequency():
    w = GaussianWindow(340.0, 40.0)
    assert w(340.0) == 1.0
    assert w(-340.0) == 1.0
    assert w(360.0) == pytest.approx(0.5)


@pytest.mark.parametrize("fwhm", [20.0, 40.0, 80.0])
def test_single_tone_flat_envelope(fwhm):
    env = np.abs(bandpass_filter(tone_trace(340.0), GaussianWindow(340.0, fwhm)).y)
    inner = env[5:-5]
    assert (inner.max() - inner.min()) / inner.mean() < 0.10


def test_plain_filter_is_available():
    out = bandpass_filter(tone_trace(340.0), GaussianWindow(340.0, 40.0), normalize=False)
    assert out.meta["window_fwhm"] == 40.0
    assert "coi_margin" in out.meta


def test_narrow_window_suppresses_neighbours():
    tr = tone_trace(270.0, 340.0, 410.0)
    env = bandpass_filter(tr, GaussianWindow(340.0, 20.0))
    assert modulation_depth(env) < 0.15


def test_wide_window_beats_at_neighbour_spacing():
    # 1/(c * 70 cm^-1) = 476 fs; two full beats need a record past 80-1000 fs
    t = 80.0 + 20.0 * np.arange(97)
    tr = tone_trace(270.0, 340.0, 410.0, t=t)
    env = bandpass_filter(tr, GaussianWindow(340.0, 80.0))
    minima = envelope_minima(env, exclude_coi=True)
    assert len(minima) >= 2
    assert np.mean(np.diff(minima)) == pytest.approx(1 / (C_CM_PER_FS * 70.0), abs=25.0)


def test_all_pass_window_returns_input():
    rng = np.random.default_rng(3)
    y = rng.normal(size=47)
    out = bandpass_filter(TimeTrace(T_ANALYSIS, y), GaussianWindow(1000.0, 1e6))
    err = np.real(out.y)[2:-2] - y[2:-2]
    assert np.sqrt(np.mean(err ** 2)) < 0.01 * np.sqrt(np.mean(y ** 2))


def test_bandpass_too_short():
    with pytest.raises(TooShort):
        bandpass_filter(TimeTrace([0.0, 20.0, 40.0], [1.0, 0.0, 1.0]), GaussianWindow(340.0, 20.0))


# --- peaks ---------------------------------------------------------------

def test_five_tone_peaks():
    nus = (120.0, 190.0, 265.0, 340.0, 440.0)
    spec = ft_spectrum(tone_trace(*nus), pad_factor=8)
    peaks = spectral_peaks(spec, min_rel_height=0.3)
    assert len(peaks) == 5
    for (nu, _), ref in zip(peaks, nus):
        assert abs(nu - ref) <= 8.0


def test_flat_spectrum_has_no_peaks():
    spec = AmplitudeSpectrum(np.arange(10.0), np.ones(10), np.zeros(10), 1.0)
    assert spectral_peaks(spec) == []


@pytest.mark.parametrize("n", [47, 200])
@pytest.mark.parametrize("nu", [120.0, 265.0, 300.0, 340.0, 371.5, 440.0])
def test_single_tone_refinement(nu, n):
    t = 80.0 + 20.0 * np.arange(n)
    spec = ft_spectrum(TimeTrace(t, tone(nu, t)), pad_factor=4)
    peaks = spectral_peaks(spec, min_rel_height=0.5)
    assert len(peaks) == 1
    assert abs(peaks[0][0] - nu) <= 2.0


def test_peaks_sorted_and_above_floor():
    spec = ft_spectrum(tone_trace(120.0, 340.0, 440.0), pad_factor=8)
    peaks = spectral_peaks(spec, 0.2)
    nus = [p[0] for p in peaks]
    assert nus == sorted(nus)
    assert all(a >= 0.2 * spec.amp.max() * 0.99 for _, a in peaks)


def test_peaks_rejects_bad_threshold():
    with pytest.raises(ValueError):
        spectral_peaks(ft_spectrum(tone_trace(340.0)), 0.0)


# --- map maxima ----------------------------------------------------------

def _map(amp):
    amp = np.asarray(amp, dtype=float)
    return FrequencyMap(340.0, 18.1, amp, 650.0 + np.arange(amp.shape[0]), 660.0 + np.arange(amp.shape[1]))


def test_map_maxima_finds_separated_peaks():
    amp = np.zeros((9, 9))
    amp[2, 2], amp[6, 3], amp[4, 7] = 1.0, 0.5, 0.04
    m = _map(amp)
    assert map_maxima(m) == [(652.0, 662.0, 1.0), (656.0, 663.0, 0.5)]
    assert len(map_maxima(m, min_rel_height=0.01)) == 3


def test_map_maxima_border_cells():
    amp = np.zeros((5, 5))
    amp[0, 2] = 1.0
    amp[2, 2] = 0.5
    assert [x[:2] for x in map_maxima(_map(amp))] == [(652.0, 662.0)]
    assert len(map_maxima(_map(amp), border=True)) == 2


def test_map_maxima_empty_and_flat():
    assert map_maxima(_map(np.zeros((3, 3)))) == []
    with pytest.raises(ValueError):
        map_maxima(_map(np.ones((3, 3))), 0.0)
