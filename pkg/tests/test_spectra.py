import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beatmaps.errors import (
    EmptyAxis,
    EmptySelection,
    MalformedManifest,
    MissingFile,
    NonFiniteValue,
    NonPositive,
    NonUniformTimeAxis,
    OutOfRange,
    SizeMismatch,
    Underdetermined,
)
from beatmaps.spectra import (
    PixelCoord,
    SpectralCube,
    TimeTrace,
    crop_population,
    detrend,
    detrend_cube,
    extract_trace,
    load_archive,
    save_archive,
    trace_to_cube,
)
from beatmaps.units import nm_to_wavenumber, wavenumber_to_nm

from conftest import T_ANALYSIS, tone


def small_cube(seed=0, nt=6, ne=3, nd=4):
    rng = np.random.default_rng(seed)
    return SpectralCube(
        rng.normal(size=(nt, ne, nd)),
        10.0 + 20.0 * np.arange(nt),
        670.0 + np.arange(ne),
        675.0 + 2.0 * np.arange(nd),
        label="random",
    )


# --- archive -------------------------------------------------------------

def test_archive_roundtrip_is_bit_exact(tmp_path):
    cube = small_cube()
    save_archive(cube, tmp_path / "c")
    back = load_archive(tmp_path / "c")
    assert back.values.tobytes() == cube.values.tobytes()
    assert np.array_equal(back.t_axis, cube.t_axis)
    assert np.array_equal(back.exc_axis, cube.exc_axis)
    assert np.array_equal(back.det_axis, cube.det_axis)
    assert back.label == cube.label


def test_archive_bytes_are_deterministic(tmp_path):
    cube = small_cube(3)
    save_archive(cube, tmp_path / "a")
    save_archive(cube, tmp_path / "b")
    for name in ("manifest.txt", "cube.f64le"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_layout(tmp_path):
    save_archive(small_cube(), tmp_path / "c")
    text = (tmp_path / "c" / "manifest.txt").read_bytes()
    assert b"\r" not in text
    keys = [line.split("=")[0] for line in text.decode().splitlines()]
    assert keys == ["format_version", "n_population", "n_excitation", "n_detection",
                    "dt_fs", "t0_fs", "excitation_nm", "detection_nm", "label"]


def test_payload_is_little_endian_t_slowest(tmp_path):
    cube = small_cube()
    save_archive(cube, tmp_path / "c")
    raw = np.frombuffer((tmp_path / "c" / "cube.f64le").read_bytes(), dtype="<f8")
    assert raw[1] == cube.values[0, 0, 1]
    assert raw[4] == cube.values[0, 1, 0]
    assert raw[12] == cube.values[1, 0, 0]


def _manifest(nt, ne, nd, dt=20.0):
    return (
        f"format_version=1\nn_population={nt}\nn_excitation={ne}\nn_detection={nd}\n"
        f"dt_fs={dt}\nt0_fs=0.0\n"
        "excitation_nm=" + ",".join(str(650.0 + k) for k in range(ne)) + "\n"
        "detection_nm=" + ",".join(str(650.0 + k) for k in range(nd)) + "\n"
        "label=x\n"
    )


def test_size_mismatch(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    (d / "manifest.txt").write_text(_manifest(47, 10, 10))
    (d / "cube.f64le").write_bytes(b"\0" * (8 * 4699))
    with pytest.raises(SizeMismatch):
        load_archive(d)


def test_nonpositive_step_in_manifest(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    (d / "manifest.txt").write_text(_manifest(3, 1, 1, dt=-20.0))
    (d / "cube.f64le").write_bytes(b"\0" * 24)
    with pytest.raises(NonUniformTimeAxis):
        load_archive(d)


def test_nonuniform_time_axis():
    with pytest.raises(NonUniformTimeAxis):
        SpectralCube(np.zeros((3, 1, 1)), [0.0, 20.0, 50.0], [670.0], [680.0])


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_archive(tmp_path / "nothing")


@pytest.mark.parametrize("edit", [
    lambda m: m + "colour=blue\n",
    lambda m: m.replace("n_detection=2", "n_detection=2\nn_detection=2"),
    lambda m: m.replace("excitation_nm=650.0,651.0", "excitation_nm=650.0"),
    lambda m: m.replace("format_version=1", "format_version=2"),
    lambda m: m.replace("label=x\n", ""),
])
def test_malformed_manifest(tmp_path, edit):
    d = tmp_path / "c"
    d.mkdir()
    (d / "manifest.txt").write_text(edit(_manifest(3, 2, 2)))
    (d / "cube.f64le").write_bytes(b"\0" * (8 * 12))
    with pytest.raises(MalformedManifest):
        load_archive(d)


def test_empty_axis_rejected():
    with pytest.raises(EmptyAxis):
        SpectralCube(np.zeros((0, 2, 2)), [], [1.0, 2.0], [1.0, 2.0])


def test_nan_rejected():
    v = np.zeros((3, 2, 2))
    v[1, 1, 0] = np.nan
    with pytest.raises(NonFiniteValue):
        SpectralCube(v, [0.0, 20.0, 40.0], [1.0, 2.0], [1.0, 2.0])


def test_cube_is_immutable():
    cube = small_cube()
    with pytest.raises(ValueError):
        cube.values[0, 0, 0] = 1.0


# --- extraction ----------------------------------------------------------

def test_extract_on_node():
    cube = small_cube()
    tr = extract_trace(cube, PixelCoord(671.0, 679.0))
    assert np.array_equal(tr.y, cube.values[:, 1, 2])
    assert tuple(tr.origin) == (671.0, 679.0)


def test_extract_midway_takes_lower_index():
    cube = small_cube()
    tr = extract_trace(cube, PixelCoord(670.5, 676.0))
    assert tuple(tr.origin) == (670.0, 675.0)


def test_extract_out_of_range():
    cube = small_cube()
    with pytest.raises(OutOfRange):
        extract_trace(cube, PixelCoord(660.0, 676.0))
    # within half a step of the last node still snaps
    assert extract_trace(cube, PixelCoord(672.4, 681.9)).origin == PixelCoord(672.0, 681.0)


def test_extract_seeded_cosine():
    y = tone(120.0)
    cube = trace_to_cube(TimeTrace(T_ANALYSIS, y), np.arange(650.0, 701.0), np.arange(650.0, 701.0),
                         PixelCoord(675.0, 681.0))
    assert np.array_equal(extract_trace(cube, PixelCoord(675.0, 681.0)).y, y)


# --- cropping ------------------------------------------------------------

def _long_cube():
    t = 20.0 * np.arange(51)
    return SpectralCube(np.ones((51, 2, 2)), t, [1.0, 2.0], [1.0, 2.0])


def test_crop_analysis_window():
    c = crop_population(_long_cube(), 80, 1000)
    assert c.shape[0] == 47
    assert c.t_axis[0] == 80.0 and c.t_axis[-1] == 1000.0
    assert c.dt == 20.0


def test_crop_full_range_is_identity():
    cube = _long_cube()
    c = crop_population(cube, 0, 1000)
    assert np.array_equal(c.values, cube.values) and np.array_equal(c.t_axis, cube.t_axis)


def test_crop_empty():
    with pytest.raises(EmptySelection):
        crop_population(_long_cube(), 2000, 3000)


def test_crop_idempotent():
    once = crop_population(_long_cube(), 95, 613)
    twice = crop_population(once, 95, 613)
    assert np.array_equal(once.t_axis, twice.t_axis)


# --- detrending ----------------------------------------------------------

def test_detrend_constant_order0():
    tr = TimeTrace(T_ANALYSIS, np.full(47, 3.7))
    assert np.allclose(detrend(tr, 0).y, 0.0, atol=1e-12)


def test_detrend_linear_trend_leaves_cosine():
    t = 20.0 * np.arange(200)
    c = tone(120.0, t)
    tr = TimeTrace(t, c + 0.3 + 2e-3 * t)
    res = detrend(tr, 1).y
    assert np.corrcoef(res, c)[0, 1] > 0.99


@pytest.mark.parametrize("phase", [0.0, 0.7, 1.5])
def test_detrend_order3_keeps_cosine(phase):
    # about 100 periods of 340 cm^-1
    t = 20.0 * np.arange(500)
    c = tone(340.0, t, phase)
    res = detrend(TimeTrace(t, c), 3).y
    assert np.sqrt(np.mean((res - c) ** 2)) < 0.02 * np.sqrt(np.mean(c ** 2))


def test_detrend_mean_zero_and_idempotent():
    rng = np.random.default_rng(2)
    tr = TimeTrace(T_ANALYSIS, rng.normal(size=47) + 0.01 * T_ANALYSIS)
    once = detrend(tr, 3)
    assert abs(once.y.mean()) < 1e-12
    assert np.allclose(detrend(once, 3).y, once.y, atol=1e-12)


def test_detrend_underdetermined():
    with pytest.raises(Underdetermined):
        detrend(TimeTrace([0.0, 20.0, 40.0], [1.0, 2.0, 0.0]), 2)


def test_detrend_cube_matches_per_pixel():
    cube = small_cube(5, nt=12)
    dc = detrend_cube(cube, 2)
    for i in range(3):
        for j in range(4):
            tr = TimeTrace(cube.t_axis, cube.values[:, i, j])
            assert np.allclose(dc.values[:, i, j], detrend(tr, 2).y, atol=1e-12)


# --- units ---------------------------------------------------------------

def test_nm_conversion():
    assert nm_to_wavenumber(680.0) == pytest.approx(14705.882352941177, rel=1e-12)
    with pytest.raises(NonPositive):
        nm_to_wavenumber(0.0)
    with pytest.raises(NonPositive):
        wavenumber_to_nm(-3.0)


@given(st.floats(min_value=1.0, max_value=1e5))
def test_nm_roundtrip(x):
    assert wavenumber_to_nm(nm_to_wavenumber(x)) == pytest.approx(x, rel=1e-9)


# --- properties ----------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=1, max_value=6),
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=1, max_value=4),
    st.floats(min_value=0.1, max_value=50.0),
    st.floats(min_value=-100.0, max_value=100.0),
    st.integers(min_value=0, max_value=2 ** 31),
)
def test_archive_roundtrip_property(nt, ne, nd, dt, t0, seed):
    import tempfile

    rng = np.random.default_rng(seed)
    cube = SpectralCube(
        rng.normal(size=(nt, ne, nd)) * 10.0 ** rng.integers(-200, 200),
        t0 + dt * np.arange(nt),
        np.cumsum(rng.uniform(0.1, 3, ne)) + 600,
        np.cumsum(rng.uniform(0.1, 3, nd)) + 600,
    )
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "c")
        save_archive(cube, path)
        back = load_archive(path)
    assert back.values.tobytes() == cube.values.tobytes()
    assert np.array_equal(back.exc_axis, cube.exc_axis)
    assert np.allclose(back.t_axis, cube.t_axis, rtol=0, atol=1e-9 * max(1.0, abs(t0) + dt * nt))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31), st.integers(min_value=0, max_value=4))
def test_detrend_idempotent_property(seed, order):
    rng = np.random.default_rng(seed)
    tr = TimeTrace(T_ANALYSIS, rng.normal(size=47))
    once = detrend(tr, order)
    assert np.allclose(detrend(once, order).y, once.y, atol=1e-10)
