import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from PIL import Image

from dmdbg import imaging
from dmdbg.errors import DimensionError, FrameIOError, NumericalError, UsageError
from dmdbg.imaging import BackgroundModel, FrameSequence

from oracles import histogram_mode


def write(path, array, mode=None):
    Image.fromarray(array, mode=mode).save(path)


# load_sequence --------------------------------------------------------------
def test_natural_sort_order(tmp_path):
    frame = np.zeros((4, 5, 3), np.uint8)
    for idx in (100, 9, 10):
        frame[...] = idx
        write(tmp_path / f"in{idx:04d}.png", frame)
    seq = imaging.load_sequence(tmp_path)
    assert seq.source_names == ("in0009.png", "in0010.png", "in0100.png")
    assert [int(f[0, 0, 0]) for f in seq.frames] == [9, 10, 100]


def test_natural_sort_key_mixed_case_and_digits():
    names = ["B2.png", "a10.png", "a2.png", "A1.png"]
    assert sorted(names, key=imaging.natural_sort_key) == ["A1.png", "a2.png", "a10.png", "B2.png"]


def test_empty_directory_and_missing_directory(tmp_path):
    with pytest.raises(FrameIOError):
        imaging.load_sequence(tmp_path)
    with pytest.raises(FrameIOError):
        imaging.load_sequence(tmp_path / "nope")


def test_single_frame_loads(tmp_path):
    write(tmp_path / "f.png", np.full((48, 64, 3), 7, np.uint8))
    seq = imaging.load_sequence(tmp_path)
    assert (seq.N, seq.m, seq.n) == (1, 48, 64)


def test_alpha_dropped_and_gray_replicated(tmp_path, caplog):
    rgba = np.zeros((3, 3, 4), np.uint8)
    rgba[..., :3] = (10, 20, 30)
    rgba[..., 3] = 77
    write(tmp_path / "a1.png", rgba, "RGBA")
    write(tmp_path / "a2.png", np.full((3, 3), 99, np.uint8), "L")
    with caplog.at_level(logging.WARNING, logger="dmdbg.imaging"):
        seq = imaging.load_sequence(tmp_path)
    assert seq.frames[0, 0, 0].tolist() == [10, 20, 30]
    assert seq.frames[1, 0, 0].tolist() == [99, 99, 99]
    assert "grayscale" in caplog.text


def test_mixed_sizes_name_offenders(tmp_path):
    write(tmp_path / "f1.png", np.zeros((4, 4, 3), np.uint8))
    write(tmp_path / "f2.png", np.zeros((5, 4, 3), np.uint8))
    with pytest.raises(DimensionError, match="f2.png"):
        imaging.load_sequence(tmp_path)


def test_unreadable_file_named(tmp_path):
    write(tmp_path / "f1.png", np.zeros((4, 4, 3), np.uint8))
    (tmp_path / "f2.png").write_bytes(b"not an image")
    with pytest.raises(FrameIOError, match="f2.png"):
        imaging.load_sequence(tmp_path)


def test_pattern_filter_and_other_formats(tmp_path):
    frame = np.full((4, 4, 3), 50, np.uint8)
    write(tmp_path / "x1.bmp", frame)
    write(tmp_path / "y1.png", frame)
    (tmp_path / "notes.txt").write_text("ignored")
    assert imaging.load_sequence(tmp_path, "x*").source_names == ("x1.bmp",)
    assert imaging.load_sequence(tmp_path).N == 2


# stacking -------------------------------------------------------------------
def test_build_data_matrix_one_pixel():
    frames = np.array([[[[10, 20, 30]]], [[[40, 50, 60]]]], np.uint8)
    P = imaging.build_data_matrix(FrameSequence(frames))
    np.testing.assert_array_equal(P.values, [[10, 40], [20, 50], [30, 60]])


def test_build_data_matrix_layout_row_major():
    frame = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
    P = imaging.build_data_matrix(FrameSequence(frame[None]))
    mn = 6
    np.testing.assert_array_equal(P.values[:mn, 0], frame[..., 0].ravel())
    np.testing.assert_array_equal(P.values[mn : 2 * mn, 0], frame[..., 1].ravel())
    np.testing.assert_array_equal(P.values[2 * mn :, 0], frame[..., 2].ravel())


def test_paper_frame_size_row_count():
    seq = FrameSequence(np.zeros((2, 240, 320, 3), np.uint8))
    assert imaging.build_data_matrix(seq).shape == (230400, 2)


@settings(max_examples=30, deadline=None)
@given(hnp.arrays(np.uint8, st.tuples(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5), st.just(3))))
def test_stack_unstack_round_trip(frames):
    seq = FrameSequence(frames)
    P = imaging.build_data_matrix(seq)
    assert P.values.min() >= 0 and P.values.max() <= 255
    back = imaging.unstack_matrix(P)
    assert np.array_equal(back.astype(np.uint8), frames)
    for k in range(seq.N):
        planes = imaging.unstack_vector(P.values[:, k], seq.m, seq.n)
        assert np.array_equal(planes.transpose(1, 2, 0).astype(np.uint8), frames[k])


def test_unstack_complex_magnitude_and_length_check():
    v = np.zeros(3, complex)
    v[0] = -3 + 4j
    planes = imaging.unstack_vector(v, 1, 1)
    assert planes[0, 0, 0] == 5.0
    with pytest.raises(DimensionError):
        imaging.unstack_vector(np.zeros(4), 1, 1)


# normalisation --------------------------------------------------------------
def test_normalize_min_max_and_constant():
    planes = np.stack([np.array([[2.0, 4.0]]), np.full((1, 2), 3.0), np.array([[0.0, 1.0]])])
    img = imaging.normalize_mode_image(planes)
    np.testing.assert_array_equal(img[..., 0], [[0.0, 1.0]])
    np.testing.assert_array_equal(img[..., 1], [[0.5, 0.5]])


def test_normalize_channels_independent():
    rng = np.random.default_rng(0)
    planes = rng.normal(size=(3, 5, 6))
    scaled = planes.copy()
    scaled[1] *= 17.0
    a = imaging.normalize_mode_image(planes)
    b = imaging.normalize_mode_image(scaled)
    np.testing.assert_array_equal(a[..., 0], b[..., 0])
    np.testing.assert_array_equal(a[..., 2], b[..., 2])


def test_normalize_joint_option():
    planes = np.stack([np.full((2, 2), 0.0), np.full((2, 2), 5.0), np.full((2, 2), 10.0)])
    img = imaging.normalize_mode_image(planes, joint=True)
    np.testing.assert_array_equal(img[0, 0], [0.0, 0.5, 1.0])


def test_normalize_rejects_non_finite():
    with pytest.raises(NumericalError):
        imaging.normalize_mode_image(np.full((3, 2, 2), np.nan))


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(np.float64, (3, 4, 4), elements=st.floats(-1e6, 1e6)),
    st.floats(1e-3, 1e3),
)
def test_normalize_range_and_scale_invariance(planes, scale):
    a = imaging.normalize_mode_image(planes)
    b = imaging.normalize_mode_image(planes * scale)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_allclose(a, b, atol=1e-9)


# statistical mode image -----------------------------------------------------
def _seq_from_histories(histories):
    h = np.asarray(histories, np.uint8)
    frames = np.repeat(h[:, None, None, None], 3, axis=3)
    return FrameSequence(frames)


def test_mode_majority_and_tie():
    assert imaging.statistical_mode_image(_seq_from_histories([5, 5, 9]))[0, 0, 0] == 5
    assert imaging.statistical_mode_image(_seq_from_histories([7, 4, 7, 4]))[0, 0, 0] == 4


@pytest.mark.parametrize("seed", range(3))
def test_mode_matches_histogram_oracle(seed):
    frames = np.random.default_rng(seed).integers(0, 6, size=(7, 4, 4, 3), dtype=np.uint8)
    img = imaging.statistical_mode_image(FrameSequence(frames))
    for y in range(4):
        for x in range(4):
            for c in range(3):
                assert img[y, x, c] == histogram_mode(frames[:, y, x, c])


def test_mode_of_static_sequence_is_frame():
    frame = np.random.default_rng(1).integers(0, 256, size=(6, 5, 3), dtype=np.uint8)
    seq = FrameSequence(np.repeat(frame[None], 4, axis=0))
    assert np.array_equal(imaging.statistical_mode_image(seq), frame)
    assert np.array_equal(imaging.statistical_mode_image(seq, "median"), frame)
    with pytest.raises(UsageError):
        imaging.statistical_mode_image(seq, "mean")


# colour transfer ------------------------------------------------------------
def test_lab_round_trip_exact():
    rgb = np.random.default_rng(0).uniform(0.05, 1.0, size=(8, 8, 3))
    np.testing.assert_allclose(imaging.lab_to_rgb(imaging.rgb_to_lab(rgb)), rgb, atol=1e-12)


def test_identity_transfer():
    img = np.random.default_rng(2).uniform(0.0, 1.0, size=(16, 16, 3))
    out = imaging.reinhard_transfer(img, BackgroundModel(img, 3, 0.1))
    assert out.color_transfer_applied and out.mode_index == 3 and out.abs_mu == 0.1
    assert np.abs(out.image - img).max() <= 1 / 255


def _unsaturated_pair(seed):
    rng = np.random.default_rng(seed)
    source = rng.uniform(0.35, 0.65, size=(20, 24, 3))
    target = np.clip(0.5 + 0.1 * rng.normal(size=(20, 24, 3)) * [1.0, 0.8, 1.2], 0.2, 0.8)
    return source, target


@pytest.mark.parametrize("seed", range(5))
def test_transfer_matches_source_statistics(seed):
    source, target = _unsaturated_pair(seed)
    raw = imaging.match_lab_statistics(source, target)
    assert raw.min() > 0.0 and raw.max() < 1.0, "instance must not saturate"
    out = imaging.reinhard_transfer(source, target).image
    lab_out = imaging.rgb_to_lab(out).reshape(-1, 3)
    lab_src = imaging.rgb_to_lab(source).reshape(-1, 3)
    np.testing.assert_allclose(lab_out.mean(0), lab_src.mean(0), atol=1e-6)
    np.testing.assert_allclose(lab_out.std(0), lab_src.std(0), atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_transfer_is_affine_in_lab_on_unsaturated_pixels(seed):
    rng = np.random.default_rng(seed)
    source = rng.uniform(0, 1, size=(6, 7, 3))
    target = rng.uniform(0, 1, size=(6, 7, 3))
    out = imaging.reinhard_transfer(source, target).image
    assert out.min() >= 0.0 and out.max() <= 1.0
    src, tgt = imaging.color_stats(source), imaging.color_stats(target)
    lab_t = imaging.rgb_to_lab(target)
    expected = (lab_t - tgt.mean) * (src.std / tgt.std) + src.mean
    ok = np.all((out > 0) & (out < 1), axis=-1)
    # pixels whose target LMS hit the log floor are not invertible either
    lms = target @ imaging.RGB_TO_LMS.T
    ok &= np.all(lms > imaging.LMS_FLOOR, axis=-1)
    np.testing.assert_allclose(imaging.rgb_to_lab(out)[ok], expected[ok], atol=1e-9)


def test_transfer_black_pixel_survives():
    source, target = _unsaturated_pair(0)
    target = target.copy()
    target[0, 0] = 0.0
    # identity transfer keeps a black pixel black through the log floor
    out = imaging.reinhard_transfer(target, target).image
    assert np.abs(out[0, 0]).max() <= 1 / 255


def test_transfer_idempotent():
    source, target = _unsaturated_pair(4)
    once = imaging.reinhard_transfer(source, target)
    twice = imaging.reinhard_transfer(source, once)
    assert np.abs(once.image - twice.image).max() <= 1 / 255


def test_transfer_constant_target_channel():
    source, _ = _unsaturated_pair(1)
    target = np.full(source.shape, 0.4)
    out = imaging.reinhard_transfer(source, target).image
    assert np.all(np.isfinite(out))


def test_transfer_dimension_mismatch():
    with pytest.raises(DimensionError):
        imaging.reinhard_transfer(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))


def test_transfer_accepts_uint8_source():
    source, target = _unsaturated_pair(2)
    s8 = imaging.quantize_u8(source)
    a = imaging.reinhard_transfer(s8, target).image
    b = imaging.reinhard_transfer(s8.astype(float) / 255, target).image
    np.testing.assert_array_equal(a, b)


# output ---------------------------------------------------------------------
def test_quantize_half_away_from_zero():
    vals = np.array([0.5, 1.5, 2.5, 254.5]) / 255
    np.testing.assert_array_equal(imaging.quantize_u8(vals), [1, 2, 3, 255])


def test_write_png_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, size=(5, 6, 3), dtype=np.uint8)
    path = imaging.write_png(tmp_path / "sub" / "x.png", img)
    assert np.array_equal(imaging.read_image(path), img)


def test_background_model_validates_shape():
    with pytest.raises(DimensionError):
        BackgroundModel(np.zeros((4, 4)))
    with pytest.raises(TypeError):
        FrameSequence(np.zeros((1, 2, 2, 3)))
