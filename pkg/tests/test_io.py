import numpy as np
import pytest

from misr.io import (ImageFormatError, ImageReadError, UnsupportedImageError, load_image,
                     read_pgm, save_image, write_pgm)


def test_hand_written_p5(fixtures_dir):
    img = load_image(fixtures_dir / "tiny_3x2.pgm")
    np.testing.assert_array_equal(img, [[0, 128, 255], [7, 8, 9]])


def test_pgm_round_trip_byte_exact(tmp_path, fixtures_dir):
    raw = (fixtures_dir / "checkerboard.pgm").read_bytes()
    img = read_pgm(raw)
    assert write_pgm(img) == raw
    save_image(tmp_path / "c.pgm", img)
    assert (tmp_path / "c.pgm").read_bytes() == raw


@pytest.mark.parametrize("shape", [(5, 7), (6, 4, 3)])
def test_png_round_trip(tmp_path, rng, shape):
    img = rng.integers(0, 256, shape).astype(float)
    save_image(tmp_path / "x.png", img)
    np.testing.assert_array_equal(load_image(tmp_path / "x.png"), img)


def test_save_clamps_and_rounds(tmp_path):
    save_image(tmp_path / "y.pgm", np.array([[-3.0, 12.4, 12.6, 300.0]]))
    np.testing.assert_array_equal(load_image(tmp_path / "y.pgm"), [[0, 12, 13, 255]])


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(ImageFormatError):
        load_image(p)
    p.write_bytes(b"GIF89a....")
    with pytest.raises(ImageFormatError):
        load_image(p)


def test_truncated_raster():
    with pytest.raises(ImageFormatError):
        read_pgm(b"P5\n3 2\n255\n\x00\x01")


def test_sixteen_bit_unsupported(tmp_path):
    with pytest.raises(UnsupportedImageError):
        read_pgm(b"P5\n1 1\n65535\n\x00\x00")
    from PIL import Image

    Image.fromarray(np.full((3, 3), 40000, dtype=np.uint16)).save(tmp_path / "d.png")
    with pytest.raises(UnsupportedImageError):
        load_image(tmp_path / "d.png")


def test_missing_file(tmp_path):
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "nope.pgm")


def test_errors_are_distinct():
    assert len({ImageReadError, ImageFormatError, UnsupportedImageError}) == 3
    assert not issubclass(ImageFormatError, UnsupportedImageError)
