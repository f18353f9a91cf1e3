import numpy as np
import pytest

from aescore.imaging import (
    Image,
    PpmError,
    decode_ppm,
    encode_ppm,
    image_from_array,
    mosaic,
    resize_bilinear,
    to_tensor,
)


def solid(width, height, rgb):
    return Image(width, height, bytes(rgb) * (width * height))


class TestImageType:
    def test_data_length_enforced(self):
        with pytest.raises(ValueError):
            Image(2, 2, b"\x00" * 11)

    def test_min_dims_enforced(self):
        with pytest.raises(ValueError):
            Image(0, 1, b"")

    def test_array_round_trip(self):
        arr = np.arange(24, dtype=np.uint8).reshape(2, 4, 3)
        assert image_from_array(arr).to_array().tolist() == arr.tolist()


class TestPpmCodec:
    def test_decode_1x1_white(self):
        img = decode_ppm(b"P6\n1 1\n255\n\xff\xff\xff")
        assert (img.width, img.height) == (1, 1)
        assert img.data == b"\xff\xff\xff"

    def test_encode_1x1_black_byte_count(self):
        data = encode_ppm(solid(1, 1, (0, 0, 0)))
        header = b"P6\n1 1\n255\n"
        assert data == header + b"\x00\x00\x00"
        assert len(data) == len(header) + 3

    def test_round_trip_canonical(self):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
        encoded = encode_ppm(image_from_array(arr))
        assert encode_ppm(decode_ppm(encoded)) == encoded

    def test_row_major_sample_order(self):
        img = image_from_array(np.array([[[1, 2, 3], [4, 5, 6]]], dtype=np.uint8))
        assert encode_ppm(img).endswith(b"\x01\x02\x03\x04\x05\x06")

    def test_wrong_magic_rejected(self):
        with pytest.raises(PpmError, match="magic"):
            decode_ppm(b"P5\n1 1\n255\n\x00")

    def test_truncated_payload_rejected(self):
        with pytest.raises(PpmError, match="truncated"):
            decode_ppm(b"P6\n2 2\n255\n" + b"\x00" * 9)  # 3 pixels for a 2x2 header

    def test_trailing_bytes_rejected(self):
        with pytest.raises(PpmError, match="trailing"):
            decode_ppm(b"P6\n1 1\n255\n" + b"\x00" * 4)

    def test_wrong_maxval_rejected(self):
        with pytest.raises(PpmError, match="maxval"):
            decode_ppm(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00")

    def test_header_comments_skipped(self):
        img = decode_ppm(b"P6\n# a comment\n2 1\n# another\n255\n" + b"\xaa" * 6)
        assert (img.width, img.height) == (2, 1)

    def test_empty_input_rejected(self):
        with pytest.raises(PpmError):
            decode_ppm(b"")


class TestResizeBilinear:
    def test_identity_is_bit_exact(self):
        rng = np.random.default_rng(1)
        img = image_from_array(rng.integers(0, 256, (9, 13, 3), dtype=np.uint8))
        out = resize_bilinear(img, 13, 9)
        assert out.data == img.data

    def test_checkerboard_to_single_pixel(self):
        arr = np.zeros((2, 2, 3), dtype=np.uint8)
        arr[0, 1] = arr[1, 0] = 255
        out = resize_bilinear(image_from_array(arr), 1, 1)
        # average of the four corners is 127.5; half rounds away from zero
        assert out.data == b"\x80\x80\x80"

    def test_constant_stays_constant(self):
        img = solid(4, 6, (17, 200, 33))
        out = resize_bilinear(img, 11, 3)
        assert set(out.to_array()[:, :, 0].flat) == {17}
        assert set(out.to_array()[:, :, 1].flat) == {200}
        assert set(out.to_array()[:, :, 2].flat) == {33}

    def test_output_within_input_range(self):
        rng = np.random.default_rng(2)
        arr = rng.integers(40, 201, (8, 8, 3), dtype=np.uint8)
        out = resize_bilinear(image_from_array(arr), 21, 5).to_array()
        assert out.min() >= arr.min()
        assert out.max() <= arr.max()

    def test_output_dims(self):
        out = resize_bilinear(solid(3, 5, (0, 0, 0)), 10, 2)
        assert (out.width, out.height) == (10, 2)

    def test_bad_dims_rejected(self):
        with pytest.raises(ValueError):
            resize_bilinear(solid(2, 2, (0, 0, 0)), 0, 5)


class TestToTensor:
    def test_white_zero_mean(self):
        t = to_tensor(solid(2, 3, (255, 255, 255)), (0.0, 0.0, 0.0))
        assert t.shape == (3, 3, 2)
        assert t.dtype == np.float32
        assert np.all(t == 1.0)

    def test_black_half_mean(self):
        t = to_tensor(solid(2, 2, (0, 0, 0)), (0.5, 0.5, 0.5))
        assert np.all(t == -0.5)

    def test_centering_with_own_mean(self):
        rng = np.random.default_rng(3)
        arr = rng.integers(0, 256, (6, 5, 3), dtype=np.uint8)
        mean = tuple(arr[:, :, c].mean() / 255.0 for c in range(3))
        t = to_tensor(image_from_array(arr), mean)
        for c in range(3):
            assert abs(t[c].sum()) < 1e-4

    def test_mean_length_checked(self):
        with pytest.raises(ValueError):
            to_tensor(solid(1, 1, (0, 0, 0)), (0.5, 0.5))


class TestMosaic:
    def test_hundred_thumbnails_grid(self):
        images = [solid(5, 4, (i, i, i)) for i in range(100)]
        grid = mosaic(images, columns=10, cell=32)
        assert (grid.width, grid.height) == (320, 320)

    def test_single_image_equals_resized_input(self):
        img = solid(6, 6, (9, 9, 9))
        grid = mosaic([img], columns=4, cell=8)
        assert grid.data == resize_bilinear(img, 8, 8).data
        assert (grid.width, grid.height) == (8, 8)

    def test_incomplete_row_padded_black(self):
        images = [solid(2, 2, (255, 255, 255)) for _ in range(5)]
        grid = mosaic(images, columns=2, cell=4)
        assert (grid.width, grid.height) == (8, 12)
        arr = grid.to_array()
        assert np.all(arr[8:, 4:] == 0)  # last cell of the third row is empty
        assert np.all(arr[:4, :] == 255)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mosaic([], 3, 8)
