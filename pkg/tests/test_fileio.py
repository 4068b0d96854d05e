import numpy as np
import pytest

from pnpmri.core import KSpaceData, SamplingMask
from pnpmri.fileio import (
    FileFormatError,
    image_from_bytes,
    image_to_bytes,
    kspace_from_bytes,
    kspace_to_bytes,
    load_image,
    load_kspace,
    save_image,
    save_kspace,
)
from pnpmri.simulate import make_mask


def _f32_complex(rng, shape):
    re = rng.standard_normal(shape).astype(np.float32).astype(np.float64)
    im = rng.standard_normal(shape).astype(np.float32).astype(np.float64)
    return re + 1j * im


@pytest.mark.parametrize("factors", [4, (2, 2), 1])
def test_kspace_round_trip_exact(rng, factors):
    mask = make_mask(20, 16, factors, 8)
    d = KSpaceData(_f32_complex(rng, (3, 20, 16)) * mask.kept, mask)
    blob = kspace_to_bytes(d, seed=5, sigma=0.0)
    assert blob[:4] == b"PNPK" and blob[4] == 1
    back, header = kspace_from_bytes(blob)
    np.testing.assert_array_equal(back.values, d.values)
    np.testing.assert_array_equal(back.mask.kept, mask.kept)
    assert back.mask.factors == mask.factors and back.mask.pattern_kind == mask.pattern_kind
    assert header["seed"] == 5 and header["coils"] == 3
    assert kspace_to_bytes(back, seed=5, sigma=0.0) == blob


def test_mask_bits_row_major(rng):
    kept = np.zeros((2, 5), dtype=bool)
    kept[0, 0] = kept[1, 4] = True
    d = KSpaceData(np.zeros((1, 2, 5), complex), SamplingMask(kept, 0, 0, "uniform-2d", (1, 1)))
    blob = kspace_to_bytes(d)
    n = int.from_bytes(blob[5:9], "little")
    bits = blob[9 + n : 9 + n + 2]
    # 10 bits: 1000000001 padded to 16 -> 0x80 0x40
    assert bits == bytes([0x80, 0x40])


@pytest.mark.parametrize("shape", [(7, 9), (2, 7, 9)])
def test_image_round_trip(rng, shape):
    x = _f32_complex(rng, shape)
    back, header = image_from_bytes(image_to_bytes(x, method="pnp"))
    np.testing.assert_array_equal(back, x)
    assert header["method"] == "pnp"


def test_float64_input_rounds_to_float32(rng):
    x = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    back, _ = image_from_bytes(image_to_bytes(x))
    np.testing.assert_allclose(back, x, rtol=2.0**-24, atol=0)


def test_sample_layout_little_endian_interleaved():
    blob = image_to_bytes(np.array([[1.0 + 2.0j, -0.5j]]))
    n = int.from_bytes(blob[5:9], "little")
    np.testing.assert_array_equal(np.frombuffer(blob[9 + n :], "<f4"), [1.0, 2.0, 0.0, -0.5])


def test_files_on_disk(tmp_path, rng):
    mask = make_mask(16, 16, 2, 4)
    d = KSpaceData(_f32_complex(rng, (2, 16, 16)) * mask.kept, mask)
    save_kspace(tmp_path / "a.ksp", d, seed=1)
    save_image(tmp_path / "a.img", d.values[0])
    np.testing.assert_array_equal(load_kspace(tmp_path / "a.ksp")[0].values, d.values)
    np.testing.assert_array_equal(load_image(tmp_path / "a.img")[0], d.values[0])


def test_malformed(rng):
    blob = image_to_bytes(np.ones((4, 4)))
    with pytest.raises(FileFormatError):
        image_from_bytes(b"PNPK" + blob[4:])
    with pytest.raises(FileFormatError):
        image_from_bytes(blob[:4] + bytes([2]) + blob[5:])
    with pytest.raises(FileFormatError):
        image_from_bytes(blob[:-4])
    with pytest.raises(FileFormatError):
        image_from_bytes(blob[:12])
    with pytest.raises(FileFormatError):
        kspace_from_bytes(blob)
