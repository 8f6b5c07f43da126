import json

import numpy as np
import pytest

from mriuq.errors import InputError
from mriuq.fileio import (
    read_complex_stack,
    read_image,
    read_kspace,
    read_mask,
    write_complex_stack,
    write_csv,
    write_image,
    write_kspace,
    write_mask,
    write_pgm16,
)
from mriuq.forward_model import KSpaceData, SamplingMask


def test_image_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.standard_normal((5, 7))
    path = tmp_path / "img.f64"
    write_image(path, img)
    back = read_image(path)
    assert np.array_equal(back, img)
    meta = json.loads((tmp_path / "img.f64.json").read_text())
    assert meta == {"height": 5, "width": 7, "dtype": "float64-le", "scale": 1.0}


def test_image_missing_file_and_sidecar(tmp_path):
    with pytest.raises(InputError):
        read_image(tmp_path / "nope.f64")
    path = tmp_path / "img.f64"
    path.write_bytes(b"\x00" * 8)
    with pytest.raises(InputError):
        read_image(path)


def test_complex_stack_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    stack = rng.standard_normal((3, 4, 5)) + 1j * rng.standard_normal((3, 4, 5))
    path = tmp_path / "coils.c128"
    write_complex_stack(path, stack)
    assert np.array_equal(read_complex_stack(path), stack)


def test_kspace_round_trip(tmp_path):
    keep = np.zeros((4, 4), bool)
    keep[0, 0] = keep[1, 2] = keep[3, 3] = True
    mask = SamplingMask(keep)
    rng = np.random.default_rng(2)
    values = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    ks = KSpaceData(values, mask, sigma=0.25)
    path = tmp_path / "kspace.c128"
    write_kspace(path, ks, "mask.pbm")
    back = read_kspace(path, mask)
    assert np.array_equal(back.values, values)
    assert back.sigma == 0.25
    meta = json.loads((tmp_path / "kspace.c128.json").read_text())
    assert meta["mask_file"] == "mask.pbm"
    assert meta["count"] == 3


def test_kspace_count_mismatch_rejected(tmp_path):
    mask_a = SamplingMask(np.eye(4, dtype=bool))
    mask_b = SamplingMask(np.ones((4, 4), bool))
    ks = KSpaceData(np.zeros((1, 4), dtype=complex), mask_a, 0.0)
    path = tmp_path / "k.c128"
    write_kspace(path, ks, "mask.pbm")
    with pytest.raises(InputError):
        read_kspace(path, mask_b)


def test_mask_pbm_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    keep = rng.uniform(size=(9, 13)) < 0.4  # odd width exercises bit padding
    keep[0, 0] = True
    mask = SamplingMask(keep)
    path = tmp_path / "mask.pbm"
    write_mask(path, mask, {"ratio": 0.4, "scheme": "uniform-random", "seed": 3})
    back = read_mask(path)
    assert np.array_equal(back.keep, keep)
    meta = json.loads((tmp_path / "mask.pbm.json").read_text())
    assert meta["ratio"] == 0.4
    raw = path.read_bytes()
    assert raw.startswith(b"P4\n13 9\n")


def test_mask_rejects_non_pbm(tmp_path):
    path = tmp_path / "mask.pbm"
    path.write_bytes(b"P5\n2 2\n255\n....")
    with pytest.raises(InputError):
        read_mask(path)


def test_pgm16_format(tmp_path):
    img = np.array([[0.0, 0.5], [1.0, 2.0]])
    path = tmp_path / "view.pgm"
    write_pgm16(path, img, scale=1.0)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n2 2\n65535\n")
    samples = np.frombuffer(raw[len(b"P5\n2 2\n65535\n"):], dtype=">u2")
    assert samples.tolist() == [0, 32768, 65535, 65535]  # clipped at scale


def test_write_csv_none_becomes_empty(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b"], [[1, None], [2, 0.5]])
    assert path.read_text() == "a,b\n1,\n2,0.5\n"
