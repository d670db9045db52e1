import struct

import numpy as np
import pytest

from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import FormatError, NonFiniteError
from hafpn.data.tensor_io import (
    MANIFEST,
    load_levels,
    load_params,
    load_tensor,
    save_levels,
    save_params,
    save_tensor,
    tensor_from_bytes,
    tensor_to_bytes,
)
from hafpn.networks.attention import init_ham
from hafpn.networks.pyramid import FeatureLevels


def test_header_layout():
    data = tensor_to_bytes(np.arange(6, dtype=np.float32).reshape(2, 3))
    assert data[:4] == b"HTSR"
    assert data[4:7] == bytes([1, 1, 2])
    assert struct.unpack("<2Q", data[7:23]) == (2, 3)
    assert len(data) == 23 + 6 * 4


@pytest.mark.parametrize("precision", ["single", "double"])
def test_file_round_trip_is_exact(tmp_path, precision):
    t = rand_uniform((2, 3, 4), Rng(0), -1e3, 1e3, precision=precision)
    save_tensor(tmp_path / "t.htsr", t)
    loaded = load_tensor(tmp_path / "t.htsr", precision)
    assert loaded.dtype == t.dtype
    assert loaded.tobytes() == t.tobytes()
    assert not loaded.flags.writeable


@pytest.mark.parametrize(
    "corrupt,message",
    [
        (lambda d: b"NOPE" + d[4:], "bad magic"),
        (lambda d: d[:4] + b"\x02" + d[5:], "unsupported version"),
        (lambda d: d[:5] + b"\x07" + d[6:], "unknown dtype"),
        (lambda d: d[:-1], "payload"),
        (lambda d: d + b"\x00", "payload"),
        (lambda d: d[:10], "truncated extents"),
        (lambda d: d[:5], "too short"),
        (lambda d: d[:7] + struct.pack("<2Q", 0, 4) + d[23:], "zero extent"),
    ],
)
def test_corrupt_files(corrupt, message):
    data = tensor_to_bytes(np.ones((2, 2)))
    with pytest.raises(FormatError, match=message):
        tensor_from_bytes(corrupt(data), "t.htsr")


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_payload_is_rejected(tmp_path, bad):
    t = np.ones((3, 3), dtype=np.float32)
    t[1, 2] = bad
    save_tensor(tmp_path / "t.htsr", t)
    with pytest.raises(NonFiniteError, match="1 non-finite"):
        load_tensor(tmp_path / "t.htsr")


def test_precision_is_never_converted_on_load(tmp_path):
    save_tensor(tmp_path / "t.htsr", np.ones(3, dtype=np.float32))
    with pytest.raises(FormatError, match="single precision"):
        load_tensor(tmp_path / "t.htsr", "double")


def test_only_float_tensors_are_saved():
    with pytest.raises(TypeError):
        tensor_to_bytes(np.ones(3, dtype=np.int64))


def test_params_directory(tmp_path):
    params = init_ham(Rng(0), 8, tokens=4, reduction=4, precision="double")
    manifest = save_params(params, tmp_path / "ham")
    assert manifest.name == MANIFEST
    template = init_ham(Rng(1), 8, tokens=4, reduction=4, precision="double")
    loaded = load_params(tmp_path / "ham", template)
    np.testing.assert_array_equal(loaded.emsa.qkv.weight, params.emsa.qkv.weight)
    np.testing.assert_array_equal(loaded.mlp.project.bias, params.mlp.project.bias)


def test_params_directory_mismatch(tmp_path):
    save_params(init_ham(Rng(0), 8, tokens=4, reduction=4), tmp_path / "ham")
    with pytest.raises(FormatError, match="missing"):
        load_params(tmp_path / "ham", init_ham(Rng(0), 8, tokens=4, use_ca=False))
    with pytest.raises(FormatError, match="expected"):
        load_params(
            tmp_path / "ham",
            init_ham(Rng(0), 8, tokens=4, reduction=4, precision="double"),
        )


def test_levels_directory(tmp_path):
    levels = FeatureLevels(
        rand_uniform((1, 2, 8, 8), Rng(0)),
        rand_uniform((1, 2, 4, 4), Rng(1)),
        rand_uniform((1, 2, 2, 2), Rng(2)),
    )
    save_levels(levels, tmp_path)
    assert (tmp_path / MANIFEST).read_text().split() == [
        "p3",
        "p3.htsr",
        "p4",
        "p4.htsr",
        "p5",
        "p5.htsr",
    ]
    loaded = load_levels(tmp_path)
    for a, b in zip(loaded.as_tuple(), levels.as_tuple()):
        np.testing.assert_array_equal(a, b)
    (tmp_path / MANIFEST).write_text("p3 p3.htsr\np4 p4.htsr\n")
    with pytest.raises(FormatError, match="expected levels"):
        load_levels(tmp_path)
