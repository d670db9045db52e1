"""Binary tensor files and directories of them.

A tensor file is::

    b"HTSR" | version 0x01 | dtype code | rank | rank x uint64 extents | payload

with dtype code 0x01 for little-endian float32 and 0x02 for float64,
little-endian extents and a row-major payload. A directory of tensors
carries a ``manifest.txt`` listing ``name file`` per line.
"""

import logging
import math
import struct
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from hafpn.core.tensor import FormatError, Precision, Tensor, _frozen, check_finite
from hafpn.core.tree import map_tensors, named_tensors
from hafpn.networks.pyramid import LEVEL_NAMES, FeatureLevels

__all__ = [
    "MANIFEST",
    "load_levels",
    "load_params",
    "load_tensor",
    "load_tensor_dir",
    "save_levels",
    "save_params",
    "save_tensor",
    "save_tensor_dir",
    "tensor_from_bytes",
    "tensor_to_bytes",
]

_logger = logging.getLogger("hafpn")

MAGIC = b"HTSR"
VERSION = 1
MANIFEST = "manifest.txt"

_CODES = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_PRECISIONS = {1: "single", 2: "double"}

T = TypeVar("T")


def tensor_to_bytes(t: np.ndarray) -> bytes:
    t = np.asarray(t)
    if t.dtype not in _CODES:
        raise TypeError(f"Only float32/float64 tensors can be saved, got {t.dtype}.")
    if t.ndim > 255:
        raise ValueError(f"Rank {t.ndim} does not fit the one-byte rank field.")
    code = _CODES[t.dtype]
    header = MAGIC + bytes([VERSION, code, t.ndim])
    header += struct.pack(f"<{t.ndim}Q", *t.shape)
    return header + t.astype(_DTYPES[code], copy=False).tobytes(order="C")


def tensor_from_bytes(data: bytes, source: str = "<bytes>") -> Tensor:
    """Decode a tensor file; the stored precision is kept as is.

    :raises FormatError: malformed header, zero extent or wrong payload size
    :raises NonFiniteError: the payload holds NaN or infinity
    """
    if len(data) < 7:
        raise FormatError(f"{source}: {len(data)} bytes is too short for a header.")
    if data[:4] != MAGIC:
        raise FormatError(f"{source}: bad magic {data[:4]!r}, expected {MAGIC!r}.")
    version, code, rank = data[4], data[5], data[6]
    if version != VERSION:
        raise FormatError(f"{source}: unsupported version {version}.")
    if code not in _DTYPES:
        raise FormatError(f"{source}: unknown dtype code {code:#04x}.")
    offset = 7 + 8 * rank
    if len(data) < offset:
        raise FormatError(f"{source}: truncated extents for rank {rank}.")
    shape = struct.unpack(f"<{rank}Q", data[7:offset])
    if 0 in shape:
        raise FormatError(f"{source}: zero extent in shape {shape}.")
    dtype = _DTYPES[code]
    expected = math.prod(shape) * dtype.itemsize
    if len(data) - offset != expected:
        raise FormatError(
            f"{source}: payload has {len(data) - offset} bytes, "
            f"shape {shape} needs {expected}."
        )
    values = np.frombuffer(data, dtype=dtype, offset=offset).reshape(shape)
    check_finite(values, source)
    return _frozen(values.astype(dtype.newbyteorder("="), copy=True))


def save_tensor(path: str | Path, t: np.ndarray) -> None:
    Path(path).write_bytes(tensor_to_bytes(t))


def load_tensor(path: str | Path, precision: Precision | None = None) -> Tensor:
    """Read a tensor file.

    :param Precision | None precision: if given, the precision the file must
        hold; files are never converted on load
    """
    t = tensor_from_bytes(Path(path).read_bytes(), str(path))
    if precision is not None:
        stored = _PRECISIONS[_CODES[t.dtype]]
        if stored != precision:
            raise FormatError(
                f"{path}: holds {stored} precision, {precision} was requested; "
                "convert explicitly with as_precision."
            )
    return t


def _file_name(name: str) -> str:
    return f"{name}.htsr"


def save_tensor_dir(tensors: dict[str, np.ndarray], out_dir: str | Path) -> Path:
    """Write one file per tensor plus the manifest; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, tensor in tensors.items():
        if not name or any(c.isspace() for c in name) or "/" in name:
            raise ValueError(f"Invalid tensor name '{name}'.")
        save_tensor(out_dir / _file_name(name), tensor)
        lines.append(f"{name} {_file_name(name)}\n")
    manifest = out_dir / MANIFEST
    manifest.write_text("".join(lines))
    return manifest


def load_tensor_dir(in_dir: str | Path) -> dict[str, Tensor]:
    in_dir = Path(in_dir)
    manifest = in_dir / MANIFEST
    tensors: dict[str, Tensor] = {}
    for lineno, line in enumerate(manifest.read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 2:
            raise FormatError(f"{manifest}:{lineno}: expected 'name file'.")
        name, file_name = tokens
        if name in tensors:
            raise FormatError(f"{manifest}:{lineno}: '{name}' is listed twice.")
        tensors[name] = load_tensor(in_dir / file_name)
    return tensors


def save_params(bundle: Any, out_dir: str | Path) -> Path:
    """Write every tensor of a parameter bundle under its dotted name."""
    return save_tensor_dir(named_tensors(bundle), out_dir)


def load_params(in_dir: str | Path, template: T) -> T:
    """Fill ``template``'s tensors from a directory written by
    :py:func:`save_params`.

    :param T template: bundle of the expected structure, e.g. freshly
        initialized from the same config
    :raises FormatError: missing, extra or mis-shaped tensors
    """
    stored = load_tensor_dir(in_dir)
    expected = named_tensors(template)
    missing = sorted(set(expected) - set(stored))
    extra = sorted(set(stored) - set(expected))
    if missing or extra:
        raise FormatError(
            f"{in_dir}: parameter names differ, missing {missing}, extra {extra}."
        )
    for name, tensor in expected.items():
        if stored[name].shape != tensor.shape or stored[name].dtype != tensor.dtype:
            raise FormatError(
                f"{in_dir}: '{name}' is {stored[name].dtype}{stored[name].shape}, "
                f"expected {tensor.dtype}{tensor.shape}."
            )
    _logger.debug(f"Loaded {len(stored)} parameter tensors from {in_dir}.")
    return map_tensors(lambda name, _: stored[name], template)


def save_levels(levels: FeatureLevels, out_dir: str | Path) -> Path:
    return save_tensor_dir(dict(zip(LEVEL_NAMES, levels.as_tuple())), out_dir)


def load_levels(in_dir: str | Path) -> FeatureLevels:
    stored = load_tensor_dir(in_dir)
    if sorted(stored) != sorted(LEVEL_NAMES):
        raise FormatError(
            f"{in_dir}: expected levels {LEVEL_NAMES}, got {sorted(stored)}."
        )
    return FeatureLevels(*(stored[name] for name in LEVEL_NAMES))
