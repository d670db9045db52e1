"""Traversal of nested parameter bundles.

A bundle is a frozen dataclass whose fields are tensors, nested bundles,
mappings or sequences of bundles, scalars (hyper-parameters) or ``None``.
Tensors are addressed by dotted names such as ``emsa.qkv.weight``.
"""

import dataclasses
from typing import Any, Callable, Mapping, TypeVar

import numpy as np

__all__ = ["map_tensors", "named_tensors", "replace_tensor"]

T = TypeVar("T")


def _join(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def map_tensors(fn: Callable[[str, np.ndarray], Any], tree: T, prefix: str = "") -> T:
    """Rebuild ``tree`` with every tensor ``t`` at ``name`` replaced by
    ``fn(name, t)``. Scalars and ``None`` are kept as they are."""
    if isinstance(tree, np.ndarray):
        return fn(prefix, tree)
    if dataclasses.is_dataclass(tree) and not isinstance(tree, type):
        changes = {
            f.name: map_tensors(fn, getattr(tree, f.name), _join(prefix, f.name))
            for f in dataclasses.fields(tree)
            if f.init
        }
        return dataclasses.replace(tree, **changes)
    if isinstance(tree, Mapping):
        return type(tree)(
            (key, map_tensors(fn, value, _join(prefix, str(key))))
            for key, value in tree.items()
        )
    if isinstance(tree, (list, tuple)):
        return type(tree)(
            map_tensors(fn, value, _join(prefix, str(i)))
            for i, value in enumerate(tree)
        )
    return tree


def named_tensors(tree: Any) -> dict[str, np.ndarray]:
    """Flatten a bundle into ``{dotted name: tensor}`` in field order."""
    found: dict[str, np.ndarray] = {}

    def _collect(name: str, tensor: np.ndarray) -> np.ndarray:
        found[name] = tensor
        return tensor

    map_tensors(_collect, tree)
    return found


def replace_tensor(tree: T, name: str, value: np.ndarray) -> T:
    names = named_tensors(tree)
    if name not in names:
        raise KeyError(f"No tensor named '{name}' in {type(tree).__name__}.")
    if names[name].shape != value.shape:
        raise ValueError(
            f"Replacement for '{name}' has shape {value.shape}, "
            f"expected {names[name].shape}."
        )
    return map_tensors(lambda n, t: value if n == name else t, tree)
