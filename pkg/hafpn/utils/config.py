"""Neck configuration and the plain-text ``key = value`` files it is read from.

A config file holds one ``key = value`` pair per line. ``#`` starts a
comment, blank lines are ignored, and unknown or repeated keys are errors.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Literal

__all__ = [
    "HAM_KEYS",
    "NECK_KEYS",
    "ConfigError",
    "NeckConfig",
    "config_to_text",
    "load_config",
    "parse_config",
    "with_overrides",
]

_logger = logging.getLogger("hafpn")

NeckVariant = Literal["fpn", "pafpn", "hafpn"]
MergeMode = Literal["add", "concat"]
HamPlacement = Literal["post_merge", "pre_merge"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NeckConfig:
    """Hyper-parameters of the backbone and neck.

    ``use_emsa``/``use_ca`` switch the two attention branches of the hybrid
    attention block. They may be set for ``fpn`` and ``pafpn`` too (the
    ablation rows); ``hafpn`` is the FPN dataflow and needs at least one.

    :param str variant: ``fpn``, ``pafpn`` or ``hafpn``
    :param int channels: unified channel count C of every level
    :param bool use_emsa: enable the self-attention branch
    :param bool use_ca: enable the coordinate-attention branch
    :param int heads: EMSA heads, must divide the attended channels
    :param int reduction: CA reduction ratio, must divide the attended channels
    :param float mlp_ratio: hidden width of the HAM MLP relative to C
    :param int fuse_kernel: odd kernel size of the fusion convs
    :param str merge: ``add`` or ``concat`` for the lateral/top-down merge
    :param str ham_placement: ``post_merge`` (after each merge, before the
        fusion conv) or ``pre_merge`` (on the lateral before merging)
    :param str attention_mixing: axis of the FCs acting on the attention map,
        ``token`` or ``head``
    :param tuple[int, int, int] backbone_widths: channels of the three toy
        backbone stages
    :param int seed: parameter initialization seed
    """

    variant: NeckVariant = "hafpn"
    channels: int = 16
    use_emsa: bool = True
    use_ca: bool = True
    heads: int = 2
    reduction: int = 4
    mlp_ratio: float = 2.0
    fuse_kernel: int = 3
    merge: MergeMode = "add"
    ham_placement: HamPlacement = "post_merge"
    attention_mixing: Literal["token", "head"] = "token"
    backbone_widths: tuple[int, int, int] = (8, 16, 32)
    seed: int = 0

    def __post_init__(self) -> None:
        choices = {
            "variant": ("fpn", "pafpn", "hafpn"),
            "merge": ("add", "concat"),
            "ham_placement": ("post_merge", "pre_merge"),
            "attention_mixing": ("token", "head"),
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(
                    f"{key} must be one of {allowed}, got '{getattr(self, key)}'."
                )
        if self.channels < 1:
            raise ConfigError(f"channels must be positive, got {self.channels}.")
        if self.variant == "hafpn" and not self.ham_enabled:
            raise ConfigError("hafpn needs at least one of use_emsa, use_ca.")
        if self.ham_enabled:
            for width in self.attended_channels:
                if self.use_emsa and (self.heads < 1 or width % self.heads):
                    raise ConfigError(
                        f"heads={self.heads} does not divide {width} channels."
                    )
                if self.use_ca and (self.reduction < 1 or width % self.reduction):
                    raise ConfigError(
                        f"reduction={self.reduction} does not divide "
                        f"{width} channels."
                    )
        if not self.mlp_ratio > 0:
            raise ConfigError(f"mlp_ratio must be positive, got {self.mlp_ratio}.")
        if self.fuse_kernel < 1 or self.fuse_kernel % 2 == 0:
            raise ConfigError(
                f"fuse_kernel must be a positive odd size, got {self.fuse_kernel}."
            )
        if len(self.backbone_widths) != 3 or min(self.backbone_widths) < 1:
            raise ConfigError(
                "backbone_widths needs three positive stage widths, "
                f"got {self.backbone_widths}."
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit int, got {self.seed}.")

    @property
    def ham_enabled(self) -> bool:
        return self.use_emsa or self.use_ca

    @property
    def merged_channels(self) -> int:
        return 2 * self.channels if self.merge == "concat" else self.channels

    @property
    def attended_channels(self) -> tuple[int, ...]:
        """Channel counts the HAM blocks see."""
        if self.ham_placement == "post_merge":
            return (self.channels, self.merged_channels)
        return (self.channels,)


NECK_KEYS = frozenset(f.name for f in fields(NeckConfig))
HAM_KEYS = frozenset(
    {
        "channels",
        "use_emsa",
        "use_ca",
        "heads",
        "reduction",
        "mlp_ratio",
        "attention_mixing",
        "seed",
    }
)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"'{text}' is not a boolean")


def _parse_widths(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.replace(",", " ").split())


_CONVERTERS: dict[str, Callable[[str], Any]] = {
    "variant": str,
    "channels": int,
    "use_emsa": _parse_bool,
    "use_ca": _parse_bool,
    "heads": int,
    "reduction": int,
    "mlp_ratio": float,
    "fuse_kernel": int,
    "merge": str,
    "ham_placement": str,
    "attention_mixing": str,
    "backbone_widths": _parse_widths,
    "seed": int,
}


def parse_config(
    text: str, keys: frozenset[str] = NECK_KEYS, source: str = "<config>"
) -> dict[str, Any]:
    """Parse ``key = value`` lines into typed values.

    :param str text: file contents
    :param frozenset[str] keys: accepted keys
    :param str source: name used in error messages
    :raises ConfigError: malformed line, unknown or repeated key, bad value
    :return dict[str, Any]: only the keys present in ``text``
    """
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(
                f"{source}:{lineno}: expected 'key = value', got '{raw}'."
            )
        if key not in keys:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'.")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: '{key}' is set twice.")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for '{key}': {e}.") from e
    return values


def load_config(path: str | Path, keys: frozenset[str] = NECK_KEYS) -> NeckConfig:
    """Read a ``neck.cfg`` (or, with ``keys=HAM_KEYS``, a ``ham.cfg``).

    A file choosing ``fpn`` or ``pafpn`` leaves both attention branches off
    unless it sets ``use_emsa``/``use_ca`` itself.
    """
    path = Path(path)
    values = parse_config(path.read_text(), keys, source=str(path))
    if keys is HAM_KEYS:
        # a lone HAM block keeps both branches unless told otherwise
        values.setdefault("variant", "hafpn")
    if values.get("variant") in ("fpn", "pafpn"):
        values.setdefault("use_emsa", False)
        values.setdefault("use_ca", False)
    _logger.debug(f"Loaded {sorted(values)} from {path}.")
    return NeckConfig(**values)


def with_overrides(config: NeckConfig, **overrides: Any) -> NeckConfig:
    """Apply the non-``None`` overrides, e.g. command-line flags."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(changes) - NECK_KEYS
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}.")
    if "backbone_widths" in changes:
        changes["backbone_widths"] = tuple(changes["backbone_widths"])
    return replace(config, **changes)


def config_to_text(config: NeckConfig) -> str:
    """Inverse of :py:func:`load_config`."""
    lines = []
    for key, value in asdict(config).items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
