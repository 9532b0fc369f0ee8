"""Shared run configuration with the pipeline's canonical defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Union

from .errors import DataError

PathLike = Union[str, Path]


@dataclass(frozen=True)
class RunConfig:
    """Defaults shared by the CLI and the library entry points.

    The threshold and window defaults are the pipeline's canonical values;
    CLI flags must agree with them (asserted by a test).
    """

    rating_min_exclusive: int = 4
    cosine_min_exclusive: float = 0.5
    window: int = 4
    K: int = 512
    max_iters: int = 50
    seed: int = 0
    timeout_ms: float = 10000.0
    paths: dict = field(default_factory=dict)
    endpoints: dict = field(default_factory=dict)  # role -> endpoint spec JSON object


def load_config(path: PathLike) -> RunConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"config file {path}: malformed JSON: {exc.msg}") from None
    known = {f.name for f in fields(RunConfig)}
    unknown = set(obj) - known
    if unknown:
        raise DataError(f"config file {path}: unknown keys {sorted(unknown)}")
    return RunConfig(**obj)
