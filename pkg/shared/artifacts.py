"""Atomic artifact writes and JSON sidecars."""

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, TextIO, Union

from shared.base import to_jsonable

PathLike = Union[str, Path]


@contextmanager
def atomic_write(path: PathLike, mode: str = "w") -> Iterator[TextIO]:
    """Write to a temporary sibling file and rename it over ``path`` on success."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def sidecar_path(path: PathLike) -> Path:
    """``curve.csv`` -> ``curve.csv.json``."""
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    with atomic_write(path) as handle:
        json.dump(to_jsonable(payload), handle, indent=2)
    return Path(path)


def write_sidecar(artifact: PathLike, payload: Dict[str, Any]) -> Path:
    return write_json(sidecar_path(artifact), payload)


def read_sidecar(artifact: PathLike) -> Dict[str, Any]:
    with open(sidecar_path(artifact)) as handle:
        return json.load(handle)
