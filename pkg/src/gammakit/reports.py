"""Reading inputs and writing JSON reports."""

import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

from gammakit.bipoly import BiPoly
from gammakit.models import CommutingPair, FactorsFile, PairFile, RunConfig


def read_json(source: str | Path) -> Any:
    """Decode JSON from a file, or from stdin when ``source`` is ``"-"``.

    Args:
        source (str | Path): File path or ``"-"``.

    Returns:
        Any: The decoded value.

    Raises:
        FileNotFoundError: If the file does not exist.
        json.JSONDecodeError: If the content is malformed.
    """
    if str(source) == "-":
        return json.loads(sys.stdin.read())
    return json.loads(Path(source).read_text())


def load_pair(source: str | Path, ctol: float = 1e-9) -> CommutingPair:
    return PairFile.model_validate(read_json(source)).to_pair(ctol)


def load_poly(source: str | Path) -> BiPoly:
    return BiPoly.from_json(read_json(source))


def load_factors(source: str | Path) -> list[BiPoly]:
    parsed = FactorsFile.model_validate(read_json(source))
    return [BiPoly.from_payload(p) for p in parsed.factors]


def build_payload(config: RunConfig, result: Any) -> dict[str, Any]:
    """Wrap a command result together with the settings that produced it."""
    return {"config": config.model_dump(by_alias=True, mode="json"), "result": result}


def dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def write_report(payload: Any, path: str | Path) -> Path:
    """Write a JSON report atomically.

    The report goes to a temporary file in the target directory first and
    is moved into place with ``os.replace``, so readers never see a partial
    file.

    Args:
        payload (Any): JSON-ready value.
        path (str | Path): Destination file.

    Returns:
        Path: The destination path.

    Raises:
        OSError: If file creation or write fails.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    data = dumps(payload)

    fd, tmp_path = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
    try:
        os.write(fd, data.encode())
        os.close(fd)
        fd = -1
        os.replace(tmp_path, target)
    except BaseException:
        if fd >= 0:
            os.close(fd)
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return target
