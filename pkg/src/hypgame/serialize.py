"""Byte-stable JSON helpers for trajectory and report files.

Every artifact the harness writes goes through stable_dumps so that
identical runs produce identical bytes (a load-bearing reproducibility
guarantee, not a nicety).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator, Union

PathLike = Union[str, Path]


def stable_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_json(path: PathLike, obj: Any) -> None:
    Path(path).write_text(stable_dumps(obj) + "\n", encoding="utf-8")


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_jsonl(path: PathLike, rows: Iterable[Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(stable_dumps(row) + "\n")


def read_jsonl(path: PathLike) -> Iterator[Any]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
