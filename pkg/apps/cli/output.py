from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np


def _plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def to_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_plain) + "\n"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def emit(text: str, out: Optional[str]) -> None:
    """Write to the --out path, or stdout when none was given."""
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def sibling(out: Optional[str], tag: str) -> Optional[str]:
    """cap.csv -> cap.<tag>.csv; None stays None so the section follows on stdout."""
    if not out:
        return out
    path = Path(out)
    return str(path.with_name(f"{path.stem}.{tag}{path.suffix or '.csv'}"))
