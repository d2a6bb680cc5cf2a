"""CSV series/checkpoint files and ``key = value`` run configs."""

from __future__ import annotations

import csv
import io
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .summatory import SummatorySeries

SERIES_HEADER = ("n", "S", "mean")
CHECKPOINT_HEADER = ("function", "n_max", "n", "S")


class ConfigError(ValueError):
    """Bad configuration value; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def format_number(v) -> str:
    """Integers verbatim, reals in shortest round-trip form."""
    if isinstance(v, bool):
        raise TypeError("bool is not a number here")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def parse_number(text: str):
    text = text.strip()
    if any(c in text.lower() for c in ".ein"):
        return float(text)
    return int(text)


def parse_int(text, field="value") -> int:
    """Integer from '1000', '1e6', '10**7' or '1_000_000'."""
    s = str(text).strip().replace("_", "")
    try:
        if "**" in s:
            base, exp = s.split("**")
            return int(base) ** int(exp)
        d = Decimal(s)
    except (InvalidOperation, ValueError):
        raise ConfigError(field, f"not an integer: {text!r}") from None
    if d != d.to_integral_value():
        raise ConfigError(field, f"not an integer: {text!r}")
    return int(d)


def _write_rows(rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def series_csv(series: SummatorySeries, path=None) -> str:
    rows = [SERIES_HEADER]
    for n, s in zip(series.grid, series.values):
        rows.append((str(n), format_number(s), format_number(s / n)))
    return _write_rows(rows, path)


def read_series_csv(path, function_name: str | None = None) -> SummatorySeries:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][:2]) != SERIES_HEADER[:2]:
        raise ConfigError("series", f"{path} is not a series CSV")
    grid = tuple(int(r[0]) for r in rows[1:])
    values = tuple(parse_number(r[1]) for r in rows[1:])
    if not grid:
        raise ConfigError("series", f"{path} has no rows")
    return SummatorySeries(function_name or path.stem, grid, values, grid[-1])


def multi_series_csv(series_list, path=None) -> str:
    grid = series_list[0].grid
    if any(s.grid != grid for s in series_list):
        raise ValueError("table columns need a common grid")
    rows = [("n", *(s.function_name for s in series_list))]
    for i, n in enumerate(grid):
        rows.append((str(n), *(format_number(s.values[i]) for s in series_list)))
    return _write_rows(rows, path)


def write_checkpoint(series: SummatorySeries, path) -> None:
    rows = [CHECKPOINT_HEADER]
    for n, s in zip(series.grid, series.values):
        rows.append((series.function_name, str(series.n_max), str(n), format_number(s)))
    _write_rows(rows, path)


def read_checkpoint(path) -> SummatorySeries | None:
    path = Path(path)
    if not path.exists():
        return None
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CHECKPOINT_HEADER or len(rows) < 2:
        raise ConfigError("checkpoint", f"{path} is not a checkpoint file")
    names = {r[0] for r in rows[1:]}
    if len(names) != 1:
        raise ConfigError("checkpoint", f"{path} mixes functions {sorted(names)}")
    grid = tuple(int(r[2]) for r in rows[1:])
    values = tuple(parse_number(r[3]) for r in rows[1:])
    return SummatorySeries(names.pop(), grid, values, int(rows[1][1]))


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys use underscores."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}", f"expected 'key = value', got {line!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out

