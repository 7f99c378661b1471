"""Configuration and CSV input/output for the command line tool.

Input data is long-format UTF-8 CSV with a header: one column per factor,
an optional ``id`` column naming the observation, and a ``value`` column.
Configuration is JSON::

    {
      "factors": [
        {"name": "gender", "levels": ["F", "M"], "sbp": "(F,M)"},
        {"name": "contract", "levels": ["FT", "PT"], "sbp": "(FT,PT)"},
        {"name": "age", "levels": ["15-24", "25-54", "55+"],
         "sbp": "(15-24,(25-54,55+))"}
      ],
      "options": {
        "closure": 1.0,
        "normalized": true,
        "bootstrap": {"B": 1000, "alpha": 0.05, "seed": 0},
        "pca": {"groups": ["int"]}
      }
    }

Factors of two- and three-factor designs get the label symbols ``r``,
``c`` (and ``s``) unless a ``symbol`` is given; other designs use factor
names.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from compcube.cube import CubeError, KCube, from_long_records
from compcube.sbp import FactorSpec, SbpError


class InputError(ValueError):
    """Bad input file, configuration or output target."""


DEFAULT_SYMBOLS = {2: ("r", "c"), 3: ("r", "c", "s")}


@dataclass(frozen=True)
class AnalysisConfig:
    factors: tuple[FactorSpec, ...]
    closure: float = 1.0
    normalized: bool = True
    bootstrap_B: int = 1000
    alpha: float = 0.05
    seed: int = 0
    pca_groups: tuple[str, ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _get(mapping, key, kind, default, where):
    value = mapping.get(key, default)
    if value is default:
        return value
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise InputError(f"config: {where}{key} must be {kind.__name__}, got {value!r}")
    return value


def parse_config(data: dict) -> AnalysisConfig:
    if not isinstance(data, dict) or not isinstance(data.get("factors"), list):
        raise InputError("config: expected an object with a 'factors' list")
    raw = data["factors"]
    if len(raw) < 2:
        raise InputError(f"config: need at least 2 factors, got {len(raw)}")
    symbols = DEFAULT_SYMBOLS.get(len(raw))
    factors = []
    for i, item in enumerate(raw):
        where = f"factors[{i}]."
        if not isinstance(item, dict):
            raise InputError(f"config: factors[{i}] must be an object")
        name = _get(item, "name", str, None, where)
        levels = item.get("levels")
        if name is None or not isinstance(levels, list):
            raise InputError(f"config: factors[{i}] needs 'name' and a 'levels' list")
        sbp = _get(item, "sbp", str, None, where)
        symbol = _get(item, "symbol", str, None, where)
        if symbol is None:
            symbol = symbols[i] if symbols else name
        try:
            factors.append(FactorSpec(name, tuple(map(str, levels)), sbp, symbol))
        except SbpError as exc:
            raise InputError(f"config: factor {name!r}: invalid sbp {sbp!r}: {exc}") from None
        except ValueError as exc:
            raise InputError(f"config: {exc}") from None
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise InputError(f"config: duplicated factor names {names}")
    reserved = {"id", "value"} & set(names)
    if reserved:
        raise InputError(f"config: factor name(s) {sorted(reserved)} are reserved")
    syms = [f.symbol for f in factors]
    if len(set(syms)) != len(syms):
        raise InputError(f"config: duplicated factor symbols {syms}")

    opts = data.get("options", {})
    if not isinstance(opts, dict):
        raise InputError("config: 'options' must be an object")
    boot = opts.get("bootstrap", {}) or {}
    pca_opts = opts.get("pca", {}) or {}
    kappa = _get(opts, "closure", float, 1.0, "options.")
    if not kappa > 0:
        raise InputError(f"config: options.closure must be positive, got {kappa!r}")
    groups = pca_opts.get("groups")
    if groups is not None:
        if isinstance(groups, str):
            groups = [groups]
        if not isinstance(groups, list) or not all(isinstance(g, str) for g in groups):
            raise InputError("config: options.pca.groups must be a list of strings")
        groups = tuple(groups)
    return AnalysisConfig(
        factors=tuple(factors),
        closure=kappa,
        normalized=_get(opts, "normalized", bool, True, "options."),
        bootstrap_B=_get(boot, "B", int, 1000, "options.bootstrap."),
        alpha=_get(boot, "alpha", float, 0.05, "options.bootstrap."),
        seed=_get(boot, "seed", int, 0, "options.bootstrap."),
        pca_groups=groups,
        extra={k: v for k, v in data.items() if k not in ("factors", "options")},
    )


def load_config(path) -> AnalysisConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(data)


def read_long_csv(path, factors: Sequence[FactorSpec]) -> list[KCube]:
    """Read one cube per observation id, in order of first appearance."""
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read input {path}: {exc.strerror}") from None
    return parse_long_csv(text, factors)


def parse_long_csv(text: str, factors: Sequence[FactorSpec]) -> list[KCube]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise InputError("no records: input is empty")
    header = [h.strip() for h in header]
    missing = [c for c in [f.name for f in factors] + ["value"] if c not in header]
    if missing:
        raise InputError(f"line 1: header lacks column(s) {', '.join(missing)}")
    cols = [header.index(f.name) for f in factors]
    vcol = header.index("value")
    icol = header.index("id") if "id" in header else None

    groups: dict[str, list] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        levels = [row[c].strip() for c in cols]
        for f, lv in zip(factors, levels):
            if lv not in f.levels:
                raise InputError(f"line {line}: unknown level {lv!r} of factor {f.name!r}")
        try:
            value = float(row[vcol])
        except ValueError:
            raise InputError(f"line {line}: value {row[vcol]!r} is not a number") from None
        if not value > 0 or value == float("inf"):
            raise InputError(f"line {line}: value {row[vcol].strip()} must be positive "
                             f"in cell ({', '.join(levels)})")
        oid = row[icol].strip() if icol is not None else ""
        groups.setdefault(oid, []).append((line, levels, value))
    if not groups:
        raise InputError("no records: input has a header but no data rows")

    cubes = []
    for oid, recs in groups.items():
        seen = {}
        for line, levels, _ in recs:
            key = tuple(levels)
            if key in seen:
                raise InputError(f"line {line}: duplicate cell ({', '.join(levels)})"
                                 f"{_obs(oid)}, first given on line {seen[key]}")
            seen[key] = line
        try:
            cubes.append(from_long_records([(lv, v) for _, lv, v in recs], factors, oid or None))
        except CubeError as exc:
            raise InputError(f"{exc}{_obs(oid)}") from None
    return cubes


def _obs(oid: str) -> str:
    return f" for observation {oid!r}" if oid else ""


def fmt(x: float) -> str:
    """Shortest round-tripping text for a float."""
    return repr(float(x))


def cell_labels(factors: Sequence[FactorSpec]) -> list[str]:
    from itertools import product
    return ["|".join(lv) for lv in product(*[f.levels for f in factors])]


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_output(path, text: str, force: bool = False) -> None:
    """Write ``text`` to ``path`` (stdout when ``None``), never clobbering
    an existing file unless ``force``."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    if path.exists() and not force:
        raise InputError(f"refusing to overwrite existing {path} (use --force)")
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
