"""
Column-typed datasets read from CSV.

A column is numeric iff every non-missing cell parses as a number; anything
else is categorical, with levels in sorted order unless an explicit order is
given. Missing cells are kept (NaN for numeric, None for categorical) and
dropped later, listwise, when a design is built.
"""

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd

from bayesics.errors import DataError

logger = logging.getLogger(__name__)

MISSING_MARKERS = frozenset({"", "NA", "NaN", "nan", "N/A", "null", "NULL"})

TypeHint = Literal["numeric", "categorical"]


@dataclass(frozen=True, eq=False)
class Column:
    name: str
    values: np.ndarray  # float64 (NaN = missing) or object (None = missing)
    levels: tuple[str, ...] | None = None  # None for numeric columns

    @property
    def is_numeric(self) -> bool:
        return self.levels is None

    @property
    def missing(self) -> np.ndarray:
        if self.is_numeric:
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    def take(self, rows: np.ndarray) -> "Column":
        values = self.values[rows]
        if self.is_numeric:
            return Column(self.name, values)
        present = {v for v in values if v is not None}
        return Column(self.name, values, tuple(lv for lv in self.levels if lv in present))


def _is_missing(cell) -> bool:
    if cell is None:
        return True
    if isinstance(cell, float) and np.isnan(cell):
        return True
    return isinstance(cell, str) and cell.strip() in MISSING_MARKERS


def _make_column(
    name: str,
    cells: Sequence,
    hint: TypeHint | None = None,
    levels: Sequence[str] | None = None,
) -> Column:
    missing = np.array([_is_missing(c) for c in cells], dtype=bool)
    present = [c for c, m in zip(cells, missing) if not m]

    numeric = pd.to_numeric(pd.Series(present, dtype=object), errors="coerce")
    parses = bool(numeric.notna().all())

    if hint == "numeric" and not parses:
        bad = next(c for c, v in zip(present, numeric) if pd.isna(v))
        raise DataError(f"column '{name}' is declared numeric but contains '{bad}'")

    if hint != "categorical" and levels is None and parses:
        values = np.full(len(cells), np.nan)
        values[~missing] = numeric.to_numpy(dtype=float)
        return Column(name, values)

    as_text = np.empty(len(cells), dtype=object)
    for i, (cell, m) in enumerate(zip(cells, missing)):
        as_text[i] = None if m else str(cell).strip()
    observed = sorted({v for v in as_text if v is not None})
    if levels is not None:
        unknown = set(observed) - set(levels)
        if unknown:
            raise DataError(f"column '{name}' has values outside its level order: {sorted(unknown)}")
        order = tuple(levels)
    else:
        order = tuple(observed)
    return Column(name, as_text, order)


@dataclass(frozen=True, eq=False)
class Dataset:
    columns: dict[str, Column] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {col.values.shape[0] for col in self.columns.values()}
        if len(lengths) > 1:
            raise DataError(f"columns differ in length: {sorted(lengths)}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    @property
    def n_rows(self) -> int:
        if not self.columns:
            return 0
        return int(next(iter(self.columns.values())).values.shape[0])

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def __getitem__(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"column '{name}' not found; available: {', '.join(self.names)}") from None

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset({name: col.take(rows) for name, col in self.columns.items()})

    def select(self, names: Iterable[str]) -> "Dataset":
        return Dataset({name: self[name] for name in names})

    def row(self, i: int) -> dict[str, float | str | None]:
        out: dict[str, float | str | None] = {}
        for name, col in self.columns.items():
            v = col.values[i]
            out[name] = float(v) if col.is_numeric else v
        return out

    @classmethod
    def from_mapping(
        cls,
        data: Mapping[str, Sequence],
        type_hints: Mapping[str, TypeHint] | None = None,
        levels: Mapping[str, Sequence[str]] | None = None,
    ) -> "Dataset":
        """Build from column name -> cells.

        ``levels`` fixes the level order of categorical columns (the first
        level becomes the reference in designs).
        """
        type_hints = type_hints or {}
        levels = levels or {}
        columns: dict[str, Column] = {}
        for name, cells in data.items():
            columns[name] = _make_column(name, list(cells), type_hints.get(name), levels.get(name))
        return cls(columns)

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        type_hints: Mapping[str, TypeHint] | None = None,
        levels: Mapping[str, Sequence[str]] | None = None,
    ) -> "Dataset":
        names = [str(c) for c in frame.columns]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DataError(f"duplicate column names: {', '.join(dupes)}")
        return cls.from_mapping(
            {name: frame.iloc[:, j].tolist() for j, name in enumerate(names)},
            type_hints=type_hints,
            levels=levels,
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({name: col.values for name, col in self.columns.items()})


def read_csv(
    path: str,
    type_hints: Mapping[str, TypeHint] | None = None,
    levels: Mapping[str, Sequence[str]] | None = None,
) -> Dataset:
    """Read a UTF-8 CSV with a header row into a Dataset."""
    try:
        # Every cell as text; missing markers are ours, not pandas' defaults.
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
        # pandas renames a repeated header to "x.1"; take the names as written
        header = pd.read_csv(
            path, header=None, nrows=1, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True
        )
        frame.columns = header.iloc[0].tolist()
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise DataError(f"data file is empty: {path}") from None
    except pd.errors.ParserError as e:
        raise DataError(f"ragged or malformed CSV {path}: {e}") from None
    except UnicodeDecodeError as e:
        raise DataError(f"{path} is not valid UTF-8: {e}") from None

    # Short rows come back padded with NaN even with keep_default_na=False.
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        line = int(np.nonzero(short)[0][0]) + 2
        raise DataError(f"ragged CSV {path}: line {line} has fewer fields than the header")

    dataset = Dataset.from_frame(frame, type_hints=type_hints, levels=levels)
    logger.debug("Read %d rows x %d columns from %s", dataset.n_rows, len(dataset.names), path)
    return dataset
