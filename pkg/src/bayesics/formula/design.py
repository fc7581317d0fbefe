"""
Design matrices from a Formula and a Dataset.

Factors use treatment contrasts against their first level; column labels
concatenate variable and level ("rx" + "1_indomethacin"). The intercept,
always present, is the first column.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist

from bayesics.errors import DataError, DesignError, RankDeficiencyError
from bayesics.formula.data import Column, Dataset
from bayesics.formula.parser import Formula, parse_formula

logger = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"

ColumnKind = Literal["intercept", "numeric", "factor"]


@dataclass(frozen=True, eq=False)
class DesignSpec:
    formula: Formula
    X: np.ndarray
    labels: tuple[str, ...]
    kinds: tuple[ColumnKind, ...]
    sds: tuple[float | None, ...]  # sample SD per column, None for the intercept
    terms: tuple[str, ...]
    term_columns: dict[str, tuple[int, ...]]
    factor_levels: dict[str, tuple[str, ...]]  # first level is the reference
    data: Dataset  # rows kept after listwise deletion
    y: np.ndarray | None = None
    time: np.ndarray | None = None
    event: np.ndarray | None = None
    response_levels: tuple[str, str] | None = None  # categorical response: (0, 1) coding
    n_dropped: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @property
    def response(self) -> str:
        if self.formula.survival is not None:
            return "Surv({}, {})".format(*self.formula.survival)
        return self.formula.response

    @property
    def reference_levels(self) -> dict[str, str]:
        return {name: levels[0] for name, levels in self.factor_levels.items()}

    def is_binary(self, j: int) -> bool:
        return self.kinds[j] == "factor" or bool(np.all(np.isin(self.X[:, j], (0.0, 1.0))))

    def column_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DesignError(f"no design column '{label}'; columns: {', '.join(self.labels)}") from None

    def encode(self, rows: Dataset | Mapping[str, Sequence]) -> np.ndarray:
        """Design rows for new data, coded exactly as this design codes its own."""
        if not isinstance(rows, Dataset):
            rows = Dataset.from_mapping(
                rows, type_hints={t: "categorical" for t in self.factor_levels if t in rows}
            )
        if rows.n_rows == 0:
            raise DataError("no rows to encode")
        return _encode_terms(self.terms, self.factor_levels, rows)

    def select_terms(self, terms: Sequence[str]) -> "DesignSpec":
        """The same rows restricted to a subset of terms (intercept always kept)."""
        unknown = [t for t in terms if t not in self.term_columns]
        if unknown:
            raise DesignError(f"terms not in this design: {', '.join(unknown)}")
        keep = [0]
        for t in self.terms:
            if t in terms:
                keep.extend(self.term_columns[t])
        kept_terms = tuple(t for t in self.terms if t in terms)
        mapping, j = {}, 1
        for t in kept_terms:
            width = len(self.term_columns[t])
            mapping[t] = tuple(range(j, j + width))
            j += width
        return DesignSpec(
            formula=self.formula.model_copy(update={"terms": kept_terms, "wildcard": False}),
            X=self.X[:, keep],
            labels=tuple(self.labels[k] for k in keep),
            kinds=tuple(self.kinds[k] for k in keep),
            sds=tuple(self.sds[k] for k in keep),
            terms=kept_terms,
            term_columns=mapping,
            factor_levels={t: lv for t, lv in self.factor_levels.items() if t in kept_terms},
            data=self.data,
            y=self.y,
            time=self.time,
            event=self.event,
            response_levels=self.response_levels,
            n_dropped=self.n_dropped,
        )

    def medoid_index(self) -> int:
        return medoid_index(self.data.select(self.terms)) if self.terms else 0

    def exemplar(self, overrides: Mapping[str, float | str] | None = None) -> dict[str, float | str]:
        """Covariate settings at the medoid row, with user overrides applied."""
        row = self.data.row(self.medoid_index()) if self.terms else {}
        values = {t: row[t] for t in self.terms}
        for name, value in (overrides or {}).items():
            if name not in self.term_columns:
                raise DesignError(f"exemplar variable '{name}' is not a model term")
            values[name] = value
        return values


def _encode_terms(
    terms: Sequence[str],
    factor_levels: Mapping[str, tuple[str, ...]],
    rows: Dataset,
) -> np.ndarray:
    parts = [np.ones((rows.n_rows, 1))]
    for term in terms:
        col = rows[term]
        if term in factor_levels:
            levels = factor_levels[term]
            values = col.values if not col.is_numeric else np.array([_num_to_text(v) for v in col.values], dtype=object)
            unknown = sorted({v for v in values if v is not None and v not in levels})
            if unknown:
                raise DesignError(f"'{term}' has levels not seen when fitting: {unknown}")
            parts.append(np.column_stack([(values == lv).astype(float) for lv in levels[1:]]))
        else:
            if not col.is_numeric:
                raise DesignError(f"'{term}' is numeric in the model but categorical in the new data")
            parts.append(col.values.astype(float)[:, None])
    X = np.hstack(parts)
    if np.isnan(X).any():
        raise DataError("new data contain missing values in model terms")
    return X


def _num_to_text(v: float) -> str | None:
    if np.isnan(v):
        return None
    return str(int(v)) if float(v).is_integer() else str(v)


def build_design(formula: Formula | str, data: Dataset) -> DesignSpec:
    """Design matrix, response and column metadata for ``formula`` on ``data``."""
    if isinstance(formula, str):
        formula = parse_formula(formula)
    terms = formula.expand(data.names)
    used = list(formula.response_variables) + list(terms)
    for name in used:
        if name not in data:
            raise DesignError(f"variable '{name}' not found; available: {', '.join(data.names)}")

    missing = np.zeros(data.n_rows, dtype=bool)
    for name in used:
        missing |= data[name].missing
    n_dropped = int(missing.sum())
    if n_dropped:
        logger.warning("Dropped %d of %d rows with missing values in %s", n_dropped, data.n_rows, ", ".join(used))
    kept = data.select(used).take(np.nonzero(~missing)[0])
    if kept.n_rows == 0:
        raise DesignError("no usable rows after removing missing values")

    labels: list[str] = [INTERCEPT]
    kinds: list[ColumnKind] = ["intercept"]
    sds: list[float | None] = [None]
    term_columns: dict[str, tuple[int, ...]] = {}
    factor_levels: dict[str, tuple[str, ...]] = {}

    for term in terms:
        col = kept[term]
        start = len(labels)
        if col.is_numeric:
            sd = float(np.std(col.values, ddof=1)) if kept.n_rows > 1 else 0.0
            if not sd > 0:
                raise DesignError(f"numeric column '{term}' is constant")
            labels.append(term)
            kinds.append("numeric")
            sds.append(sd)
        else:
            if len(col.levels) < 2:
                raise DesignError(f"factor '{term}' has a single level ({', '.join(col.levels)})")
            factor_levels[term] = col.levels
            for level in col.levels[1:]:
                indicator = (col.values == level).astype(float)
                labels.append(f"{term}{level}")
                kinds.append("factor")
                sds.append(float(np.std(indicator, ddof=1)))
        term_columns[term] = tuple(range(start, len(labels)))

    X = _encode_terms(terms, factor_levels, kept)

    y = time = event = None
    response_levels = None
    if formula.survival is not None:
        t_col, e_col = (kept[v] for v in formula.survival)
        for c in (t_col, e_col):
            if not c.is_numeric:
                raise DesignError(f"survival variable '{c.name}' must be numeric")
        time, event = t_col.values.astype(float), e_col.values.astype(float)
    else:
        y, response_levels = _response_vector(kept[formula.response])

    return DesignSpec(
        formula=formula,
        X=X,
        labels=tuple(labels),
        kinds=tuple(kinds),
        sds=tuple(sds),
        terms=tuple(terms),
        term_columns=term_columns,
        factor_levels=factor_levels,
        data=kept,
        y=y,
        time=time,
        event=event,
        response_levels=response_levels,
        n_dropped=n_dropped,
    )


def _response_vector(col: Column) -> tuple[np.ndarray, tuple[str, str] | None]:
    if col.is_numeric:
        return col.values.astype(float), None
    if len(col.levels) != 2:
        raise DesignError(
            f"categorical response '{col.name}' needs exactly two levels, found {len(col.levels)}"
        )
    return (col.values == col.levels[1]).astype(float), (col.levels[0], col.levels[1])


def require_full_rank(X: np.ndarray, labels: Sequence[str]) -> None:
    """Raise RankDeficiencyError naming the first column spanned by earlier ones."""
    n, p = X.shape
    if n < p:
        raise RankDeficiencyError(f"{n} rows cannot identify {p} coefficients")
    if np.linalg.matrix_rank(X) == p:
        return
    for j in range(1, p + 1):
        if np.linalg.matrix_rank(X[:, :j]) < j:
            raise RankDeficiencyError(
                f"design matrix is rank deficient: column '{labels[j - 1]}' is a linear combination of earlier columns"
            )


def gower_distances(data: Dataset, block: int = 512) -> np.ndarray:
    """Row-by-row summed Gower distance to every row, shape (n,)."""
    n = data.n_rows
    numeric = [c for c in data.columns.values() if c.is_numeric]
    categorical = [c for c in data.columns.values() if not c.is_numeric]
    n_vars = len(numeric) + len(categorical)
    if n_vars == 0 or n == 0:
        return np.zeros(n)

    num = np.column_stack([c.values for c in numeric]) if numeric else np.zeros((n, 0))
    if numeric:
        span = num.max(axis=0) - num.min(axis=0)
        span[span == 0] = 1.0
        num = num / span
    codes = (
        np.column_stack([[c.levels.index(v) for v in c.values] for c in categorical]).astype(float)
        if categorical
        else np.zeros((n, 0))
    )

    totals = np.zeros(n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = np.zeros((stop - start, n))
        if numeric:
            d += cdist(num[start:stop], num, metric="cityblock")
        if categorical:
            d += cdist(codes[start:stop], codes, metric="hamming") * len(categorical)
        totals[start:stop] = d.sum(axis=1) / n_vars
    return totals


def medoid_index(data: Dataset) -> int:
    """Index of the row minimising summed Gower distance (ties: first row)."""
    if data.n_rows == 0:
        raise DataError("medoid of an empty dataset")
    return int(np.argmin(gower_distances(data)))
