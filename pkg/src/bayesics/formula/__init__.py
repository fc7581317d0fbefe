from bayesics.formula.data import Column, Dataset, read_csv
from bayesics.formula.design import (
    INTERCEPT,
    DesignSpec,
    build_design,
    gower_distances,
    medoid_index,
    require_full_rank,
)
from bayesics.formula.parser import Formula, parse_formula

__all__ = [
    "INTERCEPT",
    "Column",
    "Dataset",
    "DesignSpec",
    "Formula",
    "build_design",
    "gower_distances",
    "medoid_index",
    "parse_formula",
    "read_csv",
    "require_full_rank",
]
