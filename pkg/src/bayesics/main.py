"""
bayesics command line: one subcommand per analysis, CSV in, JSON report out.

Exit codes: 0 success, 2 user error (bad flags, data or formula),
3 numerical failure.
"""

import argparse
import logging
import os
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from bayesics.errors import BayesicsError, DataError, NumericalError, UserInputError
from bayesics.formula.data import Dataset, read_csv
from bayesics.formula.design import DesignSpec, build_design
from bayesics.formula.parser import parse_formula
from bayesics.inference.core import summarize_closed_form
from bayesics.inference.elicit import find_beta_parms, find_invgamma_parms
from bayesics.inference.schema import InferenceSummary
from bayesics.models import bma, glm, linear, mediation, npglm, simple_tests, survival
from bayesics.sampling.engine import AdaptiveSampler
from bayesics.sampling.plan import mean_sample_size, quantile_sample_size, sample_size_ratio
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import BayesicsConfig, load_config
from bayesics.schemas.config import Report, RunConfig

logger = logging.getLogger(__name__)

SEED_ENV = "BAYESICS_SEED"
THREADS_ENV = "BAYESICS_THREADS"

EXIT_OK = 0
EXIT_USER = 2
EXIT_NUMERICAL = 3


@dataclass
class Context:
    args: argparse.Namespace
    config: BayesicsConfig
    sampler: AdaptiveSampler
    target: PrecisionTarget

    @property
    def ci_level(self) -> float:
        return self.target.ci_level

    @property
    def rope(self) -> tuple[float, float] | None:
        return tuple(self.args.rope) if self.args.rope else None


# A handler returns the report pieces and an optional plot table.
Outcome = tuple[str, list[InferenceSummary], dict, dict, pd.DataFrame | None]
Handler = Callable[[Context], Outcome]


# input helpers ------------------------------------------------------------------


def _floats(text: str | None, what: str) -> list[float]:
    if text is None:
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UserInputError(f"{what} must be comma-separated numbers, got '{text}'") from None


def _table(text: str) -> list[list[float]]:
    """Inline table: rows separated by ';', cells by ','."""
    rows = [_floats(r, "table row") for r in text.split(";") if r.strip()]
    if len({len(r) for r in rows}) > 1:
        raise UserInputError("table rows must have equal length")
    return rows


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UserInputError(f"missing required option(s): {', '.join(missing)}")


def _dataset(ctx: Context) -> Dataset:
    _require(ctx.args, "data")
    return read_csv(ctx.args.data)


def _complete_rows(data: Dataset, names: Sequence[str]) -> Dataset:
    for name in names:
        if name not in data:
            raise DataError(f"variable '{name}' not found; available: {', '.join(data.names)}")
    complete = np.ones(data.n_rows, dtype=bool)
    for name in names:
        complete &= ~data[name].missing
    return data.take(np.flatnonzero(complete))


def _design(ctx: Context, extra_columns: Sequence[str] = ()) -> tuple[DesignSpec, Dataset]:
    _require(ctx.args, "formula")
    data = _dataset(ctx)
    formula = parse_formula(ctx.args.formula)
    if extra_columns:
        used = [*formula.response_variables, *formula.expand(data.names), *extra_columns]
        data = _complete_rows(data, list(dict.fromkeys(used)))
    return build_design(formula, data), data


def _rope_overrides(ctx: Context, design: DesignSpec) -> dict[str, tuple[float, float]]:
    if ctx.rope is None:
        return {}
    return {label: ctx.rope for label, kind in zip(design.labels, design.kinds) if kind != "intercept"}


def _design_extras(design: DesignSpec) -> dict:
    return {"n": design.n, "n_dropped": design.n_dropped, "columns": list(design.labels)}


# model subcommands ------------------------------------------------------------


def run_lm(ctx: Context) -> Outcome:
    design, _ = _design(ctx)
    fit = linear.fit_lm(design, prior=ctx.args.prior, ci_level=ctx.ci_level, rope_overrides=_rope_overrides(ctx, design))
    bfs, full_vs_null = linear.coefficient_bayes_factors(fit)
    if full_vs_null is not None:
        bfs = {**bfs, "full vs null": full_vs_null}
    extras = {
        **_design_extras(design),
        "prior": fit.prior.kind,
        "log_marginal_likelihood": fit.log_marginal_likelihood,
        "information_criteria": linear.information_criteria(fit, ctx.sampler),
        "diagnostics": linear.diagnostics_data(fit),
    }
    plot = None
    if ctx.args.band:
        kind = "prediction" if ctx.args.prediction else "credible"
        plot = linear.credible_band(fit, ctx.args.band, kind=kind).to_frame()
    else:
        plot = pd.DataFrame({k: extras["diagnostics"][k] for k in ("fitted", "residuals")})
    return "lm", fit.summary(), bfs, extras, plot


def run_aov(ctx: Context) -> Outcome:
    design, _ = _design(ctx)
    fit = linear.fit_aov(design, ctx.sampler, ctx.target, ctx.rope)
    values = design.data[fit.factor].values
    samples = {lv: design.y[values == lv] for lv in fit.groups.levels}
    bfs = {"full vs null": fit.full_vs_null, "equal vs unequal variances": linear.heteroscedasticity_bf(samples)}
    return "aov", fit.summary(), bfs, {**_design_extras(design), "factor": fit.factor}, None


def run_glm(ctx: Context) -> Outcome:
    args = ctx.args
    exposure = [args.exposure] if args.exposure else []
    design, data = _design(ctx, exposure)
    offset = None
    if args.exposure:
        col = data[args.exposure]
        if not col.is_numeric or np.any(col.values.astype(float) <= 0):
            raise DataError(f"exposure column '{args.exposure}' must be positive numbers")
        offset = np.log(col.values.astype(float))
    fit = glm.fit_glm(
        design,
        family=args.family,
        method=args.method,
        sampler=ctx.sampler,
        target=ctx.target,
        config=ctx.config,
        offset=offset,
        rope_overrides=_rope_overrides(ctx, design),
    )
    extras = {
        **_design_extras(design),
        "family": fit.family.name,
        "method": fit.method,
        "information_criteria": glm.glm_information_criteria(fit, ctx.sampler),
    }
    if fit.ess is not None:
        extras["effective_sample_size"] = fit.ess
    plot = None
    if args.pvalue:
        result = glm.bayesian_pvalue(fit, sampler=ctx.sampler, target=ctx.target, config=ctx.config.pvalue)
        extras["bayesian_p_value"] = {"p_value": result.p_value, "n_rep": result.n_rep, "statistic": "chi-square"}
        plot = pd.DataFrame({"t_pred": result.t_pred, "t_obs": result.t_obs})
    if args.band:
        plot = glm.glm_credible_band(fit, args.band, sampler=ctx.sampler, target=ctx.target).to_frame()
    return "glm", fit.summary(), glm.glm_coefficient_bfs(fit), extras, plot


def run_npglm(ctx: Context) -> Outcome:
    design, _ = _design(ctx)
    fit = npglm.fit_np_glm(
        design,
        family=ctx.args.family,
        loss=ctx.args.loss,
        sampler=ctx.sampler,
        target=ctx.target,
        config=ctx.config.newton,
        rope_overrides=_rope_overrides(ctx, design),
    )
    extras = {
        **_design_extras(design),
        "loss": fit.loss.name,
        "replicates": fit.n_replicates,
        "unweighted_minimizer": dict(zip(fit.labels, fit.mle.tolist())),
    }
    plot = npglm.np_credible_band(fit, ctx.args.band).to_frame() if ctx.args.band else None
    return "npglm", fit.summary(), {}, extras, plot


# simple tests --------------------------------------------------------------------


def _simple(result: simple_tests.SimpleResult) -> Outcome:
    plot = None
    diagnostics = result.extras.get("diagnostics")
    if diagnostics:
        plot = pd.concat(
            [
                pd.DataFrame({"group": g, "theoretical": d["qq_theoretical"], "sample": d["qq_sample"]})
                for g, d in diagnostics.items()
            ],
            ignore_index=True,
        )
    return result.analysis, result.summaries, result.bayes_factors, result.extras, plot


def run_ttest(ctx: Context) -> Outcome:
    args = ctx.args
    kwargs = dict(mu=args.mu, var_equal=args.var_equal, sampler=ctx.sampler, target=ctx.target, rope=ctx.rope)
    if args.x is not None:
        y = _floats(args.y, "--y") if args.y is not None else None
        return _simple(simple_tests.t_test(_floats(args.x, "--x"), y, **kwargs))
    design, _ = _design(ctx)
    if design.terms:
        kwargs.pop("mu")
    return _simple(simple_tests.t_test_design(design, **kwargs))


def _prior_arg(args: argparse.Namespace) -> str | tuple[float, float]:
    return tuple(args.prior_shapes) if args.prior_shapes else args.prior


def run_prop(ctx: Context) -> Outcome:
    _require(ctx.args, "successes", "trials")
    result = simple_tests.prop_test(
        _floats(ctx.args.successes, "--successes"),
        _floats(ctx.args.trials, "--trials"),
        prior=_prior_arg(ctx.args),
        sampler=ctx.sampler,
        target=ctx.target,
        rope=ctx.rope,
    )
    return _simple(result)


def run_poisson(ctx: Context) -> Outcome:
    _require(ctx.args, "counts")
    offsets = _floats(ctx.args.offsets, "--offsets") or None
    shapes = tuple(ctx.args.prior_shapes) if ctx.args.prior_shapes else (0.5, 0.0)
    result = simple_tests.poisson_test(
        _floats(ctx.args.counts, "--counts"),
        offsets,
        prior_shapes=shapes,
        sampler=ctx.sampler,
        target=ctx.target,
        rope=ctx.rope,
    )
    return _simple(result)


def run_sign(ctx: Context) -> Outcome:
    args = ctx.args
    if args.x is not None:
        x = _floats(args.x, "--x")
        y = _floats(args.y, "--y") if args.y is not None else None
    else:
        _require(args, "columns")
        data = _complete_rows(_dataset(ctx), args.columns)
        cols = [data[c] for c in args.columns]
        if not all(c.is_numeric for c in cols):
            raise DataError("sign test columns must be numeric")
        x = cols[0].values.astype(float)
        y = cols[1].values.astype(float) if len(cols) > 1 else None
    shapes = tuple(args.prior_shapes) if args.prior_shapes else (1.0, 1.0)
    kwargs = {"rope": ctx.rope} if ctx.rope else {}
    return _simple(simple_tests.sign_test(x, y, prior_shapes=shapes, target=ctx.target, **kwargs))


def _crosstab(ctx: Context) -> tuple[pd.DataFrame, str, str]:
    _require(ctx.args, "formula")
    formula = parse_formula(ctx.args.formula)
    if formula.response is None or formula.wildcard or len(formula.terms) != 1:
        raise UserInputError("cross-tabulation needs a formula 'row ~ column'")
    row, col = formula.response, formula.terms[0]
    data = _complete_rows(_dataset(ctx), [row, col])

    def factor(name: str) -> pd.Categorical:
        column = data[name]
        if column.is_numeric:
            return pd.Categorical(column.values)
        return pd.Categorical(column.values, categories=list(column.levels))

    tab = pd.crosstab(factor(row), factor(col), dropna=False)
    return tab, row, col


def run_chisq(ctx: Context) -> Outcome:
    if ctx.args.table:
        table = _table(ctx.args.table)
        extras = {}
    else:
        tab, row, col = _crosstab(ctx)
        table = tab.to_numpy(dtype=float).tolist()
        extras = {"rows": [str(v) for v in tab.index], "columns": [str(v) for v in tab.columns], "row_variable": row, "column_variable": col}
    analysis, summaries, bfs, result_extras, plot = _simple(simple_tests.chisq_test(table, target=ctx.target))
    return analysis, summaries, bfs, {**result_extras, **extras, "table": table}, plot


def run_casecontrol(ctx: Context) -> Outcome:
    args = ctx.args
    extras = {}
    if args.counts:
        counts = [int(v) for v in _floats(args.counts, "--counts")]
        if len(counts) != 4:
            raise UserInputError("--counts takes case_exposed,case_unexposed,control_exposed,control_unexposed")
    else:
        tab, row, col = _crosstab(ctx)
        if tab.shape != (2, 2):
            raise UserInputError("case-control data need a two-level status and a two-level exposure")
        # second level of each is "case" and "exposed", matching the indicator coding of designs
        counts = [int(tab.iat[1, 1]), int(tab.iat[1, 0]), int(tab.iat[0, 1]), int(tab.iat[0, 0])]
        extras = {"case_level": str(tab.index[1]), "exposed_level": str(tab.columns[1]), "status": row, "exposure": col}
    result = simple_tests.case_control(
        *counts, prior=_prior_arg(args), sampler=ctx.sampler, target=ctx.target, rope=ctx.rope
    )
    analysis, summaries, bfs, result_extras, plot = _simple(result)
    return analysis, summaries, bfs, {**result_extras, **extras, "counts": counts}, plot


# survival, BMA, mediation --------------------------------------------------------


def run_survfit(ctx: Context) -> Outcome:
    design, _ = _design(ctx)
    cfg = ctx.config.survival
    fit = survival.fit_survival(design, cfg, n_intervals=ctx.args.intervals, ci_level=ctx.ci_level)
    bfs = {}
    if fit.variable is not None:
        pooled_design = build_design("Surv({}, {}) ~ 1".format(*design.formula.survival), design.data)
        pooled = survival.fit_survival(pooled_design, cfg, n_intervals=ctx.args.intervals, ci_level=ctx.ci_level)
        bfs["pooled vs grouped"] = survival.survival_group_bf(pooled, fit)
    curves = survival.survival_curves(fit, ctx.sampler, ctx.target)
    extras = {
        **_design_extras(design),
        "knots": fit.knots,
        "intervals": fit.n_intervals,
        "log_marginal_likelihood": fit.log_ml,
        "log_marginal_likelihood_by_intervals": {str(k): v for k, v in fit.k_trace.items()},
        "median_survival": {g: survival.median_survival_time(h, fit.knots) for g, h in fit.groups.items()},
        **fit.extra,
    }
    return "survfit", fit.summary(), bfs, extras, survival.curves_frame(curves)


def run_bma(ctx: Context) -> Outcome:
    design, _ = _design(ctx)
    fit = bma.fit_bma(
        design,
        model_prior=ctx.args.model_prior,
        sampler=ctx.sampler,
        target=ctx.target,
        config=ctx.config.bma,
        rope_overrides=_rope_overrides(ctx, design),
    )
    extras = {
        **_design_extras(design),
        "model_prior": fit.model_prior,
        "models": fit.model_table().to_dict(orient="records"),
        "inclusion_probabilities": fit.inclusion,
    }
    plot = None
    if ctx.args.pvalue:
        pv = bma.bma_bayesian_pvalue(fit, sampler=ctx.sampler, target=ctx.target, config=ctx.config.pvalue)
        extras["bayesian_p_values"] = {f"q{q:g}": p for q, p in pv.p_values.items()}
        plot = pd.concat(
            [pd.DataFrame({"quantile": q, "t_pred": r.t_pred, "t_obs": r.t_obs}) for q, r in zip(pv.probs, pv.results)],
            ignore_index=True,
        )
    return "bma", fit.summary(), {}, extras, plot


def run_mediate(ctx: Context) -> Outcome:
    args = ctx.args
    _require(args, "mediator_formula", "outcome_formula", "treatment")
    med_design, out_design = mediation.mediation_designs(args.mediator_formula, args.outcome_formula, _dataset(ctx))
    result = mediation.mediate(
        med_design,
        out_design,
        args.treatment,
        mediator_family=args.mediator_family,
        outcome_family=args.outcome_family,
        mode=args.mode,
        method=args.method,
        sampler=ctx.sampler,
        target=ctx.target,
        config=ctx.config,
        rope=ctx.rope,
    )
    extras = {
        **result.extra,
        "treatment": result.treatment,
        "mediator": result.mediator,
        "treatment_levels": list(result.levels),
        "mode": result.mode,
        "proportion_reported": result.proportion is not None,
    }
    return "mediate", result.summary(), {}, extras, None


# utilities -------------------------------------------------------------------------


def run_elicit_beta(ctx: Context) -> Outcome:
    args = ctx.args
    _require(args, "mean", "quantile_prob", "quantile_value")
    parms = find_beta_parms(args.mean, args.quantile_prob, args.quantile_value)
    dist = stats.beta(parms.shape1, parms.shape2)
    s = summarize_closed_form(dist, ctx.ci_level, null_value=None, label="prior")
    return "elicit-beta", [s], {}, {"shape1": parms.shape1, "shape2": parms.shape2, "exact": parms.exact}, None


def run_elicit_invgamma(ctx: Context) -> Outcome:
    args = ctx.args
    if args.response_variance is not None:
        parms = find_invgamma_parms("r-squared", response_variance=args.response_variance)
    else:
        _require(args, "q1_prob", "q1_value", "q2_prob", "q2_value")
        parms = find_invgamma_parms("quantiles", args.q1_prob, args.q1_value, args.q2_prob, args.q2_value)
    # no finite mean for shape <= 1
    summaries = []
    if parms.shape > 1:
        summaries.append(summarize_closed_form(parms.dist(), ctx.ci_level, null_value=None, label="prior"))
    return "elicit-invgamma", summaries, {}, {"shape": parms.shape, "rate": parms.rate, "exact": parms.exact}, None


def run_heterosced(ctx: Context) -> Outcome:
    if ctx.args.groups:
        samples = {f"group{i + 1}": np.asarray(row) for i, row in enumerate(_table(ctx.args.groups))}
    else:
        design, _ = _design(ctx)
        if len(design.terms) != 1 or design.terms[0] not in design.factor_levels:
            raise UserInputError("heteroscedasticity check needs a formula 'y ~ group' with a categorical group")
        values = design.data[design.terms[0]].values
        samples = {lv: design.y[values == lv] for lv in design.factor_levels[design.terms[0]]}
    bf = linear.heteroscedasticity_bf(samples)
    extras = {"groups": list(samples), "sizes": [int(np.size(v)) for v in samples.values()]}
    return "heterosced", [], {"equal vs unequal variances": bf}, extras, None


def run_mcplan(ctx: Context) -> Outcome:
    args = ctx.args
    _require(args, "epsilon")
    extras: dict = {"alpha": args.alpha, "s": args.s, "epsilon": args.epsilon}
    if args.density is None and args.variance is None:
        raise UserInputError("give --density (quantile plan) and/or --variance (mean plan)")
    if args.density is not None:
        extras["density"] = args.density
        extras["L"] = quantile_sample_size(args.alpha / 2.0, args.s, args.epsilon, args.density)
    if args.variance is not None:
        extras["variance"] = args.variance
        extras["M"] = mean_sample_size(args.variance, args.s, args.epsilon)
    if args.density is not None and args.variance is not None:
        extras["ratio"] = sample_size_ratio(args.alpha, args.variance, args.density)
    return "mcplan", [], {}, extras, None


COMMANDS: dict[str, tuple[Handler, str]] = {
    "lm": (run_lm, "conjugate linear regression"),
    "aov": (run_aov, "one-way ANOVA with separate group variances"),
    "glm": (run_glm, "generalized linear model (VB, Laplace or importance sampling)"),
    "npglm": (run_npglm, "loss-likelihood bootstrap regression"),
    "ttest": (run_ttest, "one or two population means"),
    "prop": (run_prop, "one or two proportions"),
    "poisson": (run_poisson, "one or two Poisson rates"),
    "sign": (run_sign, "sign test for paired data"),
    "chisq": (run_chisq, "independence in a two-way table"),
    "casecontrol": (run_casecontrol, "odds ratio from a case-control 2x2 table"),
    "survfit": (run_survfit, "piecewise-exponential survival curves"),
    "bma": (run_bma, "Bayesian model averaging for linear regression"),
    "mediate": (run_mediate, "causal mediation analysis"),
    "elicit-beta": (run_elicit_beta, "Beta prior from a mean and one quantile"),
    "elicit-invgamma": (run_elicit_invgamma, "inverse-gamma prior from two quantiles"),
    "heterosced": (run_heterosced, "equal against unequal group variances"),
    "mcplan": (run_mcplan, "Monte Carlo sample sizes for a target precision"),
}


# parser ------------------------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--data", help="CSV file with a header row")
    g.add_argument("--formula", help='model formula, e.g. "y ~ x + group"')
    g.add_argument("--ci", type=float, default=0.95, help="credible interval level (default 0.95)")
    g.add_argument("--mc-epsilon", type=float, help="absolute Monte Carlo margin of error")
    g.add_argument("--mc-confidence", type=float, default=0.95, help="probability the margin holds (default 0.95)")
    g.add_argument("--seed", type=int, help=f"random seed (env {SEED_ENV})")
    g.add_argument("--threads", type=int, help=f"worker threads for sampling (env {THREADS_ENV})")
    g.add_argument("--rope", type=float, nargs=2, metavar=("LO", "HI"), help="override the default ROPE")
    g.add_argument("-o", "--output", help="write the report here instead of stdout")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--plot-data", help="write the analysis' plot table as CSV")
    g.add_argument("--pretty", action="store_true", help="print human-readable tables")
    g.add_argument("--config", help="path to bayesics.toml")
    g.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesics", description="Bayesian analyses with automated Monte Carlo precision.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    common = _common_parser()
    p = {name: sub.add_parser(name, parents=[common], help=text) for name, (_, text) in COMMANDS.items()}

    p["lm"].add_argument("--prior", choices=("zellner", "conjugate"), default="zellner")
    p["lm"].add_argument("--band", metavar="VAR", help="credible band along VAR as plot data")
    p["lm"].add_argument("--prediction", action="store_true", help="prediction rather than credible band")

    p["glm"].add_argument("--family", choices=("gaussian", "binomial", "poisson", "negbinom"), default="gaussian")
    p["glm"].add_argument("--method", choices=("vb", "laplace", "importance"), default="vb")
    p["glm"].add_argument("--exposure", metavar="COLUMN", help="log(COLUMN) enters as an offset")
    p["glm"].add_argument("--pvalue", action="store_true", help="posterior predictive p-value")
    p["glm"].add_argument("--band", metavar="VAR")

    p["npglm"].add_argument("--family", choices=("gaussian", "binomial", "poisson"), default="gaussian")
    p["npglm"].add_argument(
        "--loss", choices=("self-information", "squared", "logistic", "poisson"), default="self-information"
    )
    p["npglm"].add_argument("--band", metavar="VAR")

    for name in ("ttest", "sign"):
        p[name].add_argument("--x", help="comma-separated values")
        p[name].add_argument("--y", help="comma-separated values (second group or pair)")
    p["ttest"].add_argument("--mu", type=float, default=0.0, help="null mean for one sample")
    p["ttest"].add_argument("--var-equal", action="store_true")
    p["sign"].add_argument("--columns", nargs="+", metavar="COL", help="difference column, or two paired columns")

    for name in ("prop", "casecontrol"):
        p[name].add_argument("--prior", choices=("jeffreys", "uniform"), default="jeffreys")
    for name in ("prop", "casecontrol", "poisson", "sign"):
        p[name].add_argument("--prior-shapes", type=float, nargs=2, metavar=("A", "B"))
    p["prop"].add_argument("--successes", help="one or two counts, comma-separated")
    p["prop"].add_argument("--trials", help="one or two counts, comma-separated")
    p["poisson"].add_argument("--counts", help="one or two counts, comma-separated")
    p["poisson"].add_argument("--offsets", help="exposure per count, comma-separated")
    p["chisq"].add_argument("--table", help='rows separated by ";", e.g. "10,10;10,10"')
    p["casecontrol"].add_argument("--counts", help="case_exposed,case_unexposed,control_exposed,control_unexposed")

    p["survfit"].add_argument("--intervals", type=int, help="fix the number of hazard intervals")

    p["bma"].add_argument("--model-prior", choices=("uniform", "beta-binomial"), default="uniform")
    p["bma"].add_argument("--pvalue", action="store_true", help="quantile posterior predictive p-values")

    m = p["mediate"]
    m.add_argument("--mediator-formula")
    m.add_argument("--outcome-formula")
    m.add_argument("--treatment")
    m.add_argument("--mediator-family", choices=mediation.MEDIATION_FAMILIES, default="gaussian")
    m.add_argument("--outcome-family", choices=mediation.MEDIATION_FAMILIES, default="gaussian")
    m.add_argument("--mode", choices=("auto", "mean", "sample"), default="auto")
    m.add_argument("--method", choices=("vb", "laplace", "importance"), default="vb")

    e = p["elicit-beta"]
    e.add_argument("--mean", type=float)
    e.add_argument("--quantile-prob", type=float)
    e.add_argument("--quantile-value", type=float)
    e = p["elicit-invgamma"]
    for flag in ("--q1-prob", "--q1-value", "--q2-prob", "--q2-value"):
        e.add_argument(flag, type=float)
    e.add_argument("--response-variance", type=float, help="R²-based default for this response variance")

    p["heterosced"].add_argument("--groups", help='inline samples, groups separated by ";"')

    mc = p["mcplan"]
    mc.add_argument("--alpha", type=float, default=0.05, help="1 - credible level")
    mc.add_argument("--s", type=float, default=0.95, help="probability the margin holds")
    mc.add_argument("--epsilon", type=float)
    mc.add_argument("--density", type=float, help="posterior density at the interval endpoint")
    mc.add_argument("--variance", type=float, help="posterior variance")
    return parser


# running -----------------------------------------------------------------------------


def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UserInputError(f"{name} must be an integer, got '{raw}'") from None


def _context(args: argparse.Namespace) -> Context:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else _env_int(SEED_ENV)
    threads = args.threads if args.threads is not None else _env_int(THREADS_ENV)
    if threads is not None and threads < 1:
        raise UserInputError("threads must be at least 1")
    sampler = AdaptiveSampler(seed=seed, config=config.sampling, threads=threads)
    target = PrecisionTarget(epsilon=args.mc_epsilon, s=args.mc_confidence, ci_level=args.ci)
    return Context(args=args, config=config, sampler=sampler, target=target)


_COMMON = {
    "command", "data", "formula", "ci", "mc_epsilon", "mc_confidence", "seed", "threads",
    "rope", "output", "format", "plot_data", "pretty", "config", "verbose",
}


def _run_config(ctx: Context) -> RunConfig:
    args = ctx.args
    return RunConfig(
        subcommand=args.command,
        data=args.data,
        formula=args.formula,
        ci_level=args.ci,
        mc_epsilon=args.mc_epsilon,
        mc_confidence=args.mc_confidence,
        seed=ctx.sampler.seed,
        threads=ctx.sampler.threads,
        rope=ctx.rope,
        output=args.output,
        format=args.format,
        plot_data=args.plot_data,
        options={k: v for k, v in sorted(vars(args).items()) if k not in _COMMON},
    )


def _summaries_frame(report: Report) -> pd.DataFrame:
    return pd.DataFrame([s.model_dump() for s in report.summaries])


def _print_pretty(report: Report) -> None:
    from rich.console import Console
    from rich.table import Table

    console = Console()
    if report.summaries:
        table = Table(title=f"{report.analysis}: posterior summaries ({report.config.ci_level:.0%} CI)")
        for col in ("Estimand", "Mean", "Lower", "Upper", "Prob Dir", "ROPE", "Bayes factor", "Interpretation"):
            table.add_column(col, justify="left" if col in ("Estimand", "Interpretation") else "right")

        def fmt(v: float | None) -> str:
            return "" if v is None else f"{v:.3g}"

        for s in report.summaries:
            table.add_row(
                s.label,
                fmt(s.post_mean),
                fmt(s.ci_lower),
                fmt(s.ci_upper),
                fmt(s.prob_direction),
                fmt(s.rope_prob),
                fmt(s.bayes_factor),
                s.bf_interpretation or "",
            )
        console.print(table)
    if report.bayes_factors:
        table = Table(title="Bayes factors")
        for col in ("Comparison", "BF", "Interpretation"):
            table.add_column(col)
        for name, bf in report.bayes_factors.items():
            table.add_row(f"{name} ({bf.orientation})", f"{bf.value:.3g}", bf.jeffreys_label)
        console.print(table)
    scalars = {k: v for k, v in report.extras.items() if isinstance(v, (int, float, str, bool))}
    if scalars:
        table = Table(title="Details")
        table.add_column("Item")
        table.add_column("Value", justify="right")
        for k, v in scalars.items():
            table.add_row(k, f"{v:.6g}" if isinstance(v, float) else str(v))
        console.print(table)


def _emit(report: Report, ctx: Context, plot: pd.DataFrame | None) -> None:
    args = ctx.args
    if args.format == "csv":
        text = _summaries_frame(report).to_csv(index=False)
    else:
        text = report.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    elif not args.pretty:
        sys.stdout.write(text)
    if args.pretty:
        _print_pretty(report)
    if args.plot_data:
        if plot is None:
            logger.warning("%s has no plot table; --plot-data ignored", report.analysis)
        else:
            plot.to_csv(args.plot_data, index=False)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USER
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USER

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    handler, _ = COMMANDS[args.command]
    try:
        ctx = _context(args)
        analysis, summaries, bfs, extras, plot = handler(ctx)
        report = Report(
            analysis=analysis,
            config=_run_config(ctx),
            summaries=summaries,
            bayes_factors=bfs,
            sample_plans=list(ctx.sampler.history),
            extras=extras,
        )
        _emit(report, ctx, plot)
    except NumericalError as e:
        print(f"bayesics: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (BayesicsError, ValueError, OSError) as e:
        print(f"bayesics: {e}", file=sys.stderr)
        return EXIT_USER
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
