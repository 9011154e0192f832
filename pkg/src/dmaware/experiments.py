"""Experiment harness: correlation study, elicitation runs, bootstrap CIs.

Every run is reproducible: rows are keyed by (repetition, target, criterion,
step), assembled in sorted order, and written with fixed float formatting, so
the same config and seed produce byte-identical result tables.  Wall-clock
timings are nondeterministic and go to a separate file.
"""

from __future__ import annotations

import dataclasses
import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .active_learning import Criterion, KnnConfig, apply_answer, initial_state, select_query
from .data import Dataset
from .datagen import (
    BernoulliRbfConfig,
    SigmoidGenConfig,
    TabularSchema,
    gen_bernoulli_rbf,
    gen_sigmoid_continuous,
    load_tabular,
)
from .gp import FitError, HyperPrior, gp_fit
from .oracles import ComparisonQuery, OracleConfig, OracleKind, PointQuery, answer_comparison, answer_point
from .outcome import GPOutcomeModel, LogisticOutcomeModel
from .predictive import GaussianPredictive
from .reliability import DecisionOrientation, estimate_type_s_gaussian, mmd, observed_type_s

EXPERIMENT_KINDS = ("correlation", "al_binary", "al_continuous", "al_comparative")


@dataclass
class ExperimentConfig:
    kind: str = "al_binary"
    repetitions: int = 30
    n_queries: int = 5
    criteria: tuple[str, ...] = ("dm_aware", "uncertainty")
    seed: int = 0
    out_dir: str | None = None
    knn_k: int | None = None
    jobs: int = 1
    # correlation study
    n_models: int = 50
    propensities: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    n_train: tuple[int, ...] = (50,)
    n_test: int = 500
    noise_sd: float = 0.5
    outer_repetitions: int = 1
    # elicitation runs
    oracle_noise_sd: float | None = None
    flip_probability: float = 0.1
    n_targets: int | None = None
    mmd_lengthscale: float = 0.8
    gp_restarts: int = 5
    reoptimize_hyperparams: bool = True
    logistic_prior_variance: float = 6.25
    comparison_noise_scale: float = 0.1
    bootstrap_resamples: int = 2000
    # continuous-run data source: synthetic generator by default, or a table
    tabular_path: str | None = None
    tabular_covariates: tuple[str, ...] | None = None
    tabular_mu0: str = "mu0"
    tabular_mu1: str = "mu1"
    continuous_n_train: int = 40
    subsample_train: int | None = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"kind must be one of {EXPERIMENT_KINDS}, got {self.kind!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.n_queries < 0:
            raise ValueError("n_queries must be >= 0")
        self.criteria = tuple(self.criteria)
        self.propensities = tuple(self.propensities)
        if isinstance(self.n_train, int):
            self.n_train = (self.n_train,)
        self.n_train = tuple(self.n_train)
        for name in self.criteria:
            Criterion(name)

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "tabular_covariates" in raw and raw["tabular_covariates"] is not None:
            raw["tabular_covariates"] = tuple(raw["tabular_covariates"])
        return ExperimentConfig(**raw)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    ci_low: float
    ci_high: float
    n_resamples: int


def bootstrap_ci(values, n_resamples: int = 2000, seed: int = 0) -> BootstrapSummary:
    """Percentile bootstrap of the mean (2.5 / 97.5 percentiles)."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("values must be nonempty")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, v.size, size=(n_resamples, v.size))
    means = v[idx].mean(axis=1)
    return BootstrapSummary(
        mean=float(v.mean()),
        ci_low=float(np.percentile(means, 2.5)),
        ci_high=float(np.percentile(means, 97.5)),
        n_resamples=n_resamples,
    )


# ---------------------------------------------------------------------------
# Correlation study
# ---------------------------------------------------------------------------

def _arm_imbalance(data: Dataset, lengthscale: float) -> float:
    treated = data.units[data.actions == 1]
    control = data.units[data.actions == 0]
    if treated.shape[0] == 0 or control.shape[0] == 0:
        return float("nan")
    return mmd(treated, control, lengthscale).mmd


def _correlation_cell(cfg: ExperimentConfig, outer: int, model_idx: int, propensity: float, n: int) -> dict:
    gen = gen_sigmoid_continuous(
        SigmoidGenConfig(
            propensity=propensity,
            noise_sd=cfg.noise_sd,
            seed=int(
                np.random.default_rng(
                    [cfg.seed, outer, model_idx, int(round(propensity * 10)), n]
                ).integers(2**31)
            ),
            param_seed=int(np.random.default_rng([cfg.seed, outer, model_idx]).integers(2**31)),
            n_train=n,
            n_test=cfg.n_test,
        )
    )
    prior = HyperPrior()
    fit_seed = cfg.seed + 1000 * model_idx
    gp0 = gp_fit(gen.train, 0, prior, seed=fit_seed, n_restarts=cfg.gp_restarts)
    gp1 = gp_fit(gen.train, 1, prior, seed=fit_seed + 1, n_restarts=cfg.gp_restarts)

    m0, v0 = gp0.predict_batch(gen.test_units)
    m1, v1 = gp1.predict_batch(gen.test_units)
    tau_mean = m1 - m0
    tau_var = v1 + v0
    gammas = [
        estimate_type_s_gaussian(GaussianPredictive(m, v)).gamma_hat
        for m, v in zip(tau_mean, tau_var)
    ]
    decisions = (tau_mean > 0).astype(int)
    observed = observed_type_s(decisions, np.sign(gen.true_effects))
    return {
        "outer": outer,
        "model": model_idx,
        "n_train": n,
        "propensity": propensity,
        "mmd": _arm_imbalance(gen.train, cfg.mmd_lengthscale),
        "gamma_hat": float(np.mean(gammas)),
        "gamma_observed": observed,
        "n_zero_sign": int(np.sum(gen.true_effects == 0)),
    }


def _pearson(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 3 or np.std(x) == 0 or np.std(y) == 0:
        return float("nan"), float("nan")
    r, p = stats.pearsonr(x, y)
    return float(r), float(p)


def run_correlation(cfg: ExperimentConfig) -> dict:
    """Fit two GPs per generated training set and correlate imbalance with
    the estimated and observed Type S error rates."""
    rows, failures = [], []
    cells = [
        (outer, m, p, n)
        for outer in range(cfg.outer_repetitions)
        for m in range(cfg.n_models)
        for p in cfg.propensities
        for n in cfg.n_train
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_correlation_cell, cfg, *cell) for cell in cells]
            for cell, fut in zip(cells, futures):
                try:
                    rows.append(fut.result())
                except FitError as exc:
                    failures.append({"cell": cell, "error": str(exc)})
    else:
        for cell in cells:
            try:
                rows.append(_correlation_cell(cfg, *cell))
            except FitError as exc:
                failures.append({"cell": list(cell), "error": str(exc)})
    rows.sort(key=lambda r: (r["outer"], r["model"], r["n_train"], r["propensity"]))

    def corr_block(subset):
        gh = [r["gamma_hat"] for r in subset]
        go = [r["gamma_observed"] for r in subset]
        im = [r["mmd"] for r in subset]
        out = {}
        for name, (a, b) in {
            "gamma_hat_vs_observed": (gh, go),
            "mmd_vs_observed": (im, go),
            "mmd_vs_gamma_hat": (im, gh),
        }.items():
            r, p = _pearson(a, b)
            out[name] = {"r": r, "p": p}
        return out

    summary = {"overall": corr_block(rows), "per_n_train": {}}
    for n in cfg.n_train:
        summary["per_n_train"][str(n)] = corr_block([r for r in rows if r["n_train"] == n])
    return {"rows": rows, "summary": summary, "failures": failures}


# ---------------------------------------------------------------------------
# Elicitation experiments
# ---------------------------------------------------------------------------

def _criterion_seed(cfg_seed: int, rep: int, target_idx: int, crit: str, step: int) -> int:
    # crc32 keeps the derived seed stable across processes (str hash is not).
    return int(
        np.random.default_rng(
            [cfg_seed, rep, target_idx, zlib.crc32(crit.encode()), step]
        ).integers(2**31)
    )


def _state_imbalance(state, lengthscale: float) -> float:
    data = state.factual
    if len(state.elicited):
        data = data.concat(state.elicited)
    return _arm_imbalance(data, lengthscale)


def _binary_setup(cfg: ExperimentConfig, rep: int, comparative: bool):
    gen = gen_bernoulli_rbf(BernoulliRbfConfig(seed=cfg.seed + rep))
    model = LogisticOutcomeModel.fit(
        gen.train,
        gen.config.basis(),
        prior_variance=cfg.logistic_prior_variance,
        noise_scale=cfg.comparison_noise_scale,
        seed=cfg.seed + rep,
    )
    orient = DecisionOrientation.LOWER_IS_BETTER
    if comparative:
        oracle = OracleConfig(
            OracleKind.COMPARATIVE_FLIP, flip_probability=cfg.flip_probability, seed=cfg.seed + rep
        )
    else:
        oracle = OracleConfig(OracleKind.POINT_BERNOULLI, seed=cfg.seed + rep)
    targets = gen.test_units
    truth = gen.oracle_truth

    def correct(rec: int, target_idx: int) -> int:
        t0, t1 = gen.true_theta[target_idx]
        best = 1 if t1 < t0 else 0
        return int(rec == best)

    return gen.train, model, orient, oracle, truth, targets, correct


def _continuous_setup(cfg: ExperimentConfig, rep: int):
    rng = np.random.default_rng([cfg.seed, rep, 99])
    if cfg.tabular_path is not None:
        if cfg.tabular_covariates is None:
            raise ValueError("tabular_covariates must be set with tabular_path")
        schema = TabularSchema(
            covariates=cfg.tabular_covariates, mu0=cfg.tabular_mu0, mu1=cfg.tabular_mu1
        )
        full, truth_table = load_tabular(cfg.tabular_path, schema)
        if truth_table is None:
            raise ValueError("continuous runs need mu0/mu1 truth columns")
        n_tgt = cfg.n_targets or 1
        target_rows = rng.choice(len(full), size=n_tgt, replace=False)
        train_pool = np.setdiff1d(np.arange(len(full)), target_rows)
        take = min(cfg.subsample_train or cfg.continuous_n_train, train_pool.size)
        train_rows = rng.choice(train_pool, size=take, replace=False)
        train = Dataset(
            full.units[train_rows], full.actions[train_rows],
            full.outcomes[train_rows], full.source[train_rows],
        )
        targets = full.units[target_rows]
        mu = truth_table[train_rows]
        truth = lambda q: float(mu[q.unit_index, q.action])  # noqa: E731
        target_truth = truth_table[target_rows]

        def correct(rec: int, target_idx: int) -> int:
            best = 1 if target_truth[target_idx, 1] > target_truth[target_idx, 0] else 0
            return int(rec == best)

    else:
        gen = gen_sigmoid_continuous(
            SigmoidGenConfig(
                propensity=cfg.propensities[0] if cfg.propensities else 0.1,
                noise_sd=cfg.noise_sd,
                seed=cfg.seed + rep,
                n_train=cfg.continuous_n_train,
                n_test=max(cfg.n_targets or 3, 3),
            )
        )
        train = gen.train
        targets = gen.test_units[: (cfg.n_targets or 3)]
        truth = gen.oracle_truth
        effects = gen.true_effects

        def correct(rec: int, target_idx: int) -> int:
            best = 1 if effects[target_idx] > 0 else 0
            return int(rec == best)

    model = GPOutcomeModel.fit(
        train,
        HyperPrior(),
        seed=cfg.seed + rep,
        n_restarts=cfg.gp_restarts,
        reoptimize_on_refit=cfg.reoptimize_hyperparams,
    )
    noise_sd = cfg.oracle_noise_sd if cfg.oracle_noise_sd is not None else cfg.noise_sd
    oracle = OracleConfig(OracleKind.POINT_NOISY, point_noise_sd=noise_sd, seed=cfg.seed + rep)
    return train, model, DecisionOrientation.HIGHER_IS_BETTER, oracle, truth, targets, correct


def _answer_query(state, query, oracle: OracleConfig, truth, orient: DecisionOrientation):
    x = state.unit(query.unit_index)
    if query.is_comparative:
        bit = answer_comparison(truth, ComparisonQuery(query.unit_index, x), oracle, orient)
        # The model's convention is c = 1 iff theta(x,1) > theta(x,0); the
        # oracle's bit means "arm 1 is better", which flips under LOWER.
        return bit if orient is DecisionOrientation.HIGHER_IS_BETTER else 1 - bit
    return answer_point(truth, PointQuery(query.unit_index, x, query.action), oracle)


def _al_repetition(cfg: ExperimentConfig, rep: int) -> tuple[list[dict], list[dict]]:
    comparative = cfg.kind == "al_comparative"
    if cfg.kind in ("al_binary", "al_comparative"):
        train, model, orient, oracle, truth, targets, correct = _binary_setup(cfg, rep, comparative)
    else:
        train, model, orient, oracle, truth, targets, correct = _continuous_setup(cfg, rep)

    knn = KnnConfig(cfg.knn_k) if cfg.knn_k is not None else None
    kind = "comparative" if comparative else "counterfactual"
    rows, timings = [], []
    for t_idx in range(targets.shape[0]):
        state0 = initial_state(
            train, targets[t_idx], model, orient, query_kind=kind, base_seed=cfg.seed + rep
        )
        for crit_name in cfg.criteria:
            crit = Criterion(crit_name)
            state = state0
            started = time.perf_counter()
            for step in range(cfg.n_queries + 1):
                est = state.model.type_s_at(state.target, orient)
                rows.append(
                    {
                        "repetition": rep,
                        "target": t_idx,
                        "criterion": crit_name,
                        "step": step,
                        "mmd": _state_imbalance(state, cfg.mmd_lengthscale),
                        "gamma_hat": est.gamma_hat,
                        "decision": est.recommended_action,
                        "correct": correct(est.recommended_action, t_idx),
                    }
                )
                if step == cfg.n_queries or not state.pool:
                    continue
                sel = select_query(
                    state, crit, knn=knn, seed=_criterion_seed(cfg.seed, rep, t_idx, crit_name, step)
                )
                answer = _answer_query(state, sel.selected, oracle, truth, orient)
                state = apply_answer(state, sel.selected, answer)
            timings.append(
                {
                    "repetition": rep,
                    "target": t_idx,
                    "criterion": crit_name,
                    "seconds": time.perf_counter() - started,
                }
            )
    return rows, timings


def run_al(cfg: ExperimentConfig) -> dict:
    """Run the elicitation loop for every repetition, target, and criterion.

    Criteria share the step-0 model within a repetition (paired seeds), so
    their baselines are identical by construction.
    """
    rows, timings, failures = [], [], []
    reps = list(range(cfg.repetitions))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {rep: pool.submit(_al_repetition, cfg, rep) for rep in reps}
            for rep, fut in futures.items():
                try:
                    r, t = fut.result()
                    rows.extend(r)
                    timings.extend(t)
                except FitError as exc:
                    failures.append({"repetition": rep, "error": str(exc)})
    else:
        for rep in reps:
            try:
                r, t = _al_repetition(cfg, rep)
                rows.extend(r)
                timings.extend(t)
            except FitError as exc:
                failures.append({"repetition": rep, "error": str(exc)})
    rows.sort(key=lambda r: (r["repetition"], r["target"], r["criterion"], r["step"]))

    summaries = {}
    for crit in cfg.criteria:
        summaries[crit] = {}
        for step in range(cfg.n_queries + 1):
            sub = [r for r in rows if r["criterion"] == crit and r["step"] == step]
            if not sub:
                continue
            block = {}
            for metric in ("correct", "gamma_hat", "mmd"):
                values = [r[metric] for r in sub if np.isfinite(r[metric])]
                if values:
                    bs = bootstrap_ci(values, cfg.bootstrap_resamples, seed=cfg.seed)
                    block[metric] = dataclasses.asdict(bs)
            summaries[crit][str(step)] = block
    return {"rows": rows, "summaries": summaries, "failures": failures, "timings": timings}


# ---------------------------------------------------------------------------
# Result emission
# ---------------------------------------------------------------------------

def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_rows_csv(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    columns = list(rows[0].keys())
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(row[c]) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_outputs(out_dir, result: dict, cfg: ExperimentConfig) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(out / "results.csv", result["rows"])
    summary = {k: v for k, v in result.items() if k not in ("rows", "timings")}
    summary["config"] = dataclasses.asdict(cfg)
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if result.get("timings"):
        write_rows_csv(out / "timings.csv", result["timings"])
