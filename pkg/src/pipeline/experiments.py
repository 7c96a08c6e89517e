from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.geometry.covering import (
    binomial_estimate,
    build_instance,
    covering_replication,
    fibonacci_sphere,
    gap_count_prediction,
    janson_functional,
    rayleigh_moments,
    sample_sf_dm_coupled,
    verify_appendix_hypotheses,
)
from src.geometry.errors import ConfigError
from src.geometry.exactlaw import (
    ModelParams,
    Regime,
    RegimeKind,
    hypothesis_status,
    inverse_scale_prediction,
    janson_constants,
    log_sf_cdf,
    log_sf_cdf_many,
    origin_probability,
    predict_regime_value,
    radius_vector_prediction,
    sample_sf,
    sf_inverse_cdf,
    solve_a_tau,
    solve_r_tau,
    volume_ratio_prediction,
)
from src.geometry.polysim import (
    origin_in_hull,
    sample_poisson_ball,
    sf_dm_via_projection,
    support_value,
    volume_ratio_replication,
)
from src.geometry.rng import replication_rng

from .config import ExperimentConfig, IntensitySpec
from .replication import run_replications
from .statistics import (
    calibrated_statistic_md,
    gumbel_cdf,
    gumbel_statistic_1d,
    gumbel_statistic_md,
    ks_distance,
)

logger = logging.getLogger(__name__)

DEFAULT_CROSSCHECK_LEVELS = (0.2, 0.35, 0.5)
COUPLED_TAU_MARGIN = 3.0
_OPEN_UNIT = (np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))

Row = Dict[str, Any]


@dataclass
class ExperimentResult:
    config: Dict[str, Any]
    rows: pd.DataFrame
    summary: Dict[str, Any]
    config_hash: str = ""
    version: str = ""
    wall_clock_seconds: float = 0.0
    csv_path: Optional[Path] = None
    meta_path: Optional[Path] = None


def _context(params: ModelParams, regime: Regime) -> Row:
    return {
        "d": params.d,
        "L": params.L,
        "regime": regime.kind.value,
        "regime_x": regime.x if regime.x is not None else math.nan,
        "h_flag": params.satisfies_h,
    }


def _exact_cdf(params: ModelParams) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: np.exp(log_sf_cdf_many(params, np.clip(r, 0.0, 1.0)))


class ExperimentRunner:
    """Runs one experiment kind and returns its CSV rows plus a summary."""

    def __init__(self, config: ExperimentConfig, workers: int = 1) -> None:
        self.config = config
        self.workers = config.workers or workers

    def run(self) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        handler = getattr(self, "_run_" + self.config.kind.replace("-", "_"))
        rows, summary = handler()
        logger.info("%s produced %d rows", self.config.kind, len(rows))
        return pd.DataFrame(rows), summary

    # -- helpers -----------------------------------------------------------

    def _intensity(self) -> Tuple[IntensitySpec, Regime]:
        spec = self.config.require_intensity()
        return spec, spec.resolve_regime()

    def _replicate(self, task: Callable[[int], Any]) -> List[Any]:
        return run_replications(task, self.config.reps, self.workers)

    def _levels(self) -> List[float]:
        return list(self.config.r_grid or DEFAULT_CROSSCHECK_LEVELS)

    def _exact_samples(self, params: ModelParams, stream_index: int) -> np.ndarray:
        rng = replication_rng(self.config.seed, stream_index)
        return sample_sf(params, self.config.reps, rng)

    # -- exact law ---------------------------------------------------------

    def _run_sf_cdf(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        grid = self.config.r_grid or np.linspace(0.0, 1.0, self.config.r_points).tolist()
        rows: List[Row] = []
        for d in self.config.dimensions:
            params = spec.params(d)
            context = _context(params, regime)
            for r in grid:
                rows.append({**context, "row_type": "data", "r": float(r), "log_cdf": log_sf_cdf(params, float(r))})
        return rows, {"levels": len(grid)}

    def _run_sf_sample(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        rows: List[Row] = []
        summary: Dict[str, Any] = {}
        for position, d in enumerate(self.config.dimensions):
            params = spec.params(d)
            context = _context(params, regime)
            samples = self._exact_samples(params, position)
            rows.extend(
                {**context, "row_type": "data", "index": index, "h": float(value)}
                for index, value in enumerate(samples)
            )
            median = float(np.median(samples))
            prediction = predict_regime_value(params, regime)
            ks = ks_distance(samples, _exact_cdf(params))
            rows.append({**context, "row_type": "summary", "median": median, "prediction": prediction, "ks_exact": ks})
            summary[str(d)] = {"median": median, "prediction": prediction, "ks_exact": ks}
        return rows, summary

    def _run_gumbel_1d(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        rows: List[Row] = []
        summary: Dict[str, Any] = {}
        for position, d in enumerate(self.config.dimensions):
            params = spec.params(d)
            context = _context(params, regime)
            samples = np.clip(self._exact_samples(params, position), *_OPEN_UNIT)
            statistics = np.array([gumbel_statistic_1d(params, regime, float(h)) for h in samples])
            rows.extend(
                {**context, "row_type": "data", "index": index, "h": float(h), "statistic": float(t)}
                for index, (h, t) in enumerate(zip(samples, statistics))
            )
            ks = ks_distance(statistics, gumbel_cdf)
            rows.append({**context, "row_type": "summary", "ks_gumbel": ks})
            summary[str(d)] = {"ks_gumbel": ks}
        return rows, summary

    def _run_regimes_table(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        rows: List[Row] = []
        for d in self.config.dimensions:
            params = spec.params(d)
            prediction = predict_regime_value(params, regime)
            median = sf_inverse_cdf(params, 0.5)
            if regime.kind is RegimeKind.SUPERCRITICAL:
                relative_error = abs((1.0 - median) - (1.0 - prediction)) / (1.0 - prediction)
            else:
                relative_error = abs(median - prediction) / prediction
            rho_value, rho_kind = radius_vector_prediction(params, regime)
            volume_value, volume_kind = volume_ratio_prediction(params, spec.volume_x)
            status = hypothesis_status(params, regime)
            rows.append(
                {
                    **_context(params, regime),
                    "row_type": "data",
                    "prediction": prediction,
                    "exact_median": median,
                    "relative_error": relative_error,
                    "radius_vector_prediction": rho_value if rho_value is not None else math.nan,
                    "radius_vector_kind": rho_kind,
                    "volume_ratio_prediction": volume_value,
                    "volume_ratio_kind": volume_kind,
                    "origin_probability": origin_probability(params),
                    "regime_hypothesis": status["regime"],
                    "r_tau0": solve_r_tau(params, 0.0) if params.satisfies_h else math.nan,
                }
            )
        return rows, {"regime": regime.kind.value, "regime_x": regime.x}

    # -- direct simulation -------------------------------------------------

    def _simulate_clouds(self, params: ModelParams, with_origin: bool = False) -> List[Dict[str, Any]]:
        direction = np.zeros(params.d)
        direction[0] = 1.0
        seed = self.config.seed

        def task(index: int) -> Dict[str, Any]:
            cloud = sample_poisson_ball(params.d, params.L, replication_rng(seed, index))
            record = {
                "support_value": support_value(cloud, direction),
                "sf_dm": sf_dm_via_projection(cloud),
            }
            if with_origin:
                record["origin_in_hull"] = origin_in_hull(cloud)
            return record

        return self._replicate(task)

    def _run_polysim_crosscheck(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        rows: List[Row] = []
        summary: Dict[str, Any] = {}
        for d in self.config.dimensions:
            params = spec.params(d)
            context = _context(params, regime)
            records = self._simulate_clouds(params, with_origin=True)
            rows.extend({**context, "row_type": "data", "index": i, **record} for i, record in enumerate(records))
            support = np.clip([record["support_value"] for record in records], 0.0, 1.0)
            sf_dm = np.array([record["sf_dm"] for record in records])
            for r in self._levels():
                hits = int(np.sum(sf_dm >= r))
                estimate = binomial_estimate(hits, len(records))
                rows.append(
                    {
                        **context,
                        "row_type": "level",
                        "r": r,
                        "p_sf_dm_at_least": estimate.probability,
                        "stderr": estimate.stderr,
                        "empirical_sf_cdf": float(np.mean(support <= r)),
                        "exact_sf_cdf": math.exp(log_sf_cdf(params, r)),
                    }
                )
            origin_hits = sum(bool(record["origin_in_hull"]) for record in records)
            origin = binomial_estimate(origin_hits, len(records))
            ks = ks_distance(support, _exact_cdf(params))
            exact_origin = origin_probability(params)
            rows.append(
                {
                    **context,
                    "row_type": "summary",
                    "ks_exact": ks,
                    "origin_frequency": origin.probability,
                    "origin_stderr": origin.stderr,
                    "origin_probability": exact_origin,
                }
            )
            summary[str(d)] = {"ks_exact": ks, "origin_frequency": origin.probability, "origin_probability": exact_origin}
        return rows, summary

    def _run_covering_crosscheck(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        if self.config.m != 2:
            raise ConfigError("m: covering-crosscheck compares against the planar projection, m must be 2")
        rows: List[Row] = []
        summary: Dict[str, Any] = {}
        seed = self.config.seed
        for d in self.config.dimensions:
            params = spec.params(d)
            context = _context(params, regime)
            sf_dm = np.array([record["sf_dm"] for record in self._simulate_clouds(params)])
            for r in self._levels():
                polysim = binomial_estimate(int(np.sum(sf_dm >= r)), sf_dm.shape[0])
                row: Row = {
                    **context,
                    "row_type": "level",
                    "r": r,
                    "p_polysim": polysim.probability,
                    "stderr_polysim": polysim.stderr,
                }
                for stream, mode in ((1, "point-count"), (2, "sphere-measure")):
                    instance = build_instance(params, 2, r, total_intensity=mode)
                    hits = self._replicate(lambda i: covering_replication(instance, seed, i, stream=stream))
                    estimate = binomial_estimate(sum(hits), len(hits))
                    label = mode.replace("-", "_")
                    row[f"p_cover_{label}"] = estimate.probability
                    row[f"stderr_{label}"] = estimate.stderr
                    row[f"gap_count_{label}"] = gap_count_prediction(instance)
                combined = math.hypot(polysim.stderr, row["stderr_point_count"])
                difference = polysim.probability - row["p_cover_point_count"]
                row["z_point_count"] = difference / combined if combined > 0.0 else (0.0 if difference == 0.0 else math.inf)
                rows.append(row)
                summary[f"{d}:{r}"] = {"p_polysim": polysim.probability, "p_cover_point_count": row["p_cover_point_count"]}
        return rows, summary

    def _run_volume_ratio(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        rows: List[Row] = []
        summary: Dict[str, Any] = {}
        for d in self.config.dimensions:
            params = spec.params(d)
            per_cloud = np.array(
                self._replicate(
                    lambda i: volume_ratio_replication(d, params.L, self.config.n_dirs, self.config.seed, i)
                )
            )
            mean = float(per_cloud.mean())
            stderr = float(per_cloud.std(ddof=1) / math.sqrt(per_cloud.shape[0])) if per_cloud.shape[0] > 1 else math.nan
            prediction, kind = volume_ratio_prediction(params, spec.volume_x)
            rows.append(
                {
                    **_context(params, regime),
                    "row_type": "data",
                    "volume_ratio": mean,
                    "stderr": stderr,
                    "prediction": prediction,
                    "prediction_kind": kind,
                    "n_dirs": self.config.n_dirs,
                }
            )
            summary[str(d)] = {"volume_ratio": mean, "stderr": stderr, "prediction": prediction}
        return rows, summary

    # -- covering and the multi-directional limit --------------------------

    def _run_gumbel_md(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        m = self.config.m
        constants = janson_constants(m, self.config.alpha_form)
        seed = self.config.seed
        grid = fibonacci_sphere(self.config.grid_points) if m == 3 else None
        rows: List[Row] = []
        summary: Dict[str, Any] = {}
        for d in self.config.dimensions:
            params = spec.params(d)
            context = _context(params, regime)
            for tau in self.config.tau_grid:
                scale = solve_a_tau(params, m, tau, constants)
                instance = build_instance(params, m, scale.r, total_intensity=self.config.total_intensity)
                hits = self._replicate(lambda i: covering_replication(instance, seed, i, grid))
                estimate = binomial_estimate(sum(hits), len(hits), approximate=m == 3)
                rows.append(
                    {
                        **context,
                        "row_type": "tau",
                        "tau": tau,
                        "a": scale.a,
                        "r": scale.r,
                        "covering_probability": estimate.probability,
                        "stderr": estimate.stderr,
                        "approximate": estimate.approximate,
                        "gumbel_limit": float(gumbel_cdf(tau)),
                        "gap_count": gap_count_prediction(instance) if m == 2 else math.nan,
                        "janson_J": janson_functional(
                            instance.log_Lambda, m, scale.a, rayleigh_moments(m), alpha=constants.alpha
                        ),
                        "statistic_at_r": gumbel_statistic_md(params, m, scale.r, constants),
                    }
                )
            if m != 2:
                logger.info("coupled h_{d,m} sampling is exact only for m = 2; skipped for m=%d", m)
                continue
            # r(τ) decreases in τ, so the lowest level needed comes from the largest τ
            r_min = solve_a_tau(params, m, max(self.config.tau_grid) + COUPLED_TAU_MARGIN, constants).r
            draws = np.array(
                self._replicate(
                    lambda i: sample_sf_dm_coupled(
                        params, r_min, replication_rng(seed, i, 3), self.config.total_intensity
                    )
                )
            )
            statistics = np.array([gumbel_statistic_md(params, m, float(h), constants) for h in draws])
            calibrated = np.array([calibrated_statistic_md(params, m, float(h), constants) for h in draws])
            rows.extend(
                {
                    **context,
                    "row_type": "sample",
                    "index": i,
                    "sf_dm": float(h),
                    "statistic": float(t),
                    "statistic_calibrated": float(c),
                }
                for i, (h, t, c) in enumerate(zip(draws, statistics, calibrated))
            )
            ks = ks_distance(statistics, gumbel_cdf)
            ks_calibrated = ks_distance(calibrated, gumbel_cdf)
            censored = float(np.mean(draws <= r_min))
            rows.append(
                {
                    **context,
                    "row_type": "summary",
                    "ks_gumbel": ks,
                    "ks_gumbel_calibrated": ks_calibrated,
                    "censored_fraction": censored,
                }
            )
            summary[str(d)] = {"ks_gumbel": ks, "ks_gumbel_calibrated": ks_calibrated, "censored_fraction": censored}
        return rows, summary

    def _run_appendix_verify(self) -> Tuple[List[Row], Dict[str, Any]]:
        spec, regime = self._intensity()
        m = self.config.m
        constants = janson_constants(m, self.config.alpha_form)
        rows: List[Row] = []
        scaled: List[float] = []
        for d in self.config.dimensions:
            params = spec.params(d)
            context = _context(params, regime)
            r = self.config.r_grid[0] if self.config.r_grid else solve_a_tau(params, m, 0.0, constants).r
            report = verify_appendix_hypotheses(params, m, r, self.config.w, self.config.grid_points)
            scaled.append(report.w1_scaled)
            rows.append(
                {
                    **context,
                    "row_type": "appendix",
                    "r": r,
                    "a": report.a,
                    "w": report.w,
                    "sup_ratio": report.sup_ratio,
                    "ratio_ok": report.ratio_ok,
                    "w1": report.w1,
                    "w1_truncation": report.w1_truncation,
                    "w1_scaled": report.w1_scaled,
                    "decay": report.decay,
                    "decay_gamma": report.decay_gamma,
                }
            )
            predicted_inverse = inverse_scale_prediction(params)
            for tau in self.config.tau_grid:
                scale = solve_a_tau(params, m, tau, constants)
                instance = build_instance(params, m, scale.r)
                J = janson_functional(instance.log_Lambda, m, scale.a, rayleigh_moments(m), alpha=constants.alpha)
                rows.append(
                    {
                        **context,
                        "row_type": "janson",
                        "tau": tau,
                        "a": scale.a,
                        "r": scale.r,
                        "janson_J": J,
                        "J_minus_tau": J - tau,
                        "inverse_a": 1.0 / scale.a,
                        "inverse_a_prediction": predicted_inverse,
                        "inverse_a_relative_error": abs(1.0 / scale.a - predicted_inverse) * scale.a,
                    }
                )
        spread = max(scaled) / min(scaled) if min(scaled) > 0.0 else math.inf
        return rows, {"w1_scaled_spread": spread}
