"""End-to-end pipeline and pilot-length / SNR sweeps."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import PilotAssignment, fcc_pa, ncc_pa, p1_objective, pair_interference, random_pa
from .channel import ChannelSet, synthesize_channels
from .charting import ChartCoordinates, chart_quality, dissimilarity, isomap_embed
from .codebook import build_dft_codebook, build_polar_codebook
from .evaluation import closed_form_mse, sum_rate
from .scenario import ScenarioConfig, UtGeometry, place_uts
from .spectrum import FeatureSet, farfield_spectrum, polar_projection_spectrum, somp_spectrum

log = logging.getLogger(__name__)

ALGORITHMS = ("ncc", "fcc", "random")
RESULT_COLUMNS = [
    "seed", "tau", "snr_db", "algorithm", "feature_method", "sum_mse", "sum_rate",
    "p1_objective", "chart_spearman", "status", "reason",
]


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labels (independent of ``PYTHONHASHSEED``)."""
    text = "|".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


@dataclass
class ScenarioRun:
    """Everything computed for one scenario realization, shared by all sweep cells."""

    config: ScenarioConfig
    geometry: UtGeometry
    channels: ChannelSet
    features: FeatureSet
    farfield: np.ndarray
    near_dis: np.ndarray
    far_dis: np.ndarray
    near_chart: ChartCoordinates
    far_chart: ChartCoordinates
    _pairwise: np.ndarray | None = field(default=None, repr=False)

    @property
    def pairwise(self) -> np.ndarray:
        if self._pairwise is None:
            self._pairwise = pair_interference(self.channels.covariances)
        return self._pairwise


def run_scenario(config: ScenarioConfig, seed: int, feature_method: str | None = None) -> ScenarioRun:
    """Scene, channels, spectra and both charts for one seed."""
    method = feature_method or config.feature_method
    rng = np.random.default_rng(derive_seed("scenario", config.rng_seed, seed))
    geom = place_uts(config, rng)
    channels = synthesize_channels(geom, config, rng)
    cb = build_polar_codebook(config)
    if method == "projection":
        features = polar_projection_spectrum(channels, cb)
    elif method == "somp":
        features = somp_spectrum(channels, cb, min(config.paths_detected, cb.atoms.shape[1]))
    else:
        raise ValueError(f"unknown feature method {method!r}")
    far = farfield_spectrum(channels, build_dft_codebook(config.num_antennas))
    near_dis = dissimilarity(features.polar_vectors())
    far_dis = dissimilarity(far)
    dim, kn = config.chart_dimension, config.k_neighbors
    return ScenarioRun(
        config=config, geometry=geom, channels=channels, features=features, farfield=far,
        near_dis=near_dis, far_dis=far_dis,
        near_chart=isomap_embed(near_dis, dim, kn),
        far_chart=isomap_embed(far_dis, dim, kn),
    )


def allocate(run: ScenarioRun, algorithm: str, tau: int, rng: np.random.Generator) -> PilotAssignment:
    if algorithm == "ncc":
        return ncc_pa(run.near_chart, tau)
    if algorithm == "fcc":
        return fcc_pa(run.far_chart, tau)
    if algorithm == "random":
        return random_pa(run.config.num_uts, tau, rng)
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass
class ExperimentSpec:
    config: ScenarioConfig
    taus: list
    snrs_db: list
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    num_seeds: int = 1
    feature_method: str | None = None
    compute_rate: bool = True
    out_path: str | None = None
    chart_dir: str | None = None

    def validate(self):
        if not self.taus or not self.snrs_db or not self.algorithms:
            raise ValueError("sweep lists must be non-empty")
        for tau in self.taus:
            if not (2 <= tau <= self.config.num_uts):
                raise ValueError(f"tau {tau} outside [2, {self.config.num_uts}]")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be >= 1")

    @property
    def seeds(self) -> list:
        return list(range(self.num_seeds))


def evaluate_cell(run: ScenarioRun, seed: int, tau: int, snr_db: float, algorithm: str,
                  compute_rate: bool = True) -> dict:
    cell_rng = np.random.default_rng(derive_seed("cell", run.config.rng_seed, seed, tau, float(snr_db), algorithm))
    zeta = db_to_linear(snr_db)
    assignment = allocate(run, algorithm, tau, cell_rng)
    assignment.validate(run.config.num_uts)
    covs = run.channels.covariances
    mse = closed_form_mse(assignment, covs, zeta, tau)
    rate = (sum_rate(assignment, run.channels, covs, zeta, tau, run.config.num_rate_trials, cell_rng)
            if compute_rate else math.nan)
    spearman = None
    if algorithm in ("ncc", "fcc"):
        chart = run.near_chart if algorithm == "ncc" else run.far_chart
        spearman = chart_quality(chart, run.geometry.positions()).spearman
    return {
        "sum_mse": mse.sum_mse,
        "sum_rate": rate,
        "p1_objective": p1_objective(assignment, covs, pairwise=run.pairwise),
        "chart_spearman": math.nan if spearman is None else spearman,
    }


def run_experiment(spec: ExperimentSpec, chart_callback=None) -> list:
    """Run every (seed, tau, snr, algorithm) cell; returns data rows then aggregate rows.

    A failing cell yields a row with ``status = failed`` and the error text;
    the sweep continues.
    """
    spec.validate()
    method = spec.feature_method or spec.config.feature_method
    rows = []
    for seed in spec.seeds:
        try:
            run = run_scenario(spec.config, seed, method)
        except Exception as exc:  # noqa: BLE001 - recorded in the output table
            log.warning("seed %d failed: %s", seed, exc)
            run = None
            failure = f"{type(exc).__name__}: {exc}"
        if run is not None and chart_callback is not None:
            chart_callback(seed, run)
        for tau in spec.taus:
            for snr_db in spec.snrs_db:
                for algo in spec.algorithms:
                    row = {"seed": seed, "tau": tau, "snr_db": float(snr_db), "algorithm": algo,
                           "feature_method": method}
                    if run is None:
                        row.update(status="failed", reason=failure)
                    else:
                        try:
                            row.update(evaluate_cell(run, seed, tau, snr_db, algo, spec.compute_rate))
                            row.update(status="ok", reason="")
                        except Exception as exc:  # noqa: BLE001
                            row.update(status="failed", reason=f"{type(exc).__name__}: {exc}")
                    rows.append(row)
    rows.sort(key=lambda r: (r["seed"], r["tau"], r["snr_db"], ALGORITHMS.index(r["algorithm"])))
    return rows + aggregate(rows)


def aggregate(rows: list) -> list:
    """Mean and standard-error rows per (tau, snr, algorithm) over successful seeds."""
    metrics = ("sum_mse", "sum_rate", "p1_objective", "chart_spearman")
    keys = sorted({(r["tau"], r["snr_db"], r["algorithm"], r["feature_method"]) for r in rows},
                  key=lambda k: (k[0], k[1], ALGORITHMS.index(k[2])))
    out = []
    for tau, snr_db, algo, method in keys:
        ok = [r for r in rows if (r["tau"], r["snr_db"], r["algorithm"]) == (tau, snr_db, algo)
              and r.get("status") == "ok"]
        mean_row = {"seed": "mean", "tau": tau, "snr_db": snr_db, "algorithm": algo,
                    "feature_method": method, "status": "aggregate", "reason": f"n={len(ok)}"}
        se_row = dict(mean_row, seed="stderr")
        for m in metrics:
            vals = np.array([r.get(m, math.nan) for r in ok], dtype=float)
            vals = vals[np.isfinite(vals)]
            mean_row[m] = float(vals.mean()) if vals.size else math.nan
            se_row[m] = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
        out += [mean_row, se_row]
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in RESULT_COLUMNS])
    return buf.getvalue()


def export_chart(coords, geometry: UtGeometry, path):
    """Write ``ut_id,true_x,true_y,c_1,...,c_D`` for every UT."""
    C = coords.coords if isinstance(coords, ChartCoordinates) else np.asarray(coords, dtype=float)
    P = geometry.positions()
    D, K = C.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ut_id", "true_x", "true_y"] + [f"c_{i}" for i in range(1, D + 1)])
        for k in range(K):
            w.writerow([k, repr(float(P[0, k])), repr(float(P[1, k]))]
                       + [repr(float(C[i, k])) for i in range(D)])


def read_chart(path):
    """Inverse of :func:`export_chart`: returns ``(positions 2xK, coords DxK)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row[1:]] for row in reader])
    D = len(header) - 3
    return data[:, :2].T.copy(), data[:, 2:2 + D].T.copy()
