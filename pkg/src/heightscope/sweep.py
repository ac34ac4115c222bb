"""Monte Carlo sweep execution, deterministic seeding and result emission."""

from __future__ import annotations

import concurrent.futures
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, config_from_dict
from .dictionaries import azimuth_dictionary_case_i, \
    azimuth_dictionary_case_ii, azimuth_dictionary_case_iii, \
    height_dictionary, normalize_columns, normalize_signal
from .geometry import AntennaLayout, CoherentAperture, preset_layout, \
    combine_layouts
from .pipeline import Declaration, EnvelopeBaseline, HeightPipeline, \
    TrialResult, aggregate_metrics, estimate_azimuth_interval, \
    estimate_height_interval, score_trial
from .synthesis import Scene, make_trajectory, random_scene, \
    synthesize_snapshot, trial_rng

CSV_HEADER = "snr_db,method,pd,far,de,trials,wall_time_s"
_CAL_STREAM = 999983  # rng stream tag for threshold calibration trials
SPARSE_METHODS = ("gs", "sbys")


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    method: str
    pd: float
    far: float
    de: float
    trials: int
    wall_time_s: float


def _round5(x: float) -> float:
    return float(f"{x:.5f}")


class SweepContext:
    """Per-process state for a sweep: layout, grids and cached dictionaries."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        layouts = [preset_layout(name) for name in config.layouts]
        if len(layouts) == 1:
            self.layout = layouts[0]
        else:
            self.layout = combine_layouts(layouts, name="+".join(
                config.layouts))
        self.reference = self.layout.reference_point()
        t = config.trajectory
        self.trajectory = make_trajectory(t["start"], t["end"],
                                          t["interval"], t["step"])
        self.azimuths = config.azimuth_values()
        self.heights = config.height_values()
        self.rho_grid = np.asarray(config.rho_grid, dtype=complex)
        self._height_pipeline = None
        self._azimuth_dicts = None
        self._height_dict_cache = {}
        self._baselines = {}

    # -- lazily built stages -------------------------------------------------

    @property
    def height_pipeline(self) -> HeightPipeline:
        """Fixed-azimuth height stage (1-D protocol and gamma calibration)."""
        if self._height_pipeline is None:
            cfg = self.config
            az = [0.0] if cfg.skip_azimuth else [0.0]
            self._height_pipeline = HeightPipeline(
                self.layout, self.trajectory, az, self.heights,
                self.rho_grid, cfg.wavelength,
                labels_option=cfg.labels_option, sparsity=cfg.sparsity,
                pooling=cfg.pooling, range_weighting=cfg.range_weighting)
        return self._height_pipeline

    def baseline(self, method: str) -> EnvelopeBaseline:
        if method not in self._baselines:
            cfg = self.config
            gain = cfg.baseline_snr_gain_db
            if gain == "auto":
                gain = 10.0 * math.log10(self.layout.n_virtual)
            self._baselines[method] = EnvelopeBaseline(
                self.trajectory, cfg.wavelength,
                antenna_height=cfg.baseline_antenna_height, method=method,
                snr_gain_db=float(gain), music_subspace=cfg.music_subspace,
                burg_order=cfg.burg_order)
        return self._baselines[method]

    def azimuth_dicts(self):
        """Per-point, per-aperture normalized azimuth-stage dictionaries."""
        if self._azimuth_dicts is None:
            self._azimuth_dicts = [
                [self._build_azimuth_dict(float(r), ap)
                 for ap in self.layout.apertures]
                for r in self.trajectory.ranges]
        return self._azimuth_dicts

    def _build_azimuth_dict(self, slant_range: float, aperture):
        cfg = self.config
        sub = AntennaLayout((aperture,), name=aperture.id)
        if cfg.strategy == "iii":
            d = azimuth_dictionary_case_iii(
                self.azimuths, cfg.coarse_height_values(), self.rho_grid,
                sub, slant_range, cfg.wavelength, reference=self.reference)
        elif cfg.strategy == "i":
            d = azimuth_dictionary_case_i(
                self.azimuths, _constant_height_layout(sub),
                slant_range, cfg.wavelength, reference=self.reference)
        else:  # strategy ii: hypotheses on the theta_max ring
            theta_max = math.asin(min(self.heights.max(), slant_range)
                                  / slant_range)
            c = math.cos(theta_max)
            uv = np.stack([c * np.cos(self.azimuths),
                           c * np.sin(self.azimuths)], axis=1)
            d = azimuth_dictionary_case_ii(
                uv, _constant_height_layout(sub), slant_range,
                cfg.wavelength, theta_max=theta_max,
                reference=self.reference)
        return normalize_columns(d)

    def height_dicts_for(self, azimuth_bins):
        """Per-point height dictionaries for the detected azimuth set."""
        key = tuple(round(float(a), 12) for a in azimuth_bins)
        if key not in self._height_dict_cache:
            cfg = self.config
            per_point = []
            for r in self.trajectory.ranges:
                per_aperture = []
                for ap in self.layout.apertures:
                    sub = AntennaLayout((ap,), name=ap.id)
                    d = height_dictionary(
                        list(key), self.heights, self.rho_grid, sub,
                        float(r), cfg.wavelength, reference=self.reference,
                        labels_option=cfg.labels_option)
                    per_aperture.append(normalize_columns(d))
                per_point.append(per_aperture)
            self._height_dict_cache[key] = per_point
        return self._height_dict_cache[key]

    # -- trials --------------------------------------------------------------

    def draw_scene(self, rng) -> Scene:
        cfg = self.config
        az_grid = np.array([0.0]) if cfg.skip_azimuth else self.azimuths
        return random_scene(cfg.n_targets, rng, mode=cfg.scene_mode,
                            azimuth_grid=az_grid, height_grid=self.heights,
                            rho_true=cfg.rho_true,
                            snap_on_grid=cfg.snap_on_grid)

    def run_trial(self, method: str, snr_db, trial_rng_obj, gamma: float,
                  gamma_az: float) -> TrialResult:
        cfg = self.config
        scene = self.draw_scene(trial_rng_obj)
        if method in ("music", "burg"):
            return self.baseline(method).run_trial(
                scene, snr_db, trial_rng_obj, cfg.dtw, cfg.protocol)
        if cfg.skip_azimuth:
            return self.height_pipeline.run_trial(
                scene, snr_db, trial_rng_obj, method, gamma, cfg.dtw,
                cfg.protocol)
        return self._sequential_trial(method, scene, snr_db, trial_rng_obj,
                                      gamma, gamma_az)

    def _sequential_trial(self, method, scene, snr_db, rng, gamma,
                          gamma_az) -> TrialResult:
        """Azimuth stage then height stage, per filtering interval."""
        cfg = self.config
        az_dicts = self.azimuth_dicts()
        accum = {}  # azimuth value -> [sum of height rows, count]
        for interval in self.trajectory.intervals:
            snapshots = {}
            az_systems = []
            for p in interval:
                r = float(self.trajectory.ranges[p])
                per_ap = []
                for ap, d in zip(self.layout.apertures, az_dicts[p]):
                    snap = synthesize_snapshot(scene, ap, self.reference, r,
                                               cfg.wavelength, snr_db, rng,
                                               point_index=int(p))
                    snapshots[(p, ap.id)] = snap.y
                    y, _ = normalize_signal(snap.y)
                    per_ap.append((y, d))
                az_systems.append(per_ap)
            detected = estimate_azimuth_interval(az_systems, gamma_az,
                                                 k=cfg.sparsity,
                                                 fusion=method)
            if detected.size == 0:
                continue
            height_dicts = self.height_dicts_for(detected)
            point_systems = []
            for p in interval:
                systems = []
                for ap, d in zip(self.layout.apertures, height_dicts[p]):
                    y, _ = normalize_signal(snapshots[(p, ap.id)])
                    systems.append((y, d))
                point_systems.append(systems)
            interval_map = estimate_height_interval(
                point_systems, fusion=method, k=cfg.sparsity,
                pooling=cfg.pooling)
            for j, phi in enumerate(detected):
                key = round(float(phi), 12)
                if key not in accum:
                    accum[key] = [np.zeros_like(interval_map[j]), 0]
                accum[key][0] += interval_map[j]
                accum[key][1] += 1
        decls = []
        for phi, (total, count) in accum.items():
            mean_row = total / count
            for i in np.flatnonzero(mean_row > gamma):
                decls.append(Declaration(azimuth=float(phi),
                                         height=float(self.heights[i]),
                                         magnitude=float(mean_row[i])))
        return score_trial(decls, scene, cfg.dtw, cfg.protocol)

    # -- calibration ---------------------------------------------------------

    def calibrate_gamma(self, snr_db, method: str) -> float:
        cfg = self.config
        if cfg.gamma != "auto":
            return float(cfg.gamma)
        snr_key = int(round(snr_db * 1000))
        return self.height_pipeline.calibrate_gamma(
            snr_db, method, cfg.gamma_trials, cfg.gamma_percentile,
            cfg.seed, stream_tag=_CAL_STREAM + abs(snr_key) % 1000,
            mode=cfg.gamma_mode, dtw_halfwidth=cfg.dtw,
            n_targets=cfg.n_targets, rho_true=cfg.rho_true,
            scene_mode=cfg.scene_mode)

    def calibrate_gamma_azimuth(self, snr_db, method: str) -> float:
        cfg = self.config
        if cfg.gamma_azimuth != "auto":
            return float(cfg.gamma_azimuth)
        if cfg.skip_azimuth:
            return 0.0
        az_dicts = self.azimuth_dicts()
        empty = Scene(scatterers=())
        maxima = []
        for t in range(cfg.gamma_trials):
            rng = trial_rng(cfg.seed, _CAL_STREAM + 1, t)
            for interval in self.trajectory.intervals:
                az_systems = []
                for p in interval:
                    r = float(self.trajectory.ranges[p])
                    per_ap = []
                    for ap, d in zip(self.layout.apertures, az_dicts[p]):
                        snap = synthesize_snapshot(empty, ap, self.reference,
                                                   r, cfg.wavelength, snr_db,
                                                   rng, point_index=int(p))
                        y, _ = normalize_signal(snap.y)
                        per_ap.append((y, d))
                    az_systems.append(per_ap)
                pooled = _azimuth_pooled(az_systems, cfg.sparsity, method)
                maxima.append(float(pooled.max()))
        return float(np.percentile(maxima, cfg.gamma_percentile))


def _azimuth_pooled(az_systems, k, fusion):
    """Pooled azimuth magnitudes without thresholding (calibration helper)."""
    from .solver import bomp_fused
    info = az_systems[0][0][1].info
    naz = info["naz"]
    groups = ([[s for point in az_systems for s in point]]
              if fusion == "gs" else az_systems)
    pooled = np.zeros(naz)
    for systems in groups:
        rec = bomp_fused([y for y, _ in systems],
                         [d for _, d in systems], k=k)
        for x in rec.coefficients.reshape(len(systems), -1):
            mags = np.abs(x)
            if info["kind"] == "azimuth_iii":
                mags = mags.reshape(info["nrho"], naz, info["nh"]).sum(
                    axis=(0, 2))
            pooled += mags
    return pooled


def _constant_height_layout(layout: AntennaLayout) -> AntennaLayout:
    """Sub-layout of elements at the most common physical height.

    Azimuth strategies (i)/(ii) require a constant-height selection; raises
    when no Tx (or Rx) element sits at the modal height.
    """
    aps = []
    for ap in layout.apertures:
        zs = np.concatenate([ap.tx_xyz()[:, 2], ap.rx_xyz()[:, 2]])
        vals, counts = np.unique(np.round(zs, 9), return_counts=True)
        z0 = vals[np.argmax(counts)]
        tx = tuple(p for p in ap.tx if abs(p.z - z0) < 1e-9)
        rx = tuple(p for p in ap.rx if abs(p.z - z0) < 1e-9)
        if not tx or not rx:
            raise ValueError(
                f"aperture {ap.id!r} has no constant-height Tx/Rx subset at "
                f"z = {z0}; use azimuth strategy 'iii' for this layout")
        aps.append(CoherentAperture(tx=tx, rx=rx, id=ap.id))
    return AntennaLayout(tuple(aps), name=layout.name + "/flat")


# -- sweep driver ------------------------------------------------------------

_WORKER_CTX = None


def _init_worker(config_dict):
    global _WORKER_CTX
    _WORKER_CTX = SweepContext(config_from_dict(config_dict))


def _worker_trial(args):
    method, si, snr_db, t, gamma, gamma_az = args
    rng = trial_rng(_WORKER_CTX.config.seed, si, t)
    return _WORKER_CTX.run_trial(method, snr_db, rng, gamma, gamma_az)


def run_sweep(config: ScenarioConfig, jobs: int = 1, log=None):
    """Execute the full (SNR x method) Monte Carlo sweep.

    Seeding is per (SNR index, trial index), so results are identical for
    any worker count. Returns a list of ResultRow.
    """
    ctx = SweepContext(config)
    rows = []
    executor = None
    if jobs > 1:
        executor = concurrent.futures.ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker,
            initargs=(config.to_dict(),))
    try:
        for si, snr_db in enumerate(config.snr_db):
            gammas = {}
            for method in config.methods:
                if method in SPARSE_METHODS:
                    gammas[method] = (ctx.calibrate_gamma(snr_db, method),
                                      ctx.calibrate_gamma_azimuth(snr_db,
                                                                  method))
                else:
                    gammas[method] = (0.0, 0.0)
            for method in config.methods:
                gamma, gamma_az = gammas[method]
                if log:
                    log(f"snr={snr_db:+.1f} dB method={method} "
                        f"gamma={gamma:.4g}")
                t0 = time.perf_counter()
                args = [(method, si, snr_db, t, gamma, gamma_az)
                        for t in range(config.trials)]
                if executor is None:
                    trials = [ctx.run_trial(method, snr_db,
                                            trial_rng(config.seed, si, t),
                                            gamma, gamma_az)
                              for (_, _, _, t, _, _) in args]
                else:
                    trials = list(executor.map(_worker_trial, args,
                                               chunksize=8))
                wall = time.perf_counter() - t0
                m = aggregate_metrics(trials)
                rows.append(ResultRow(
                    snr_db=float(snr_db), method=method,
                    pd=_round5(m.pd), far=_round5(m.far), de=_round5(m.de),
                    trials=config.trials,
                    wall_time_s=wall if config.timing else 0.0))
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


# -- emission ----------------------------------------------------------------

def format_csv(rows) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(f"{r.snr_db:.6g},{r.method},{r.pd:.5f},{r.far:.5f},"
                     f"{r.de:.5f},{r.trials},{r.wall_time_s:.6g}")
    return "\n".join(lines) + "\n"


def format_json(rows, config: ScenarioConfig) -> str:
    payload = {
        "config": config.to_dict(),
        "results": [
            {"snr_db": r.snr_db, "method": r.method, "pd": r.pd,
             "far": r.far, "de": r.de, "trials": r.trials,
             "wall_time_s": r.wall_time_s}
            for r in rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit(rows, config: ScenarioConfig, fmt: str, path):
    """Write the result table; returns the list of files written."""
    if not rows:
        raise ValueError("empty result table")
    import pathlib
    path = pathlib.Path(path)
    path.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        p = path / "results.csv"
        p.write_text(format_csv(rows))
        written.append(p)
    if fmt in ("json", "both"):
        p = path / "results.json"
        p.write_text(format_json(rows, config))
        written.append(p)
    if not written:
        raise ValueError(f"unknown output format {fmt!r}")
    return written
