"""Experiment orchestration: Monte Carlo sweeps, bound reports, range tables.

Every trial derives its own generator from (master seed, kind index, SNR
index, trial index), so results are byte-identical no matter how trials are
scheduled across workers.  All sweeps emit flat ResultRow records; the CSV
writer sorts them into a deterministic order and prints floats with nine
significant digits.
"""

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import geometry, presets
from .chanest import estimate_channel, frame_reference
from .channel import Scene, Target, l_uw1_expected, sample_grid, simulate_rx
from .crb import crb
from .ddest import (
    EstimatorConfig,
    integer_grid_estimate,
    doppler_bin_to_signed,
    multi_target_estimate,
    round_half_away,
)
from .frames import ConfigurationError, FrameConfig, FrameKind, build_frame, l_ofdm
from .outlier import outlier_ub


@dataclass
class ResultRow:
    kind: str
    snr_db: float
    metric: str
    value: float
    trials: int
    seed: int


@dataclass
class TargetSpec:
    """Fixed or uniformly drawn target DD; offsets chain to the first target."""

    delay: object = 4.249            # value, or (lo, hi) for uniform draws
    doppler: object = 2.237
    delay_offset: float = None       # set => delay = first target's + offset
    doppler_offset: float = None

    def draw(self, rng, first=None):
        if self.delay_offset is not None or self.doppler_offset is not None:
            if first is None:
                raise ConfigurationError("offset target requires a first target")
            return (first[0] + (self.delay_offset or 0.0),
                    first[1] + (self.doppler_offset or 0.0))
        return _draw_value(self.delay, rng), _draw_value(self.doppler, rng)


@dataclass
class LosSpec:
    """LoS path: DD windows, its radar SNR, and the beam rejection beta."""

    delay: object = (0.0, 0.5)
    doppler: object = (0.0, 0.1)
    snr_db: float = 50.0
    beta: float = 0.0


@dataclass
class ExperimentConfig:
    kinds: list = field(default_factory=lambda: [FrameKind.UW2])
    frame: dict = field(default_factory=lambda: {
        "fft_size": 128, "cp_size": 32, "num_subblocks": 64,
        "num_pilot_subblocks": 8, "qam_order": 256, "roll_off": 0.25,
    })
    snr_db: list = field(default_factory=lambda: [30.0, 35.0, 40.0])
    trials: int = 1000
    seed: int = 12345
    targets: list = field(default_factory=lambda: [TargetSpec()])
    los: LosSpec = None
    estimator: EstimatorConfig = None
    include_crb: bool = False
    include_integer: bool = True
    workers: int = 1
    n_ub_samples: int = 200
    # Range-analysis inputs.
    preset: str = "outdoor"
    angles_deg: list = field(default_factory=lambda: list(np.arange(0.0, 361.0, 5.0)))
    waterfall_snr_db: dict = None

    def __post_init__(self):
        self.kinds = [FrameKind(k) for k in self.kinds]
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.snr_db:
            raise ConfigurationError("snr_db grid must be nonempty")
        if self.estimator is None:
            self.estimator = EstimatorConfig(num_targets=len(self.targets))

    def frame_config(self, kind):
        return FrameConfig(kind=kind, **self.frame)


_ALLOWED_KEYS = {
    "root": {"kinds", "frame", "snr_db", "trials", "seed", "targets", "los",
             "estimator", "include_crb", "include_integer", "workers",
             "n_ub_samples", "preset", "angles_deg", "waterfall_snr_db"},
    "frame": {"fft_size", "cp_size", "num_subblocks", "num_pilot_subblocks",
              "qam_order", "roll_off"},
    "target": {"delay", "doppler", "delay_offset", "doppler_offset"},
    "los": {"delay", "doppler", "snr_db", "beta"},
    "estimator": {"n_grid", "n_iterations", "num_targets"},
}


def _check_keys(d, section):
    unknown = set(d) - _ALLOWED_KEYS[section]
    if unknown:
        raise ConfigurationError(f"unknown {section} keys: {sorted(unknown)}")


def _as_window(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigurationError(f"window must have two bounds, got {v}")
        return tuple(float(x) for x in v)
    return float(v)


def _draw_value(v, rng):
    if isinstance(v, tuple):
        return float(rng.uniform(v[0], v[1]))
    return float(v)


def experiment_from_dict(d):
    """Build an ExperimentConfig from a parsed JSON dict; unknown keys reject."""
    _check_keys(d, "root")
    kw = dict(d)
    if "frame" in kw:
        _check_keys(kw["frame"], "frame")
    if "targets" in kw:
        specs = []
        for t in kw["targets"]:
            _check_keys(t, "target")
            t = dict(t)
            for key in ("delay", "doppler"):
                if key in t:
                    t[key] = _as_window(t[key])
            specs.append(TargetSpec(**t))
        kw["targets"] = specs
    if kw.get("los") is not None:
        _check_keys(kw["los"], "los")
        los = dict(kw["los"])
        for key in ("delay", "doppler"):
            if key in los:
                los[key] = _as_window(los[key])
        kw["los"] = LosSpec(**los)
    if "estimator" in kw:
        _check_keys(kw["estimator"], "estimator")
        kw["estimator"] = EstimatorConfig(**kw["estimator"])
    return ExperimentConfig(**kw)


def load_experiment(path):
    with open(path) as fh:
        return experiment_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Trial machinery
# ---------------------------------------------------------------------------

def _trial_rng(seed, kind_index, snr_index, trial):
    ss = np.random.SeedSequence(entropy=seed,
                                spawn_key=(kind_index, snr_index, trial))
    return np.random.default_rng(ss)


def _draw_scene(cfg, config, rng, gain_mag, los_mag):
    """Draw one trial's scene: DDs, phases, and the LoS path if configured."""
    first = None
    targets = []
    for spec in cfg.targets:
        delay, doppler = spec.draw(rng, first)
        if first is None:
            first = (delay, doppler)
        targets.append(Target(delay=delay, doppler=doppler, gain_mag=gain_mag,
                              gain_phase=float(rng.uniform(0.0, 2.0 * np.pi))))
    los = None
    beta = 0.0
    if cfg.los is not None:
        los = Target(
            delay=_draw_value(_as_window(cfg.los.delay), rng),
            doppler=_draw_value(_as_window(cfg.los.doppler), rng),
            gain_mag=los_mag,
            gain_phase=float(rng.uniform(0.0, 2.0 * np.pi)),
        )
        beta = cfg.los.beta
    return Scene(targets=targets, los=los, beta=beta, noise_power=1.0)


def _match_estimates(estimates, targets):
    """Order estimates to minimize total squared DD error against the truth."""
    p = len(targets)
    if p == 1:
        return list(estimates)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(p)):
        cost = sum(
            (estimates[perm[i]].delay - targets[i].delay) ** 2
            + (estimates[perm[i]].doppler - targets[i].doppler) ** 2
            for i in range(p)
        )
        if cost < best_cost:
            best, best_cost = perm, cost
    return [estimates[i] for i in best]


def _rmse_trial(cfg, kind_index, snr_index, trial, kind):
    """One Monte Carlo trial; returns per-target error tuples."""
    config = cfg.frame_config(kind)
    proc_gain = geometry.processing_gain(config)
    rho = 10.0 ** (cfg.snr_db[snr_index] / 10.0)
    gain_mag = float(np.sqrt(rho / proc_gain))
    los_mag = 0.0
    if cfg.los is not None:
        los_mag = float(np.sqrt(10.0 ** (cfg.los.snr_db / 10.0) / proc_gain))

    rng = _trial_rng(cfg.seed, kind_index, snr_index, trial)
    frame = build_frame(config, rng)
    scene = _draw_scene(cfg, config, rng, gain_mag, los_mag)
    y_t, y_los = simulate_rx(frame, scene, rng)

    reference = frame_reference(frame)
    h = estimate_channel(sample_grid(y_t, config), reference)
    h_los = None
    if scene.los is not None:
        h_los = estimate_channel(sample_grid(y_los, config), reference)

    est_cfg = cfg.estimator
    estimates = multi_target_estimate(h, h_los, config, est_cfg)
    estimates = _match_estimates(estimates, scene.targets)

    records = []
    for p, (est, truth) in enumerate(zip(estimates, scene.targets)):
        err_d = est.delay - truth.delay
        err_n = est.doppler - truth.doppler
        if scene.los is not None:
            true_od = truth.delay - scene.los.delay
            true_on = truth.doppler - scene.los.doppler
            err_od = est.delay_offset - true_od
            err_on = est.doppler_offset - true_on
        else:
            err_od = err_on = np.nan
        records.append((err_d, err_n, err_od, err_on))

    # Integer-grid errors are meaningful for the single-target configuration.
    if len(scene.targets) == 1:
        m_hat, k_hat = integer_grid_estimate(h)
        truth = scene.targets[0]
        int_d = k_hat - truth.delay
        int_n = doppler_bin_to_signed(m_hat, config.slow_size) - truth.doppler
    else:
        int_d = int_n = np.nan
    return records, (int_d, int_n)


def _rmse_worker(args):
    return _rmse_trial(*args)


def _run_trials(cfg, worker, arglist):
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(worker, arglist, chunksize=16))
    return [worker(a) for a in arglist]


def _crb_rows(cfg, kind, kind_index, config):
    """sqrt-CRB rows at the scene-template center for every sweep SNR."""
    rng = _trial_rng(cfg.seed, kind_index, 10_000, 0)
    frame = build_frame(config, rng)
    rows = []
    for snr in cfg.snr_db:
        rho = 10.0 ** (snr / 10.0)
        gain_mag = float(np.sqrt(rho / geometry.processing_gain(config)))
        targets = []
        first = None
        for spec in cfg.targets:
            rng_c = np.random.default_rng(0)
            delay, doppler = spec.draw(rng_c, first)
            if isinstance(spec.delay, tuple) and spec.delay_offset is None:
                delay = 0.5 * (spec.delay[0] + spec.delay[1])
            if isinstance(spec.doppler, tuple) and spec.doppler_offset is None:
                doppler = 0.5 * (spec.doppler[0] + spec.doppler[1])
            if first is None:
                first = (delay, doppler)
            targets.append(Target(delay=delay, doppler=doppler,
                                  gain_mag=gain_mag, gain_phase=0.0))
        noise = effective_noise_power(config, targets, 1.0)
        try:
            bounds = crb(targets, frame, noise)
            for metric, value in (
                ("crb_delay", np.sqrt(bounds[0][0])),
                ("crb_doppler", np.sqrt(bounds[0][1])),
            ):
                rows.append(ResultRow(kind.value, snr, metric, float(value),
                                      cfg.trials, cfg.seed))
        except np.linalg.LinAlgError:
            rows.append(ResultRow(kind.value, snr, "crb_singular", 1.0,
                                  cfg.trials, cfg.seed))
    return rows


def effective_noise_power(config, targets, noise_power):
    """Noise power seen by the equalized estimator (kind-specific SNR loss)."""
    if config.kind is FrameKind.OFDM:
        return noise_power * l_ofdm(config.qam_order)
    if config.kind is FrameKind.UW1:
        scene = Scene(targets=targets, noise_power=noise_power)
        return noise_power * l_uw1_expected(scene)
    return noise_power


def _nan_rmse(arr):
    arr = np.asarray(arr, dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return None
    return float(np.sqrt(np.mean(arr**2)))


def run_rmse_sweep(cfg):
    """Monte Carlo RMSE sweep over kinds and radar SNRs."""
    rows = []
    n_targets = len(cfg.targets)
    for kind_index, kind in enumerate(cfg.kinds):
        config = cfg.frame_config(kind)
        for snr_index, snr in enumerate(cfg.snr_db):
            arglist = [(cfg, kind_index, snr_index, t, kind)
                       for t in range(cfg.trials)]
            results = _run_trials(cfg, _rmse_worker, arglist)
            per_target = [[r[0][p] for r in results] for p in range(n_targets)]
            for p in range(n_targets):
                errs = np.array(per_target[p])
                suffix = "" if p == 0 else f"_p{p}"
                named = (
                    (f"rmse_delay{suffix}", _nan_rmse(errs[:, 0])),
                    (f"rmse_doppler{suffix}", _nan_rmse(errs[:, 1])),
                    (f"rmse_delay_offset{suffix}", _nan_rmse(errs[:, 2])),
                    (f"rmse_doppler_offset{suffix}", _nan_rmse(errs[:, 3])),
                )
                for metric, value in named:
                    if value is not None:
                        rows.append(ResultRow(kind.value, snr, metric, value,
                                              cfg.trials, cfg.seed))
            if cfg.include_integer and n_targets == 1:
                ints = np.array([r[1] for r in results])
                for metric, col in (("rmse_delay_int", 0), ("rmse_doppler_int", 1)):
                    value = _nan_rmse(ints[:, col])
                    if value is not None:
                        rows.append(ResultRow(kind.value, snr, metric, value,
                                              cfg.trials, cfg.seed))
        if cfg.include_crb:
            rows.extend(_crb_rows(cfg, kind, kind_index, config))
    return rows


def _outlier_trial(cfg, kind_index, snr_index, trial, kind):
    """Integer-grid outlier events along the true Doppler row / delay column."""
    config = cfg.frame_config(kind)
    rho = 10.0 ** (cfg.snr_db[snr_index] / 10.0)
    gain_mag = float(np.sqrt(rho / geometry.processing_gain(config)))

    rng = _trial_rng(cfg.seed, kind_index, snr_index, trial)
    frame = build_frame(config, rng)
    spec = cfg.targets[0]
    delay, doppler = spec.draw(rng)
    target = Target(delay=delay, doppler=doppler, gain_mag=gain_mag,
                    gain_phase=float(rng.uniform(0.0, 2.0 * np.pi)))
    scene = Scene(targets=[target], noise_power=1.0)
    y_t, _ = simulate_rx(frame, scene, rng)
    h = estimate_channel(sample_grid(y_t, config), frame_reference(frame)).data

    k0 = round_half_away(delay)
    m0 = round_half_away(doppler) % config.slow_size
    bad_delay = int(np.argmax(np.abs(h[m0, :]) ** 2) != k0)
    bad_doppler = int(np.argmax(np.abs(h[:, k0]) ** 2) != m0)
    return bad_delay, bad_doppler


def _outlier_worker(args):
    return _outlier_trial(*args)


def run_outlier_sweep(cfg):
    """Simulated outlier frequencies plus the analytic union bounds."""
    if len(cfg.targets) != 1:
        raise ConfigurationError("outlier study is single-target")
    rows = []
    spec = cfg.targets[0]
    random_dd = isinstance(spec.delay, tuple) or isinstance(spec.doppler, tuple)
    for kind_index, kind in enumerate(cfg.kinds):
        config = cfg.frame_config(kind)
        g = geometry.processing_gain(config)
        for snr_index, snr in enumerate(cfg.snr_db):
            arglist = [(cfg, kind_index, snr_index, t, kind)
                       for t in range(cfg.trials)]
            events = np.array(_run_trials(cfg, _outlier_worker, arglist))
            rows.append(ResultRow(kind.value, snr, "outlier_delay",
                                  float(np.mean(events[:, 0])), cfg.trials, cfg.seed))
            rows.append(ResultRow(kind.value, snr, "outlier_doppler",
                                  float(np.mean(events[:, 1])), cfg.trials, cfg.seed))

            gain_mag = float(np.sqrt(10.0 ** (snr / 10.0) / g))
            if random_dd:
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=cfg.seed,
                                           spawn_key=(kind_index, snr_index, 1 << 20)))
                ubs = []
                for _ in range(cfg.n_ub_samples):
                    delay, doppler = spec.draw(rng)
                    ubs.append(outlier_ub(
                        config, Target(delay=delay, doppler=doppler,
                                       gain_mag=gain_mag), 1.0))
                ub_d = float(np.mean([u[0] for u in ubs]))
                ub_n = float(np.mean([u[1] for u in ubs]))
            else:
                ub_d, ub_n = outlier_ub(
                    config, Target(delay=float(spec.delay),
                                   doppler=float(spec.doppler),
                                   gain_mag=gain_mag), 1.0)
            rows.append(ResultRow(kind.value, snr, "ub_delay", ub_d,
                                  cfg.trials, cfg.seed))
            rows.append(ResultRow(kind.value, snr, "ub_doppler", ub_n,
                                  cfg.trials, cfg.seed))
    return rows


def run_crb_report(cfg):
    """sqrt-CRB per kind and SNR at the scene-template DD."""
    rows = []
    for kind_index, kind in enumerate(cfg.kinds):
        config = cfg.frame_config(kind)
        rows.extend(_crb_rows(cfg, kind, kind_index, config))
    return rows


def run_range_analysis(cfg):
    """Iso-range and constant-SNR range tables for the configured budget."""
    budget = presets.outdoor_budget() if cfg.preset == "outdoor" else presets.indoor_budget()
    waterfalls = dict(presets.WATERFALL_SNR_DB)
    if cfg.waterfall_snr_db:
        waterfalls.update({FrameKind(k): v for k, v in cfg.waterfall_snr_db.items()})
    rows = []
    for kind in cfg.kinds:
        config = cfg.frame_config(kind)
        tau_max, _ = geometry.max_unambiguous(config, budget.bandwidth)
        iso = geometry.iso_range_contour(tau_max, budget.bs_radar_dist, 4096)
        wf_db = waterfalls[kind]
        rho_star = 10.0 ** (wf_db / 10.0)
        b2, oval = geometry.cassini_oval(
            rho_star, geometry.processing_gain(config), budget, n_points=4096)
        rows.append(ResultRow(kind.value, wf_db, "cassini_b2", float(b2), 0, cfg.seed))
        for theta in cfg.angles_deg:
            for metric, pts in (("iso_dtr", iso), ("cassini_dtr", oval)):
                r = geometry.range_at_angle(pts, theta, budget.bs_radar_dist)
                if r is not None:
                    rows.append(ResultRow(kind.value, wf_db,
                                          f"{metric}@{theta:g}", r, 0, cfg.seed))
    return rows


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------

def sort_rows(rows):
    return sorted(rows, key=lambda r: (r.kind, r.snr_db, r.metric))


def rows_to_csv(rows):
    lines = ["kind,snr_db,metric,value,trials,seed"]
    for r in sort_rows(rows):
        lines.append(f"{r.kind},{r.snr_db:.9g},{r.metric},{r.value:.9g},"
                     f"{r.trials},{r.seed}")
    return "\n".join(lines) + "\n"


def rows_to_json(rows):
    payload = [
        {f.name: getattr(r, f.name) for f in fields(ResultRow)}
        for r in sort_rows(rows)
    ]
    return json.dumps(payload, indent=2) + "\n"


def frame_info_table(cfg):
    """Frame-comparison table (one dict per kind) for a frame geometry."""
    out = []
    for kind in cfg.kinds:
        config = cfg.frame_config(kind)
        budget = presets.outdoor_budget() if cfg.preset == "outdoor" else presets.indoor_budget()
        tau_max, nu_max = geometry.max_unambiguous(config, budget.bandwidth)
        n_fg = geometry.fine_grid_eval_count(
            cfg.estimator.n_iterations, cfg.estimator.num_targets,
            cfg.estimator.n_grid)
        if config.kind is FrameKind.UW1:
            loss = "2 + rho/G + LoS term"
        elif config.kind is FrameKind.OFDM:
            loss = f"{l_ofdm(config.qam_order):.3f}"
        else:
            loss = "1"
        out.append({
            "kind": kind.value,
            "needs_data": kind is FrameKind.OFDM,
            "data_rate_loss": (config.num_pilot_subblocks / config.num_subblocks
                               if kind is FrameKind.PS else 0.0),
            "processing_gain": geometry.processing_gain(config),
            "complexity": float(geometry.receiver_complexity(config, n_fg)),
            "max_delay_s": tau_max,
            "max_doppler_hz": nu_max,
            "snr_loss": loss,
        })
    return out
