"""Closed-form and Monte Carlo SNR for the three camera architectures.

Amplitude convention throughout: SNR = signal / noise standard deviation,
reported in dB as 20*log10.  Pixel-value maps of the brightness ratio use
the intensity convention 10*log10.

Closed forms, with N the vector length, X0 the total scene brightness,
sigma/rho the additive noise stds, and g the lens gain:

  multiplexed (LCI) total, exact:   X0 / sqrt((2 - 4/N) X0 + (4 - 4/N) sigma^2)
  multiplexed total, bound:         X0 / sqrt(2 X0 + 4 sigma^2)   (N -> inf)
  multiplexed per pixel:            sqrt(N) x_i / (same radicand as above)
  pinhole (PAI) total:              X0 / sqrt(X0 + N rho^2); per pixel x_i / sqrt(x_i + rho^2)
  lens (LAI) total:                 g X0 / sqrt(g X0 + N rho^2); per pixel g x_i / sqrt(g x_i + rho^2)

The multiplexed-to-pinhole total ratio is sqrt(X0 + N rho^2) / sqrt(2 X0 +
4 sigma^2), approximately (1/sqrt(2)) sqrt(1 + N rho^2 / X0) when additive
noise is negligible against shot noise on the multiplexed side.  Per pixel
the ratio is sqrt(x_i / (2 X0 / N)): multiplexing wins exactly for pixels
brighter than twice the mean 2 X0 / N.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from lcisim.hadamard import SensingOperator, apply_inverse
from lcisim.noise import NoiseParams, corrupt_measurements
from lcisim.pipeline import Architecture, lai_capture, lci_clean_measurements, pai_capture
from lcisim.rng import DOMAIN_BOOTSTRAP, DOMAIN_TRIAL, RngStream
from lcisim.scene import Scene

DEFAULT_DB_FLOOR = -120.0
_TRIAL_CHUNK = 64  # fixed chunk size so reductions are worker-count independent

_ARCH_LABEL = {Architecture.LCI: 1, Architecture.PAI: 2, Architecture.LAI: 3}


def amplitude_db(linear: float) -> float:
    """20*log10 of an amplitude ratio; 0 -> -inf, inf -> inf."""
    if linear == math.inf:
        return math.inf
    if linear <= 0.0:
        return -math.inf
    return 20.0 * math.log10(linear)


@dataclass(frozen=True)
class AnalyticParams:
    """Inputs to the closed-form SNR expressions."""

    n: int
    x0: float
    sigma: float = 0.0
    rho: float = 0.0
    gain: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if self.x0 <= 0:
            raise ValueError("x0 must be positive")
        if self.sigma < 0 or self.rho < 0:
            raise ValueError("sigma and rho must be nonnegative")
        if self.gain < 1.0:
            raise ValueError("gain must be >= 1")


@dataclass(frozen=True)
class LciAnalytic:
    total_exact: float
    total_bound: float
    radicand_exact: float
    radicand_bound: float
    n: int

    def pixel_exact(self, x):
        return math.sqrt(self.n) * np.asarray(x, dtype=np.float64) / math.sqrt(self.radicand_exact)

    def pixel_bound(self, x):
        return math.sqrt(self.n) * np.asarray(x, dtype=np.float64) / math.sqrt(self.radicand_bound)


@dataclass(frozen=True)
class DirectAnalytic:
    total: float
    rho: float
    gain: float

    def pixel(self, x):
        lit = self.gain * np.asarray(x, dtype=np.float64)
        return np.divide(
            lit,
            np.sqrt(lit + self.rho**2),
            out=np.zeros_like(lit),
            where=(lit + self.rho**2) > 0,
        )


def analytic_lci(params: AnalyticParams) -> LciAnalytic:
    """Closed-form multiplexed-architecture SNR (exact and large-N bound)."""
    radicand_exact = (2.0 - 4.0 / params.n) * params.x0 + (4.0 - 4.0 / params.n) * params.sigma**2
    radicand_bound = 2.0 * params.x0 + 4.0 * params.sigma**2
    return LciAnalytic(
        total_exact=params.x0 / math.sqrt(radicand_exact),
        total_bound=params.x0 / math.sqrt(radicand_bound),
        radicand_exact=radicand_exact,
        radicand_bound=radicand_bound,
        n=params.n,
    )


def analytic_pai(params: AnalyticParams) -> DirectAnalytic:
    """Closed-form pinhole-architecture SNR (unit gain)."""
    total = params.x0 / math.sqrt(params.x0 + params.n * params.rho**2)
    return DirectAnalytic(total=total, rho=params.rho, gain=1.0)


def analytic_lai(params: AnalyticParams) -> DirectAnalytic:
    """Closed-form lens-architecture SNR (gain g applied to photon means)."""
    g = params.gain
    total = g * params.x0 / math.sqrt(g * params.x0 + params.n * params.rho**2)
    return DirectAnalytic(total=total, rho=params.rho, gain=g)


@dataclass(frozen=True)
class RatioEstimate:
    exact: float
    approx: float


def ratio_lci_pai(params: AnalyticParams) -> RatioEstimate:
    """Multiplexed-over-pinhole total SNR ratio (bound form over exact pinhole)."""
    exact = math.sqrt(params.x0 + params.n * params.rho**2) / math.sqrt(
        2.0 * params.x0 + 4.0 * params.sigma**2
    )
    approx = math.sqrt(0.5) * math.sqrt(1.0 + params.n * params.rho**2 / params.x0)
    return RatioEstimate(exact=exact, approx=approx)


def ratio_lci_lai(params: AnalyticParams) -> RatioEstimate:
    """Multiplexed-over-lens total SNR ratio."""
    g = params.gain
    exact = math.sqrt(g * params.x0 + params.n * params.rho**2) / (
        g * math.sqrt(2.0 * params.x0 + 4.0 * params.sigma**2)
    )
    approx = math.sqrt(1.0 / (2.0 * g)) * math.sqrt(1.0 + params.n * params.rho**2 / (g * params.x0))
    return RatioEstimate(exact=exact, approx=approx)


def pixel_ratio(x, x0: float, n: int):
    """Per-pixel multiplexed-over-pinhole SNR ratio sqrt(x / (2 X0 / N))."""
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    return np.sqrt(np.asarray(x, dtype=np.float64) * n / (2.0 * x0))


def pixel_advantage_threshold(x0: float, n: int) -> float:
    """Brightness above which multiplexing beats direct capture per pixel."""
    return 2.0 * x0 / n


def pixel_db_map(scene: Scene, floor_db: float = DEFAULT_DB_FLOOR) -> np.ndarray:
    """Per-pixel ratio map in intensity dB, shaped (height, width).

    10*log10(x_i / (2 X0 / N)); zero pixels land on the floor value.  Pixels
    above 0 dB are the ones multiplexing resolves better than direct capture.
    """
    x0 = scene.brightness
    if x0 <= 0:
        raise ValueError("scene brightness must be positive")
    ratio = scene.usable / pixel_advantage_threshold(x0, scene.n)
    db = np.full(ratio.shape, floor_db)
    positive = ratio > 0
    db[positive] = 10.0 * np.log10(ratio[positive])
    return np.maximum(db, floor_db).reshape(scene.height, scene.width)


@dataclass(frozen=True)
class PercentileCurve:
    """Sorted per-pixel ratio curve: dB against percent of pixels."""

    percent: np.ndarray
    db: np.ndarray
    crossing_percent: float  # share of pixels favoring multiplexing (> 0 dB)


def sorted_ratio_curve(scene: Scene, floor_db: float = DEFAULT_DB_FLOOR) -> PercentileCurve:
    db = np.sort(pixel_db_map(scene, floor_db).reshape(-1))[::-1]
    count = db.size
    percent = 100.0 * np.arange(1, count + 1) / count
    crossing = 100.0 * float(np.count_nonzero(db > 0.0)) / count
    return PercentileCurve(percent=percent, db=db, crossing_percent=crossing)


@dataclass(frozen=True)
class TimeBudget:
    """Sensor-time accounting: both architectures spend N * delta_t in total."""

    n: int
    delta_t: float
    lci_sensors: int
    lci_exposure_slots: int
    pai_sensors: int
    pai_exposure_slots: int
    total_sensor_time: float


def sensor_time_budget(n: int, delta_t: float) -> TimeBudget:
    if n < 2 or delta_t <= 0:
        raise ValueError("need n >= 2 and delta_t > 0")
    return TimeBudget(
        n=n,
        delta_t=delta_t,
        lci_sensors=1,
        lci_exposure_slots=n,
        pai_sensors=n,
        pai_exposure_slots=1,
        total_sensor_time=n * delta_t,
    )


@dataclass(frozen=True)
class SnrReport:
    """Monte Carlo SNR estimate with its closed-form counterpart."""

    architecture: Architecture
    trials: int
    signal: float
    total_snr_linear: float
    total_snr_db: float
    mc_standard_error: float
    per_pixel_noise_power: np.ndarray
    per_pixel_snr: np.ndarray
    analytic_total_linear: float | None
    analytic_total_db: float | None
    saturated: bool
    sensors: int
    exposure_slots: int


def _mc_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    architecture, scene, params, clean_y, trial_root, start, stop = args
    truth = scene.values * (params.gain if architecture is Architecture.LAI else 1.0)
    op = SensingOperator.create(scene.n) if architecture is Architecture.LCI else None
    sq_sum = np.zeros(scene.n)
    powers = np.empty(stop - start)
    for t in range(start, stop):
        stream = trial_root.child(t)
        if architecture is Architecture.LCI:
            z = corrupt_measurements(clean_y, params, stream)
            value = apply_inverse(op, z)
        elif architecture is Architecture.PAI:
            value = pai_capture(scene, params, stream).values
        else:
            value = lai_capture(scene, params, stream).values
        err = value - truth
        sq = err * err
        sq_sum += sq
        powers[t - start] = float(sq.sum())
    return sq_sum, powers


def monte_carlo_snr(
    architecture: Architecture | str,
    scene: Scene,
    params: NoiseParams,
    trials: int,
    stream: RngStream,
    workers: int = 1,
    bootstrap_resamples: int = 200,
) -> SnrReport:
    """Estimate total and per-pixel SNR over `trials` independent noise draws.

    Per-pixel noise power is the mean squared deviation from the known truth
    (the scene, times g for the lens architecture); total SNR divides the
    signal by the square root of the summed noise power.  Each trial draws
    from its own derived stream keyed by trial index, and chunked partial
    sums are reduced in ascending trial order, so results are bit-identical
    for any worker count.  The standard error comes from a bootstrap over
    per-trial noise powers.
    """
    architecture = Architecture(architecture)
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    gain = params.gain if architecture is Architecture.LAI else 1.0
    signal = gain * scene.brightness
    clean_y = lci_clean_measurements(scene).values if architecture is Architecture.LCI else None
    trial_root = stream.child(DOMAIN_TRIAL, _ARCH_LABEL[architecture], scene.n)

    spans = [
        (start, min(start + _TRIAL_CHUNK, trials)) for start in range(0, trials, _TRIAL_CHUNK)
    ]
    jobs = [(architecture, scene, params, clean_y, trial_root, a, b) for a, b in spans]
    if workers == 1:
        results = [_mc_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_chunk, jobs))

    sq_total = np.zeros(scene.n)
    powers = np.empty(trials)
    for (a, b), (sq_sum, chunk_powers) in zip(spans, results):
        sq_total += sq_sum
        powers[a:b] = chunk_powers

    noise_power = sq_total / trials
    total_power = float(powers.mean())
    truth = scene.values * gain

    saturated = total_power == 0.0
    total_linear = math.inf if saturated else signal / math.sqrt(total_power)

    if saturated:
        se = 0.0
    else:
        bs_gen = stream.child(DOMAIN_BOOTSTRAP, _ARCH_LABEL[architecture], scene.n).generator()
        idx = bs_gen.integers(0, trials, size=(bootstrap_resamples, trials))
        resampled = powers[idx].mean(axis=1)
        resampled = np.maximum(resampled, np.finfo(np.float64).tiny)
        se = float(np.std(signal / np.sqrt(resampled), ddof=1))

    with np.errstate(divide="ignore", invalid="ignore"):
        per_pixel_snr = truth / np.sqrt(noise_power)
    per_pixel_snr[np.isnan(per_pixel_snr)] = 0.0

    analytic_linear: float | None = None
    if scene.brightness > 0:
        ap = AnalyticParams(
            n=scene.n, x0=scene.brightness, sigma=params.sigma, rho=params.rho, gain=params.gain
        )
        if architecture is Architecture.LCI:
            analytic_linear = analytic_lci(ap).total_exact
        elif architecture is Architecture.PAI:
            analytic_linear = analytic_pai(ap).total
        else:
            analytic_linear = analytic_lai(ap).total

    budget = sensor_time_budget(scene.n, 1.0)
    if architecture is Architecture.LCI:
        sensors, slots = budget.lci_sensors, budget.lci_exposure_slots
    else:
        sensors, slots = budget.pai_sensors, budget.pai_exposure_slots

    return SnrReport(
        architecture=architecture,
        trials=trials,
        signal=signal,
        total_snr_linear=total_linear,
        total_snr_db=amplitude_db(total_linear),
        mc_standard_error=se,
        per_pixel_noise_power=noise_power,
        per_pixel_snr=per_pixel_snr,
        analytic_total_linear=analytic_linear,
        analytic_total_db=None if analytic_linear is None else amplitude_db(analytic_linear),
        saturated=saturated,
        sensors=sensors,
        exposure_slots=slots,
    )
