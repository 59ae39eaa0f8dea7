"""Packet-level simulation of the coexistence model

Every estimator runs in fixed blocks of trials. Block k draws from its own
generator, spawned from the master seed, so estimates depend only on the
seed and never on how many worker threads evaluate the blocks. Block
results are integer counts (or sums of integers), so the reduction is exact
and order-insensitive.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from numbers import Integral
from typing import Callable
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from coexist._kpis.analytic import ack_success_probability
from coexist._kpis.common.core import CliContext
from coexist._kpis.common.core import check_distance
from coexist._kpis.common.core import check_recommendations
from coexist._kpis.common.exceptions import FadingModelError
from coexist._kpis.common.exceptions import ModelInputError
from coexist._kpis.common.result import KpiResult
from coexist._kpis.common.typing import OverlapMode
from coexist._kpis.joint import JointReceptionConfig
from coexist._kpis.joint import ensure_valid_joint
from coexist._kpis.model import ChannelModel
from coexist._kpis.model import Scenario
from coexist._kpis.model import check_index
from coexist._kpis.model import ensure_valid
from coexist._kpis.model import time_activity_factor
from coexist._kpis.overlap import deterministic_overlap
from coexist._kpis.overlap import frequency_activity_factor

__all__ = [
    "SimConfig",
    "Estimate",
    "SessionStats",
    "sample_ppp",
    "snapshot_success",
    "simulate_session",
    "snapshot_mrc_success",
    "simulate_kpis",
]

Z_95 = 1.959963984540054
POINTS_PER_BLOCK = 2 ** 22


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings

    Parameters
    ----------
    trials : ``int``, default ``100_000``
        Snapshots per estimate
    region_radius : ``float``, optional
        Radius of the simulated disc in m; ``max(1000, 10·d)`` when omitted
    seed : ``int``, default ``42``
        Master seed
    antithetic : ``bool``, default ``False``
        Pair every desired-link fade with its antithetic counterpart
    overlap : ``str``, default ``"sampled"``
        ``"sampled"`` weighs each interferer by its actual overlap with the
        reference band, ``"mean"`` by the frequency activity factor υ
    frozen_topology : ``bool``, default ``False``
        Keep interferer positions across the attempts of a session
    sessions : ``int``, optional
        Sessions per session estimate; ``trials // max_transmissions`` when
        omitted
    block_size : ``int``, default ``4096``
        Trials per block, reduced when a block would hold too many points
    jobs : ``int``, default ``1``
        Worker threads evaluating blocks
    """

    trials: int = 100_000
    region_radius: Optional[float] = None
    seed: int = 42
    antithetic: bool = False
    overlap: OverlapMode = "sampled"
    frozen_topology: bool = False
    sessions: Optional[int] = None
    block_size: int = 4096
    jobs: int = 1

    def __post_init__(self):
        for name in ("trials", "block_size", "jobs"):
            value = getattr(self, name)
            if not isinstance(value, Integral) or value < 1:
                raise ModelInputError(f"{name} must be an integer of at least 1")
        if self.sessions is not None and (
            not isinstance(self.sessions, Integral) or self.sessions < 1
        ):
            raise ModelInputError("sessions must be an integer of at least 1")
        if self.region_radius is not None and not self.region_radius > 0:
            raise ModelInputError("region_radius must be positive")
        if self.overlap not in ("sampled", "mean"):
            raise ModelInputError(f"Unknown overlap mode '{self.overlap}'")

    def radius_for(self, d: float) -> float:
        if self.region_radius is not None:
            return self.region_radius
        return max(1000.0, 10 * d)


@dataclass
class Estimate:
    """Sample mean with its standard error"""

    mean: float
    std_error: float
    trials_used: int

    @property
    def ci_halfwidth(self) -> float:
        """Half-width of the normal 95% confidence interval"""
        return Z_95 * self.std_error

    def __float__(self):
        return float(self.mean)


def _binomial(successes: int, n: int) -> Estimate:
    p = successes / n
    return Estimate(p, math.sqrt(p * (1 - p) / n), n)


def _moments(count: int, total: int, total_sq: int) -> Estimate:
    """Estimate of a mean from integer sums of x and x²"""
    if count == 0:
        return Estimate(math.nan, math.nan, 0)

    mean = total / count
    if count == 1:
        return Estimate(mean, 0.0, 1)

    var = max(total_sq - count * mean ** 2, 0.0) / (count - 1)

    return Estimate(mean, math.sqrt(var / count), count)


def _affine(e: Estimate, slope: float, offset: float) -> Estimate:
    return Estimate(offset + slope * e.mean, abs(slope) * e.std_error, e.trials_used)


# ------------------------------------------------------------------------------
# Blocks and streams


def _block_sizes(total: int, block_size: int) -> List[int]:
    nfull, rest = divmod(total, block_size)
    return [block_size] * nfull + ([rest] if rest else [])


def _run_blocks(
    kernel: Callable[[int, np.random.Generator], Tuple],
    sizes: Sequence[int],
    seed: int,
    jobs: int,
) -> List[Tuple]:
    """Results of ``kernel(size, rng)`` for every block, in block order"""
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(size, np.random.default_rng(ss)) for size, ss in zip(sizes, streams)]

    if jobs == 1:
        return [kernel(*a) for a in args]

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(lambda a: kernel(*a), args))


def _fitted_block_size(cfg: SimConfig, points_per_trial: float) -> int:
    if points_per_trial <= 0:
        return cfg.block_size
    return int(max(1, min(cfg.block_size, POINTS_PER_BLOCK // points_per_trial)))


# ------------------------------------------------------------------------------
# Sampling


def _uniform_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_ppp(
    intensity: float, radius: float, rng: np.random.Generator
) -> np.ndarray:
    """One realisation of a Poisson point process on a disc

    Returns
    -------
    points : ``np.ndarray``
        Array of shape ``(n, 2)`` with n ~ Poisson(intensity·π·radius²)
    """
    if not intensity >= 0:
        raise ModelInputError(f"Intensity {intensity} is negative")

    n = rng.poisson(intensity * np.pi * radius ** 2)
    return _uniform_disc(n, radius, rng)


class _Points(NamedTuple):
    """Interferers of a batch of trials, flattened"""

    trial: np.ndarray
    xy: np.ndarray


def _ppp_batch(
    intensity: float, radius: float, ntrials: int, rng: np.random.Generator
) -> _Points:
    counts = rng.poisson(intensity * np.pi * radius ** 2, ntrials)
    trial = np.repeat(np.arange(ntrials), counts)
    return _Points(trial, _uniform_disc(counts.sum(), radius, rng))


def _check_samplable(channel: ChannelModel):
    if not channel.samplable:
        raise FadingModelError(
            "Monte Carlo needs Rayleigh or Nakagami fading, "
            "a fractional moment alone cannot be sampled"
        )


def _fades(channel: ChannelModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Power gains of interfering links"""
    if channel.fading == "rayleigh":
        return rng.standard_exponential(n)
    m = channel.nakagami_m
    return rng.gamma(m, 1 / m, n)


def _desired_fades(n: int, rng: np.random.Generator) -> np.ndarray:
    """Power gains of desired links, which are Rayleigh under every fading law"""
    return rng.standard_exponential(n)


def _desired_fade_quantiles(u: np.ndarray) -> np.ndarray:
    return -np.log1p(-u)


def _overlap_weights(
    i: int,
    j: int,
    s: Scenario,
    overlap: str,
    f_ref: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Fraction of the reference band hit by each interferer"""
    interferer = s.classes[i]
    ref = s.classes[j]

    if overlap == "mean":
        if ref.carrier.kind == "point-mass":
            upsilon = frequency_activity_factor(i, j, s, ref.carrier.f_min)
            return np.full(len(f_ref), upsilon)
        upsilon = np.vectorize(
            lambda f: frequency_activity_factor(i, j, s, float(f)), otypes=[float]
        )
        return upsilon(f_ref)

    f_int = interferer.carrier.sample(rng, len(f_ref))
    overlap = deterministic_overlap(f_ref, ref.bandwidth, f_int, interferer.bandwidth)

    return overlap / ref.bandwidth


def _amplitudes(
    points: List[_Points],
    j: int,
    s: Scenario,
    overlap: str,
    f_ref: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Trial index, position and pre-fading received power of every interferer"""
    trials, xys, amps = [], [], []
    for i, batch in enumerate(points):
        if batch is None or len(batch.trial) == 0:
            continue
        weights = _overlap_weights(i, j, s, overlap, f_ref[batch.trial], rng)
        trials.append(batch.trial)
        xys.append(batch.xy)
        amps.append(s.classes[i].tx_power * weights)

    if not trials:
        return np.zeros(0, dtype=int), np.zeros((0, 2)), np.zeros(0)

    return np.concatenate(trials), np.concatenate(xys), np.concatenate(amps)


def _interference(
    trial: np.ndarray,
    xy: np.ndarray,
    amp: np.ndarray,
    receiver: Tuple[float, float],
    ntrials: int,
    channel: ChannelModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Aggregate interference power per trial at ``receiver``"""
    r = np.hypot(xy[:, 0] - receiver[0], xy[:, 1] - receiver[1])
    power = amp * _fades(channel, len(r), rng) * r ** -channel.pathloss_exponent

    return np.bincount(trial, weights=power, minlength=ntrials)


def _decoded(
    j: int,
    d: float,
    threshold: float,
    s: Scenario,
    desired_fade: np.ndarray,
    interference: np.ndarray,
) -> np.ndarray:
    """Whether SINR = P h d^-α / (𝒩 + I) reaches ``threshold``, per trial"""
    ref = s.classes[j]
    noise = s.channel.noise_power(ref.bandwidth)
    required = threshold * (noise + interference) * d ** s.channel.pathloss_exponent

    return desired_fade * ref.tx_power >= required


def _active_intensities(j: int, s: Scenario) -> List[float]:
    """Intensity of the interferers of each class transmitting on j's resource"""
    return [
        time_activity_factor(i, j, s) * c.device_density
        for i, c in enumerate(s.classes)
    ]


def _fresh_points(
    intensities: List[float], radius: float, ntrials: int, rng: np.random.Generator
) -> List[Optional[_Points]]:
    return [
        _ppp_batch(lam, radius, ntrials, rng) if lam > 0 else None
        for lam in intensities
    ]


def _check_inputs(j: int, d: float, threshold: float, s: Scenario):
    ensure_valid(s)
    check_index(j, s)
    check_distance(d)
    if not threshold > 0:
        raise ModelInputError(f"SINR threshold {threshold} is not positive")
    _check_samplable(s.channel)


def _recommendations(
    ctx: Optional[CliContext], cfg: SimConfig, d: float, trials: int
) -> List[str]:
    return check_recommendations(
        ctx,
        {
            "region_radius ≥ 10·d": cfg.radius_for(d) >= 10 * d,
            "trials ≥ 1000": trials >= 1000,
        },
    )


# ------------------------------------------------------------------------------
# Snapshots


def _snapshot_outcomes(
    j: int,
    d: float,
    threshold: float,
    s: Scenario,
    cfg: SimConfig,
    points: List[Optional[_Points]],
    ntrials: int,
    rng: np.random.Generator,
    desired_fade: Optional[np.ndarray] = None,
) -> np.ndarray:
    f_ref = s.classes[j].carrier.sample(rng, ntrials)
    trial, xy, amp = _amplitudes(points, j, s, cfg.overlap, f_ref, rng)
    interference = _interference(trial, xy, amp, (0.0, 0.0), ntrials, s.channel, rng)
    if desired_fade is None:
        desired_fade = _desired_fades(ntrials, rng)

    return _decoded(j, d, threshold, s, desired_fade, interference)


def snapshot_success(
    j: int,
    d: float,
    sinr_threshold: float,
    s: Scenario,
    cfg: SimConfig = SimConfig(),
    ctx: Optional[CliContext] = None,
) -> Estimate:
    """Fraction of independent snapshots in which the reference packet decodes

    Each snapshot draws the active interferers of every class as a Poisson
    point process of intensity ξλ around the reference AP, their carriers and
    unit-mean fades, and the reference device's carrier and fade.

    With ``cfg.antithetic`` the desired-link fades come in antithetic pairs
    and the standard error is taken over pair means.
    """
    _check_inputs(j, d, sinr_threshold, s)
    _recommendations(ctx, cfg, d, cfg.trials)

    radius = cfg.radius_for(d)
    intensities = _active_intensities(j, s)
    per_trial = sum(intensities) * np.pi * radius ** 2
    block_size = _fitted_block_size(cfg, per_trial)

    if cfg.antithetic:
        block_size += block_size % 2
        trials = cfg.trials + cfg.trials % 2
    else:
        trials = cfg.trials

    def kernel(ntrials, rng):
        points = _fresh_points(intensities, radius, ntrials, rng)
        if not cfg.antithetic:
            decoded = _snapshot_outcomes(
                j, d, sinr_threshold, s, cfg, points, ntrials, rng
            )
            return int(decoded.sum()), 0, 0

        half = ntrials // 2
        u = rng.random(half)
        fades = _desired_fade_quantiles(np.concatenate((u, 1 - u)))
        decoded = _snapshot_outcomes(
            j, d, sinr_threshold, s, cfg, points, ntrials, rng, desired_fade=fades
        )
        pair_sums = decoded[:half].astype(int) + decoded[half:].astype(int)
        return int(pair_sums.sum()), int((pair_sums ** 2).sum()), half

    results = _run_blocks(kernel, _block_sizes(trials, block_size), cfg.seed, cfg.jobs)
    successes = sum(r[0] for r in results)

    if not cfg.antithetic:
        return _binomial(successes, trials)

    npairs = sum(r[2] for r in results)
    sq = sum(r[1] for r in results)
    # pair means are pair sums halved
    pair_means = _moments(npairs, successes, sq)
    return Estimate(pair_means.mean / 2, pair_means.std_error / 2, trials)


# ------------------------------------------------------------------------------
# Sessions


@dataclass
class SessionStats:
    """Monte Carlo statistics of reporting sessions

    Conditional statistics only count sessions delivered within the allowed
    transmissions; the others count every session, a failed one having used
    all of its transmissions.
    """

    delivery_probability: Estimate
    mean_transmissions: Estimate
    mean_transmissions_all: Estimate
    expected_delay: Estimate
    expected_delay_all: Estimate
    energy_per_report: Estimate
    battery_lifetime: Estimate
    failures: List[str] = field(default_factory=list)


def _frozen_points(
    density: float,
    xi: float,
    radius: float,
    nsessions: int,
    n_max: int,
    rng: np.random.Generator,
) -> _Points:
    """Interferers of every attempt when positions persist across a session

    Only devices active in at least one attempt matter. They form a Poisson
    process of intensity λ(1 - (1-ξ)^N); each gets a first active attempt
    from the truncated geometric law and independent activity afterwards.
    """
    ever = density * (1 - (1 - xi) ** n_max)
    sessions = _ppp_batch(ever, radius, nsessions, rng)
    npoints = len(sessions.trial)

    first_law = xi * (1 - xi) ** np.arange(n_max)
    first = rng.choice(n_max, size=npoints, p=first_law / first_law.sum())
    attempts = np.arange(n_max)
    active = rng.random((npoints, n_max)) < xi
    active[attempts < first[:, None]] = False
    active[np.arange(npoints), first] = True

    point, attempt = np.nonzero(active)
    trial = sessions.trial[point] * n_max + attempt

    return _Points(trial, sessions.xy[point])


def simulate_session(
    j: int,
    d: float,
    s: Scenario,
    cfg: SimConfig = SimConfig(),
    uplink_success: Optional[float] = None,
    ack_probability: Optional[float] = None,
    ctx: Optional[CliContext] = None,
) -> SessionStats:
    """Simulate reporting sessions with retransmissions

    Each attempt is an independent snapshot (or a Bernoulli draw with
    probability ``uplink_success`` when given), acknowledged with
    probability ``ack_probability`` (the ACK model's value by default). A
    session stops at the first acknowledged success or after the maximum
    number of transmissions.
    """
    _check_inputs(j, d, s.sinr_threshold, s)
    policy = s.retransmission
    n_max = policy.max_transmissions
    nsessions = cfg.sessions or max(1, cfg.trials // n_max)
    failures = _recommendations(ctx, cfg, d, nsessions)

    if ack_probability is None:
        ack_probability = ack_success_probability(j, d, s)

    radius = cfg.radius_for(d)
    intensities = _active_intensities(j, s)
    xis = [time_activity_factor(i, j, s) for i in range(s.nclasses)]
    per_trial = sum(intensities) * np.pi * radius ** 2 * n_max
    if uplink_success is not None:
        per_trial = 0
    block_size = _fitted_block_size(cfg, per_trial)

    def uplink(nsessions, rng):
        ntrials = nsessions * n_max
        if uplink_success is not None:
            decoded = rng.random(ntrials) < uplink_success
        else:
            if cfg.frozen_topology:
                points = [
                    _frozen_points(c.device_density, xi, radius, nsessions, n_max, rng)
                    if c.device_density > 0
                    else None
                    for c, xi in zip(s.classes, xis)
                ]
            else:
                points = _fresh_points(intensities, radius, ntrials, rng)
            decoded = _snapshot_outcomes(
                j, d, s.sinr_threshold, s, cfg, points, ntrials, rng
            )
        return decoded.reshape(nsessions, n_max)

    def kernel(nsessions, rng):
        decoded = uplink(nsessions, rng)
        acked = rng.random((nsessions, n_max)) < ack_probability
        done = decoded & acked

        delivered = done.any(axis=1)
        n = np.where(delivered, done.argmax(axis=1) + 1, n_max).astype(np.int64)
        n_ok = n[delivered]

        return (
            int(delivered.sum()),
            int(n_ok.sum()),
            int((n_ok ** 2).sum()),
            int(n.sum()),
            int((n ** 2).sum()),
        )

    sizes = _block_sizes(nsessions, block_size)
    results = _run_blocks(kernel, sizes, cfg.seed, cfg.jobs)
    delivered, total_ok, sq_ok, total, sq = (sum(col) for col in zip(*results))

    n_ok = _moments(delivered, total_ok, sq_ok)
    n_all = _moments(nsessions, total, sq)

    # delay and energy are affine in the number of transmissions
    packet_time = s.classes[j].packet_time
    slope = packet_time + policy.retry_wait
    delay_ok = _affine(n_ok, slope, -policy.retry_wait)
    delay_all = _affine(n_all, slope, -policy.retry_wait)

    e = s.energy
    tx_power = e.circuit_power + e.inv_pa_efficiency * s.classes[j].tx_power
    retry_energy = e.circuit_power * e.wait_time + e.rx_power * e.ack_time
    energy = _affine(
        n_all,
        tx_power * packet_time + retry_energy,
        e.circuit_power * e.active_time + e.rx_power * e.ack_time - retry_energy,
    )

    stored = e.battery_capacity * s.classes[j].mean_inter_packet_time
    if energy.mean > 0:
        lifetime = Estimate(
            stored / energy.mean,
            stored * energy.std_error / energy.mean ** 2,
            nsessions,
        )
    else:
        lifetime = Estimate(math.inf, math.nan, nsessions)

    return SessionStats(
        delivery_probability=_binomial(delivered, nsessions),
        mean_transmissions=n_ok,
        mean_transmissions_all=n_all,
        expected_delay=delay_ok,
        expected_delay_all=delay_all,
        energy_per_report=energy,
        battery_lifetime=lifetime,
        failures=failures,
    )


# ------------------------------------------------------------------------------
# Joint reception


def snapshot_mrc_success(
    cfg_jr: JointReceptionConfig,
    j: int,
    sinr_threshold: float,
    s: Scenario,
    cfg: SimConfig = SimConfig(),
    independent: bool = False,
    ctx: Optional[CliContext] = None,
) -> Estimate:
    """Fraction of snapshots in which the combined SINR reaches the threshold

    The device sits at the origin and AP m at distance d_m, at angle 2πm/ℳ.
    Each AP listens with probability p_m and sees its own fades. By default
    every AP is interfered by the same interferers; with ``independent`` each
    AP gets its own interferer process, as the convolution bound assumes.
    """
    ensure_valid_joint(cfg_jr)
    farthest = max(cfg_jr.ap_distances)
    _check_inputs(j, farthest, sinr_threshold, s)
    _recommendations(ctx, cfg, farthest, cfg.trials)

    naps = cfg_jr.naps
    angles = 2 * np.pi * np.arange(naps) / naps
    aps = [
        (d * np.cos(a), d * np.sin(a), d, p)
        for d, a, p in zip(cfg_jr.ap_distances, angles, cfg_jr.availabilities)
    ]

    radius = cfg.radius_for(farthest)
    intensities = _active_intensities(j, s)
    per_trial = sum(intensities) * np.pi * radius ** 2
    if independent:
        per_trial *= naps
    block_size = _fitted_block_size(cfg, per_trial)

    ref = s.classes[j]
    noise = s.channel.noise_power(ref.bandwidth)
    alpha = s.channel.pathloss_exponent

    def kernel(ntrials, rng):
        f_ref = ref.carrier.sample(rng, ntrials)
        if not independent:
            points = _fresh_points(intensities, radius, ntrials, rng)
            shared = _amplitudes(points, j, s, cfg.overlap, f_ref, rng)

        combined = np.zeros(ntrials)
        for x, y, d, p in aps:
            if independent:
                # every AP has its own interferers, centred on it
                points = _fresh_points(intensities, radius, ntrials, rng)
                trial, xy, amp = _amplitudes(points, j, s, cfg.overlap, f_ref, rng)
                receiver = (0.0, 0.0)
            else:
                trial, xy, amp = shared
                receiver = (x, y)
            interference = _interference(
                trial, xy, amp, receiver, ntrials, s.channel, rng
            )
            fade = _desired_fades(ntrials, rng)
            listening = rng.random(ntrials) < p
            with np.errstate(divide="ignore"):
                signal = fade * ref.tx_power * np.power(d, -alpha)
            combined += np.where(listening, signal / (noise + interference), 0.0)

        return (int((combined >= sinr_threshold).sum()),)

    sizes = _block_sizes(cfg.trials, block_size)
    results = _run_blocks(kernel, sizes, cfg.seed, cfg.jobs)

    return _binomial(sum(r[0] for r in results), cfg.trials)


# ------------------------------------------------------------------------------
# KPIs


def simulate_kpis(
    j: int,
    d: float,
    s: Scenario,
    cfg: SimConfig = SimConfig(),
    ctx: Optional[CliContext] = None,
) -> KpiResult:
    """Monte Carlo KPIs with 95% confidence half-widths

    Transmission counts and delays are conditional on delivery, except in
    ``"with-failure-tail"`` truncation where failed sessions count too.
    Energy and lifetime always count every session.
    """
    success = snapshot_success(j, d, s.sinr_threshold, s, cfg, ctx=ctx)
    sessions = simulate_session(j, d, s, cfg, ctx=ctx)

    if s.retransmission.truncation == "with-failure-tail":
        n_tx, delay = sessions.mean_transmissions_all, sessions.expected_delay_all
    else:
        n_tx, delay = sessions.mean_transmissions, sessions.expected_delay

    estimates = {
        "success_probability": success,
        "delivery_probability": sessions.delivery_probability,
        "mean_transmissions": n_tx,
        "expected_delay": delay,
        "energy_per_report": sessions.energy_per_report,
        "battery_lifetime": sessions.battery_lifetime,
    }

    return KpiResult(
        ack_probability=ack_success_probability(j, d, s),
        provenance="monte-carlo",
        ci_halfwidth={name: e.ci_halfwidth for name, e in estimates.items()},
        failures=sessions.failures,
        **{name: e.mean for name, e in estimates.items()},
    )
