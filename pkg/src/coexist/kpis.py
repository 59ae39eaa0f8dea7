"""Key performance indicators of coexisting grant-free IoT technologies

Devices of K classes are scattered as Poisson point processes and transmit
without coordination, so a packet from a reference device is interfered by
every device of every class which happens to be active on an overlapping
time-frequency resource. This module computes, for a reference device at a
given distance from its access point (AP),

* the probability a single transmission is decoded,
* the mean number of transmissions, the delay, the energy spent per report and
  the battery lifetime when reports are retransmitted until acknowledged,
* the same quantities when several APs combine their copies of the packet.

Every quantity is available in closed form (``evaluate_kpis`` and friends) and
as a Monte Carlo estimate with confidence intervals (``simulate_kpis`` and
friends), so the two can validate each other.

All quantities are SI linear units: W, Hz, s, m and devices or APs per m².
dB and dBm appear only in scenario files; convert with ``dbm_to_watts`` and
``db_to_linear``.

Notes
-----
The closed forms replace each interferer's random frequency overlap by its
expectation, the frequency activity factor υ. Inside the fractional power σ
this is exact only when υ is deterministic, so Monte Carlo estimates with
``overlap="sampled"`` can sit slightly above the closed form when the
interferer's overlap is genuinely random.
"""
from typing import Optional

from coexist import _kpis
from coexist._kpis import AckModel
from coexist._kpis import CarrierDistribution
from coexist._kpis import ChannelModel
from coexist._kpis import DownlinkWindow
from coexist._kpis import EnergyModel
from coexist._kpis import Estimate
from coexist._kpis import JointReceptionConfig
from coexist._kpis import KpiResult
from coexist._kpis import OverlapQuery
from coexist._kpis import RetransmissionPolicy
from coexist._kpis import Scenario
from coexist._kpis import SessionStats
from coexist._kpis import SimConfig
from coexist._kpis import SuccessQuery
from coexist._kpis import TechnologyClass
from coexist._kpis import db_to_linear
from coexist._kpis import dbm_to_watts
from coexist._kpis import hz_to_mhz
from coexist._kpis import linear_to_db
from coexist._kpis import mhz_to_hz
from coexist._kpis import watts_to_dbm
from coexist._kpis.common import exceptions

__all__ = [
    # types
    "CarrierDistribution",
    "DownlinkWindow",
    "TechnologyClass",
    "ChannelModel",
    "EnergyModel",
    "RetransmissionPolicy",
    "AckModel",
    "Scenario",
    "KpiResult",
    "OverlapQuery",
    "SuccessQuery",
    "JointReceptionConfig",
    "SimConfig",
    "Estimate",
    "SessionStats",
    # model
    "validate_scenario",
    "time_activity_factor",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "hz_to_mhz",
    "mhz_to_hz",
    # overlap
    "deterministic_overlap",
    "overlap_cdf",
    "expected_overlap_ratio",
    "uniform_overlap_ratio",
    "satisfies_uniform_regime",
    "frequency_activity_factor",
    # analytic
    "success_probability_general",
    "success_probability_rayleigh",
    "success_probability_avg",
    "success_probability",
    "ack_success_probability",
    "mean_transmissions",
    "expected_delay",
    "energy_per_report",
    "battery_lifetime",
    "expected_transmissions",
    "expected_delay_for",
    "delivery_probability",
    "evaluate_kpis",
    # joint reception
    "validate_joint_reception",
    "per_ap_sinr_ccdf",
    "mrc_success_probability",
    "mrc_kpis",
    "coverage_limit",
    # monte carlo
    "sample_ppp",
    "snapshot_success",
    "simulate_session",
    "snapshot_mrc_success",
    "simulate_kpis",
    "exceptions",
]


# ------------------------------------------------------------------------------
# Model


def validate_scenario(s: Scenario):
    """Every broken invariant of a scenario

    Parameters
    ----------
    s : ``Scenario``
        Scenario to check

    Returns
    -------
    violations : ``List[Violation]``
        Path to the offending field and a message for each broken invariant;
        empty if ``s`` is valid
    """
    return _kpis.validate_scenario(s)


def time_activity_factor(i: int, j: int, s: Scenario) -> float:
    """Probability a class ``i`` device transmits on the resource of class ``j``

    Parameters
    ----------
    i : ``int``
        Index of the interfering class
    j : ``int``
        Index of the reference class
    s : ``Scenario``
        Valid scenario

    Returns
    -------
    xi : ``float``
        The duty cycle T/𝒯 of class ``i``, divided by its number of orthogonal
        channels and codes when both classes are the same technology

    Raises
    ------
    InvalidScenarioError
        If ``s`` is invalid
    ClassIndexError
        If ``i`` or ``j`` is not a class of ``s``
    """
    return _kpis.time_activity_factor(i, j, s)


# ------------------------------------------------------------------------------
# Overlap


def deterministic_overlap(f1, w1, f2, w2):
    """Length of the intersection of the bands ``[f ± w/2]``, in Hz

    Broadcasts over arrays.
    """
    return _kpis.deterministic_overlap(f1, w1, f2, w2)


def overlap_cdf(q: OverlapQuery, x: float) -> float:
    """Probability the overlap of a random interferer band is at most ``x`` Hz

    Parameters
    ----------
    q : ``OverlapQuery``
        Reference band and interferer carrier law
    x : ``float``
        Overlap in Hz, within ``[0, min(ω₁, ω₂)]``

    Returns
    -------
    p : ``float``
        P(overlap ≤ x)

    Raises
    ------
    OverlapRangeError
        If ``x`` is out of range
    """
    return _kpis.overlap_cdf(q, x)


def expected_overlap_ratio(q: OverlapQuery) -> float:
    """Expected overlap as a fraction of the reference bandwidth

    The overlap CCDF is integrated by adaptive quadrature to an absolute
    error of 1e-9.

    Parameters
    ----------
    q : ``OverlapQuery``
        Reference band and interferer carrier law

    Returns
    -------
    upsilon : ``float``
        The frequency activity factor, within [0, 1]

    Raises
    ------
    QuadratureError
        If the quadrature does not converge
    """
    return _kpis.expected_overlap_ratio(q)


def uniform_overlap_ratio(q: OverlapQuery) -> float:
    """Closed-form expected overlap ratio for a wide uniform carrier law

    Parameters
    ----------
    q : ``OverlapQuery``
        Query whose interferer carrier is uniform over a support strictly
        containing ``[f₁ - (ω₁+ω₂)/2, f₁ + (ω₁+ω₂)/2]``

    Returns
    -------
    upsilon : ``float``
        ω₂ divided by the width of the interferer's carrier support

    Raises
    ------
    OverlapPreconditionError
        If the query is outside the closed form's validity region
    """
    return _kpis.uniform_overlap_ratio(q)


def satisfies_uniform_regime(q: OverlapQuery) -> bool:
    """Whether the interferer carrier is uniform over a support strictly
    containing the exclusion zone, where ``uniform_overlap_ratio`` applies"""
    return _kpis.satisfies_uniform_regime(q)


def frequency_activity_factor(i: int, j: int, s: Scenario, carrier: float) -> float:
    """Frequency activity factor of class ``i`` on class ``j`` at ``carrier``

    Uses the uniform closed form when it applies and quadrature otherwise.
    """
    return _kpis.frequency_activity_factor(i, j, s, carrier)


# ------------------------------------------------------------------------------
# Analytic engine


def success_probability_general(q: SuccessQuery, s: Scenario) -> float:
    """Probability one transmission is decoded, for any fading law

    Parameters
    ----------
    q : ``SuccessQuery``
        Reference class, distance, threshold and carrier
    s : ``Scenario``
        Valid scenario

    Returns
    -------
    p : ``float``
        Success probability within (0, 1]; exactly 1 at distance 0
    """
    return _kpis.success_probability_general(q, s)


def success_probability_rayleigh(q: SuccessQuery, s: Scenario) -> float:
    """Probability one transmission is decoded under Rayleigh fading

    Raises
    ------
    FadingModelError
        If the scenario's fading is not Rayleigh
    """
    return _kpis.success_probability_rayleigh(q, s)


def success_probability(q: SuccessQuery, s: Scenario) -> float:
    """Success probability of ``q``

    Averages over the reference carrier law when ``q`` has no carrier, and
    otherwise picks the Rayleigh or the general form after the scenario's
    fading law.
    """
    return _kpis.success_probability(q, s)


def success_probability_avg(q: SuccessQuery, s: Scenario) -> float:
    """Success probability averaged over the reference carrier law

    Parameters
    ----------
    q : ``SuccessQuery``
        Query; its carrier is ignored
    s : ``Scenario``
        Valid scenario

    Returns
    -------
    p : ``float``
        Carrier-averaged success probability, by adaptive quadrature to an
        absolute error of 1e-8 (or pointwise for a point-mass carrier)

    Raises
    ------
    QuadratureError
        If the quadrature does not converge
    """
    return _kpis.success_probability_avg(q, s)


def ack_success_probability(j: int, d: float, s: Scenario) -> float:
    """Probability an uplink success is acknowledged

    Raises
    ------
    DownlinkMissingError
        If the computed ACK model is used for a class without downlink windows
    """
    return _kpis.ack_success_probability(j, d, s)


def expected_transmissions(q: float, n_max: int, mode: str) -> float:
    """Mean transmissions when each attempt succeeds with probability ``q``

    Parameters
    ----------
    q : ``float``
        Per-attempt success probability
    n_max : ``int``
        Maximum number of transmissions
    mode : ``str``
        ``"paper-literal"`` sums n·q(1-q)^(n-1) over n = 1..N as is,
        ``"normalized-conditional"`` conditions on delivery within N attempts
        and ``"with-failure-tail"`` also counts the N transmissions of an
        undelivered report
    """
    return _kpis.expected_transmissions(q, n_max, mode)


def expected_delay_for(
    q: float, n_max: int, packet_time: float, retry_wait: float, mode: str
) -> float:
    """Mean delay when delivery on attempt n takes n·T + (n-1)·T_w"""
    return _kpis.expected_delay_for(q, n_max, packet_time, retry_wait, mode)


def mean_transmissions(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Mean number of transmissions per report

    Parameters
    ----------
    j : ``int``
        Reference class index
    d : ``float``
        Distance to the serving AP in m
    s : ``Scenario``
        Valid scenario; its retransmission policy sets the maximum number of
        transmissions and how the truncated sum is read
    success : ``float``, optional
        Per-attempt uplink success probability to use instead of the single-AP
        closed form

    Returns
    -------
    n_tx : ``float``
        Mean transmissions
    """
    return _kpis.mean_transmissions(j, d, s, success=success)


def expected_delay(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Mean delay of a report in s

    Attempts succeed with the uplink success probability alone.
    """
    return _kpis.expected_delay(j, d, s, success=success)


def energy_per_report(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Energy a device spends per reporting period, in J"""
    return _kpis.energy_per_report(j, d, s, success=success)


def battery_lifetime(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Expected battery lifetime in s

    Raises
    ------
    ZeroEnergyError
        If the energy per report is not positive
    """
    return _kpis.battery_lifetime(j, d, s, success=success)


def delivery_probability(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Probability a report is acknowledged within the allowed transmissions"""
    return _kpis.delivery_probability(j, d, s, success=success)


def evaluate_kpis(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> KpiResult:
    """Every closed-form KPI of class ``j`` at distance ``d``

    Returns
    -------
    result : ``KpiResult``
        Dataclass of the KPIs, with ``provenance="analytic"``
    """
    return _kpis.evaluate_kpis(j, d, s, success=success)


# ------------------------------------------------------------------------------
# Joint reception


def validate_joint_reception(cfg: JointReceptionConfig):
    """Every broken invariant of a joint reception config, as violations"""
    return _kpis.validate_joint_reception(cfg)


def per_ap_sinr_ccdf(j: int, d_m: float, p_av: float, x, f_j: float, s: Scenario):
    """CCDF of the SINR at one AP scaled by its availability

    Parameters
    ----------
    j : ``int``
        Reference class index
    d_m : ``float``
        Distance to the AP in m
    p_av : ``float``
        Fraction of time the AP listens
    x : ``float`` or ``np.ndarray``
        Non-negative SINR values
    f_j : ``float``
        Reference carrier in Hz
    s : ``Scenario``
        Valid scenario

    Returns
    -------
    p : ``float`` or ``np.ndarray``
        P(p_av·γ > x)
    """
    return _kpis.per_ap_sinr_ccdf(j, d_m, p_av, x, f_j, s)


def mrc_success_probability(
    cfg: JointReceptionConfig, j: int, sinr_threshold: float, s: Scenario
) -> float:
    """Upper bound on success when APs combine their copies of a packet

    Parameters
    ----------
    cfg : ``JointReceptionConfig``
        AP distances, availabilities and the convolution grid
    j : ``int``
        Reference class index
    sinr_threshold : ``float``
        Linear decoding threshold
    s : ``Scenario``
        Valid scenario

    Returns
    -------
    p : ``float``
        Probability the availability-weighted SINR sum reaches the threshold,
        treating per-AP SINRs as independent

    Raises
    ------
    GridTruncationError
        If an explicit ``grid_max`` truncates too much probability
    """
    return _kpis.mrc_success_probability(cfg, j, sinr_threshold, s)


def mrc_kpis(cfg: JointReceptionConfig, j: int, d: float, s: Scenario) -> KpiResult:
    """Closed-form KPIs with the joint reception success substituted"""
    return _kpis.mrc_kpis(cfg, j, d, s)


def coverage_limit(
    j: int,
    s: Scenario,
    threshold: float = 0.05,
    jr: Optional[JointReceptionConfig] = None,
) -> float:
    """Distance beyond which retransmissions and joint reception cannot help

    Returns
    -------
    d : ``float``
        Smallest distance in m where the delivery probability, and the joint
        reception success if ``jr`` is passed, are at most ``threshold``
    """
    return _kpis.coverage_limit(j, s, threshold, jr)


# ------------------------------------------------------------------------------
# Monte Carlo


def sample_ppp(intensity: float, radius: float, rng):
    """Points of a Poisson point process on a disc, as an ``(n, 2)`` array"""
    return _kpis.sample_ppp(intensity, radius, rng)


def snapshot_success(
    j: int, d: float, sinr_threshold: float, s: Scenario, cfg: SimConfig = SimConfig()
) -> Estimate:
    """Monte Carlo estimate of the single-transmission success probability

    Parameters
    ----------
    j : ``int``
        Reference class index
    d : ``float``
        Distance to the serving AP in m
    sinr_threshold : ``float``
        Linear decoding threshold
    s : ``Scenario``
        Valid scenario with Rayleigh or Nakagami fading
    cfg : ``SimConfig``
        Trials, seed, region and sampling options

    Returns
    -------
    estimate : ``Estimate``
        Fraction of decoded snapshots with its binomial standard error
    """
    return _kpis.snapshot_success(j, d, sinr_threshold, s, cfg)


def simulate_session(
    j: int,
    d: float,
    s: Scenario,
    cfg: SimConfig = SimConfig(),
    uplink_success: Optional[float] = None,
    ack_probability: Optional[float] = None,
) -> SessionStats:
    """Monte Carlo statistics of reporting sessions with retransmissions"""
    return _kpis.simulate_session(
        j, d, s, cfg, uplink_success=uplink_success, ack_probability=ack_probability
    )


def snapshot_mrc_success(
    cfg_jr: JointReceptionConfig,
    j: int,
    sinr_threshold: float,
    s: Scenario,
    cfg: SimConfig = SimConfig(),
    independent: bool = False,
) -> Estimate:
    """Monte Carlo estimate of the joint reception success probability

    With ``independent=False`` all APs see the same interferers, otherwise
    each AP gets its own.
    """
    return _kpis.snapshot_mrc_success(cfg_jr, j, sinr_threshold, s, cfg, independent)


def simulate_kpis(
    j: int, d: float, s: Scenario, cfg: SimConfig = SimConfig()
) -> KpiResult:
    """Monte Carlo KPIs of class ``j`` at distance ``d``

    Returns
    -------
    result : ``KpiResult``
        Dataclass of the KPIs with ``provenance="monte-carlo"`` and their 95%
        confidence half-widths
    """
    return _kpis.simulate_kpis(j, d, s, cfg)
