"""Closed-form KPIs of a reference device at a known distance from its AP

Interferers of every class form thinned Poisson point processes, so the
success probability is the Laplace functional of the aggregate interference
times the noise term,

    exp(-γ d^α 𝒩 / P_j) · exp(-γ^σ d² F Σ_i ξ_ij λ_i π (υ_ij P_i / P_j)^σ)

where F is 𝔼(h^σ)Γ(1-σ) for a general fading law, which for Rayleigh fading
reduces to 1/sinc(σ). The remaining KPIs follow from treating attempts as
independent trials truncated at the maximum number of transmissions.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import gamma

from coexist._kpis.common.core import check_distance
from coexist._kpis.common.core import integrate
from coexist._kpis.common.core import kpi
from coexist._kpis.common.exceptions import DownlinkMissingError
from coexist._kpis.common.exceptions import FadingModelError
from coexist._kpis.common.exceptions import ModelInputError
from coexist._kpis.common.exceptions import ZeroEnergyError
from coexist._kpis.common.result import KpiResult
from coexist._kpis.common.typing import Truncation
from coexist._kpis.model import ChannelModel
from coexist._kpis.model import Scenario
from coexist._kpis.model import check_index
from coexist._kpis.model import ensure_valid
from coexist._kpis.model import time_activity_factor
from coexist._kpis.overlap import frequency_activity_factor

__all__ = [
    "SuccessQuery",
    "fading_factor",
    "interference_coefficient",
    "success_probability_general",
    "success_probability_rayleigh",
    "success_probability",
    "success_probability_avg",
    "reference_success",
    "ack_success_probability",
    "expected_transmissions",
    "expected_delay_for",
    "mean_transmissions",
    "expected_delay",
    "energy_per_report",
    "battery_lifetime",
    "delivery_probability",
    "evaluate_kpis",
]


@dataclass(frozen=True)
class SuccessQuery:
    """Reference class, link distance, threshold and optionally the carrier

    A query without a carrier asks for the average over the reference class'
    carrier law.
    """

    ref_class_index: int
    distance: float
    sinr_threshold: float
    carrier: Optional[float] = None


def _check_query(q: SuccessQuery, s: Scenario):
    ensure_valid(s)
    check_index(q.ref_class_index, s)
    check_distance(q.distance)
    if not q.sinr_threshold > 0:
        raise ModelInputError(f"SINR threshold {q.sinr_threshold} is not positive")


def _carrier_of(q: SuccessQuery, s: Scenario) -> float:
    if q.carrier is not None:
        return q.carrier

    law = s.classes[q.ref_class_index].carrier
    if law.kind == "point-mass":
        return law.f_min

    raise ModelInputError(
        "Query has no carrier and the reference carrier law is not a point mass; "
        "use success_probability_avg"
    )


# ------------------------------------------------------------------------------
# Success probability


def fading_factor(channel: ChannelModel) -> float:
    """𝔼(h^σ)Γ(1-σ), written as 1/sinc(σ) for Rayleigh fading"""
    sigma = channel.sigma
    if channel.fading == "rayleigh":
        return 1 / float(np.sinc(sigma))
    else:
        return channel.fading_moment * float(gamma(1 - sigma))


@lru_cache(maxsize=4096)
def interference_coefficient(j: int, carrier: float, s: Scenario) -> float:
    """Σ_i ξ_ij λ_i π (υ_ij P_i / P_j)^σ, the interference load per m²"""
    sigma = s.channel.sigma
    ref = s.classes[j]

    coef = 0.0
    for i, class_ in enumerate(s.classes):
        if class_.device_density == 0:
            continue
        xi = time_activity_factor(i, j, s)
        upsilon = frequency_activity_factor(i, j, s, carrier)
        power_ratio = upsilon * class_.tx_power / ref.tx_power
        coef += xi * class_.device_density * np.pi * power_ratio ** sigma

    return coef


def _success(
    j: int, d: float, threshold: float, carrier: float, s: Scenario, factor: float
) -> float:
    ref = s.classes[j]
    channel = s.channel
    sigma = channel.sigma

    noise = threshold * d ** channel.pathloss_exponent
    noise *= channel.noise_power(ref.bandwidth) / ref.tx_power
    interference = threshold ** sigma * d ** 2 * factor
    interference *= interference_coefficient(j, carrier, s)

    return float(np.exp(-(noise + interference)))


def success_probability_general(q: SuccessQuery, s: Scenario) -> float:
    """Success probability at a known carrier for any fading law

    Uses 𝔼(h^σ)Γ(1-σ), with 𝔼(h^σ) = Γ(1+σ) under Rayleigh fading.
    """
    _check_query(q, s)
    channel = s.channel
    factor = channel.fading_moment * float(gamma(1 - channel.sigma))

    return _success(
        q.ref_class_index, q.distance, q.sinr_threshold, _carrier_of(q, s), s, factor
    )


def success_probability_rayleigh(q: SuccessQuery, s: Scenario) -> float:
    """Success probability at a known carrier under Rayleigh fading

    Raises
    ------
    FadingModelError
        If the scenario's fading is not Rayleigh
    """
    _check_query(q, s)
    if s.channel.fading != "rayleigh":
        raise FadingModelError(
            f"Rayleigh success probability used with '{s.channel.fading}' fading"
        )

    return _success(
        q.ref_class_index,
        q.distance,
        q.sinr_threshold,
        _carrier_of(q, s),
        s,
        fading_factor(s.channel),
    )


def success_probability(q: SuccessQuery, s: Scenario) -> float:
    """Success probability, averaged over the carrier law if ``q`` has none"""
    if q.carrier is None:
        return success_probability_avg(q, s)
    elif s.channel.fading == "rayleigh":
        return success_probability_rayleigh(q, s)
    else:
        return success_probability_general(q, s)


def _avg_breakpoints(j: int, s: Scenario):
    """Reference carriers at which the integrand of the average kinks"""
    ref = s.classes[j]
    yield from ref.carrier.knots
    for class_ in s.classes:
        c = (ref.bandwidth + class_.bandwidth) / 2
        for knot in class_.carrier.knots:
            yield knot - c
            yield knot + c


def success_probability_avg(q: SuccessQuery, s: Scenario) -> float:
    """Success probability averaged over the reference carrier law

    A point-mass carrier is evaluated pointwise, other laws by adaptive
    quadrature with an absolute tolerance of 1e-8.

    Raises
    ------
    QuadratureError
        If the quadrature does not converge
    """
    _check_query(q, s)
    j = q.ref_class_index
    law = s.classes[j].carrier
    factor = fading_factor(s.channel)

    def pointwise(f):
        return _success(j, q.distance, q.sinr_threshold, f, s, factor)

    if law.kind == "point-mass":
        return pointwise(law.f_min)

    f_min, width = law.f_min, law.width

    def integrand(t):
        f = f_min + t * width
        return law.pdf(f) * width * pointwise(f)

    points = [(f - f_min) / width for f in _avg_breakpoints(j, s)]
    p = integrate(integrand, 0.0, 1.0, "carrier-averaged success", points, epsabs=1e-8)

    return float(np.clip(p, 0.0, 1.0))


def reference_success(j: int, d: float, s: Scenario) -> float:
    """Carrier-averaged success at the scenario's own threshold"""
    return success_probability_avg(SuccessQuery(j, d, s.sinr_threshold), s)


@kpi
def ack_success_probability(j: int, d: float, s: Scenario) -> float:
    """Probability an uplink success is acknowledged

    In computed mode each downlink window of the reference class is a link
    from the serving AP, interfered by the neighbouring APs active on the
    same channel, and the ACK arrives if any window succeeds.

    Raises
    ------
    DownlinkMissingError
        If the computed mode is used without downlink windows
    """
    ack = s.ack_model
    if ack.kind == "ideal":
        return 1.0
    elif ack.kind == "fixed":
        return float(ack.probability)

    ref = s.classes[j]
    if not ref.downlink:
        raise DownlinkMissingError(ref.name)

    channel = s.channel
    sigma = channel.sigma
    factor = fading_factor(channel)

    miss = 1.0
    for window in ref.downlink:
        threshold = window.sinr_threshold or s.sinr_threshold
        noise = threshold * d ** channel.pathloss_exponent
        noise *= channel.noise_power(window.bandwidth) / window.tx_power
        interference = window.activity * ref.ap_density * np.pi
        interference *= threshold ** sigma * d ** 2 * factor
        miss *= 1 - np.exp(-(noise + interference))

    return float(1 - miss)


# ------------------------------------------------------------------------------
# Truncated retransmission sums


def _attempt_weights(q: float, n_max: int, mode: Truncation):
    """Attempt counts 1..N, their weights and the weight of exhausting all N"""
    n = np.arange(1, n_max + 1)
    weights = q * (1 - q) ** (n - 1)
    failure = (1 - q) ** n_max

    if mode == "normalized-conditional":
        if q == 0:
            weights = np.full(n_max, 1 / n_max)
        else:
            # 1 - (1-q)^N without cancellation when q is tiny
            with np.errstate(divide="ignore"):
                delivered = -np.expm1(n_max * np.log1p(-q))
            weights = weights / delivered
        failure = 0.0
    elif mode == "paper-literal":
        failure = 0.0

    return n, weights, failure


def expected_transmissions(q: float, n_max: int, mode: Truncation) -> float:
    """Mean number of transmissions with per-attempt success ``q``

    ``"paper-literal"`` sums n·q(1-q)^(n-1) over n = 1..N as is,
    ``"normalized-conditional"`` conditions on success within N attempts and
    ``"with-failure-tail"`` adds the N transmissions of a failed packet.
    """
    n, weights, failure = _attempt_weights(q, n_max, mode)
    return float(np.sum(n * weights) + n_max * failure)


def expected_delay_for(
    q: float, n_max: int, packet_time: float, retry_wait: float, mode: Truncation
) -> float:
    """Mean delay when the n-th attempt takes n·T + (n-1)·T_w to complete"""
    n, weights, failure = _attempt_weights(q, n_max, mode)
    delays = n * packet_time + (n - 1) * retry_wait

    return float(np.sum(delays * weights) + delays[-1] * failure)


# ------------------------------------------------------------------------------
# KPIs


def _success_or(success: Optional[float], j: int, d: float, s: Scenario) -> float:
    return reference_success(j, d, s) if success is None else success


@kpi
def mean_transmissions(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Mean transmissions per report, each attempt succeeding with P_sc·P_ack

    ``success`` overrides the single-AP success probability, e.g. with the
    joint reception one.
    """
    q = _success_or(success, j, d, s) * ack_success_probability(j, d, s)
    policy = s.retransmission

    return expected_transmissions(q, policy.max_transmissions, policy.truncation)


@kpi
def expected_delay(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Mean delay of a report; attempts succeed with P_sc alone"""
    q = _success_or(success, j, d, s)
    policy = s.retransmission

    return expected_delay_for(
        q,
        policy.max_transmissions,
        s.classes[j].packet_time,
        policy.retry_wait,
        policy.truncation,
    )


@kpi
def energy_per_report(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Device energy spent per reporting period, in J"""
    n_tx = mean_transmissions(j, d, s, success=success)
    e = s.energy
    ref = s.classes[j]
    tx_power = e.circuit_power + e.inv_pa_efficiency * ref.tx_power

    return (
        e.circuit_power * e.active_time
        + tx_power * ref.packet_time * n_tx
        + (n_tx - 1) * (e.circuit_power * e.wait_time + e.rx_power * e.ack_time)
        + e.rx_power * e.ack_time
    )


@kpi
def battery_lifetime(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Expected battery lifetime in s

    Raises
    ------
    ZeroEnergyError
        If the energy per report is not positive
    """
    energy = energy_per_report(j, d, s, success=success)
    if not energy > 0:
        raise ZeroEnergyError(energy)

    return s.energy.battery_capacity * s.classes[j].mean_inter_packet_time / energy


@kpi
def delivery_probability(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> float:
    """Probability a report gets through within the allowed transmissions"""
    q = _success_or(success, j, d, s) * ack_success_probability(j, d, s)
    return float(1 - (1 - q) ** s.retransmission.max_transmissions)


@kpi
def evaluate_kpis(
    j: int, d: float, s: Scenario, success: Optional[float] = None
) -> KpiResult:
    """Every analytic KPI of class ``j`` at distance ``d``"""
    p_sc = _success_or(success, j, d, s)

    return KpiResult(
        success_probability=p_sc,
        ack_probability=ack_success_probability(j, d, s),
        delivery_probability=delivery_probability(j, d, s, success=p_sc),
        mean_transmissions=mean_transmissions(j, d, s, success=p_sc),
        expected_delay=expected_delay(j, d, s, success=p_sc),
        energy_per_report=energy_per_report(j, d, s, success=p_sc),
        battery_lifetime=battery_lifetime(j, d, s, success=p_sc),
        provenance="analytic",
    )
