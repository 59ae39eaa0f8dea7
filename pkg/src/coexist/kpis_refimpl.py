"""Naive implementations of the KPIs, for cross-checking ``coexist.kpis``

Everything here is written for obviousness rather than speed: explicit
loops, textbook sums and direct numerical integration of the interference
Laplace functional.
"""
from math import exp
from math import inf
from math import pi
from math import sqrt
from typing import List
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.stats import gamma as gamma_dist

from coexist._kpis.model import Scenario

__all__ = [
    "time_activity_factor",
    "deterministic_overlap",
    "sampled_overlap_ratio",
    "success_probability",
    "mean_transmissions",
    "expected_delay",
    "energy_per_report",
    "battery_lifetime",
    "lora_ack_probability",
    "noise_only_mrc_success",
    "degradation",
]


def time_activity_factor(i: int, j: int, s: Scenario) -> float:
    interferer = s.classes[i]
    duty_cycle = interferer.packet_time / interferer.mean_inter_packet_time

    if interferer.technology_id == s.classes[j].technology_id:
        resources = interferer.orthogonal_channels * interferer.orthogonal_codes
        return duty_cycle / resources
    else:
        return duty_cycle


def deterministic_overlap(f1: float, w1: float, f2: float, w2: float) -> float:
    top = min(f1 + w1 / 2, f2 + w2 / 2)
    bottom = max(f1 - w1 / 2, f2 - w2 / 2)

    if top > bottom:
        return top - bottom
    else:
        return 0.0


def sampled_overlap_ratio(
    f1: float, w1: float, w2: float, carriers: np.ndarray
) -> Tuple[float, float]:
    """Mean overlap ratio over sampled interferer carriers, with its std error"""
    ratios = [deterministic_overlap(f1, w1, f2, w2) / w1 for f2 in carriers]
    n = len(ratios)
    mean = sum(ratios) / n
    var = sum((r - mean) ** 2 for r in ratios) / (n - 1)

    return mean, sqrt(var / n)


def success_probability(
    j: int, d: float, threshold: float, upsilons: List[float], s: Scenario
) -> float:
    """Success probability by integrating the Laplace functional numerically

    ``upsilons[i]`` is the power weight of class ``i`` interferers. Each class
    contributes exp(-ξλ ∫ 2πr 𝔼[1 - exp(-a(r)h)] dr) with
    a(r) = γ d^α υ P_i / (P_j r^α).
    """
    ref = s.classes[j]
    alpha = s.channel.pathloss_exponent
    noise = s.channel.noise_density * ref.bandwidth

    log_p = -threshold * d ** alpha * noise / ref.tx_power

    for i, interferer in enumerate(s.classes):
        scale = threshold * d ** alpha * upsilons[i]
        scale *= interferer.tx_power / ref.tx_power
        if scale == 0 or interferer.device_density == 0:
            continue

        if s.channel.fading == "rayleigh":

            def outage(a):
                return a / (1 + a)

        else:
            m = s.channel.nakagami_m

            def outage(a):
                return 1 - (1 + a / m) ** -m

        def integrand(r):
            return 2 * pi * r * outage(scale * r ** -alpha) if r > 0 else 0.0

        # split at the radius where a(r) = 1, the integrand's bulk
        knee = scale ** (1 / alpha)
        area = quad(integrand, 0, knee)[0] + quad(integrand, knee, inf)[0]

        intensity = time_activity_factor(i, j, s) * interferer.device_density
        log_p -= intensity * area

    return exp(log_p)


def _attempt_probabilities(q: float, n_max: int, mode: str) -> List[float]:
    probs = []
    for n in range(1, n_max + 1):
        probs.append(q * (1 - q) ** (n - 1))

    if mode == "normalized-conditional":
        total = sum(probs)
        if total == 0:
            probs = [1 / n_max] * n_max
        else:
            probs = [p / total for p in probs]

    return probs


def mean_transmissions(q: float, n_max: int, mode: str) -> float:
    probs = _attempt_probabilities(q, n_max, mode)

    n_tx = 0.0
    for n, p in enumerate(probs, start=1):
        n_tx += n * p

    if mode == "with-failure-tail":
        n_tx += n_max * (1 - q) ** n_max

    return n_tx


def expected_delay(
    q: float, n_max: int, packet_time: float, retry_wait: float, mode: str
) -> float:
    probs = _attempt_probabilities(q, n_max, mode)

    delay = 0.0
    for n, p in enumerate(probs, start=1):
        delay += (n * packet_time + (n - 1) * retry_wait) * p

    if mode == "with-failure-tail":
        delay += (n_max * packet_time + (n_max - 1) * retry_wait) * (1 - q) ** n_max

    return delay


def energy_per_report(n_tx: float, tx_power: float, packet_time: float, e) -> float:
    """Energy ledger of one reporting period with ``e`` an ``EnergyModel``"""
    gathering = e.circuit_power * e.active_time
    transmitting = (e.circuit_power + e.inv_pa_efficiency * tx_power) * packet_time
    waiting = e.circuit_power * e.wait_time + e.rx_power * e.ack_time
    final_ack = e.rx_power * e.ack_time

    return gathering + transmitting * n_tx + waiting * (n_tx - 1) + final_ack


def battery_lifetime(capacity: float, period: float, energy: float) -> float:
    return capacity * period / energy


def lora_ack_probability(p1: float, p2: float) -> float:
    return 1 - (1 - p1) * (1 - p2)


def noise_only_mrc_success(naps: int, required_fade_sum: float) -> float:
    """P(h₁ + ... + h_ℳ ≥ c) for i.i.d. unit-mean exponential fades"""
    return float(gamma_dist.sf(required_fade_sum, naps))


def degradation(single: List[float], multi: List[float]) -> List[float]:
    percentages = []
    for a, b in zip(single, multi):
        percentages.append(100 * (1 - b / a))

    return percentages
