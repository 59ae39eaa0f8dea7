"""Joint reception of one uplink packet by several APs

Every AP which is listening contributes its SINR to a maximum ratio
combiner, so the combined statistic is H = Σ p_m γ_m with p_m the fraction of
time AP m listens. Treating the per-AP SINRs as independent, the law of H is
the convolution of the laws of the scaled SINRs, each known in closed form
through its CCDF (the single-AP success probability at a scaled threshold).
The probability H reaches the threshold upper-bounds what joint reception can
achieve.
"""
from dataclasses import dataclass
from dataclasses import replace
from numbers import Integral
from typing import Iterator
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from coexist._kpis.analytic import delivery_probability
from coexist._kpis.analytic import evaluate_kpis
from coexist._kpis.analytic import fading_factor
from coexist._kpis.analytic import interference_coefficient
from coexist._kpis.common.core import check_distance
from coexist._kpis.common.core import integrate
from coexist._kpis.common.exceptions import GridTruncationError
from coexist._kpis.common.exceptions import InvalidJointConfigError
from coexist._kpis.common.exceptions import ModelInputError
from coexist._kpis.common.exceptions import NumericalError
from coexist._kpis.common.exceptions import Violation
from coexist._kpis.common.result import KpiResult
from coexist._kpis.common.typing import FloatArray
from coexist._kpis.model import Scenario
from coexist._kpis.model import check_index
from coexist._kpis.model import ensure_valid

__all__ = [
    "JointReceptionConfig",
    "validate_joint_reception",
    "ensure_valid_joint",
    "per_ap_sinr_ccdf",
    "mrc_success_probability",
    "mrc_kpis",
    "coverage_limit",
]

MIN_GRID_POINTS = 2 ** 10
MAX_TAIL_MASS = 1e-4
DEFAULT_GRID_HEADROOM = 1.25


@dataclass(frozen=True)
class JointReceptionConfig:
    """Distances and availabilities of the APs receiving a device

    The first AP is the serving one. ``grid_max`` truncates the SINR grid of
    the convolution; when omitted the grid spans slightly more than the
    threshold and mass beyond it is kept as an overflow bin.
    """

    ap_distances: Tuple[float, ...]
    availabilities: Tuple[float, ...]
    grid_max: Optional[float] = None
    grid_points: int = 2 ** 14

    def __post_init__(self):
        object.__setattr__(self, "ap_distances", tuple(map(float, self.ap_distances)))
        object.__setattr__(
            self, "availabilities", tuple(map(float, self.availabilities))
        )

    @property
    def naps(self) -> int:
        return len(self.ap_distances)

    def scaled_to(self, d: float) -> "JointReceptionConfig":
        """Same geometry with the serving AP at ``d``

        Distances keep their ratios to the serving distance; if that is zero
        they keep their offsets instead.
        """
        serving = self.ap_distances[0]
        if serving > 0:
            distances = tuple(x * d / serving for x in self.ap_distances)
        else:
            distances = tuple(x + d for x in self.ap_distances)

        return replace(self, ap_distances=distances)

    @classmethod
    def from_ap_density(
        cls,
        count: int,
        ap_density: float,
        serving_distance: float,
        availability: float = 1.0,
        **kwargs,
    ) -> "JointReceptionConfig":
        """The ``count`` nearest APs of a Poisson AP deployment

        With the nearest AP at distance d, the m-th nearest lies at
        √(d² + (m-1)/(πλ)) in mean square.
        """
        if not ap_density > 0:
            raise ModelInputError(
                f"AP density {ap_density} must be positive to place {count} APs"
            )

        distances = tuple(
            np.sqrt(serving_distance ** 2 + m / (np.pi * ap_density))
            for m in range(count)
        )

        return cls(distances, (availability,) * count, **kwargs)


def validate_joint_reception(cfg: JointReceptionConfig) -> List[Violation]:
    return list(_joint_violations(cfg))


def _joint_violations(cfg: JointReceptionConfig) -> Iterator[Violation]:
    if cfg.naps < 1:
        yield Violation("ap_distances", "at least one AP is required")
    if len(cfg.availabilities) != cfg.naps:
        yield Violation(
            "availabilities",
            f"has {len(cfg.availabilities)} entries for {cfg.naps} APs",
        )

    for m, d in enumerate(cfg.ap_distances):
        if not d >= 0:
            yield Violation(f"ap_distances[{m}]", "must be non-negative")
    for m, p in enumerate(cfg.availabilities):
        if not 0 <= p <= 1:
            yield Violation(f"availabilities[{m}]", "must be within [0, 1]")

    if cfg.grid_max is not None and not cfg.grid_max > 0:
        yield Violation("grid_max", "must be positive")
    n = cfg.grid_points
    if not isinstance(n, Integral) or n < MIN_GRID_POINTS:
        yield Violation(
            "grid_points", f"must be an integer of at least {MIN_GRID_POINTS}"
        )


def ensure_valid_joint(cfg: JointReceptionConfig):
    violations = validate_joint_reception(cfg)
    if violations:
        raise InvalidJointConfigError(violations)


# ------------------------------------------------------------------------------
# Per-AP laws


def _scaled_ccdf(
    j: int, d: float, p_av: float, x: np.ndarray, carrier: float, s: Scenario
) -> np.ndarray:
    """P(p_av·γ > x) for an array of ``x``, with p_av > 0"""
    ref = s.classes[j]
    channel = s.channel
    threshold = x / p_av

    noise = threshold * d ** channel.pathloss_exponent
    noise *= channel.noise_power(ref.bandwidth) / ref.tx_power
    interference = threshold ** channel.sigma * d ** 2 * fading_factor(channel)
    interference *= interference_coefficient(j, carrier, s)

    return np.exp(-(noise + interference))


def per_ap_sinr_ccdf(
    j: int, d_m: float, p_av: float, x: FloatArray, f_j: float, s: Scenario
) -> FloatArray:
    """CCDF of the availability-scaled SINR at one AP

    An AP which never listens contributes the constant 0, whose CCDF
    vanishes for every positive ``x``.
    """
    ensure_valid(s)
    check_index(j, s)
    check_distance(d_m)
    if not 0 <= p_av <= 1:
        raise ModelInputError(f"Availability {p_av} outside [0, 1]")

    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ModelInputError("SINR values must be non-negative")

    if p_av == 0:
        ccdf = np.where(x > 0, 0.0, 1.0)
    else:
        ccdf = np.where(x > 0, _scaled_ccdf(j, d_m, p_av, x, f_j, s), 1.0)

    return ccdf[()]


# ------------------------------------------------------------------------------
# Combining


def _cell_masses(
    j: int, d: float, p_av: float, edges: np.ndarray, carrier: float, s: Scenario
) -> np.ndarray:
    """Probability of each grid cell, from differences of the CCDF at its edges"""
    ccdf = _scaled_ccdf(j, d, p_av, edges, carrier, s)
    ccdf[0] = 1.0

    return -np.diff(ccdf)


def _combined_cdf(
    cfg: JointReceptionConfig,
    aps: List[Tuple[float, float]],
    j: int,
    threshold: float,
    carrier: float,
    s: Scenario,
) -> float:
    """P(H < threshold) at a known reference carrier"""
    n = cfg.grid_points
    if cfg.grid_max is None:
        top = DEFAULT_GRID_HEADROOM * threshold
    else:
        top = cfg.grid_max
    h = top / n
    edges = np.arange(n + 1) * h

    if cfg.grid_max is not None:
        tails = [
            float(_scaled_ccdf(j, d, p, np.array([top]), carrier, s)[0]) for d, p in aps
        ]
        tail = max(tails)
        if tail > MAX_TAIL_MASS or top < threshold:
            raise GridTruncationError(top, tail)

    combined = None
    for d, p in aps:
        masses = _cell_masses(j, d, p, edges, carrier, s)
        if cfg.grid_max is not None:
            masses /= masses.sum()

        if combined is None:
            combined = masses
        else:
            combined = np.clip(fftconvolve(combined, masses), 0.0, None)

    # Cell k of the sum of M cell-centred variables ends at (k + (M+1)/2)·h
    upper_edges = (np.arange(len(combined)) + (len(aps) + 1) / 2) * h
    cdf = np.cumsum(combined)

    return float(np.interp(threshold, upper_edges, cdf, left=0.0))


def mrc_success_probability(
    cfg: JointReceptionConfig, j: int, sinr_threshold: float, s: Scenario
) -> float:
    """Upper bound on success with maximum ratio combining across APs

    The per-AP cell probabilities of the scaled SINRs are convolved on a
    uniform grid with ``grid_points`` cells, and P(H ≥ threshold) is averaged
    over the reference carrier law.

    By default the grid ends at 1.25 times the threshold and every
    variable's mass beyond it is lumped into an overflow bin; a combined
    statistic with any component there exceeds the threshold, so the
    result needs no truncation. An explicit ``grid_max`` instead truncates
    and renormalises each law.

    Raises
    ------
    GridTruncationError
        If an explicit ``grid_max`` leaves a tail mass above 1e-4 or lies
        below the threshold
    QuadratureError
        If the carrier average does not converge
    """
    ensure_valid(s)
    ensure_valid_joint(cfg)
    check_index(j, s)
    if not sinr_threshold > 0:
        raise ModelInputError(f"SINR threshold {sinr_threshold} is not positive")

    aps = [(d, p) for d, p in zip(cfg.ap_distances, cfg.availabilities) if p > 0]
    if not aps:
        return 0.0

    def pointwise(f):
        return 1 - _combined_cdf(cfg, aps, j, sinr_threshold, f, s)

    law = s.classes[j].carrier
    if law.kind == "point-mass":
        p = pointwise(law.f_min)
    else:
        f_min, width = law.f_min, law.width

        def integrand(t):
            f = f_min + t * width
            return law.pdf(f) * width * pointwise(f)

        points = [(f - f_min) / width for f in law.knots]
        p = integrate(integrand, 0.0, 1.0, "carrier-averaged MRC success", points)

    return float(np.clip(p, 0.0, 1.0))


def mrc_kpis(
    cfg: JointReceptionConfig, j: int, d: float, s: Scenario
) -> KpiResult:
    """KPIs with the joint reception success substituted

    ``cfg`` is rescaled so that its serving AP lies at ``d``.
    """
    check_distance(d)
    p = mrc_success_probability(cfg.scaled_to(d), j, s.sinr_threshold, s)
    return evaluate_kpis(j, d, s, success=p)


def _first_below(func, threshold: float) -> float:
    """Smallest d ≥ 0 where the decreasing ``func`` falls to ``threshold``"""
    if func(0.0) <= threshold:
        return 0.0

    hi = 1.0
    for _ in range(64):
        if func(hi) <= threshold:
            break
        hi *= 2
    else:
        raise NumericalError(f"No distance found where the KPI falls below {threshold}")

    return brentq(lambda d: func(d) - threshold, 0.0, hi, xtol=1e-3)


def coverage_limit(
    j: int,
    s: Scenario,
    threshold: float = 0.05,
    jr: Optional[JointReceptionConfig] = None,
) -> float:
    """Distance beyond which neither retransmissions nor joint reception help

    Returns the smallest distance where the delivery probability with
    retransmissions, and the MRC success probability if ``jr`` is passed,
    are both at most ``threshold``.
    """
    ensure_valid(s)
    check_index(j, s)

    limit = _first_below(lambda d: delivery_probability(j, d, s), threshold)
    if jr is not None:
        ensure_valid_joint(jr)
        mrc_limit = _first_below(
            lambda d: mrc_success_probability(jr.scaled_to(d), j, s.sinr_threshold, s),
            threshold,
        )
        limit = max(limit, mrc_limit)

    return float(limit)
