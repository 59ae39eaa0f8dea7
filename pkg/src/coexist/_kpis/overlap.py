"""Frequency overlap between the spectral supports of two packets

A packet occupies ``[f - ω/2, f + ω/2]`` and spreads its energy uniformly over
it, so an interferer contributes power in proportion to how much of the
reference band it overlaps. With a random interferer carrier the overlap is
random too; its expectation relative to the reference bandwidth is the
frequency activity factor υ.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from coexist._kpis.common.core import integrate
from coexist._kpis.common.exceptions import OverlapPreconditionError
from coexist._kpis.common.exceptions import OverlapRangeError
from coexist._kpis.common.typing import FloatArray
from coexist._kpis.model import CarrierDistribution
from coexist._kpis.model import Scenario
from coexist._kpis.model import check_index
from coexist._kpis.model import ensure_valid

__all__ = [
    "OverlapQuery",
    "deterministic_overlap",
    "overlap_cdf",
    "expected_overlap_ratio",
    "uniform_overlap_ratio",
    "satisfies_uniform_regime",
    "frequency_activity_factor",
]


@dataclass(frozen=True)
class OverlapQuery:
    """A reference band at a known carrier and an interferer's carrier law

    Parameters
    ----------
    ref_carrier : ``float``
        Reference carrier f₁ in Hz
    ref_bandwidth : ``float``
        Reference bandwidth ω₁ in Hz
    int_bandwidth : ``float``
        Interferer bandwidth ω₂ in Hz
    int_carrier_law : ``CarrierDistribution``
        Law of the interferer carrier f₂
    """

    ref_carrier: float
    ref_bandwidth: float
    int_bandwidth: float
    int_carrier_law: CarrierDistribution

    @property
    def max_overlap(self) -> float:
        return min(self.ref_bandwidth, self.int_bandwidth)

    @property
    def half_span(self) -> float:
        """Carrier separation below which the two bands overlap"""
        return (self.ref_bandwidth + self.int_bandwidth) / 2


def deterministic_overlap(
    f1: FloatArray, w1: FloatArray, f2: FloatArray, w2: FloatArray
) -> FloatArray:
    """Length of the intersection of two bands, in Hz

    Broadcasts over numpy arrays.
    """
    upper = np.minimum(np.add(f1, np.divide(w1, 2)), np.add(f2, np.divide(w2, 2)))
    lower = np.maximum(
        np.subtract(f1, np.divide(w1, 2)), np.subtract(f2, np.divide(w2, 2))
    )

    return np.maximum(0.0, upper - lower)


def overlap_cdf(q: OverlapQuery, x: float) -> float:
    """Probability the overlap is at most ``x`` Hz

    Raises
    ------
    OverlapRangeError
        If ``x`` is outside ``[0, min(ω₁, ω₂)]``
    """
    max_overlap = q.max_overlap
    if not 0 <= x <= max_overlap:
        raise OverlapRangeError(x, max_overlap)

    if x == max_overlap:
        return 1.0

    f1 = q.ref_carrier
    c = q.half_span
    law = q.int_carrier_law
    p = 1 - law.cdf(f1 + c - x) + law.cdf(f1 - c + x)

    return float(np.clip(p, 0.0, 1.0))


def _overlap_breakpoints(q: OverlapQuery):
    """Overlap lengths at which the integrand of the expected overlap kinks"""
    f1 = q.ref_carrier
    c = q.half_span
    for knot in q.int_carrier_law.knots:
        yield f1 + c - knot
        yield knot - f1 + c


def expected_overlap_ratio(q: OverlapQuery) -> float:
    """Expected overlap relative to the reference bandwidth, by quadrature

    Integrates the overlap CCDF over ``[0, min(ω₁, ω₂)]`` with an absolute
    tolerance of 1e-9. A point-mass interferer carrier has a deterministic
    overlap, which is returned directly.

    Raises
    ------
    QuadratureError
        If the quadrature does not converge
    """
    law = q.int_carrier_law
    if law.kind == "point-mass":
        overlap = deterministic_overlap(
            q.ref_carrier, q.ref_bandwidth, law.f_min, q.int_bandwidth
        )
        return float(overlap) / q.ref_bandwidth

    f1 = q.ref_carrier
    c = q.half_span
    m = q.max_overlap

    def ccdf(t):
        x = m * t
        return law.cdf(f1 + c - x) - law.cdf(f1 - c + x)

    points = [x / m for x in _overlap_breakpoints(q)]
    area = integrate(ccdf, 0.0, 1.0, "expected overlap", points=points, epsabs=1e-10)

    return float(np.clip(m * area / q.ref_bandwidth, 0.0, 1.0))


def satisfies_uniform_regime(q: OverlapQuery) -> bool:
    """Whether the uniform closed form applies to ``q``

    The interferer carrier must be uniform over a support which strictly
    contains the exclusion zone ``[f₁ - (ω₁+ω₂)/2, f₁ + (ω₁+ω₂)/2]``.
    """
    law = q.int_carrier_law
    c = q.half_span

    return (
        law.kind == "uniform"
        and law.f_max > q.ref_carrier + c
        and law.f_min < q.ref_carrier - c
    )


def uniform_overlap_ratio(q: OverlapQuery) -> float:
    """Closed-form expected overlap ratio ω₂ / (f₂,max - f₂,min)

    Raises
    ------
    OverlapPreconditionError
        If ``q`` is outside the closed form's validity region
    """
    if not satisfies_uniform_regime(q):
        raise OverlapPreconditionError()

    return q.int_bandwidth / q.int_carrier_law.width


@lru_cache(maxsize=4096)
def frequency_activity_factor(i: int, j: int, s: Scenario, carrier: float) -> float:
    """Frequency activity factor υ of class ``i`` on class ``j`` at ``carrier``"""
    ensure_valid(s)
    check_index(i, s)
    check_index(j, s)

    q = OverlapQuery(
        ref_carrier=carrier,
        ref_bandwidth=s.classes[j].bandwidth,
        int_bandwidth=s.classes[i].bandwidth,
        int_carrier_law=s.classes[i].carrier,
    )

    if satisfies_uniform_regime(q):
        return uniform_overlap_ratio(q)
    else:
        return expected_overlap_ratio(q)
