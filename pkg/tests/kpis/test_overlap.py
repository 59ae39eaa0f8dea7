import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pytest import approx
from pytest import mark
from pytest import raises

from coexist import kpis_refimpl
from coexist.kpis import CarrierDistribution
from coexist.kpis import OverlapQuery
from coexist.kpis import deterministic_overlap
from coexist.kpis import exceptions
from coexist.kpis import expected_overlap_ratio
from coexist.kpis import frequency_activity_factor
from coexist.kpis import overlap_cdf
from coexist.kpis import satisfies_uniform_regime
from coexist.kpis import uniform_overlap_ratio
from coexist.profiles import reference_scenario

from .examples import *


@mark.parametrize(
    ["f1", "w1", "f2", "w2", "overlap"],
    [
        (0.0, 50e3, 25e3, 50e3, 25e3),
        (0.0, 50e3, -25e3, 50e3, 25e3),
        (0.0, 50e3, 100e3, 50e3, 0.0),
        (0.0, 50e3, 50e3, 50e3, 0.0),
        (0.0, 125e3, 10e3, 20e3, 20e3),
        (0.0, 20e3, 10e3, 125e3, 20e3),
        (CARRIER, 125e3, CARRIER, 125e3, 125e3),
    ],
)
def test_deterministic_overlap(f1, w1, f2, w2, overlap):
    assert deterministic_overlap(f1, w1, f2, w2) == approx(overlap)
    assert kpis_refimpl.deterministic_overlap(f1, w1, f2, w2) == approx(overlap)


def test_deterministic_overlap_broadcasts():
    f2 = np.array([0.0, 25.0, 50.0, 75.0, 100.0])
    overlaps = deterministic_overlap(0.0, 100.0, f2, 100.0)
    assert overlaps == approx([100.0, 75.0, 50.0, 25.0, 0.0])


# Reference band [-0.5, 0.5], interferer band of width 1 with its carrier
# uniform over [-5, 5]: bands overlap when |f₂| < 1
wide_query = OverlapQuery(
    ref_carrier=0.0,
    ref_bandwidth=1.0,
    int_bandwidth=1.0,
    int_carrier_law=CarrierDistribution.uniform(-5.0, 5.0),
)


def test_overlap_cdf():
    assert overlap_cdf(wide_query, 0.0) == approx(0.8)
    assert overlap_cdf(wide_query, 0.5) == approx(0.9)
    assert overlap_cdf(wide_query, 1.0) == 1.0


@mark.parametrize("x", [-0.1, 1.1])
def test_overlap_cdf_range(x):
    with raises(exceptions.OverlapRangeError):
        overlap_cdf(wide_query, x)


def test_uniform_closed_form():
    assert satisfies_uniform_regime(wide_query)
    assert uniform_overlap_ratio(wide_query) == approx(0.1)
    assert expected_overlap_ratio(wide_query) == approx(0.1, abs=1e-9)


@mark.parametrize(
    "law",
    [
        CarrierDistribution.uniform(-1.0, 5.0),
        CarrierDistribution.uniform(-0.5, 0.5),
        CarrierDistribution.point_mass(0.0),
        CarrierDistribution.tabulated([(-5.0, 0.0), (0.0, 0.5), (5.0, 1.0)]),
    ],
)
def test_uniform_closed_form_preconditions(law):
    q = OverlapQuery(0.0, 1.0, 1.0, law)

    assert not satisfies_uniform_regime(q)
    with raises(exceptions.OverlapPreconditionError):
        uniform_overlap_ratio(q)


def test_point_mass_overlap_is_deterministic():
    law = CarrierDistribution.point_mass(CARRIER + 100e3)
    q = OverlapQuery(CARRIER, 125e3, 125e3, law)

    assert expected_overlap_ratio(q) == approx(25e3 / 125e3)


@st.composite
def uniform_regime_queries(draw):
    w1 = draw(st.floats(min_value=10e3, max_value=1e6))
    w2 = draw(st.floats(min_value=10e3, max_value=1e6))
    below = draw(st.floats(min_value=1e3, max_value=1e7))
    above = draw(st.floats(min_value=1e3, max_value=1e7))

    c = (w1 + w2) / 2
    law = CarrierDistribution.uniform(CARRIER - c - below, CARRIER + c + above)

    return OverlapQuery(CARRIER, w1, w2, law)


@given(uniform_regime_queries())
def test_quadrature_matches_closed_form(q):
    assert satisfies_uniform_regime(q)
    assert expected_overlap_ratio(q) == approx(uniform_overlap_ratio(q), abs=1e-9)


def test_quadrature_matches_closed_form_grid():
    rng = np.random.default_rng(1)
    for _ in range(20):
        w1, w2 = rng.uniform(10e3, 1e6, 2)
        below, above = rng.uniform(1e3, 1e7, 2)
        c = (w1 + w2) / 2
        law = CarrierDistribution.uniform(CARRIER - c - below, CARRIER + c + above)
        q = OverlapQuery(CARRIER, w1, w2, law)

        assert expected_overlap_ratio(q) == approx(uniform_overlap_ratio(q), abs=1e-9)


# Queries outside the uniform regime, where only sampling can check quadrature
irregular_queries = [
    OverlapQuery(0.0, 1.0, 1.0, CarrierDistribution.uniform(-0.3, 0.9)),
    OverlapQuery(0.0, 1.0, 2.0, CarrierDistribution.uniform(0.5, 4.0)),
    OverlapQuery(0.0, 2.0, 0.5, CarrierDistribution.uniform(-1.0, 1.0)),
    OverlapQuery(0.0, 1.0, 1.0, CarrierDistribution.uniform(-1.0, 0.2)),
    OverlapQuery(
        0.0,
        1.0,
        1.0,
        CarrierDistribution.tabulated([(-3.0, 0.0), (0.0, 0.7), (3.0, 1.0)]),
    ),
    OverlapQuery(
        0.0,
        1.0,
        0.5,
        CarrierDistribution.tabulated(
            [(-1.0, 0.0), (-0.2, 0.1), (0.4, 0.9), (2.0, 1.0)]
        ),
    ),
    OverlapQuery(10.0, 4.0, 1.0, CarrierDistribution.uniform(8.0, 20.0)),
    OverlapQuery(0.0, 1.0, 3.0, CarrierDistribution.uniform(-2.5, 2.5)),
    OverlapQuery(0.0, 1.0, 1.0, CarrierDistribution.uniform(0.9, 1.1)),
    OverlapQuery(
        0.0,
        3.0,
        1.0,
        CarrierDistribution.tabulated([(-4.0, 0.0), (-1.0, 0.5), (4.0, 1.0)]),
    ),
]


def assert_matches_sampling(q, ndraws, seed):
    law = q.int_carrier_law
    carriers = law.sample(np.random.default_rng(seed), ndraws)
    mean, se = kpis_refimpl.sampled_overlap_ratio(
        q.ref_carrier, q.ref_bandwidth, q.int_bandwidth, carriers
    )

    assert abs(expected_overlap_ratio(q) - mean) <= 4 * se + 1e-12


@mark.parametrize("q", irregular_queries[:4])
def test_quadrature_matches_sampling(q):
    assert_matches_sampling(q, 20_000, seed=7)


@mark.slow
@mark.parametrize("q", irregular_queries)
@mark.timeout(120)
def test_quadrature_matches_million_samples(q):
    assert_matches_sampling(q, 1_000_000, seed=11)


def test_frequency_activity_factor_of_reference_scenario():
    s = reference_scenario()

    assert frequency_activity_factor(1, 0, s, CARRIER) == approx(0.1)
    assert frequency_activity_factor(0, 0, s, CARRIER) == approx(1.0)
