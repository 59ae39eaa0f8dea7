"""Domain types of a coexistence scenario and the invariants they must meet

Every type is a frozen dataclass, so scenarios are hashable and can key the
caches used by the analytic engine. Constructing a type never raises; broken
invariants are reported as data by :func:`validate_scenario`, and operations
refuse scenarios which have any.

All quantities are SI linear units (W, Hz, s, m, devices/m²).
"""
from dataclasses import dataclass
from dataclasses import replace
from functools import lru_cache
from numbers import Integral
from typing import Iterator
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from scipy.special import gamma

from coexist._kpis.common.exceptions import ClassIndexError
from coexist._kpis.common.exceptions import InvalidScenarioError
from coexist._kpis.common.exceptions import Violation
from coexist._kpis.common.typing import FloatArray

__all__ = [
    "CarrierDistribution",
    "DownlinkWindow",
    "TechnologyClass",
    "ChannelModel",
    "EnergyModel",
    "RetransmissionPolicy",
    "AckModel",
    "Scenario",
    "validate_scenario",
    "ensure_valid",
    "check_index",
    "time_activity_factor",
]

CARRIER_KINDS = ("uniform", "point-mass", "tabulated-cdf")
FADING_KINDS = ("rayleigh", "general")
TRUNCATION_MODES = ("paper-literal", "normalized-conditional", "with-failure-tail")
ACK_KINDS = ("ideal", "fixed", "computed")


# ------------------------------------------------------------------------------
# Carrier frequency laws


@dataclass(frozen=True)
class CarrierDistribution:
    """Law of a class' carrier frequency over ``[f_min, f_max]``

    Carriers drift because of cheap oscillators, and some technologies hop
    between carriers on purpose, so a class' carrier is a random variable.

    Parameters
    ----------
    kind : ``str``
        One of ``"uniform"``, ``"point-mass"`` or ``"tabulated-cdf"``
    f_min : ``float``
        Lower end of the support in Hz
    f_max : ``float``
        Upper end of the support in Hz
    table : ``Tuple[Tuple[float, float], ...]``, optional
        ``(frequency, cdf)`` pairs of a tabulated law, strictly increasing in
        both coordinates, from ``(f_min, 0)`` to ``(f_max, 1)``. The CDF is
        linearly interpolated between pairs and clamped outside the support.
    """

    kind: str
    f_min: float
    f_max: float
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.table is not None:
            table = tuple((float(f), float(p)) for f, p in self.table)
            object.__setattr__(self, "table", table)

    @classmethod
    def uniform(cls, f_min: float, f_max: float) -> "CarrierDistribution":
        return cls("uniform", float(f_min), float(f_max))

    @classmethod
    def centred(cls, centre: float, width: float) -> "CarrierDistribution":
        """Uniform law of the given width around ``centre``"""
        return cls.uniform(centre - width / 2, centre + width / 2)

    @classmethod
    def point_mass(cls, f: float) -> "CarrierDistribution":
        return cls("point-mass", float(f), float(f))

    @classmethod
    def tabulated(
        cls, pairs: Sequence[Tuple[float, float]]
    ) -> "CarrierDistribution":
        pairs = tuple((float(f), float(p)) for f, p in pairs)
        return cls("tabulated-cdf", pairs[0][0], pairs[-1][0], pairs)

    @property
    def width(self) -> float:
        return self.f_max - self.f_min

    @property
    def knots(self) -> Tuple[float, ...]:
        """Frequencies where the CDF is not smooth"""
        if self.kind == "tabulated-cdf":
            return tuple(f for f, _ in self.table)
        elif self.kind == "point-mass":
            return (self.f_min,)
        else:
            return (self.f_min, self.f_max)

    def _table_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        fs, ps = zip(*self.table)
        return np.array(fs), np.array(ps)

    def cdf(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)

        if self.kind == "point-mass":
            out = np.where(x >= self.f_min, 1.0, 0.0)
        elif self.kind == "uniform":
            out = np.clip((x - self.f_min) / self.width, 0.0, 1.0)
        else:
            fs, ps = self._table_arrays()
            out = np.interp(x, fs, ps, left=0.0, right=1.0)

        return out[()]

    def pdf(self, x: FloatArray) -> FloatArray:
        """Density of the law; a point mass has none"""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.f_min) & (x <= self.f_max)

        if self.kind == "point-mass":
            raise ValueError("A point-mass carrier law has no density")
        elif self.kind == "uniform":
            out = np.where(inside, 1 / self.width, 0.0)
        else:
            fs, ps = self._table_arrays()
            slopes = np.diff(ps) / np.diff(fs)
            segment = np.searchsorted(fs, x, side="right") - 1
            segment = np.clip(segment, 0, len(slopes) - 1)
            out = np.where(inside, slopes[segment], 0.0)

        return out[()]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "point-mass":
            return np.full(size, self.f_min)
        elif self.kind == "uniform":
            return rng.uniform(self.f_min, self.f_max, size)
        else:
            fs, ps = self._table_arrays()
            return np.interp(rng.random(size), ps, fs)

    @property
    def mean(self) -> float:
        if self.kind == "tabulated-cdf":
            fs, ps = self._table_arrays()
            midpoints = (fs[1:] + fs[:-1]) / 2
            return float(np.sum(midpoints * np.diff(ps)))
        else:
            return (self.f_min + self.f_max) / 2


# ------------------------------------------------------------------------------
# Device classes


@dataclass(frozen=True)
class DownlinkWindow:
    """AP downlink configuration of one ACK receive window

    Parameters
    ----------
    tx_power : ``float``
        AP transmit power in W
    bandwidth : ``float``
        Downlink bandwidth in Hz, which sets the receiver noise power
    activity : ``float``
        Fraction of time a neighbouring AP transmits on this window's channel
    sinr_threshold : ``float``, optional
        Linear decoding threshold; the scenario's threshold when omitted
    """

    tx_power: float
    bandwidth: float
    activity: float
    sinr_threshold: Optional[float] = None


@dataclass(frozen=True)
class TechnologyClass:
    """Devices sharing one pattern of spectrum usage

    Two classes with the same ``technology_id`` are the same technology, so
    they interfere only within one of ``orthogonal_channels *
    orthogonal_codes`` orthogonal resources. ``technology_id`` defaults to
    the class name.
    """

    name: str
    tx_power: float
    bandwidth: float
    carrier: CarrierDistribution
    packet_time: float
    mean_inter_packet_time: float
    device_density: float
    ap_density: float = 0.0
    orthogonal_channels: int = 1
    orthogonal_codes: int = 1
    technology_id: Optional[str] = None
    downlink: Tuple[DownlinkWindow, ...] = ()

    def __post_init__(self):
        if self.technology_id is None:
            object.__setattr__(self, "technology_id", self.name)
        object.__setattr__(self, "downlink", tuple(self.downlink))

    @property
    def duty_cycle(self) -> float:
        return self.packet_time / self.mean_inter_packet_time

    def same_technology(self, other: "TechnologyClass") -> bool:
        return self.technology_id == other.technology_id


# ------------------------------------------------------------------------------
# Channel, energy and retransmissions


@dataclass(frozen=True)
class ChannelModel:
    """Unbounded power-law pathloss with block fading

    ``fading`` is ``"rayleigh"`` (unit-mean exponential power gain) or
    ``"general"``, in which case the fractional moment 𝔼(h^σ) is given
    directly by ``fractional_moment`` or derived from a unit-mean Nakagami
    shape ``nakagami_m``.
    The law applies to interfering links only; desired links are Rayleigh.
    """

    pathloss_exponent: float
    noise_density: float
    fading: str = "rayleigh"
    fractional_moment: Optional[float] = None
    nakagami_m: Optional[float] = None

    @property
    def sigma(self) -> float:
        return 2 / self.pathloss_exponent

    @property
    def fading_moment(self) -> float:
        """𝔼(h^σ) of the interferers' fading"""
        sigma = self.sigma
        if self.fading == "rayleigh":
            return float(gamma(1 + sigma))
        elif self.fractional_moment is not None:
            return self.fractional_moment
        else:
            m = self.nakagami_m
            return float(gamma(m + sigma) / (gamma(m) * m ** sigma))

    @property
    def samplable(self) -> bool:
        return self.fading == "rayleigh" or self.nakagami_m is not None

    def noise_power(self, bandwidth: float) -> float:
        return self.noise_density * bandwidth


@dataclass(frozen=True)
class EnergyModel:
    """Device energy ledger of one reporting period

    Parameters
    ----------
    circuit_power : ``float``
        Constant circuit consumption P_c in W
    inv_pa_efficiency : ``float``
        Inverse power amplifier efficiency η
    rx_power : ``float``
        Receive consumption P_r in W
    active_time : ``float``
        Data gathering/processing time T_a in s
    ack_time : ``float``
        ACK duration T_ack in s
    wait_time : ``float``
        Waiting time for an ACK before retransmitting, T_w in s
    battery_capacity : ``float``
        Stored energy E in J
    """

    circuit_power: float
    inv_pa_efficiency: float
    rx_power: float
    active_time: float
    ack_time: float
    wait_time: float
    battery_capacity: float


@dataclass(frozen=True)
class RetransmissionPolicy:
    max_transmissions: int = 1
    retry_wait: float = 0.0
    truncation: str = "paper-literal"


@dataclass(frozen=True)
class AckModel:
    """How likely an uplink success is acknowledged

    ``"ideal"`` always, ``"fixed"`` with ``probability``, ``"computed"`` from
    the downlink windows of the reference class and its AP density.
    """

    kind: str = "ideal"
    probability: Optional[float] = None

    @classmethod
    def ideal(cls) -> "AckModel":
        return cls("ideal")

    @classmethod
    def fixed(cls, probability: float) -> "AckModel":
        return cls("fixed", probability)

    @classmethod
    def computed(cls) -> "AckModel":
        return cls("computed")


# ------------------------------------------------------------------------------
# Scenario


@dataclass(frozen=True)
class Scenario:
    """K coexisting device classes sharing a band

    ``sinr_threshold`` is linear and effective, i.e. after despreading gain.
    """

    classes: Tuple[TechnologyClass, ...]
    channel: ChannelModel
    energy: EnergyModel
    sinr_threshold: float
    retransmission: RetransmissionPolicy = RetransmissionPolicy()
    ack_model: AckModel = AckModel()

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def nclasses(self) -> int:
        return len(self.classes)

    def index_of(self, name: str) -> int:
        for i, class_ in enumerate(self.classes):
            if class_.name == name:
                return i

        raise KeyError(name)

    def without(self, name: str) -> "Scenario":
        """Scenario with the named class removed"""
        classes = tuple(c for c in self.classes if c.name != name)
        if len(classes) == len(self.classes):
            raise KeyError(name)

        return replace(self, classes=classes)

    def with_device_density(self, density: float) -> "Scenario":
        classes = tuple(replace(c, device_density=density) for c in self.classes)
        return replace(self, classes=classes)

    def with_sinr_threshold(self, threshold: float) -> "Scenario":
        return replace(self, sinr_threshold=threshold)

    def with_class(self, i: int, **changes) -> "Scenario":
        classes = list(self.classes)
        classes[i] = replace(classes[i], **changes)
        return replace(self, classes=tuple(classes))


# ------------------------------------------------------------------------------
# Validation


def validate_scenario(s: Scenario) -> List[Violation]:
    """Every broken invariant of ``s``, each with a path to its field

    Returns
    -------
    violations : ``List[Violation]``
        Empty if the scenario is valid
    """
    return list(_scenario_violations(s))


def _scenario_violations(s: Scenario) -> Iterator[Violation]:
    if not s.classes:
        yield Violation("classes", "at least one class is required")

    names = [c.name for c in s.classes]
    for i, class_ in enumerate(s.classes):
        path = f"classes[{i}]"
        if names.count(class_.name) > 1:
            yield Violation(f"{path}.name", f"duplicate class name '{class_.name}'")
        yield from _class_violations(class_, path)

    yield from _channel_violations(s.channel, "channel")
    yield from _energy_violations(s.energy, "energy")
    yield from _retransmission_violations(s.retransmission, "retransmission")

    if not s.sinr_threshold > 0:
        yield Violation("sinr_threshold", "must be positive")

    ack = s.ack_model
    if ack.kind not in ACK_KINDS:
        yield Violation("ack_model.kind", f"must be one of {', '.join(ACK_KINDS)}")
    elif ack.kind == "fixed":
        if ack.probability is None or not 0 <= ack.probability <= 1:
            yield Violation("ack_model.probability", "must be within [0, 1]")


def _positive(obj, path: str, *fields: str) -> Iterator[Violation]:
    for field in fields:
        if not getattr(obj, field) > 0:
            yield Violation(f"{path}.{field}", "must be positive")


def _non_negative(obj, path: str, *fields: str) -> Iterator[Violation]:
    for field in fields:
        if not getattr(obj, field) >= 0:
            yield Violation(f"{path}.{field}", "must be non-negative")


def _class_violations(c: TechnologyClass, path: str) -> Iterator[Violation]:
    if not c.name:
        yield Violation(f"{path}.name", "must not be empty")

    yield from _positive(c, path, "tx_power", "bandwidth", "packet_time")
    yield from _non_negative(c, path, "device_density", "ap_density")

    if not c.mean_inter_packet_time >= c.packet_time:
        yield Violation(
            f"{path}.mean_inter_packet_time",
            "must be at least packet_time (duty cycle exceeds 1)",
        )

    for field in ("orthogonal_channels", "orthogonal_codes"):
        count = getattr(c, field)
        if not isinstance(count, Integral) or count < 1:
            yield Violation(f"{path}.{field}", "must be an integer of at least 1")

    yield from _carrier_violations(c.carrier, f"{path}.carrier")

    for k, window in enumerate(c.downlink):
        window_path = f"{path}.downlink[{k}]"
        yield from _positive(window, window_path, "tx_power", "bandwidth")
        if not 0 <= window.activity <= 1:
            yield Violation(f"{window_path}.activity", "must be within [0, 1]")
        if window.sinr_threshold is not None and not window.sinr_threshold > 0:
            yield Violation(f"{window_path}.sinr_threshold", "must be positive")


def _carrier_violations(c: CarrierDistribution, path: str) -> Iterator[Violation]:
    if c.kind not in CARRIER_KINDS:
        yield Violation(f"{path}.kind", f"must be one of {', '.join(CARRIER_KINDS)}")
        return

    if not c.f_min <= c.f_max:
        yield Violation(path, "f_min must not exceed f_max")
    elif c.kind == "uniform" and not c.f_min < c.f_max:
        yield Violation(path, "uniform law needs f_min < f_max")
    elif c.kind == "point-mass" and c.f_min != c.f_max:
        yield Violation(path, "point-mass law needs f_min = f_max")

    if c.kind != "tabulated-cdf":
        return

    if not c.table or len(c.table) < 2:
        yield Violation(f"{path}.table", "needs at least two (frequency, cdf) pairs")
        return

    fs, ps = zip(*c.table)
    if any(b <= a for a, b in zip(fs, fs[1:])):
        yield Violation(f"{path}.table", "frequencies must be strictly increasing")
    if any(b <= a for a, b in zip(ps, ps[1:])):
        yield Violation(f"{path}.table", "cdf values must be strictly increasing")
    if ps[0] != 0 or ps[-1] != 1:
        yield Violation(f"{path}.table", "cdf must run from 0 to 1")
    if fs[0] != c.f_min or fs[-1] != c.f_max:
        yield Violation(f"{path}.table", "table must span [f_min, f_max]")


def _channel_violations(c: ChannelModel, path: str) -> Iterator[Violation]:
    if not c.pathloss_exponent > 2:
        yield Violation(f"{path}.pathloss_exponent", "pathloss_exponent must exceed 2")

    yield from _non_negative(c, path, "noise_density")

    if c.fading not in FADING_KINDS:
        yield Violation(f"{path}.fading", f"must be one of {', '.join(FADING_KINDS)}")
    elif c.fading == "general":
        if c.fractional_moment is None and c.nakagami_m is None:
            yield Violation(
                f"{path}.fading", "general fading needs fractional_moment or nakagami_m"
            )
        if c.fractional_moment is not None and not c.fractional_moment > 0:
            yield Violation(f"{path}.fractional_moment", "must be positive")
        if c.nakagami_m is not None and not c.nakagami_m >= 0.5:
            yield Violation(f"{path}.nakagami_m", "must be at least 1/2")


def _energy_violations(e: EnergyModel, path: str) -> Iterator[Violation]:
    yield from _non_negative(
        e,
        path,
        "circuit_power",
        "inv_pa_efficiency",
        "rx_power",
        "active_time",
        "ack_time",
        "wait_time",
    )
    yield from _positive(e, path, "battery_capacity")


def _retransmission_violations(
    r: RetransmissionPolicy, path: str
) -> Iterator[Violation]:
    n = r.max_transmissions
    if not isinstance(n, Integral) or n < 1:
        yield Violation(f"{path}.max_transmissions", "must be an integer of at least 1")

    yield from _non_negative(r, path, "retry_wait")

    if r.truncation not in TRUNCATION_MODES:
        yield Violation(
            f"{path}.truncation", f"must be one of {', '.join(TRUNCATION_MODES)}"
        )


@lru_cache(maxsize=64)
def ensure_valid(s: Scenario) -> None:
    """Raises ``InvalidScenarioError`` if ``s`` breaks any invariant"""
    violations = validate_scenario(s)
    if violations:
        raise InvalidScenarioError(violations)


def check_index(i: int, s: Scenario):
    if not isinstance(i, Integral) or not 0 <= i < s.nclasses:
        raise ClassIndexError(i, s.nclasses)


# ------------------------------------------------------------------------------
# Activity


def time_activity_factor(i: int, j: int, s: Scenario) -> float:
    """Probability a class ``i`` device transmits non-orthogonally to class ``j``

    Different technologies never share orthogonal resources; within one
    technology only ``1 / (orthogonal_channels * orthogonal_codes)`` of the
    transmissions land on the reference resource.
    """
    ensure_valid(s)
    check_index(i, s)
    check_index(j, s)

    interferer = s.classes[i]
    if interferer.same_technology(s.classes[j]):
        z = 1 / (interferer.orthogonal_channels * interferer.orthogonal_codes)
    else:
        z = 1

    return z * interferer.packet_time / interferer.mean_inter_packet_time
