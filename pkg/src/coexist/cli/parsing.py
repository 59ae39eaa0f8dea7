"""Scenario files, sweep specifications and joint reception specifications

A scenario file is one JSON document::

    {
      "classes": [{"name": "lora", "tx_power_dbm": 20, "bandwidth": 125000, ...}],
      "channel": {"pathloss_exponent": 4, "noise_density_dbm_hz": -174},
      "energy": {...},
      "retransmission": {"max_transmissions": 7, ...},
      "sinr_threshold_db": 3,
      "ack_model": {"kind": "ideal"},
      "assumptions": ["..."]
    }

Every quantity is read in SI units from its plain key, or converted from a
suffixed key: ``_dbm`` for powers, ``_dbm_hz`` for the noise density, ``_db``
for thresholds and ``_mhz`` for frequencies. Emitted files only use SI keys.
"""
import json
from dataclasses import asdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np

from coexist._kpis.joint import JointReceptionConfig
from coexist._kpis.joint import ensure_valid_joint
from coexist._kpis.model import AckModel
from coexist._kpis.model import CarrierDistribution
from coexist._kpis.model import ChannelModel
from coexist._kpis.model import DownlinkWindow
from coexist._kpis.model import EnergyModel
from coexist._kpis.model import RetransmissionPolicy
from coexist._kpis.model import Scenario
from coexist._kpis.model import TechnologyClass
from coexist._kpis.model import ensure_valid
from coexist._kpis.units import db_to_linear
from coexist._kpis.units import dbm_to_watts
from coexist._kpis.units import mhz_to_hz

__all__ = [
    "DataParsingError",
    "ScenarioParsingError",
    "ScenarioFile",
    "parse_scenario",
    "load_scenario",
    "scenario_to_dict",
    "dump_scenario",
    "SWEEP_VARIABLES",
    "SweepParsingError",
    "SweepSpec",
    "parse_sweep",
    "MrcParsingError",
    "parse_mrc",
    "resolve_class",
]


class DataParsingError(ValueError):
    """Base class for parsing-related errors"""


@dataclass
class ScenarioParsingError(DataParsingError):
    """Error for a scenario file entry which cannot be read"""

    path: str
    reason: str

    def __str__(self):
        return f"{self.path}: {self.reason}"


# ------------------------------------------------------------------------------
# Scenario files

UNIT_SUFFIXES = {
    "W": ("_dbm", dbm_to_watts),
    "W/Hz": ("_dbm_hz", dbm_to_watts),
    "Hz": ("_mhz", mhz_to_hz),
    "linear": ("_db", db_to_linear),
}

_MISSING = object()


class _Node:
    """A JSON object being read, which remembers the keys it handed out"""

    def __init__(self, obj: Any, path: str):
        if not isinstance(obj, dict):
            raise ScenarioParsingError(path or "<root>", "expected an object")

        self.obj = obj
        self.path = path
        self.seen = set()

    def at(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def _lookup(self, key: str, unit: Optional[str], default: Any) -> Tuple[str, Any]:
        candidates = [key]
        if unit:
            candidates.append(key + UNIT_SUFFIXES[unit][0])

        given = [k for k in candidates if k in self.obj]
        self.seen.update(given)

        if len(given) > 1:
            raise ScenarioParsingError(
                self.at(key), f"given both as '{given[0]}' and '{given[1]}'"
            )
        if not given or self.obj[given[0]] is None:
            if default is _MISSING:
                raise ScenarioParsingError(self.at(key), "missing")
            return key, default

        return given[0], self.obj[given[0]]

    def quantity(self, key: str, unit: str = None, default: Any = _MISSING) -> Any:
        found, value = self._lookup(key, unit, default)
        if found not in self.obj or self.obj[found] is None:
            return value

        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioParsingError(
                self.at(found), f"expected a number, got {value!r}"
            )

        if found != key:
            convert = UNIT_SUFFIXES[unit][1]
            return float(convert(value))
        return float(value)

    def integer(self, key: str, default: Any = _MISSING) -> Any:
        found, value = self._lookup(key, None, default)
        if found not in self.obj or self.obj[found] is None:
            return value

        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioParsingError(
                self.at(found), f"expected an integer, got {value!r}"
            )
        return value

    def text(self, key: str, default: Any = _MISSING) -> Any:
        found, value = self._lookup(key, None, default)
        if found not in self.obj or self.obj[found] is None:
            return value

        if not isinstance(value, str):
            raise ScenarioParsingError(
                self.at(found), f"expected a string, got {value!r}"
            )
        return value

    def child(self, key: str) -> "_Node":
        _, value = self._lookup(key, None, _MISSING)
        return _Node(value, self.at(key))

    def children(self, key: str, optional: bool = False) -> List["_Node"]:
        _, value = self._lookup(key, None, [] if optional else _MISSING)
        if not isinstance(value, list):
            raise ScenarioParsingError(self.at(key), "expected a list")

        return [_Node(item, f"{self.at(key)}[{k}]") for k, item in enumerate(value)]

    def raw(self, key: str, default: Any = _MISSING) -> Any:
        _, value = self._lookup(key, None, default)
        return value

    def done(self):
        """Raises on keys which were never read"""
        unknown = sorted(set(self.obj) - self.seen)
        if unknown:
            raise ScenarioParsingError(self.at(unknown[0]), "unknown key")


def _parse_carrier(node: _Node) -> CarrierDistribution:
    kind = node.text("kind")

    if kind == "point-mass":
        carrier = CarrierDistribution.point_mass(node.quantity("frequency", "Hz"))
    elif kind == "uniform":
        carrier = CarrierDistribution.uniform(
            node.quantity("f_min", "Hz"), node.quantity("f_max", "Hz")
        )
    elif kind == "tabulated-cdf":
        table = node.raw("table")
        if not isinstance(table, list) or len(table) < 2:
            raise ScenarioParsingError(node.at("table"), "expected a list of pairs")

        pairs = []
        for k, pair in enumerate(table):
            ok = isinstance(pair, list) and len(pair) == 2
            ok = ok and all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair
            )
            if not ok:
                raise ScenarioParsingError(
                    f"{node.at('table')}[{k}]", "expected a [frequency, cdf] pair"
                )
            pairs.append((float(pair[0]), float(pair[1])))
        carrier = CarrierDistribution.tabulated(pairs)
    else:
        raise ScenarioParsingError(
            node.at("kind"), "must be one of point-mass, uniform, tabulated-cdf"
        )

    node.done()
    return carrier


def _parse_downlink(node: _Node) -> DownlinkWindow:
    window = DownlinkWindow(
        tx_power=node.quantity("tx_power", "W"),
        bandwidth=node.quantity("bandwidth", "Hz"),
        activity=node.quantity("activity"),
        sinr_threshold=node.quantity("sinr_threshold", "linear", default=None),
    )

    node.done()
    return window


def _parse_class(node: _Node) -> TechnologyClass:
    class_ = TechnologyClass(
        name=node.text("name"),
        tx_power=node.quantity("tx_power", "W"),
        bandwidth=node.quantity("bandwidth", "Hz"),
        carrier=_parse_carrier(node.child("carrier")),
        packet_time=node.quantity("packet_time"),
        mean_inter_packet_time=node.quantity("mean_inter_packet_time"),
        device_density=node.quantity("device_density"),
        ap_density=node.quantity("ap_density", default=0.0),
        orthogonal_channels=node.integer("orthogonal_channels", default=1),
        orthogonal_codes=node.integer("orthogonal_codes", default=1),
        technology_id=node.text("technology_id", default=None),
        downlink=tuple(
            _parse_downlink(window)
            for window in node.children("downlink", optional=True)
        ),
    )

    node.done()
    return class_


def _parse_channel(node: _Node) -> ChannelModel:
    channel = ChannelModel(
        pathloss_exponent=node.quantity("pathloss_exponent"),
        noise_density=node.quantity("noise_density", "W/Hz"),
        fading=node.text("fading", default="rayleigh"),
        fractional_moment=node.quantity("fractional_moment", default=None),
        nakagami_m=node.quantity("nakagami_m", default=None),
    )

    node.done()
    return channel


def _parse_energy(node: _Node) -> EnergyModel:
    energy = EnergyModel(
        circuit_power=node.quantity("circuit_power", "W"),
        inv_pa_efficiency=node.quantity("inv_pa_efficiency"),
        rx_power=node.quantity("rx_power", "W"),
        active_time=node.quantity("active_time"),
        ack_time=node.quantity("ack_time"),
        wait_time=node.quantity("wait_time"),
        battery_capacity=node.quantity("battery_capacity"),
    )

    node.done()
    return energy


def _parse_retransmission(node: _Node) -> RetransmissionPolicy:
    policy = RetransmissionPolicy(
        max_transmissions=node.integer("max_transmissions", default=1),
        retry_wait=node.quantity("retry_wait", default=0.0),
        truncation=node.text("truncation", default="paper-literal"),
    )

    node.done()
    return policy


def _parse_ack_model(node: _Node) -> AckModel:
    ack_model = AckModel(
        kind=node.text("kind", default="ideal"),
        probability=node.quantity("probability", default=None),
    )

    node.done()
    return ack_model


class ScenarioFile(NamedTuple):
    scenario: Scenario
    assumptions: Tuple[str, ...]


def parse_scenario(doc: Dict[str, Any]) -> ScenarioFile:
    """Build a scenario from a decoded scenario document

    Raises
    ------
    ScenarioParsingError
        If an entry is missing, mistyped, given twice or unknown. The error
        names the path of the offending key, e.g. ``classes[1].carrier.kind``.
    """
    root = _Node(doc, "")

    classes = tuple(_parse_class(node) for node in root.children("classes"))
    channel = _parse_channel(root.child("channel"))
    energy = _parse_energy(root.child("energy"))
    sinr_threshold = root.quantity("sinr_threshold", "linear")

    if "retransmission" in doc:
        retransmission = _parse_retransmission(root.child("retransmission"))
    else:
        retransmission = RetransmissionPolicy()
    if "ack_model" in doc:
        ack_model = _parse_ack_model(root.child("ack_model"))
    else:
        ack_model = AckModel()

    assumptions = root.raw("assumptions", default=[])
    if not isinstance(assumptions, list) or not all(
        isinstance(a, str) for a in assumptions
    ):
        raise ScenarioParsingError("assumptions", "expected a list of strings")

    root.done()

    scenario = Scenario(
        classes=classes,
        channel=channel,
        energy=energy,
        sinr_threshold=sinr_threshold,
        retransmission=retransmission,
        ack_model=ack_model,
    )

    return ScenarioFile(scenario, tuple(assumptions))


def load_scenario(path: Union[str, Path], validate: bool = True) -> ScenarioFile:
    """Reads a scenario file

    Parameters
    ----------
    path : ``str`` or ``Path``
        JSON scenario file
    validate : ``bool``, default ``True``
        Refuse scenarios which break any model invariant

    Raises
    ------
    DataParsingError
        If the file is not JSON
    ScenarioParsingError
        If the document does not describe a scenario
    InvalidScenarioError
        If ``validate`` and the scenario breaks an invariant
    """
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise DataParsingError(
                f"{path} is not valid JSON: {e.msg} (line {e.lineno}, column {e.colno})"
            ) from e

    scenario_file = parse_scenario(doc)
    if validate:
        ensure_valid(scenario_file.scenario)

    return scenario_file


def _carrier_to_dict(c: CarrierDistribution) -> Dict[str, Any]:
    if c.kind == "point-mass":
        return {"kind": c.kind, "frequency": c.f_min}
    elif c.kind == "uniform":
        return {"kind": c.kind, "f_min": c.f_min, "f_max": c.f_max}
    else:
        return {"kind": c.kind, "table": [list(pair) for pair in c.table]}


def _without_none(d: Dict[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in d.items() if value is not None}


def _class_to_dict(c: TechnologyClass) -> Dict[str, Any]:
    return {
        "name": c.name,
        "technology_id": c.technology_id,
        "tx_power": c.tx_power,
        "bandwidth": c.bandwidth,
        "carrier": _carrier_to_dict(c.carrier),
        "packet_time": c.packet_time,
        "mean_inter_packet_time": c.mean_inter_packet_time,
        "device_density": c.device_density,
        "ap_density": c.ap_density,
        "orthogonal_channels": c.orthogonal_channels,
        "orthogonal_codes": c.orthogonal_codes,
        "downlink": [_without_none(asdict(window)) for window in c.downlink],
    }


def scenario_to_dict(s: Scenario, assumptions: Sequence[str] = ()) -> Dict[str, Any]:
    """Scenario document in SI units, which ``parse_scenario`` reads back exactly"""
    doc = {
        "classes": [_class_to_dict(c) for c in s.classes],
        "channel": _without_none(asdict(s.channel)),
        "energy": asdict(s.energy),
        "retransmission": asdict(s.retransmission),
        "sinr_threshold": s.sinr_threshold,
        "ack_model": _without_none(asdict(s.ack_model)),
    }
    if assumptions:
        doc["assumptions"] = list(assumptions)

    return doc


def dump_scenario(s: Scenario, f, assumptions: Sequence[str] = ()):
    json.dump(scenario_to_dict(s, assumptions), f, indent=2)
    f.write("\n")


# ------------------------------------------------------------------------------
# Sweeps

SWEEP_VARIABLES = ("distance", "device_density", "sinr_threshold", "ap_count")
SWEEP_SCALES = ("linear", "log")


@dataclass
class SweepParsingError(DataParsingError):
    text: str
    reason: str

    def __str__(self):
        return f"Invalid sweep '{self.text}': {self.reason}"


@dataclass(frozen=True)
class SweepSpec:
    """Grid of values of one scenario variable

    ``sinr_threshold`` values are in dB and ``ap_count`` values are rounded
    to whole APs.
    """

    variable: str
    min: float
    max: float
    steps: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            values = np.geomspace(self.min, self.max, self.steps)
        else:
            values = np.linspace(self.min, self.max, self.steps)

        if self.variable == "ap_count":
            values = np.round(values)

        return values

    def __str__(self):
        text = f"{self.variable}:{self.min:g}:{self.max:g}:{self.steps}"
        if self.scale == "log":
            text += ":log"
        return text


def parse_sweep(text: str) -> SweepSpec:
    """Reads ``VAR:MIN:MAX:STEPS[:log]``"""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise SweepParsingError(text, "expected VAR:MIN:MAX:STEPS[:log]")

    variable = parts[0]
    if variable not in SWEEP_VARIABLES:
        raise SweepParsingError(
            text, f"variable must be one of {', '.join(SWEEP_VARIABLES)}"
        )

    try:
        min_, max_ = float(parts[1]), float(parts[2])
        steps = int(parts[3])
    except ValueError as e:
        raise SweepParsingError(
            text, "MIN and MAX must be numbers, STEPS an integer"
        ) from e

    scale = parts[4] if len(parts) == 5 else "linear"
    if scale not in SWEEP_SCALES:
        raise SweepParsingError(text, "scale must be linear or log")

    if not min_ < max_:
        raise SweepParsingError(text, "MIN must be smaller than MAX")
    if steps < 2:
        raise SweepParsingError(text, "STEPS must be at least 2")
    if scale == "log" and not min_ > 0:
        raise SweepParsingError(text, "a log sweep needs a positive MIN")
    if variable == "ap_count" and min_ < 1:
        raise SweepParsingError(text, "at least 1 AP is needed")

    return SweepSpec(variable, min_, max_, steps, scale)


# ------------------------------------------------------------------------------
# Joint reception


@dataclass
class MrcParsingError(DataParsingError):
    text: str

    def __str__(self):
        return (
            f"Invalid joint reception spec '{self.text}': "
            "expected 'd1,d2,...' or 'd1,d2,...;p1,p2,...'"
        )


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def parse_mrc(text: str) -> JointReceptionConfig:
    """Reads AP distances and availabilities, ``"d1,d2,d3;p1,p2,p3"``

    Availabilities default to 1 when omitted.

    Raises
    ------
    MrcParsingError
        If ``text`` is malformed
    InvalidJointConfigError
        If the configuration breaks an invariant
    """
    parts = text.split(";")
    if len(parts) > 2:
        raise MrcParsingError(text)

    try:
        distances = _floats(parts[0])
        if len(parts) == 2:
            availabilities = _floats(parts[1])
        else:
            availabilities = (1.0,) * len(distances)
    except ValueError as e:
        raise MrcParsingError(text) from e

    cfg = JointReceptionConfig(distances, availabilities)
    ensure_valid_joint(cfg)

    return cfg


# ------------------------------------------------------------------------------
# Classes


def resolve_class(s: Scenario, name_or_index: str) -> int:
    """Index of the class given by name or by index"""
    if name_or_index.isdigit():
        j = int(name_or_index)
        if j < s.nclasses:
            return j
    else:
        try:
            return s.index_of(name_or_index)
        except KeyError:
            pass

    names = ", ".join(c.name for c in s.classes)
    raise DataParsingError(
        f"No class '{name_or_index}' in the scenario (classes: {names})"
    )
