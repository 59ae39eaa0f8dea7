"""Ready-made technology classes and the reference coexistence scenario"""
from dataclasses import dataclass
from dataclasses import field
from typing import Tuple

from coexist._kpis.model import AckModel
from coexist._kpis.model import CarrierDistribution
from coexist._kpis.model import ChannelModel
from coexist._kpis.model import DownlinkWindow
from coexist._kpis.model import EnergyModel
from coexist._kpis.model import RetransmissionPolicy
from coexist._kpis.model import Scenario
from coexist._kpis.model import TechnologyClass
from coexist._kpis.units import db_to_linear
from coexist._kpis.units import dbm_to_watts

__all__ = [
    "LoRaProfile",
    "lora_time_activity",
    "lora_ack_probability",
    "lora_class",
    "interferer_class",
    "reference_scenario",
    "REFERENCE_ASSUMPTIONS",
]

CARRIER = 868.1e6
BANDWIDTH = 125e3
NOISE_DENSITY_DBM_HZ = -174.0


def _default_ack_windows() -> Tuple[DownlinkWindow, ...]:
    return (
        DownlinkWindow(float(dbm_to_watts(14)), BANDWIDTH, 0.01),
        DownlinkWindow(float(dbm_to_watts(27)), BANDWIDTH, 0.01),
    )


@dataclass(frozen=True)
class LoRaProfile:
    """LoRa-like access: orthogonal channels times orthogonal spreading factors

    The defaults give a time activity factor of 1/100 per resource, i.e. a
    duty cycle of 0.21 spread over 3 channels and 7 spreading factors. The
    two ACK windows are the downlink configurations of the RX1 and RX2
    receive windows.
    """

    channels: int = 3
    spreading_factors: int = 7
    packet_time: float = 1.0
    mean_inter_packet_time: float = 1 / 0.21
    ack_windows: Tuple[DownlinkWindow, ...] = field(
        default_factory=_default_ack_windows
    )

    @property
    def duty_cycle(self) -> float:
        return self.packet_time / self.mean_inter_packet_time


def lora_time_activity(p: LoRaProfile) -> float:
    """(1/channels)·(1/spreading factors)·(T/𝒯)"""
    return p.duty_cycle / (p.channels * p.spreading_factors)


def lora_ack_probability(p1: float, p2: float) -> float:
    """Probability an ACK arrives in either of the two receive windows"""
    return p1 + p2 - p1 * p2


def lora_class(
    profile: LoRaProfile = LoRaProfile(),
    name: str = "lora",
    tx_power: float = float(dbm_to_watts(20)),
    carrier: CarrierDistribution = CarrierDistribution.point_mass(CARRIER),
    device_density: float = 1e-3,
    ap_density: float = 1e-4,
) -> TechnologyClass:
    return TechnologyClass(
        name=name,
        tx_power=tx_power,
        bandwidth=BANDWIDTH,
        carrier=carrier,
        packet_time=profile.packet_time,
        mean_inter_packet_time=profile.mean_inter_packet_time,
        device_density=device_density,
        ap_density=ap_density,
        orthogonal_channels=profile.channels,
        orthogonal_codes=profile.spreading_factors,
        technology_id="lora",
        downlink=profile.ack_windows,
    )


def interferer_class(
    name: str = "interferer",
    tx_power: float = float(dbm_to_watts(14)),
    bandwidth: float = BANDWIDTH,
    frequency_activity: float = 0.1,
    time_activity: float = 0.01,
    device_density: float = 1e-2,
) -> TechnologyClass:
    """A different technology hopping uniformly around the reference carrier

    Its carrier is uniform over ``bandwidth / frequency_activity`` centred on
    the reference carrier, which makes its frequency activity factor exactly
    ``frequency_activity``.
    """
    packet_time = 1.0

    return TechnologyClass(
        name=name,
        tx_power=tx_power,
        bandwidth=bandwidth,
        carrier=CarrierDistribution.centred(CARRIER, bandwidth / frequency_activity),
        packet_time=packet_time,
        mean_inter_packet_time=packet_time / time_activity,
        device_density=device_density,
        technology_id=name,
    )


REFERENCE_ASSUMPTIONS = (
    "rx_power equals circuit_power (100 mW)",
    "wait_time and retry_wait are 1 s",
    "lora device_density is 1e-3 devices/m², the interferer keeps 1e-2",
    "lora ap_density is 1e-4 APs/m²",
    "packet_time is 1 s for both technologies",
    "ACK windows: RX1 14 dBm, RX2 27 dBm, 125 kHz, downlink activity 0.01",
)


def reference_scenario(interferer: bool = True) -> Scenario:
    """LoRa-like devices coexisting with a frequency-hopping technology

    Parameters
    ----------
    interferer : ``bool``, default ``True``
        Include the interfering technology; without it this is the
        single-technology baseline

    Returns
    -------
    scenario : ``Scenario``
        Pathloss exponent 4 with Rayleigh fading, -174 dBm/Hz noise, a 3 dB
        threshold and up to 7 transmissions per report
    """
    classes = [lora_class()]
    if interferer:
        classes.append(interferer_class())

    return Scenario(
        classes=tuple(classes),
        channel=ChannelModel(
            pathloss_exponent=4.0,
            noise_density=float(dbm_to_watts(NOISE_DENSITY_DBM_HZ)),
        ),
        energy=EnergyModel(
            circuit_power=0.1,
            inv_pa_efficiency=0.7,
            rx_power=0.1,
            active_time=2.0,
            ack_time=1.0,
            wait_time=1.0,
            battery_capacity=4000.0,
        ),
        sinr_threshold=float(db_to_linear(3)),
        retransmission=RetransmissionPolicy(
            max_transmissions=7, retry_wait=1.0, truncation="paper-literal"
        ),
        ack_model=AckModel.ideal(),
    )
