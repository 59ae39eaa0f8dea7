"""Ready-made technology classes

Includes a LoRa-like reference technology, whose devices are orthogonal only
across channels and spreading factors and which acknowledges reports in two
receive windows, and a generic interfering technology which hops uniformly
around the reference carrier.
"""
from coexist._kpis.profiles import REFERENCE_ASSUMPTIONS
from coexist._kpis.profiles import LoRaProfile
from coexist._kpis.profiles import interferer_class
from coexist._kpis.profiles import lora_ack_probability
from coexist._kpis.profiles import lora_class
from coexist._kpis.profiles import lora_time_activity
from coexist._kpis.profiles import reference_scenario

__all__ = [
    "LoRaProfile",
    "lora_time_activity",
    "lora_ack_probability",
    "lora_class",
    "interferer_class",
    "reference_scenario",
    "REFERENCE_ASSUMPTIONS",
]
