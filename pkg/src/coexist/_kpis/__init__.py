from coexist._kpis.analytic import SuccessQuery
from coexist._kpis.analytic import ack_success_probability
from coexist._kpis.analytic import battery_lifetime
from coexist._kpis.analytic import delivery_probability
from coexist._kpis.analytic import energy_per_report
from coexist._kpis.analytic import evaluate_kpis
from coexist._kpis.analytic import expected_delay
from coexist._kpis.analytic import expected_delay_for
from coexist._kpis.analytic import expected_transmissions
from coexist._kpis.analytic import mean_transmissions
from coexist._kpis.analytic import success_probability
from coexist._kpis.analytic import success_probability_avg
from coexist._kpis.analytic import success_probability_general
from coexist._kpis.analytic import success_probability_rayleigh
from coexist._kpis.common.result import KpiResult
from coexist._kpis.joint import JointReceptionConfig
from coexist._kpis.joint import coverage_limit
from coexist._kpis.joint import mrc_kpis
from coexist._kpis.joint import mrc_success_probability
from coexist._kpis.joint import per_ap_sinr_ccdf
from coexist._kpis.joint import validate_joint_reception
from coexist._kpis.model import AckModel
from coexist._kpis.model import CarrierDistribution
from coexist._kpis.model import ChannelModel
from coexist._kpis.model import DownlinkWindow
from coexist._kpis.model import EnergyModel
from coexist._kpis.model import RetransmissionPolicy
from coexist._kpis.model import Scenario
from coexist._kpis.model import TechnologyClass
from coexist._kpis.model import time_activity_factor
from coexist._kpis.model import validate_scenario
from coexist._kpis.montecarlo import Estimate
from coexist._kpis.montecarlo import SessionStats
from coexist._kpis.montecarlo import SimConfig
from coexist._kpis.montecarlo import sample_ppp
from coexist._kpis.montecarlo import simulate_kpis
from coexist._kpis.montecarlo import simulate_session
from coexist._kpis.montecarlo import snapshot_mrc_success
from coexist._kpis.montecarlo import snapshot_success
from coexist._kpis.overlap import OverlapQuery
from coexist._kpis.overlap import deterministic_overlap
from coexist._kpis.overlap import expected_overlap_ratio
from coexist._kpis.overlap import frequency_activity_factor
from coexist._kpis.overlap import overlap_cdf
from coexist._kpis.overlap import satisfies_uniform_regime
from coexist._kpis.overlap import uniform_overlap_ratio
from coexist._kpis.units import db_to_linear
from coexist._kpis.units import dbm_to_watts
from coexist._kpis.units import hz_to_mhz
from coexist._kpis.units import linear_to_db
from coexist._kpis.units import mhz_to_hz
from coexist._kpis.units import watts_to_dbm

__all__ = [
    # model
    "CarrierDistribution",
    "DownlinkWindow",
    "TechnologyClass",
    "ChannelModel",
    "EnergyModel",
    "RetransmissionPolicy",
    "AckModel",
    "Scenario",
    "KpiResult",
    "validate_scenario",
    "time_activity_factor",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "hz_to_mhz",
    "mhz_to_hz",
    # overlap
    "OverlapQuery",
    "deterministic_overlap",
    "overlap_cdf",
    "expected_overlap_ratio",
    "uniform_overlap_ratio",
    "satisfies_uniform_regime",
    "frequency_activity_factor",
    # analytic
    "SuccessQuery",
    "success_probability_general",
    "success_probability_rayleigh",
    "success_probability",
    "success_probability_avg",
    "ack_success_probability",
    "expected_transmissions",
    "expected_delay_for",
    "mean_transmissions",
    "expected_delay",
    "energy_per_report",
    "battery_lifetime",
    "delivery_probability",
    "evaluate_kpis",
    # joint reception
    "JointReceptionConfig",
    "validate_joint_reception",
    "per_ap_sinr_ccdf",
    "mrc_success_probability",
    "mrc_kpis",
    "coverage_limit",
    # monte carlo
    "SimConfig",
    "Estimate",
    "SessionStats",
    "sample_ppp",
    "snapshot_success",
    "simulate_session",
    "snapshot_mrc_success",
    "simulate_kpis",
]
