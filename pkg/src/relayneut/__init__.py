"""Secure multi-carrier relaying by information leakage neutralization.

An amplify-and-forward relay serving ``K`` transmitter/receiver pairs over
``M`` subcarriers is designed so that the relayed signal cancels every
transmitter's leakage to the unintended receivers, which may collude.
"""

from .baselines import assign_spectrum, baseline_report, ic_relay, repeater_relay
from .channel import (ChannelSet, Precoders, RelayMatrix, Scenario, generate_channels,
                      load_channels, save_channels)
from .effin import DesignResult, build_q1, effin, effin_relay, solve_q1
from .neutralize import (InfeasibleError, build_system, min_antennas,
                         min_neutralization_power, neutralized_family, relay_from_target,
                         solve_min_norm)
from .optin import OptinOptions, build_q2, optin, q2_gradient, q2_objective, q2_power, solve_q2
from .rates import RateReport, leakage_rate, relay_tx_power, secrecy_report, user_rate

__version__ = "0.1.0"
