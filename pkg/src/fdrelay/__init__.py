"""Outage analysis of full-duplex relay selection for underlay D2D OFDMA links."""

from .channel import NetworkParams, db_to_linear, linear_to_db
from .link import (DuplexMode, OutageEstimate, PowerControlMode, SelectionScheme,
                   estimate_outage, estimate_outages)
from .analytic import NumericalInstabilityError, analytic_outage

__all__ = [
    "NetworkParams", "db_to_linear", "linear_to_db",
    "DuplexMode", "PowerControlMode", "SelectionScheme", "OutageEstimate",
    "estimate_outage", "estimate_outages",
    "NumericalInstabilityError", "analytic_outage",
]
__version__ = "0.1.0"
