"""ddsim: pulse-sequence decoupling simulator for collective-spin and central-spin systems."""

__version__ = "0.1.0"
