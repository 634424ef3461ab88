"""Single-sensor compressive imaging SNR simulator and analytic calculator."""

__version__ = "0.1.0"
