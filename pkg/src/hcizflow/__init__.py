"""Large-N spherical integrals and coupled matrix models via isentropic Euler flows."""

__version__ = "0.1.0"
