"""Exact DoF regions and a deterministic-model entropy laboratory for the
two-user MIMO broadcast channel with partial CSIT."""

__version__ = "0.1.0"
