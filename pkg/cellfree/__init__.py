"""Centralized and ADMM-distributed downlink precoding for cell-free massive MIMO."""

__version__ = '0.1.0'
