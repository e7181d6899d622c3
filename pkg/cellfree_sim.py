#!/usr/bin/env python3
"""
cellfree_sim.py - Cell-Free Massive MIMO Downlink Precoding Simulator

Minimizes total transmit power subject to per-user SINR targets, either at a
central server with full CSI or distributed over the APs by consensus ADMM,
and compares both against conjugate beamforming over seeded Rayleigh channels.

Usage:
    python cellfree_sim.py {run,compare,comm,sweep} SCENARIO.toml [options]

Commands:
    run       Evaluate the scenario's methods over its channel realizations
    compare   Same, plus the per-realization power gap to the centralized optimum
    comm      Fronthaul volume of centralized, cell-free ADMM and cellular ADMM
    sweep     Run the [sweep] grid (SINR target, c, rho, M)

Options:
    --output DIR        Output directory (default: results)
    --realizations N    Override the number of channel realizations
    --workers N         Worker processes (default: $CELLFREE_MAX_WORKERS or cores)
    --plot              Save PNG figures next to the result files
    -v / -vv            Info / debug logging

Theory:
    - The SINR constraint becomes a second-order cone once the phase of each
      user's useful signal is fixed, so the centralized problem is an SOCP
    - Bounding the interference norms across APs by their sum lets every AP
      keep its own cone; the APs then only agree on K interference sums
    - Each ADMM iteration moves M x K reals over the fronthaul instead of the
      M x N x K complex channel entries the central solver needs

The script will:
    1. Read and validate the scenario file
    2. Draw the channel realizations (deterministic in seed and index)
    3. Run every method on the same draws
    4. Write results.csv, CDF files, traces and metadata.json per scenario
"""

import sys

from cellfree.cli import main


if __name__ == "__main__":
    sys.exit(main())
