"""Small configurations and reference values for end-to-end experiment runs."""

from __future__ import annotations

from typing import Any

# 4x4 arrays with eight carriers keep every sweep well under a second.
TINY_OVERRIDES: dict[str, Any] = {
    "seeds": [0, 1],
    "array": {
        "transmit_rows": 4,
        "transmit_cols": 4,
        "receive_rows": 4,
        "receive_cols": 4,
    },
    "grid": {"carrier_count": 8},
    "architecture": {
        "chains": 2,
        "streams": 2,
        "delays_per_chain": 4,
        "ttd_count": 8,
        "gosa_group": 2,
    },
    "rd": {"max_iterations": 30},
    "sweep": {
        "delay_counts": [2, 4],
        "transmit_powers_dbm": [10.0, 20.0],
        "antenna_counts": [16, 32],
        "bandwidths_ghz": [10.0, 50.0],
        "csi_accuracies": [0.8, 1.0],
        "frequency_points": 11,
    },
}

# Array gain of a 32x32 array and the narrowband loss at the band edge.
PAPER_FULL_GAIN_DB = 30.103
PAPER_EDGE_LOSS_DB = 22.0

ARCHITECTURE_SERIES = {
    "FC-TTD",
    "TTD-aided",
    "DS-FTTD",
    "FC-PS",
    "DS-PS",
    "AoSA-PS",
    "GoSA",
}

# Band-averaged (dB) gain of the single-chain DS-FTTD beam per delay count,
# and of the narrowband beam, for the 45/30 degree target.
PAPER_DS_FTTD_GAIN_DB = {
    4.0: 12.6,
    8.0: 16.8,
    16.0: 21.3,
    32.0: 27.9,
    64.0: 29.0,
    128.0: 29.7,
}
PAPER_NARROWBAND_GAIN_DB = 9.8
