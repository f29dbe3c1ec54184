"""Bundled demonstration systems used by the `reproduce` command.

Two ready-to-run configurations: a 3-state plant with one unknown input for
the centralized observer, and a 6-state plant measured by four sensor nodes
(two of which fail the local rank condition) for the networked observer.
"""

from __future__ import annotations

import copy

from .errors import ConfigError

# The 3-state plant is exponentially unstable (spectral abscissa 2), so by
# t = 20 the state magnitude reaches ~3.5e17; the divergence guard must sit
# above that for the full-horizon run.
CENTRALIZED_DEMO = {
    "system": {
        "A": [[2.0, -2.0, 0.0],
              [0.0, 0.0, 1.0],
              [0.0, -2.0, 1.0]],
        "B": [[0.0, 1.0],
              [0.0, 1.0],
              [1.0, 0.0]],
        "C": [[1.0, 0.0, 0.0],
              [0.0, 1.0, 0.0]],
    },
    "partition": {"known_cols": [0], "unknown_cols": [1]},
    "spectral": {"alpha": 0.0, "margin": 0.5, "safety": 1.1},
    "signals": [
        {"kind": "sin", "amplitude": 1.0, "frequency": 1.0},
        {"kind": "cos", "amplitude": 1.0, "frequency": 0.5},
    ],
    "sim": {
        "t_end": 20.0, "dt": 1e-3, "method": "rk4",
        "x0": [1.0, 2.0, 3.0], "record_stride": 10,
        "divergence_guard": 1e19,
    },
}

# Four nodes over a ring; node input roles: node 1 knows channels (1,2),
# node 2 knows (1,3), node 3 knows (2,3), node 4 knows only channel 1.
# Unknown-channel amplitudes are 0.2, hence u_bar_max.
DISTRIBUTED_DEMO = {
    "system": {
        "A": [[0.0, 3.0, 0.0, 0.0, 0.0, 0.0],
              [-2.0, 0.0, 1.0, 0.0, 0.0, 0.0],
              [0.0, 0.0, 0.0, 2.0, 0.0, 0.0],
              [0.0, 0.0, -3.0, -2.0, 0.0, 0.0],
              [0.0, 0.0, 0.0, 1.0, 0.0, -3.0],
              [0.0, 2.0, 0.0, 0.0, 4.0, 0.0]],
        "B": [[0.0, 0.0, 0.0],
              [1.0, 0.0, 0.0],
              [0.0, 0.0, 1.0],
              [0.0, 1.0, 0.0],
              [0.0, 0.0, 0.0],
              [1.0, 0.0, 1.0]],
        "C": [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
              [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
              [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
              [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]],
    },
    "nodes": [
        {"id": 1, "C_rows": [0, 1], "known_cols": [0, 1], "unknown_cols": [2]},
        {"id": 2, "C_rows": [2], "known_cols": [0, 2], "unknown_cols": [1]},
        {"id": 3, "C_rows": [3, 4], "known_cols": [1, 2], "unknown_cols": [0]},
        {"id": 4, "C_rows": [5], "known_cols": [0], "unknown_cols": [1, 2]},
    ],
    "graph": {
        "adjacency": [[0, 1, 0, 1],
                      [1, 0, 1, 0],
                      [0, 1, 0, 1],
                      [1, 0, 1, 0]],
    },
    "spectral": {"alpha": 0.0, "margin": 0.5, "safety": 1.1},
    "signals": [
        {"kind": "sin", "amplitude": 1.0, "frequency": 1.0},
        {"kind": "cos", "amplitude": 0.2, "frequency": 1.0},
        {"kind": "sin", "amplitude": 0.2, "frequency": 0.5},
    ],
    "sim": {
        "t_end": 40.0, "dt": 1e-3, "method": "rk4",
        "sign_mode": "boundary_layer", "eps_bl": 1e-3,
        "x0": [1.0, 2.0, 3.0, -1.0, -2.0, -3.0], "record_stride": 10,
    },
    "u_bar_max": 0.2,
}

_DEMOS = {"centralized": CENTRALIZED_DEMO, "distributed": DISTRIBUTED_DEMO}


def builtin_config(name: str) -> dict:
    """Deep copy of a bundled demo config; raises ConfigError for unknown names."""
    if name not in _DEMOS:
        raise ConfigError(
            f"unknown demo {name!r}; choose one of {sorted(_DEMOS)}")
    return copy.deepcopy(_DEMOS[name])
