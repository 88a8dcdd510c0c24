"""Small benchmark plants with known stabilizing controllers."""

import numpy as np

from ..errors import ConfigError
from ..plant import LinearPlant

# Each preset fixes (A, B) and a default noise bound; K0 is either synthesized
# from target_gamma at build time or pinned here when synthesis has no
# closed form for the shape.
PLANT_PRESETS = {
    "scalar": {
        "A": [[0.9]],
        "B": [[1.0]],
        "W": 0.3,
        "target_gamma": 0.7,
    },
    "diag2": {
        "A": [[0.5, 0.0], [0.0, 0.8]],
        "B": [[1.0, 0.0], [0.0, 1.0]],
        "W": 0.3,
        "target_gamma": 0.7,
    },
    "two_by_one": {
        "A": [[0.6, 0.0], [0.0, 0.4]],
        "B": [[1.0], [0.5]],
        "W": 0.3,
        "K0": [[0.5, 0.2]],
    },
}


def plant_from_preset(name, W=None):
    """Return (plant, preset_dict) for a named preset, overriding W if given."""
    if name not in PLANT_PRESETS:
        raise ConfigError(
            f"unknown plant preset {name!r}; choices: {sorted(PLANT_PRESETS)}"
        )
    spec = PLANT_PRESETS[name]
    bound = float(spec["W"]) if W is None else float(W)
    plant = LinearPlant(
        A=np.asarray(spec["A"], dtype=float),
        B=np.asarray(spec["B"], dtype=float),
        W=bound,
    )
    return plant, spec
