"""Analysis toolkit for a device-independent QKD protocol keyed on settings.

Subpackages/modules: `quantum` (Hardy-state construction and Born-rule
behaviors), `protocol` (simulation, bias model, sifting, entropies), `npa`
(moment-matrix relaxations), `solvers` (dense SDP/LP), `analysis` (guessing
bounds and key rates), `cli` (command-line pipeline).
"""

from .protocol import HVector, NONUNIFORM, SettingsDistribution, UNIFORM
from .quantum import ALPHA_OPT, Q_MAX, Q_TILDE, Behavior, hardy_behavior, hardy_state

__all__ = [
    "ALPHA_OPT",
    "Behavior",
    "HVector",
    "NONUNIFORM",
    "Q_MAX",
    "Q_TILDE",
    "SettingsDistribution",
    "UNIFORM",
    "hardy_behavior",
    "hardy_state",
]

__version__ = "0.1.0"
