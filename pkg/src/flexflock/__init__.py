"""Flexible distributed flocking for unicycle agents with an adaptive spacing policy."""
from .config import ScenarioConfig, load_config
from .field import FieldModel
from .graph import Topology
from .potential import PotentialKind
from .sim import Dynamics, SimTrace, run, simulate
from .spacing import SpacingParams

__version__ = "0.1.0"
