"""Layered Izhikevich spiking network with trace STDP, DVS input and entropy analytics."""

from .config import RunConfig, load_config
from .engine import EngineConfig, SimulationState, step
from .plasticity import PlasticityConfig
from .runner import run
from .topology import LayerSpec, TopologyConfig, build_network

__all__ = [
    "EngineConfig",
    "LayerSpec",
    "PlasticityConfig",
    "RunConfig",
    "SimulationState",
    "TopologyConfig",
    "build_network",
    "load_config",
    "run",
    "step",
]
__version__ = "0.1.0"
