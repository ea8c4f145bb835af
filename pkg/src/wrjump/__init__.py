"""Two-type continuum Widom-Rowlinson jump dynamics: kinetic equations, particles, stability."""
__version__ = "0.1.0"

from .kernels import GridSpec, KernelSpec
from .model import ModelParams
from .kinetic import DensityPair, KineticRunConfig, solve
from .particles import ParticleConfig, simulate

__all__ = ["GridSpec", "KernelSpec", "ModelParams", "DensityPair", "KineticRunConfig", "solve",
           "ParticleConfig", "simulate", "__version__"]
