"""Model parameters of the two-type jump process with cross repulsion."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .kernels import KernelSpec, kernel_mass, kernel_sup


@dataclass(frozen=True)
class ModelParams:
    """Jump kernels ``a0, a1`` and repulsion potentials ``phi0, phi1``.

    A type-i particle at x jumps to y at rate
    ``a_i(x - y) * exp(-sum_{z of type 1-i} phi_i(y - z))``.
    """

    dimension: int
    a0: KernelSpec
    a1: KernelSpec
    phi0: KernelSpec
    phi1: KernelSpec

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"unsupported dimension {self.dimension!r}")

    def jump(self, i: int) -> KernelSpec:
        return (self.a0, self.a1)[i]

    def potential(self, i: int) -> KernelSpec:
        return (self.phi0, self.phi1)[i]

    @property
    def alphas(self) -> tuple:
        return (kernel_mass(self.a0, self.dimension), kernel_mass(self.a1, self.dimension))

    @property
    def phi_masses(self) -> tuple:
        return (kernel_mass(self.phi0, self.dimension), kernel_mass(self.phi1, self.dimension))

    @property
    def phi_sups(self) -> tuple:
        return (kernel_sup(self.phi0), kernel_sup(self.phi1))

    @property
    def alpha(self) -> float:
        return max(self.alphas)

    @property
    def c(self) -> float:
        return max(self.phi_masses)

    def with_potentials(self, phi0: KernelSpec, phi1: KernelSpec) -> "ModelParams":
        return replace(self, phi0=phi0, phi1=phi1)

    def derived(self) -> dict:
        a0, a1 = self.alphas
        m0, m1 = self.phi_masses
        s0, s1 = self.phi_sups
        return {
            "alpha0": a0, "alpha1": a1, "phi0_mass": m0, "phi1_mass": m1,
            "phi0_sup": s0, "phi1_sup": s1, "alpha": self.alpha, "c": self.c,
        }

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "a0": self.a0.to_dict(), "a1": self.a1.to_dict(),
            "phi0": self.phi0.to_dict(), "phi1": self.phi1.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        return cls(
            int(data["dimension"]),
            KernelSpec.from_dict(data["a0"]), KernelSpec.from_dict(data["a1"]),
            KernelSpec.from_dict(data["phi0"]), KernelSpec.from_dict(data["phi1"]),
        )
