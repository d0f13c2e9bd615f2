"""Natural-orbital occupations and von Neumann entropy from a sampled kernel.

The continuum eigenproblem of the density matrix is discretized by symmetric
Nystrom: with W the diagonal of quadrature weights, B = W^(1/2) rho W^(1/2)
is Hermitian, its eigenvalues approximate the occupation numbers, and
W^(-1/2) times its eigenvectors samples the natural orbitals (orthonormal
under the weighted inner product).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rdm import RdmMatrix

__all__ = [
    "OccupationSpectrum",
    "natural_occupations",
    "von_neumann_entropy",
    "toeplitz_deviation",
]

# Eigenvalues below this are quadrature noise amplified by log2 and are
# dropped from the entropy (their mass is reported, not hidden).
OCCUPATION_CUTOFF = 1e-12
# More negative than this is not noise but an integration bug; abort.
PSD_TOLERANCE = -1e-8


@dataclass(frozen=True)
class OccupationSpectrum:
    """Descending occupation numbers, their entropy in bits, the discarded
    spectral mass, and (optionally) natural-orbital samples by column."""

    occupations: np.ndarray
    entropy: float
    truncation_mass: float
    orbitals: Optional[np.ndarray] = None

    def top(self, count: int = 8) -> np.ndarray:
        return self.occupations[:count]


def von_neumann_entropy(occupations) -> float:
    """-sum lambda * log2(lambda) over positive occupations; zero terms
    contribute nothing by the continuity convention."""
    lam = np.asarray(occupations, dtype=float)
    if np.any(lam < PSD_TOLERANCE):
        raise ValueError(f"occupation below PSD tolerance: min={lam.min():.3e}")
    if lam.sum() > 1.0 + 1e-8:
        raise ValueError(f"occupations sum to {lam.sum()!r} > 1")
    positive = lam[lam > 0.0]
    return float(-(positive * np.log2(positive)).sum())


def natural_occupations(rdm: RdmMatrix, compute_orbitals: bool = True) -> OccupationSpectrum:
    """Occupation numbers and entropy of a Hermitian unit-trace kernel."""
    values = rdm.values
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(values - values.conj().T)) > 1e-10 * scale:
        raise ValueError("kernel is not Hermitian within tolerance")
    if abs(rdm.weighted_trace() - 1.0) > 1e-8:
        raise ValueError(f"kernel weighted trace is {rdm.weighted_trace()!r}, expected 1")

    sqrt_w = np.sqrt(rdm.grid.weights)
    b = sqrt_w[:, None] * values * sqrt_w[None, :]
    b = 0.5 * (b + b.conj().T)
    if np.max(np.abs(b.imag)) <= 1e-12 * scale:
        lam, vec = np.linalg.eigh(b.real)
        vec = vec.astype(complex)
    else:
        lam, vec = np.linalg.eigh(b)

    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vec = vec[:, order]

    if lam.min() < PSD_TOLERANCE:
        raise ValueError(
            f"eigenvalue {lam.min():.3e} below PSD tolerance {PSD_TOLERANCE:g}; "
            "integration is untrustworthy"
        )
    discard = lam < OCCUPATION_CUTOFF
    truncation_mass = float(np.abs(lam[discard]).sum())
    occupations = np.where(discard, 0.0, lam)

    orbitals = (vec / sqrt_w[:, None]) if compute_orbitals else None
    return OccupationSpectrum(
        occupations=occupations,
        entropy=von_neumann_entropy(occupations),
        truncation_mass=truncation_mass,
        orbitals=orbitals,
    )


def toeplitz_deviation(rdm: RdmMatrix) -> float:
    """How far |rho(x, x')| is from a pure function of (x' - x) mod L.

    Entries are binned by their ring separation; the deviation is the largest
    distance between any entry's modulus and its bin mean.  A small value
    certifies the translation-invariance fast path.
    """
    nodes = rdm.grid.nodes
    length = rdm.grid.length
    sep = np.mod(nodes[None, :] - nodes[:, None], length) / length
    bins = np.round(sep, 9).ravel()
    moduli = np.abs(rdm.values).ravel()
    _, inverse = np.unique(bins, return_inverse=True)
    sums = np.bincount(inverse, weights=moduli)
    counts = np.bincount(inverse)
    profile = sums / counts
    return float(np.max(np.abs(moduli - profile[inverse])))
