"""Independent low-dimensional references used to vet the main pipeline.

Nothing here touches the generic evaluator, quadrature, or eigensolver code
paths: the two-particle wavefunction is written in closed form, the
Gauss-Legendre nodes come from numpy's Legendre module rather than scipy,
and the diagonalization uses scipy.linalg.  Matching results therefore
checks the pipeline's machinery, not just its self-consistency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh as scipy_eigh

from .bethe import HARD_CORE, effective_coupling, ground_state_quantum_numbers

__all__ = [
    "N2Reference",
    "solve_n2",
    "entropy_n2",
    "free_fermion_kernel",
]


@dataclass(frozen=True)
class N2Reference:
    c_eff: float
    k0: float
    entropy: float
    occupations: np.ndarray


def solve_n2(c_eff: float, L: float = 1.0) -> float:
    """Positive quasi-momentum of the two-particle ground state: the unique
    root of k*L = pi - 2*atan(2k/c') on (0, pi/L], by bisection to 1e-14."""
    if math.isinf(c_eff):
        return math.pi / L
    if not c_eff > 0:
        raise ValueError(f"effective coupling must be positive, got {c_eff}")

    def residual(k: float) -> float:
        return math.pi - k * L - 2.0 * math.atan(2.0 * k / c_eff)

    lo, hi = 0.0, math.pi / L
    # residual(lo) = pi > 0, residual(hi) <= 0: the bracket is guaranteed.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 / L:
            break
    return 0.5 * (lo + hi)


def _pair_amplitude_profile(c: float, kappa: float, L: float):
    """Closed-form sorted-sector profile f(d) for two particles at separation
    d = |x1 - x2|, up to a global constant."""
    c_eff = effective_coupling(c, kappa)
    if c_eff == HARD_CORE:
        k0 = math.pi / L

        def profile(d):
            return np.sin(math.pi * d / L)

        return c_eff, k0, profile
    if c == 0.0:
        return 0.0, 0.0, lambda d: np.ones_like(np.asarray(d, dtype=float))
    k0 = solve_n2(c_eff, L)

    def profile(d):
        return c_eff * np.sin(k0 * d) + 2.0 * k0 * np.cos(k0 * d)

    return c_eff, k0, profile


def _panels(anchors: np.ndarray, h_max: float, order: int):
    """Composite Gauss-Legendre nodes/weights with boundaries at ``anchors``
    and panels no wider than h_max."""
    ref_x, ref_w = leggauss(order)
    nodes, weights = [], []
    for a, b in zip(anchors[:-1], anchors[1:]):
        pieces = max(1, math.ceil((b - a) / h_max - 1e-12))
        edges = np.linspace(a, b, pieces + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            nodes.append(0.5 * (lo + hi) + half * ref_x)
            weights.append(half * ref_w)
    return np.concatenate(nodes), np.concatenate(weights)


def entropy_n2(
    c: float,
    kappa: float,
    L: float = 1.0,
    outer_panels: int = 24,
    outer_order: int = 8,
    inner_base: int = 12,
    inner_order: int = 16,
) -> N2Reference:
    """Ground truth for the two-particle pipeline: one-dimensional inner
    integrals driven to near machine precision on a fine outer grid."""
    c_eff, k0, profile = _pair_amplitude_profile(c, kappa, L)

    def psi(first, t):
        # first is scalar, t an array of inner coordinates
        d = first - t
        return np.exp(-0.5j * kappa * math.pi * np.sign(d)) * profile(np.abs(d))

    outer_nodes, outer_weights = _panels(
        np.linspace(0.0, L, outer_panels + 1), L / outer_panels, outer_order
    )
    m = outer_nodes.size
    h_max = L / inner_base

    kernel = np.empty((m, m), dtype=complex)
    for i in range(m):
        x = outer_nodes[i]
        for j in range(i, m):
            xp = outer_nodes[j]
            anchors = np.unique(np.array([0.0, x, xp, L]))
            t, w = _panels(anchors, h_max, inner_order)
            val = np.sum(w * np.conj(psi(x, t)) * psi(xp, t))
            kernel[i, j] = val
            kernel[j, i] = np.conj(val)

    trace = float(np.real(np.sum(outer_weights * np.diag(kernel))))
    kernel /= trace
    sqrt_w = np.sqrt(outer_weights)
    b = sqrt_w[:, None] * kernel * sqrt_w[None, :]
    b = 0.5 * (b + b.conj().T)
    lam = scipy_eigh(b, eigvals_only=True)[::-1]
    positive = lam[lam > 1e-12]
    entropy = float(-(positive * np.log2(positive)).sum())
    return N2Reference(c_eff=c_eff, k0=k0, entropy=entropy, occupations=lam)


def free_fermion_kernel(n: int, L: float, x, xp) -> np.ndarray:
    """Analytic one-body density matrix of N free fermions on the ring,
    (1/(N*L)) * sum_j exp(i*k_j*(x - x')) with the exact ground-state
    momenta.  Independent oracle for the fermionic-limit pipeline output."""
    k = 2.0 * math.pi * ground_state_quantum_numbers(n) / L
    delta = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    return np.exp(1j * np.multiply.outer(delta, k)).sum(axis=-1) / (n * L)
