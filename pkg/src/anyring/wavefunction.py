"""Exact many-body ground-state wavefunction evaluation.

The unnormalized wavefunction factorizes as

    psi(x_1, ..., x_N) = phi(x) * F(sort(x))

where phi is the unit-modulus statistics phase built from pairwise coordinate
orderings and F is a fixed function of the ascending-sorted coordinates: a
permutation sum of plane waves with scattering amplitudes at finite coupling,
a pairwise sine product in the hard-core regime, and the constant 1 for free
particles.  Because sorting is continuous and the phase only changes when two
coordinates cross, this form is continuous across sector boundaries and
carries the generalized exchange symmetry exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bethe import (
    BetheState,
    ModelParams,
    ground_state_quantum_numbers,
    solve_ground_state,
)

__all__ = [
    "PERMUTATION_PATH_MAX_N",
    "SectorDecomposition",
    "WavefnEvaluator",
    "DegeneratePointError",
    "sort_to_sector",
    "anyonic_phase",
    "exchange_phase",
    "eval_psi_hardcore",
    "exchange_residual",
    "twisted_boundary_residual",
    "evaluator_for",
]

# The permutation sum has N! terms; beyond this the determinant path is the
# only sane option and callers must opt into it explicitly.
PERMUTATION_PATH_MAX_N = 8

# Rows per evaluation chunk are sized so the (rows x N!) phase table stays
# within a few tens of MB.
_MAX_PHASE_ENTRIES = 4_000_000


class DegeneratePointError(ValueError):
    """The wavefunction is numerically zero at a test point; resample."""


@dataclass(frozen=True)
class SectorDecomposition:
    sorting_perm: np.ndarray
    sorted_coords: np.ndarray


def _check_coords(x: np.ndarray, L: float) -> None:
    if np.any(x < 0.0) or np.any(x > L):
        raise ValueError(f"coordinates must lie in [0, {L}]")


def sort_to_sector(x, L: float = 1.0) -> SectorDecomposition:
    """Stable ascending sort with its permutation record; ties keep input
    order."""
    x = np.asarray(x, dtype=float)
    _check_coords(x, L)
    perm = np.argsort(x, kind="stable")
    return SectorDecomposition(sorting_perm=perm, sorted_coords=x[perm])


def _pair_sign_sum(xs: np.ndarray) -> np.ndarray:
    """sum_{a<b} sign(x_a - x_b) over particle labels, rowwise."""
    n = xs.shape[-1]
    s = np.zeros(xs.shape[:-1])
    for a in range(n):
        for b in range(a + 1, n):
            s += np.sign(xs[..., a] - xs[..., b])
    return s


def anyonic_phase(x, kappa: float) -> complex | np.ndarray:
    """Statistics phase exp(-i*(kappa*pi/2) * sum_{a<b} sign(x_a - x_b)).

    Unit modulus; exactly 1 for kappa = 0; coincident coordinates contribute
    nothing (sign(0) = 0).
    """
    xs = np.asarray(x, dtype=float)
    phase = np.exp(-0.5j * kappa * math.pi * _pair_sign_sum(xs))
    return complex(phase) if xs.ndim == 1 else phase


def exchange_phase(x, i: int, j: int, kappa: float) -> float:
    """Exchange angle theta for swapping the coordinates at positions i < j:

        theta = kappa*pi * [ sum_{p=i+1}^{j} sign(x_i - x_p)
                             - sum_{p=i+1}^{j-1} sign(x_j - x_p) ]

    The wavefunction satisfies psi(..., x_i, ..., x_j, ...) =
    exp(-i*theta) * psi(..., x_j, ..., x_i, ...).
    """
    x = np.asarray(x, dtype=float)
    if not 0 <= i < j < x.size:
        raise ValueError(f"need positions 0 <= i < j < {x.size}, got ({i}, {j})")
    first = np.sign(x[i] - x[i + 1 : j + 1]).sum()
    second = np.sign(x[j] - x[i + 1 : j]).sum()
    return kappa * math.pi * (first - second)


class WavefnEvaluator:
    """Immutable evaluator for one converged ground state.

    Construction precomputes the N! scattering amplitudes (finite coupling
    only) and the global phase that makes kappa = 0 values real and positive,
    so repeated evaluation is pure array work.
    """

    def __init__(self, state: BetheState):
        params = state.params
        self.state = state
        self.params = params
        self.n = params.n
        self.L = params.L
        self.kappa = params.kappa
        self.c_eff = state.c_eff
        self.hardcore = state.hardcore
        self.k = np.asarray(state.quasi_momenta, dtype=float)

        self._perm_k = None
        self.amp_coeffs = None
        self.perm_signs = None
        if not self.hardcore and not state.noninteracting:
            if params.n > PERMUTATION_PATH_MAX_N:
                raise ValueError(
                    f"permutation-sum path capped at N <= {PERMUTATION_PATH_MAX_N}; "
                    "use the hard-core determinant path for larger N"
                )
            perms = np.array(list(itertools.permutations(range(params.n))), dtype=np.intp)
            self.perm_signs = _permutation_signs(perms)
            self.amp_coeffs = self._amplitudes(perms)
            self._perm_k = self.k[perms]

        # Reference configuration: equally spaced interior points, where the
        # ground state cannot vanish.  Sets the kappa = 0 phase strip and the
        # magnitude scale used to detect degenerate test points.
        ref = (np.arange(self.n) + 0.5) * self.L / self.n
        f_ref = complex(self._sorted_part(ref[None, :])[0])
        if self.kappa == 0.0 and abs(f_ref) > 0:
            self._strip = f_ref.conjugate() / abs(f_ref)
        else:
            self._strip = 1.0 + 0.0j
        self._ref_scale = abs(f_ref)

    def _amplitudes(self, perms: np.ndarray) -> np.ndarray:
        """A_P = sign(P) * prod_{j<l} (i*k_{p_l} - i*k_{p_j} + c'), rescaled
        by the largest magnitude so huge couplings cannot overflow
        downstream products."""
        kp = self.k[perms]
        amps = self.perm_signs.astype(complex)
        for j in range(self.n):
            for l in range(j + 1, self.n):
                amps *= 1j * kp[:, l] - 1j * kp[:, j] + self.c_eff
        return amps / np.max(np.abs(amps))

    def _sorted_part(self, y: np.ndarray) -> np.ndarray:
        """F on ascending-sorted rows y, without the statistics phase."""
        if self.state.noninteracting:
            return np.ones(y.shape[0], dtype=complex)
        if self.hardcore:
            f = np.ones(y.shape[0])
            for j in range(self.n):
                for l in range(j + 1, self.n):
                    f = f * np.sin(math.pi * (y[:, l] - y[:, j]) / self.L)
            return f.astype(complex)
        phases = y @ self._perm_k.T
        return np.exp(1j * phases) @ self.amp_coeffs

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        """Unnormalized psi for a (B, N) batch of coordinate rows."""
        xs = np.ascontiguousarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.n:
            raise ValueError(f"expected (batch, {self.n}) coordinates, got {xs.shape}")
        _check_coords(xs, self.L)
        n_terms = 1 if self._perm_k is None else self._perm_k.shape[0]
        chunk = max(1, _MAX_PHASE_ENTRIES // n_terms)
        out = np.empty(xs.shape[0], dtype=complex)
        for start in range(0, xs.shape[0], chunk):
            block = xs[start : start + chunk]
            y = np.sort(block, axis=1)
            f = self._sorted_part(y)
            phase = np.exp(-0.5j * self.kappa * math.pi * _pair_sign_sum(block))
            out[start : start + chunk] = self._strip * phase * f
        return out

    def eval_psi(self, x) -> complex:
        """Unnormalized psi at one coordinate tuple."""
        return complex(self.eval_many(np.asarray(x, dtype=float)[None, :])[0])

    @property
    def reference_scale(self) -> float:
        return self._ref_scale


def _permutation_signs(perms: np.ndarray) -> np.ndarray:
    signs = np.empty(perms.shape[0])
    for row, perm in enumerate(perms):
        inversions = sum(
            1
            for a in range(perm.size)
            for b in range(a + 1, perm.size)
            if perm[a] > perm[b]
        )
        signs[row] = -1.0 if inversions % 2 else 1.0
    return signs


def eval_psi_hardcore(params: ModelParams, x) -> complex:
    """Hard-core wavefunction via the anyon-fermion mapping: statistics phase
    times det[exp(i*k_j*y_l)] on the sorted coordinates, with the exact
    infinite-coupling momenta.  O(N^3) per call; no N! table.

    Kept as a literal determinant on purpose: it cross-checks the sine-product
    fast path used by :class:`WavefnEvaluator`.
    """
    x = np.asarray(x, dtype=float)
    _check_coords(x, params.L)
    k = 2.0 * math.pi * ground_state_quantum_numbers(params.n) / params.L
    y = np.sort(x)
    det = complex(np.linalg.det(np.exp(1j * np.outer(k, y))))
    return complex(anyonic_phase(x, params.kappa)) * det


def exchange_residual(ev: WavefnEvaluator, x, i: int, j: int) -> float:
    """Relative defect of the generalized exchange symmetry at one point:
    |psi(x) - exp(-i*theta) * psi(x with positions i, j swapped)| / |psi(x)|.
    """
    x = np.asarray(x, dtype=float)
    theta = exchange_phase(x, i, j, ev.kappa)
    swapped = x.copy()
    swapped[[i, j]] = swapped[[j, i]]
    psi = ev.eval_psi(x)
    psi_swapped = ev.eval_psi(swapped)
    denom = max(abs(psi), abs(psi_swapped))
    if denom < 1e-14 * max(ev.reference_scale, 1.0):
        raise DegeneratePointError("wavefunction numerically zero at test point")
    return abs(psi - np.exp(-1j * theta) * psi_swapped) / denom


def twisted_boundary_residual(ev: WavefnEvaluator, x_rest) -> float:
    """Relative defect of psi(0, rest) = exp(i*kappa*pi*(N-1)) * psi(L, rest)."""
    rest = np.asarray(x_rest, dtype=float)
    if rest.size != ev.n - 1:
        raise ValueError(f"need {ev.n - 1} interior coordinates, got {rest.size}")
    at_zero = ev.eval_psi(np.concatenate([[0.0], rest]))
    at_length = ev.eval_psi(np.concatenate([[ev.L], rest]))
    denom = max(abs(at_zero), abs(at_length))
    if denom < 1e-14 * max(ev.reference_scale, 1.0):
        raise DegeneratePointError("wavefunction numerically zero at test point")
    twist = np.exp(1j * ev.kappa * math.pi * (ev.n - 1))
    return abs(at_zero - twist * at_length) / denom


def evaluator_for(params: ModelParams, hardcore: bool = False) -> WavefnEvaluator:
    """Convenience: solve the ground state and wrap it in an evaluator."""
    return WavefnEvaluator(solve_ground_state(params, hardcore=hardcore))
