"""Ground-state Bethe solver for delta-interacting anyons on a ring.

The statistical parameter kappa enters the coordinate problem in two ways:
it renormalizes the coupling, c' = c / cos(kappa*pi/2), and it multiplies
the wavefunction by an ordering-dependent phase (handled in
:mod:`anyring.wavefunction`).  The quasi-momentum equations themselves keep
the Lieb-Liniger form with c replaced by c', so a single solver covers the
whole kappa in [0, 1] range.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HARD_CORE",
    "ModelParams",
    "BetheState",
    "SolverError",
    "ground_state_quantum_numbers",
    "effective_coupling",
    "bethe_residuals",
    "bethe_jacobian",
    "solve_ground_state",
]

# Distinguished value for an infinite effective coupling (hard-core regime).
HARD_CORE = math.inf

# Continuation starts here: at c' = 1e6 the hard-core momenta solve the
# equations to ~1e-5 and Newton converges in a couple of steps.
_C_EFF_START = 1.0e6
_MAX_CONTINUATION_STEPS = 40
_MAX_NEWTON_ITERATIONS = 100


@dataclass(frozen=True)
class ModelParams:
    """Physical specification of one run: N particles on a ring of length L
    with repulsion c >= 0 and statistical parameter kappa in [0, 1]."""

    n: int
    L: float = 1.0
    c: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"particle count must be an integer >= 2, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"ring length must be positive, got {self.L}")
        if not self.c >= 0:
            raise ValueError(f"interaction constant must be >= 0, got {self.c}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"statistical parameter must lie in [0, 1], got {self.kappa}")

    def as_dict(self) -> dict:
        return {"n": int(self.n), "L": self.L, "c": self.c, "kappa": self.kappa}


@dataclass(frozen=True)
class BetheState:
    """Converged ground-state solution of the quasi-momentum equations."""

    params: ModelParams
    c_eff: float
    quantum_numbers: np.ndarray
    quasi_momenta: np.ndarray
    residual_norm: float
    energy: float
    total_momentum: float
    hardcore: bool = False
    noninteracting: bool = False
    newton_iterations: int = 0
    continuation_steps: int = 0

    def solver_info(self) -> dict:
        return {
            "residual_norm": self.residual_norm,
            "newton_iterations": self.newton_iterations,
            "continuation_steps": self.continuation_steps,
            "hardcore": self.hardcore,
            "noninteracting": self.noninteracting,
            "c_eff": self.c_eff if math.isfinite(self.c_eff) else "infinite",
        }


class SolverError(RuntimeError):
    """Newton/continuation failure; carries the last iterate and residual."""

    def __init__(self, message: str, last_iterate: np.ndarray, residual: float):
        super().__init__(message)
        self.last_iterate = np.asarray(last_iterate)
        self.residual = residual


def ground_state_quantum_numbers(n: int) -> np.ndarray:
    """Quantum numbers (N+1)/2 - j for j = 1..N: integers for odd N,
    half-integers for even N, symmetric about zero, strictly decreasing."""
    if int(n) != n or n < 2:
        raise ValueError(f"particle count must be an integer >= 2, got {n}")
    j = np.arange(1, n + 1, dtype=float)
    return (n + 1) / 2.0 - j


def effective_coupling(c: float, kappa: float) -> float:
    """Renormalized coupling c' = c / cos(kappa*pi/2).

    Returns ``HARD_CORE`` (math.inf) in the fermionic limit kappa = 1 with
    c > 0.  The c = 0, kappa = 1 corner is a 0/0 ambiguity: we return 0 and
    emit a warning so callers can decide what the degenerate point means.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"statistical parameter must lie in [0, 1], got {kappa}")
    if not c >= 0:
        raise ValueError(f"interaction constant must be >= 0, got {c}")
    if kappa == 1.0:
        if c == 0.0:
            warnings.warn(
                "effective coupling is 0/0 at c=0, kappa=1; returning 0",
                RuntimeWarning,
                stacklevel=2,
            )
            return 0.0
        return HARD_CORE
    return c / math.cos(0.5 * math.pi * kappa)


def bethe_residuals(k: np.ndarray, c_eff: float, params: ModelParams) -> np.ndarray:
    """Residual vector of the logarithmic quasi-momentum equations.

    Entry j is k_j*L - 2*pi*n_j + sum_{l != j} 2*atan((k_j - k_l)/c');
    all entries vanish at a solution.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (params.n,):
        raise ValueError(f"expected {params.n} momenta, got shape {k.shape}")
    if not (math.isfinite(c_eff) and c_eff > 0):
        raise ValueError(f"effective coupling must be finite and positive, got {c_eff}")
    nj = ground_state_quantum_numbers(params.n)
    diff = k[:, None] - k[None, :]
    scatter = 2.0 * np.arctan(diff / c_eff)
    np.fill_diagonal(scatter, 0.0)
    return k * params.L - 2.0 * math.pi * nj + scatter.sum(axis=1)


def bethe_jacobian(k: np.ndarray, c_eff: float, L: float) -> np.ndarray:
    """Closed-form Jacobian of :func:`bethe_residuals` with respect to k."""
    k = np.asarray(k, dtype=float)
    diff = k[:, None] - k[None, :]
    g = 2.0 * c_eff / (c_eff * c_eff + diff * diff)
    np.fill_diagonal(g, 0.0)
    jac = -g
    jac[np.diag_indices_from(jac)] = L + g.sum(axis=1)
    return jac


def _hardcore_momenta(params: ModelParams) -> np.ndarray:
    return 2.0 * math.pi * ground_state_quantum_numbers(params.n) / params.L


def _newton(
    k: np.ndarray,
    c_eff: float,
    params: ModelParams,
    tol_abs: float,
) -> tuple[np.ndarray, float, int]:
    """Damped Newton iteration; returns (k, residual_norm, iterations)."""
    res = bethe_residuals(k, c_eff, params)
    norm = float(np.max(np.abs(res)))
    for iteration in range(1, _MAX_NEWTON_ITERATIONS + 1):
        if norm < tol_abs:
            return k, norm, iteration - 1
        step = np.linalg.solve(bethe_jacobian(k, c_eff, params.L), -res)
        damping = 1.0
        while True:
            k_new = k + damping * step
            res_new = bethe_residuals(k_new, c_eff, params)
            norm_new = float(np.max(np.abs(res_new)))
            if norm_new < norm or damping < 1e-8:
                break
            damping *= 0.5
        if norm_new >= norm:
            raise SolverError(
                f"Newton stalled at c_eff={c_eff:g}: residual {norm:.3e}",
                k,
                norm,
            )
        k, res, norm = k_new, res_new, norm_new
    if norm < tol_abs:
        return k, norm, _MAX_NEWTON_ITERATIONS
    raise SolverError(
        f"Newton did not converge at c_eff={c_eff:g}: residual {norm:.3e}",
        k,
        norm,
    )


def solve_ground_state(
    params: ModelParams,
    hardcore: bool = False,
    tol: float = 1e-12,
) -> BetheState:
    """Solve the ground-state quasi-momentum equations for ``params``.

    Strategy: the hard-core momenta 2*pi*n_j/L solve the equations exactly at
    infinite coupling and the system is best conditioned there, so Newton is
    seeded at that point and continued geometrically downward in c' to the
    target.  Two regimes bypass iteration entirely: c = 0 returns the free
    state k = 0 (the Jacobian is singular there), and the hard-core regime
    returns the infinite-coupling momenta exactly.

    ``tol`` bounds max_j |residual_j| in units of k*L (dimensionless); the
    stored ``residual_norm`` is divided by L so it carries momentum units.
    """
    nj = ground_state_quantum_numbers(params.n)
    c_eff = effective_coupling(params.c, params.kappa)

    if hardcore or (c_eff == HARD_CORE):
        k = _hardcore_momenta(params)
        return BetheState(
            params=params,
            c_eff=HARD_CORE,
            quantum_numbers=nj,
            quasi_momenta=k,
            residual_norm=0.0,
            energy=float(np.sum(k * k)),
            total_momentum=float(np.sum(k)),
            hardcore=True,
        )

    if params.c == 0.0:
        k = np.zeros(params.n)
        return BetheState(
            params=params,
            c_eff=0.0,
            quantum_numbers=nj,
            quasi_momenta=k,
            residual_norm=0.0,
            energy=0.0,
            total_momentum=0.0,
            noninteracting=True,
        )

    if c_eff >= _C_EFF_START:
        schedule = np.array([c_eff])
    else:
        n_steps = min(
            _MAX_CONTINUATION_STEPS,
            max(2, math.ceil(8.0 * math.log10(_C_EFF_START / c_eff))),
        )
        schedule = np.geomspace(_C_EFF_START, c_eff, n_steps)

    k = _hardcore_momenta(params)
    total_iterations = 0
    for c_step in schedule:
        k, norm, iters = _newton(k, float(c_step), params, tol)
        total_iterations += iters

    if not np.all(np.diff(k) < 0):
        raise SolverError("quasi-momenta lost strict ordering", k, norm)

    return BetheState(
        params=params,
        c_eff=c_eff,
        quantum_numbers=nj,
        quasi_momenta=k,
        residual_norm=norm / params.L,
        energy=float(np.sum(k * k)),
        total_momentum=float(np.sum(k)),
        newton_iterations=total_iterations,
        continuation_steps=len(schedule),
    )
