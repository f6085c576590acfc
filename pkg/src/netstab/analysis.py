"""Closed-loop verification: channel powers, mean-square norms, covariance
simulation, and the final stabilization verdict."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotHurwitz
from .numerics import (
    MatrixTrajectory,
    integrate_linear_matrix_ode,
    is_hurwitz,
    solve_lyapunov,
    spectral_abscissa,
    spectral_radius,
)
from .plantmodel import AWGN, FADING, ChannelEnsemble, Plant

VERDICT_STABILIZED = "stabilized"
VERDICT_UNSTABLE = "unstable"
VERDICT_POWER_VIOLATION = "power_violation"
VERDICT_MS_NORM_VIOLATION = "ms_norm_violation"

#: Trajectories are decimated to at most this many samples.
MAX_TRAJECTORY_SAMPLES = 10_000


@dataclass(frozen=True)
class StateSpace:
    """Strictly proper state-space realization ``Ccl (sI - Acl)^-1 Bcl``."""

    Acl: np.ndarray
    Bcl: np.ndarray
    Ccl: np.ndarray

    def __post_init__(self):
        Acl = np.asarray(self.Acl, dtype=float)
        Bcl = np.asarray(self.Bcl, dtype=float)
        Ccl = np.asarray(self.Ccl, dtype=float)
        n = Acl.shape[0]
        if Acl.shape != (n, n) or Bcl.shape[0] != n or Ccl.shape[1] != n:
            raise InvalidInput("inconsistent state-space dimensions")
        object.__setattr__(self, "Acl", Acl)
        object.__setattr__(self, "Bcl", Bcl)
        object.__setattr__(self, "Ccl", Ccl)
        object.__setattr__(self, "_hurwitz", is_hurwitz(Acl))

    @property
    def hurwitz(self) -> bool:
        return self._hurwitz


def closed_loop(plant: Plant, design) -> StateSpace:
    """Noise-to-channel-input realization of the closed loop.

    ``Acl = A + BF``; the input matrix is ``BR`` for AWGN designs and
    ``BRM`` for fading designs (the multiplicative noise enters after the
    channel mean); the output matrix is ``TF``.
    """
    A, B = plant.A, plant.B
    Acl = A + B @ design.F
    if design.kind == FADING:
        Bcl = B @ design.R @ np.diag(design.mean)
    else:
        Bcl = B @ design.R
    Ccl = design.T @ design.F
    return StateSpace(Acl=Acl, Bcl=Bcl, Ccl=Ccl)


def h2_gramian_entrywise(ss: StateSpace) -> np.ndarray:
    """Matrix of squared H2 norms of the scalar transfer-function entries.

    Entry (i, j) is the squared H2 norm of the transfer from input j to
    output i, computed from one Lyapunov solve per input column.
    """
    if not ss.hurwitz:
        raise NotHurwitz("entrywise H2 norms require a Hurwitz closed loop")
    q, p = ss.Ccl.shape[0], ss.Bcl.shape[1]
    K = np.empty((q, p))
    for j in range(p):
        col = ss.Bcl[:, j : j + 1]
        L = solve_lyapunov(ss.Acl, col @ col.T)
        K[:, j] = np.einsum("in,nm,im->i", ss.Ccl, L, ss.Ccl)
    return np.maximum(K, 0.0)


def h2_norm_squared(ss: StateSpace, weight=None) -> float:
    """Total squared H2 norm via a single Lyapunov solve.

    ``weight`` optionally scales the input covariance: Q = Bcl W Bcl'.
    """
    if not ss.hurwitz:
        raise NotHurwitz("H2 norm requires a Hurwitz closed loop")
    W = np.eye(ss.Bcl.shape[1]) if weight is None else np.asarray(weight, float)
    L = solve_lyapunov(ss.Acl, ss.Bcl @ W @ ss.Bcl.T)
    return float(np.trace(ss.Ccl @ L @ ss.Ccl.T))


def channel_powers_awgn(plant: Plant, design, noise_density) -> np.ndarray:
    """Stationary channel input powers E[q_i^2] of an AWGN design.

    One Lyapunov solve with the full noise covariance; the i-th power is the
    i-th diagonal entry of the output covariance.
    """
    N = np.asarray(noise_density, dtype=float).reshape(-1)
    ss = closed_loop(plant, design)
    if not ss.hurwitz:
        raise NotHurwitz("channel powers are undefined for an unstable loop")
    L = solve_lyapunov(ss.Acl, ss.Bcl @ np.diag(N) @ ss.Bcl.T)
    return np.maximum(np.einsum("in,nm,im->i", ss.Ccl, L, ss.Ccl), 0.0)


def ms_norm(ss: StateSpace, phi) -> float:
    """Mean-square norm of the realization composed with a positive diagonal
    input scaling: the square root of the spectral radius of the matrix of
    squared entrywise H2 norms."""
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if np.any(phi <= 0):
        raise InvalidInput("input scaling must be positive")
    if ss.Bcl.shape[1] != phi.size:
        raise InvalidInput("scaling length must match the input count")
    scaled = StateSpace(Acl=ss.Acl, Bcl=ss.Bcl * phi, Ccl=ss.Ccl)
    if scaled.Ccl.shape[0] != scaled.Bcl.shape[1]:
        raise InvalidInput("mean-square norm requires a square transfer matrix")
    K = h2_gramian_entrywise(scaled)
    return float(np.sqrt(spectral_radius(K)))


def mixed_norms(ss: StateSpace):
    """(column-sum, row-sum) mixed norms of the entrywise H2-squared matrix,
    square-rooted."""
    K = h2_gramian_entrywise(ss)
    norm_2_1 = float(np.sqrt(np.max(np.sum(K, axis=0))))
    norm_2_inf = float(np.sqrt(np.max(np.sum(K, axis=1))))
    return norm_2_1, norm_2_inf


def _fading_noise_feedback(plant: Plant, design, ch: ChannelEnsemble):
    if ch.kind != FADING:
        raise InvalidInput("covariance simulation applies to fading channels")
    if design.kind != FADING:
        raise InvalidInput("design kind does not match the channel kind")
    G = plant.B @ design.R
    Ccl = design.T @ design.F
    return G, Ccl, ch.variance.copy()


def covariance_rhs(plant: Plant, design, ch: ChannelEnsemble):
    """Right-hand side of the state-covariance evolution under multiplicative
    channel noise: the stable Lyapunov flow plus a noise re-injection term
    that reads the per-channel signal powers off the diagonal."""
    Acl = plant.A + plant.B @ design.F
    G, Ccl, s2 = _fading_noise_feedback(plant, design, ch)

    def rhs(X):
        y = np.einsum("in,nm,im->i", Ccl, X, Ccl)
        return Acl @ X + X @ Acl.T + (G * (s2 * y)) @ G.T

    return rhs


def ms_operator_abscissa(plant: Plant, design, ch: ChannelEnsemble) -> float:
    """Spectral abscissa of the vectorized covariance evolution operator.

    Negative exactly when the closed fading loop is mean-square stable; its
    magnitude is the slowest mean-square decay rate, which is the right time
    scale for covariance simulations.
    """
    Acl = plant.A + plant.B @ design.F
    G, Ccl, s2 = _fading_noise_feedback(plant, design, ch)
    n = plant.n
    op = np.kron(np.eye(n), Acl) + np.kron(Acl, np.eye(n))
    for i in range(G.shape[1]):
        gi = G[:, i]
        ci = Ccl[i, :]
        op += s2[i] * np.outer(np.outer(gi, gi).flatten(order="F"), np.kron(ci, ci))
    return float(np.max(np.linalg.eigvals(op).real))


def default_time_step(plant: Plant, design) -> float:
    """0.01 divided by the closed-loop spectral abscissa magnitude."""
    alpha = abs(spectral_abscissa(plant.A + plant.B @ design.F))
    return 0.01 / max(alpha, 1e-3)


def simulate_fading_covariance(
    plant: Plant,
    design,
    ch: ChannelEnsemble,
    t_end: float = 10.0,
    dt: float | None = None,
) -> MatrixTrajectory:
    """Integrate the state covariance from ``X(0) = x0 x0'``.

    Fixed-step fourth-order integration with per-step symmetrization; the
    returned trajectory is decimated to at most ``MAX_TRAJECTORY_SAMPLES``
    rows. Overflow is reported through ``diverged_at`` rather than raised:
    divergence is a meaningful verdict for an inadequate design.
    """
    if dt is None:
        dt = default_time_step(plant, design)
    rhs = covariance_rhs(plant, design, ch)
    X0 = np.outer(plant.x0, plant.x0)
    traj = integrate_linear_matrix_ode(rhs, X0, t_end, dt, raise_on_divergence=False)
    nsamp = traj.times.size
    if nsamp > MAX_TRAJECTORY_SAMPLES:
        stride = int(np.ceil(nsamp / MAX_TRAJECTORY_SAMPLES))
        keep = np.unique(np.concatenate([np.arange(0, nsamp, stride), [nsamp - 1]]))
        traj = MatrixTrajectory(
            times=traj.times[keep],
            states=traj.states[keep],
            diverged_at=traj.diverged_at,
        )
    return traj


@dataclass(frozen=True)
class AnalysisReport:
    """Stability verdict with the margins that support it.

    For AWGN designs ``channel_powers`` and per-channel power margins are
    populated; for fading designs ``ms_norm`` and its single margin
    ``1 - ms_norm``. Only the fields relevant to the channel kind are set.
    """

    verdict: str
    kind: str
    closed_loop_spectrum: np.ndarray
    margins: np.ndarray
    channel_powers: np.ndarray | None = None
    ms_norm: np.ndarray | None = None

    @property
    def stabilized(self) -> bool:
        return self.verdict == VERDICT_STABILIZED


def analyze(plant: Plant, design, ch: ChannelEnsemble) -> AnalysisReport:
    """Full closed-loop verdict for a co-design against its channel ensemble.

    AWGN: stabilized iff the loop is Hurwitz and every channel power sits
    below its admissible level with relative slack at least 1e-9.
    Fading: stabilized iff the loop is Hurwitz and the mean-square norm of
    the noise-to-input transfer scaled by sigma/|mu| is below one.
    """
    ss = closed_loop(plant, design)
    spectrum = np.linalg.eigvals(ss.Acl)
    if not ss.hurwitz:
        return AnalysisReport(
            verdict=VERDICT_UNSTABLE,
            kind=ch.kind,
            closed_loop_spectrum=spectrum,
            margins=np.array([]),
        )
    if ch.kind == AWGN:
        powers = channel_powers_awgn(plant, design, ch.noise_density)
        margins = ch.power - powers
        ok = bool(np.all(margins >= 1e-9 * ch.power))
        return AnalysisReport(
            verdict=VERDICT_STABILIZED if ok else VERDICT_POWER_VIOLATION,
            kind=ch.kind,
            closed_loop_spectrum=spectrum,
            margins=margins,
            channel_powers=powers,
        )
    phi = np.sqrt(ch.variance) / np.abs(ch.mean)
    value = ms_norm(ss, phi)
    ok = value < 1.0
    return AnalysisReport(
        verdict=VERDICT_STABILIZED if ok else VERDICT_MS_NORM_VIOLATION,
        kind=ch.kind,
        closed_loop_spectrum=spectrum,
        margins=np.array([1.0 - value]),
        ms_norm=np.array([value]),
    )


__all__ = [
    "StateSpace",
    "AnalysisReport",
    "closed_loop",
    "h2_gramian_entrywise",
    "h2_norm_squared",
    "channel_powers_awgn",
    "ms_norm",
    "mixed_norms",
    "ms_operator_abscissa",
    "covariance_rhs",
    "default_time_step",
    "simulate_fading_covariance",
    "analyze",
    "VERDICT_STABILIZED",
    "VERDICT_UNSTABLE",
    "VERDICT_POWER_VIOLATION",
    "VERDICT_MS_NORM_VIOLATION",
]
