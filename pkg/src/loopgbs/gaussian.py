"""Gaussian states of light: preparation, propagation, loss, photon moments.

Conventions used throughout: quadrature ordering is (x_1..x_m, p_1..p_m),
annihilation operators are a = (x + ip)/2, and the vacuum covariance is the
identity.  With this normalisation the per-mode photon number reads
n = (sigma_xx + sigma_pp - 2)/4 + (mx^2 + mp^2)/4.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .compiler import TransferMatrix
from .errors import InputError, UnsupportedStateError

SYMMETRY_TOL = 1e-10
PHYSICALITY_TOL = 1e-8

INPUT_KINDS = ("smsv", "thermal", "coherent", "squashed", "vacuum")


@dataclass(frozen=True)
class GaussianState:
    """Zero-based container for an m-mode Gaussian state.

    Attributes:
        mean: length-2m quadrature mean vector, (x..., p...) ordering.
        cov: 2m x 2m real symmetric covariance matrix, vacuum = identity.
    """

    mean: np.ndarray
    cov: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2

    def is_zero_mean(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.mean).max(initial=0.0) <= tol)

    def restrict(self, modes) -> "GaussianState":
        """Partial trace down to the given modes (Gaussian marginal)."""
        modes = np.asarray(modes, dtype=int)
        m = self.n_modes
        idx = np.concatenate([modes, modes + m])
        return GaussianState(mean=self.mean[idx].copy(), cov=self.cov[np.ix_(idx, idx)].copy())

    def check_valid(self, classical: bool = False) -> None:
        """Raise InputError if the state is unsymmetric or unphysical."""
        sigma = self.cov
        m = self.n_modes
        if sigma.shape != (2 * m, 2 * m) or self.mean.shape != (2 * m,):
            raise InputError("mean/covariance dimensions are inconsistent")
        if np.abs(sigma - sigma.T).max() > SYMMETRY_TOL:
            raise InputError("covariance is not symmetric")
        omega = symplectic_form(m)
        eig = np.linalg.eigvalsh(sigma + 1j * omega)
        if eig.min() < -PHYSICALITY_TOL:
            raise InputError(f"covariance violates the uncertainty bound ({eig.min():.2e})")
        if classical:
            ceig = np.linalg.eigvalsh(sigma - np.eye(2 * m))
            if ceig.min() < -PHYSICALITY_TOL:
                raise InputError("state is not a classical (P-representable) Gaussian state")

    def to_json(self) -> str:
        return json.dumps(
            {"mean": self.mean.tolist(), "cov": self.cov.tolist()}, sort_keys=True
        )

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        doc = json.loads(text)
        return cls(mean=np.asarray(doc["mean"], float), cov=np.asarray(doc["cov"], float))


def symplectic_form(m: int) -> np.ndarray:
    # normalised so that sigma + i*Omega >= 0 with vacuum sigma = identity
    omega = np.zeros((2 * m, 2 * m))
    omega[:m, m:] = np.eye(m)
    omega[m:, :m] = -np.eye(m)
    return omega


def vacuum_state(m: int) -> GaussianState:
    return GaussianState(mean=np.zeros(2 * m), cov=np.eye(2 * m))


@dataclass(frozen=True)
class InputSpec:
    """Input-state family, one shared squeezing parameter across modes."""

    kind: str
    squeezing: float
    n_modes: int

    def __post_init__(self):
        if self.kind not in INPUT_KINDS:
            raise InputError(f"unknown input kind {self.kind!r}")
        if not math.isfinite(self.squeezing) or self.squeezing < 0:
            raise InputError("squeezing must be a finite nonnegative real")
        if self.n_modes < 1:
            raise InputError("n_modes must be positive")


def prepare_input(spec: InputSpec) -> GaussianState:
    """Prepare an m-mode product state of the requested family.

    All four non-vacuum families carry the same lossless mean photon number
    sinh(s)^2 per mode: squeezed vacuum by construction, thermal and
    squashed via their occupation, coherent via its displacement sinh(s).
    """
    m = spec.n_modes
    s = spec.squeezing
    nbar = math.sinh(s) ** 2
    mean = np.zeros(2 * m)
    if spec.kind == "smsv":
        diag = np.concatenate([np.full(m, math.exp(-2 * s)), np.full(m, math.exp(2 * s))])
    elif spec.kind == "thermal":
        diag = np.full(2 * m, 1.0 + 2.0 * nbar)
    elif spec.kind == "squashed":
        diag = np.concatenate([np.ones(m), np.full(m, 1.0 + 4.0 * nbar)])
    elif spec.kind == "coherent":
        diag = np.ones(2 * m)
        mean[:m] = 2.0 * math.sinh(s)
    else:  # vacuum
        diag = np.ones(2 * m)
    return GaussianState(mean=mean, cov=np.diag(diag))


@dataclass(frozen=True)
class LossModel:
    """Composite device loss: common input loss, per-loop loss, detector response.

    ``channel_efficiencies`` are the detector responses relative to one
    another; composing them into absolute per-mode efficiencies normalises
    them to unit mean so the absolute photon budget stays in the common and
    loop factors.  ``detectors_off`` zeroes individual detectors after
    normalisation (an unbalanced-loss scenario, not a certificate value).
    Detector assignment is round-robin: logical mode i reads out on
    detector i mod n_detectors.
    """

    common_efficiency: float
    loop_efficiencies: tuple[float, ...]
    channel_efficiencies: tuple[float, ...]
    detectors_off: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not (0.0 <= self.common_efficiency <= 1.0):
            raise InputError("common_efficiency must lie in [0, 1]")
        if any(not (0.0 <= e <= 1.0) for e in self.loop_efficiencies):
            raise InputError("loop efficiencies must lie in [0, 1]")
        if any(not (0.0 < e <= 1.0) for e in self.channel_efficiencies):
            raise InputError("channel efficiencies must lie in (0, 1]")
        n_det = len(self.channel_efficiencies)
        if any(not (0 <= d < n_det) for d in self.detectors_off):
            raise InputError("detectors_off indices out of range")

    @classmethod
    def lossless(cls, n_detectors: int = 16) -> "LossModel":
        return cls(1.0, (1.0, 1.0, 1.0), tuple([1.0] * n_detectors))

    @property
    def input_efficiency(self) -> float:
        """Scalar loss seen by every mode before detection."""
        return self.common_efficiency * float(np.prod(self.loop_efficiencies))

    def detector_response(self, n_logical: int) -> np.ndarray:
        """Per-logical-mode relative detector response (unit mean, zeros for
        detectors that are switched off)."""
        channels = np.asarray(self.channel_efficiencies, float)
        rel = channels / channels.mean()
        rel = rel.copy()
        for det in self.detectors_off:
            rel[det] = 0.0
        return rel[np.arange(n_logical) % len(channels)]

    def per_mode_efficiencies(self, n_logical: int) -> np.ndarray:
        """Absolute efficiency of each logical mode under this model."""
        return self.input_efficiency * self.detector_response(n_logical)


def evolve(state: GaussianState, transfer) -> GaussianState:
    """Propagate a state through a (sub-)unitary transfer matrix.

    The lost fraction is replaced by vacuum: sigma -> S sigma S^T + (1 - S S^T)
    in the real quadrature representation S of the complex matrix.  For a
    unitary matrix the additive term vanishes.
    """
    t = transfer.entries if isinstance(transfer, TransferMatrix) else np.asarray(transfer)
    if t.shape[0] != t.shape[1]:
        raise InputError("transfer matrix must be square; restrict the state afterwards")
    m = state.n_modes
    if t.shape[1] != m:
        raise InputError("transfer matrix does not match the number of modes")
    svals = np.linalg.svd(t, compute_uv=False)
    if svals[0] > 1.0 + 1e-10:
        raise InputError(f"transfer matrix amplifies (max singular value {svals[0]:.6f})")

    s_real = np.block([[t.real, -t.imag], [t.imag, t.real]])
    cov = s_real @ state.cov @ s_real.T + (np.eye(2 * m) - s_real @ s_real.T)
    cov = 0.5 * (cov + cov.T)
    mean = s_real @ state.mean
    return GaussianState(mean=mean, cov=cov)


def apply_loss(state: GaussianState, per_mode_eta) -> GaussianState:
    """Independent per-mode loss channels with transmissions ``per_mode_eta``."""
    eta = np.asarray(per_mode_eta, dtype=float)
    m = state.n_modes
    if eta.shape != (m,):
        raise InputError("need one efficiency per mode")
    if np.any(eta < 0.0) or np.any(eta > 1.0):
        raise InputError("efficiencies must lie in [0, 1]")
    root = np.sqrt(np.concatenate([eta, eta]))
    cov = root[:, None] * state.cov * root[None, :] + np.diag(1.0 - np.concatenate([eta, eta]))
    mean = root * state.mean
    return GaussianState(mean=mean, cov=cov)


def mean_photons(state: GaussianState) -> np.ndarray:
    """Per-mode mean photon numbers (exact for Gaussian states)."""
    m = state.n_modes
    sigma = state.cov
    xx = np.diagonal(sigma)[:m]
    pp = np.diagonal(sigma)[m:]
    return (xx + pp - 2.0) / 4.0 + (state.mean[:m] ** 2 + state.mean[m:] ** 2) / 4.0


def complex_moments(state: GaussianState) -> tuple[np.ndarray, np.ndarray]:
    """Second moments in the mode-operator basis for a zero-mean state.

    Returns (N, M) with N_ij = <adag_i a_j> (hermitian) and
    M_ij = <a_i a_j> (symmetric).
    """
    m = state.n_modes
    sigma = state.cov
    sxx = sigma[:m, :m]
    spp = sigma[m:, m:]
    sxp = sigma[:m, m:]
    n_mat = (sxx + spp - 2.0 * np.eye(m)) / 4.0 + 1j * (sxp - sxp.T) / 4.0
    m_mat = (sxx - spp) / 4.0 + 1j * (sxp + sxp.T) / 4.0
    return n_mat, m_mat


def photon_covariance(state: GaussianState) -> np.ndarray:
    """Matrix of photon-number covariances Cov(n_i, n_j) of a zero-mean state.

    Off-diagonal entries are |N_ij|^2 + |M_ij|^2; the diagonal carries the
    per-mode variance N_ii (N_ii + 1) + |M_ii|^2.  States with displacement
    are not supported here; route them through the sampling path instead.
    """
    if not state.is_zero_mean(tol=1e-10):
        raise UnsupportedStateError("photon_covariance requires a zero-mean state")
    n_mat, m_mat = complex_moments(state)
    cov = np.abs(n_mat) ** 2 + np.abs(m_mat) ** 2
    nbar = np.real(np.diagonal(n_mat))
    np.fill_diagonal(cov, nbar * (nbar + 1.0) + np.abs(np.diagonal(m_mat)) ** 2)
    return cov
