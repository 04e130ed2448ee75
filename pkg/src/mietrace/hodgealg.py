"""Finite-dimensional harness for nilpotent operators T with T^2 = 0.

Random models T = U [[0, S], [0, 0]] U* (S random complex, U Haar-ish unitary
from a QR factorization) are used to exercise the abstract facts that T + T*
is self-adjoint with square T T* + T* T, that the two products have commuting
resolvents, and that T T* (T T* + T* T + 1)^{-1} is a contraction.

In finite dimension the Friedrichs-extension clause is vacuous (all
extensions coincide), so it is not separately testable here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NilpotentModel", "TstarReport", "build_model", "verify_tstar", "run_suite"]

MAX_DIM = 64


@dataclass(frozen=True)
class NilpotentModel:
    """n x n complex T with T @ T = 0 by construction, plus its building blocks."""

    n1: int
    n2: int
    seed: int
    T: np.ndarray
    S: np.ndarray
    U: np.ndarray

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def norm(self) -> float:
        return float(np.linalg.norm(self.T, 2))


def build_model(dims: tuple[int, int], seed: int) -> NilpotentModel:
    """Random nilpotent model of block sizes dims = (n1, n2).

    S has entries uniform in the unit square of the complex plane; U comes
    from the QR factorization of a complex Gaussian matrix with the phase
    convention that makes R's diagonal positive (deterministic per seed).
    """
    n1, n2 = dims
    if n1 < 1 or n2 < 1:
        raise ValueError("both block sizes must be at least 1")
    if n1 + n2 > MAX_DIM:
        raise ValueError(f"total dimension capped at {MAX_DIM}")
    rng = np.random.default_rng(seed)
    S = rng.random((n1, n2)) + 1j * rng.random((n1, n2))
    G = rng.normal(size=(n1 + n2, n1 + n2)) + 1j * rng.normal(size=(n1 + n2, n1 + n2))
    U, R = np.linalg.qr(G)
    U = U @ np.diag(np.sign(np.diag(R)).conj())
    B = np.zeros((n1 + n2, n1 + n2), dtype=complex)
    B[:n1, n1:] = S
    T = U @ B @ U.conj().T
    return NilpotentModel(n1=n1, n2=n2, seed=seed, T=T, S=S, U=U)


@dataclass(frozen=True)
class TstarReport:
    """Residuals for one model; the contract thresholds live with the caller."""

    n1: int
    n2: int
    seed: int
    t_norm: float
    nilpotency: float          # ||T T|| / ||T||^2
    symmetry: float            # ||(T+T*) - (T+T*)*||
    square_identity: float     # ||(T+T*)^2 - (T T* + T* T)||
    resolvent_commutator: float
    contraction_left: float    # ||T T* (T T* + T* T + 1)^{-1}||
    contraction_right: float   # ||T* T (T T* + T* T + 1)^{-1}||
    spectrum_match: float      # block spectra of (T+T*)^2 vs S S*, S* S


def verify_tstar(model: NilpotentModel) -> TstarReport:
    T = model.T
    Th = T.conj().T
    n = T.shape[0]
    eye = np.eye(n)
    tnorm = model.norm()
    scale = max(tnorm * tnorm, 1e-300)

    D = T + Th
    TTs = T @ Th
    TsT = Th @ T
    square_identity = float(np.linalg.norm(D @ D - (TTs + TsT), 2))
    symmetry = float(np.linalg.norm(D - D.conj().T, 2))
    nilpotency = float(np.linalg.norm(T @ T, 2)) / scale

    r1 = np.linalg.inv(TsT + eye)
    r2 = np.linalg.inv(TTs + eye)
    resolvent_commutator = float(np.linalg.norm(r1 @ r2 - r2 @ r1, 2))

    denom = np.linalg.inv(TTs + TsT + eye)
    contraction_left = float(np.linalg.norm(TTs @ denom, 2))
    contraction_right = float(np.linalg.norm(TsT @ denom, 2))

    ev_full = np.sort(np.linalg.eigvalsh(D @ D))
    SSs = model.S @ model.S.conj().T
    SsS = model.S.conj().T @ model.S
    ev_blocks = np.sort(
        np.concatenate([np.linalg.eigvalsh(SSs), np.linalg.eigvalsh(SsS)])
    )
    spectrum_match = float(np.max(np.abs(ev_full - ev_blocks))) if ev_full.size else 0.0

    return TstarReport(
        n1=model.n1,
        n2=model.n2,
        seed=model.seed,
        t_norm=tnorm,
        nilpotency=nilpotency,
        symmetry=symmetry,
        square_identity=square_identity,
        resolvent_commutator=resolvent_commutator,
        contraction_left=contraction_left,
        contraction_right=contraction_right,
        spectrum_match=spectrum_match,
    )


def run_suite(n_seeds: int, max_dim: int = MAX_DIM, base_seed: int = 0) -> list[TstarReport]:
    """Reports for n_seeds random models with total dimension <= max_dim."""
    if max_dim > MAX_DIM:
        raise ValueError(f"max_dim capped at {MAX_DIM}")
    rng = np.random.default_rng(base_seed)
    out = []
    for i in range(n_seeds):
        n1 = int(rng.integers(1, max(2, max_dim // 2)))
        n2 = int(rng.integers(1, max(2, max_dim - n1 + 1)))
        out.append(verify_tstar(build_model((n1, n2), seed=base_seed + 1000 + i)))
    return out
