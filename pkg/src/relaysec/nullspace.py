"""Null-space lift for the relay beamformer.

The relay weights must satisfy ``C_E F_R w* = 0`` so that the relayed
information vanishes at the eavesdropper.  Writing H = C_E F_R, the lift
``w = H_perp v`` with H_perp an orthonormal basis of the null space of
conj(H) guarantees this for every v, and ||w|| = ||v||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ChannelRealization

__all__ = ["NullSpaceBasis", "RankDeficiencyError", "build_basis", "lift"]

_RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    """C_E F_R lost rank; the null space is larger than expected."""

    def __init__(self, rank: int, expected: int, d: int):
        self.rank = rank
        self.expected = expected
        self.d = d
        super().__init__(
            f"rank(C_E F_R) = {rank} < {expected}; null-space dimension is {d}"
        )


@dataclass(frozen=True)
class NullSpaceBasis:
    H: np.ndarray       # N_E x N, equals C_E F_R
    H_perp: np.ndarray  # N x d, orthonormal columns
    d: int


def _phase_normalize(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Fixes the phase ambiguity of the factorization, making the basis a
    deterministic function of the realization.
    """
    out = V.copy()
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        pivot = V[i, j]
        if abs(pivot) > 0:
            out[:, j] = V[:, j] * (abs(pivot) / pivot)
    return out


def build_basis(ch: ChannelRealization) -> NullSpaceBasis:
    N_E, N = ch.C_E.shape
    H = ch.C_E @ np.diag(ch.f_R)
    # null(conj(H)) via SVD of conj(H); generically d = N - N_E
    _, s, Vh = np.linalg.svd(np.conj(H))
    rank = int(np.sum(s > _RANK_TOL * (s[0] if s.size else 1.0)))
    d = N - rank
    if rank < N_E:
        raise RankDeficiencyError(rank=rank, expected=N_E, d=d)
    H_perp = _phase_normalize(Vh[rank:].conj().T)
    return NullSpaceBasis(H=H, H_perp=H_perp, d=d)


def lift(basis: NullSpaceBasis, v: np.ndarray) -> np.ndarray:
    """w = H_perp v; isometric, and C_E F_R w* = 0 to numerical tolerance."""
    v = np.asarray(v)
    if v.shape != (basis.d,):
        raise ValueError(f"v has shape {v.shape}, expected ({basis.d},)")
    return basis.H_perp @ v
