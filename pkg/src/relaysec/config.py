"""Scenario configuration, channel generation, and the shared RNG contract.

All powers are stored internally in linear watts.  JSON config files may
give any power in dB instead, using a ``*_dB`` suffixed key
(e.g. ``"Q_tot_dB": 30``); conversion happens once at the loading boundary.

Reproducibility contract: a 64-bit master seed plus an integer key tuple
fully determines every random draw.  Use :func:`derive_rng` to obtain the
stream for Monte Carlo trial ``t`` at grid point ``g``; parallel and serial
runs then agree bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ImpairmentProfile",
    "NetworkConfig",
    "ChannelRealization",
    "default_config",
    "generate_realization",
    "derive_rng",
    "db_to_linear",
    "config_from_dict",
    "load_config",
]


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class ImpairmentProfile:
    """Error-vector-magnitude ratios of each transmit/receive chain."""

    k_s_t: float = 0.0
    k_J1_t: float = 0.0
    k_J2_t: float = 0.0
    k_D_r: float = 0.0
    k_R_r: float = 0.0
    k_R_t: float = 0.0

    def __post_init__(self):
        for name, val in self.as_dict().items():
            if not (0.0 <= val <= 0.5):
                raise ValueError(f"impairment {name}={val} outside [0, 0.5]")

    def as_dict(self) -> dict[str, float]:
        return {
            "k_s_t": self.k_s_t,
            "k_J1_t": self.k_J1_t,
            "k_J2_t": self.k_J2_t,
            "k_D_r": self.k_D_r,
            "k_R_r": self.k_R_r,
            "k_R_t": self.k_R_t,
        }

    @property
    def ideal(self) -> bool:
        return all(v == 0.0 for v in self.as_dict().values())


@dataclass(frozen=True)
class NetworkConfig:
    """All scenario constants for one network instance.

    ``P_J2_bar`` is carried for completeness only: with null-space
    beamforming the phase-II jammer is silent (P_J2 = 0) and no code path
    consumes the cap.
    """

    N: int
    N_E: int
    sigma2: float
    Q_tot: float
    P_T: float
    P_J1_bar: float
    Q_l: tuple[float, ...]
    impairments: ImpairmentProfile = field(default_factory=ImpairmentProfile)
    delta_I: float = 1e-3
    delta_eps: float = 1e-3
    N_max: int = 30
    M_max: int = 20
    seed: int = 0
    P_J2_bar: float = 0.0

    def __post_init__(self):
        if self.N <= self.N_E:
            raise ValueError(f"need N > N_E, got N={self.N}, N_E={self.N_E}")
        for name in ("sigma2", "Q_tot", "P_T", "P_J1_bar"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if len(self.Q_l) != self.N:
            raise ValueError(f"Q_l must have exactly N={self.N} entries")
        if any(q <= 0 for q in self.Q_l):
            raise ValueError("all per-relay caps Q_l must be strictly positive")
        if self.delta_I <= 0 or self.delta_eps <= 0:
            raise ValueError("stopping tolerances must be positive")
        if self.N_max < 1 or self.M_max < 1:
            raise ValueError("iteration caps must be at least 1")

    def with_(self, **kwargs) -> "NetworkConfig":
        """Return a copy with the given fields replaced."""
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ChannelRealization:
    """Complex channel coefficients for one fading block.

    f_R: source -> relays (length N); g_R: relays -> destination,
    reciprocal (length N); f_E: source -> Eve (length N_E);
    q_E: destination -> Eve (length N_E); C_E: relays -> Eve (N_E x N).
    """

    f_R: np.ndarray
    g_R: np.ndarray
    f_E: np.ndarray
    q_E: np.ndarray
    C_E: np.ndarray

    def validate(self, cfg: NetworkConfig) -> None:
        if self.f_R.shape != (cfg.N,) or self.g_R.shape != (cfg.N,):
            raise ValueError("relay channel dimension mismatch")
        if self.f_E.shape != (cfg.N_E,) or self.q_E.shape != (cfg.N_E,):
            raise ValueError("Eve channel dimension mismatch")
        if self.C_E.shape != (cfg.N_E, cfg.N):
            raise ValueError("C_E dimension mismatch")
        for arr in (self.f_R, self.g_R, self.f_E, self.q_E, self.C_E):
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError("non-finite channel entry")


def default_config(**overrides) -> NetworkConfig:
    """Baseline scenario: N=12 relays, N_E=2, Q_tot=30 dB, all EVMs 0.08.

    Per-relay caps are 2*Q_tot/N; the source cap is 1.5*Q_tot.  The
    destination-jammer cap defaults to Q_tot so that it binds only through
    the total budget.
    """
    N = int(overrides.pop("N", 12))
    Q_tot = float(overrides.pop("Q_tot", db_to_linear(30.0)))
    base = dict(
        N=N,
        N_E=2,
        sigma2=1e-3,
        Q_tot=Q_tot,
        P_T=1.5 * Q_tot,
        P_J1_bar=Q_tot,
        Q_l=tuple(2.0 * Q_tot / N for _ in range(N)),
        impairments=ImpairmentProfile(*(0.08,) * 6),
        delta_I=1e-3,
        delta_eps=1e-3,
    )
    base.update(overrides)
    return NetworkConfig(**base)


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Deterministic child stream for an integer key tuple.

    ``derive_rng(seed)`` is the root stream; ``derive_rng(seed, g, t)`` is
    the stream of trial ``t`` at grid point ``g``.  Disjoint keys give
    statistically independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def _cn01(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussian, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_realization(cfg: NetworkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one block-fading realization: every entry i.i.d. CN(0, 1)."""
    ch = ChannelRealization(
        f_R=_cn01(rng, cfg.N),
        g_R=_cn01(rng, cfg.N),
        f_E=_cn01(rng, cfg.N_E),
        q_E=_cn01(rng, cfg.N_E),
        C_E=_cn01(rng, (cfg.N_E, cfg.N)),
    )
    ch.validate(cfg)
    return ch


_POWER_KEYS = ("sigma2", "Q_tot", "P_T", "P_J1_bar", "P_J2_bar")


def config_from_dict(data: dict) -> NetworkConfig:
    """Build a NetworkConfig from a plain dict (JSON layout).

    Any power field may instead appear with a ``_dB`` suffix, including
    ``Q_l_dB`` for the per-relay cap list.  ``impairments`` is a nested
    object keyed by EVM name.
    """
    d = dict(data)
    for key in _POWER_KEYS:
        db_key = key + "_dB"
        if db_key in d:
            if key in d:
                raise ValueError(f"both {key} and {db_key} given")
            d[key] = db_to_linear(float(d.pop(db_key)))
    if "Q_l_dB" in d:
        if "Q_l" in d:
            raise ValueError("both Q_l and Q_l_dB given")
        d["Q_l"] = [db_to_linear(float(x)) for x in d.pop("Q_l_dB")]
    if "Q_l" in d:
        d["Q_l"] = tuple(float(x) for x in d["Q_l"])
    if "impairments" in d and not isinstance(d["impairments"], ImpairmentProfile):
        d["impairments"] = ImpairmentProfile(**d["impairments"])
    return NetworkConfig(**d)


def load_config(path: str) -> NetworkConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
