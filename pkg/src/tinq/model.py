"""Core domain types and the GDoF/SINR arithmetic every other module consumes.

Matrix orientation is fixed everywhere as (row = transmitter, column = receiver):
``alpha[i, j]`` is the strength exponent of the link Tx-i -> Rx-j. Exponent
arithmetic uses natural-log ratios (the base cancels); user-facing dB
conversions use 10*log10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidReferencePower, SchemaError, ShapeError

__all__ = [
    "ChannelMatrix",
    "GdofTuple",
    "PowerAlloc",
    "PhysicalNetwork",
    "strength_from_physical",
    "achieved_gdof",
    "sinr",
    "realize_network",
    "parse_network",
    "network_to_json",
    "db_to_linear",
    "linear_to_db",
]


def db_to_linear(x_db):
    """10^(x/10), elementwise."""
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """10*log10(x), elementwise."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """K x K matrix of channel strength exponents (log-P scale), entry (i, j)
    is the strength of link Tx-i -> Rx-j. Entries finite and >= 0."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"alpha must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ShapeError("need at least one user")
        if not np.all(np.isfinite(a)):
            raise ShapeError("alpha entries must be finite")
        if np.any(a < 0):
            raise ShapeError("alpha entries must be nonnegative")
        object.__setattr__(self, "alpha", _readonly(a))

    @property
    def K(self) -> int:
        return self.alpha.shape[0]

    def alpha_prime(self) -> np.ndarray:
        """Cross-strength matrix: alpha off the diagonal, 0 on it."""
        a = self.alpha.copy()
        np.fill_diagonal(a, 0.0)
        return a


@dataclass(frozen=True, eq=False)
class GdofTuple:
    """Per-user GDoF values. Achievable tuples (clamped evaluation) are
    nonnegative, with zeros exactly for users outside the active subset; the
    unclamped polyhedral-form evaluation may carry negative entries."""

    d: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.d, dtype=float).reshape(-1)
        if v.size < 1:
            raise ShapeError("empty GDoF tuple")
        if np.any(np.isnan(v)) or np.any(v == np.inf):
            raise ShapeError("GDoF entries must not be NaN or +inf")
        object.__setattr__(self, "d", _readonly(v))

    @property
    def K(self) -> int:
        return self.d.size

    def support(self, tol: float = 1e-12) -> tuple[int, ...]:
        """Indices with d_k > tol."""
        return tuple(int(k) for k in np.nonzero(self.d > tol)[0])


@dataclass(frozen=True, eq=False)
class PowerAlloc:
    """Per-user transmit power exponents r_k <= 0 (transmit power P^{r_k});
    r_k = -inf means the transmitter is off."""

    r: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.r, dtype=float).reshape(-1)
        if v.size < 1:
            raise ShapeError("empty power allocation")
        if np.any(np.isnan(v)) or np.any(v == np.inf):
            raise ShapeError("power exponents must not be NaN or +inf")
        if np.any(v > 1e-9):
            raise ShapeError("power exponents must be <= 0")
        # tiny positive float noise is clipped rather than rejected
        object.__setattr__(self, "r", _readonly(np.minimum(v, 0.0)))

    @property
    def K(self) -> int:
        return self.r.size


@dataclass(frozen=True, eq=False)
class PhysicalNetwork:
    """Finite-SNR description: linear power gains G_ij = |h_ij|^2, per-Tx power
    caps (watts), receiver noise power (watts), and the reference power P > 1
    that anchors the log-P scale."""

    gains: np.ndarray
    max_tx_power: np.ndarray
    noise_power: float
    reference_power: float

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise ShapeError(f"gains must be square, got shape {g.shape}")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ShapeError("gains must be finite and nonnegative")
        p = np.broadcast_to(np.asarray(self.max_tx_power, dtype=float), (g.shape[0],)).copy()
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise ShapeError("per-Tx power caps must be positive and finite")
        if not (self.noise_power > 0 and math.isfinite(self.noise_power)):
            raise ShapeError("noise power must be positive and finite")
        if not (self.reference_power > 1):
            raise InvalidReferencePower(
                f"reference power must exceed 1, got {self.reference_power}"
            )
        object.__setattr__(self, "gains", _readonly(g))
        object.__setattr__(self, "max_tx_power", _readonly(p))
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "reference_power", float(self.reference_power))

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    def nominal_snr(self) -> np.ndarray:
        """Full-power received SNR matrix: G_ij * P_i / noise."""
        return self.gains * self.max_tx_power[:, None] / self.noise_power


def strength_from_physical(net: PhysicalNetwork) -> ChannelMatrix:
    """Channel strength levels alpha_ij = log(max{1, G_ij*P_i/noise}) / log P.

    Entries are 0 whenever the full-power received SNR is at or below 1.
    """
    if not (net.reference_power > 1):
        raise InvalidReferencePower(
            f"reference power must exceed 1, got {net.reference_power}"
        )
    snr = np.maximum(1.0, net.nominal_snr())
    return ChannelMatrix(np.log(snr) / math.log(net.reference_power))


def realize_network(alpha: ChannelMatrix, reference_power: float) -> PhysicalNetwork:
    """Finite-SNR network whose strength levels are exactly ``alpha``:
    G_ij = P^{alpha_ij}, unit noise, unit power caps."""
    if not (reference_power > 1):
        raise InvalidReferencePower(
            f"reference power must exceed 1, got {reference_power}"
        )
    gains = np.power(float(reference_power), alpha.alpha)
    return PhysicalNetwork(
        gains=gains,
        max_tx_power=np.ones(alpha.K),
        noise_power=1.0,
        reference_power=float(reference_power),
    )


def _interference_exponent(alpha: ChannelMatrix, r: np.ndarray) -> np.ndarray:
    """max{0, max_{i != j} (alpha_ij + r_i)} for every receiver j."""
    k = alpha.K
    levels = alpha.alpha + r[:, None]  # (i, j): interference exponent of Tx-i at Rx-j
    np.fill_diagonal(levels, -np.inf)
    if k == 1:
        return np.zeros(1)
    return np.maximum(0.0, levels.max(axis=0))


def achieved_gdof(alpha: ChannelMatrix, r: PowerAlloc, clamp: bool = True) -> GdofTuple:
    """GDoF achieved by treating interference as noise under power exponents r:

        d_j = alpha_jj + r_j - max{0, max_{i != j} (alpha_ij + r_i)}

    With ``clamp`` on, the whole expression is clamped at 0 (achievable form);
    with it off, the raw polyhedral form is returned and may be negative.
    """
    if r.K != alpha.K:
        raise ShapeError(f"r has {r.K} entries for a {alpha.K}-user network")
    d = np.diag(alpha.alpha) + r.r - _interference_exponent(alpha, r.r)
    if clamp:
        d = np.maximum(0.0, d)
    return GdofTuple(d)


def sinr(net: PhysicalNetwork, r: PowerAlloc) -> np.ndarray:
    """Linear SINR at each receiver in the GDoF-normalized model:

        SINR_j = P^{alpha_jj + r_j} / (1 + sum_{i != j} P^{alpha_ij + r_i})

    log_P of this converges to the unclamped achieved GDoF as P grows.
    """
    alpha = strength_from_physical(net)
    if r.K != alpha.K:
        raise ShapeError(f"r has {r.K} entries for a {alpha.K}-user network")
    p = net.reference_power
    powers = np.power(p, alpha.alpha + r.r[:, None])  # (i, j) received power
    signal = np.diag(powers).copy()
    np.fill_diagonal(powers, 0.0)
    return signal / (1.0 + powers.sum(axis=0))


_ALPHA_KEYS = {"k", "alpha"}
_PHYSICAL_KEYS = {"k", "gains_db", "tx_power_dbm", "noise_dbm", "ref_snr_db"}


def parse_network(obj: dict) -> tuple[ChannelMatrix, PhysicalNetwork | None]:
    """Read a network from its JSON object form.

    Two schemas are accepted, with exactly these keys:
      {"k": int, "alpha": [[float]]}
      {"k": int, "gains_db": [[float]], "tx_power_dbm": [float],
       "noise_dbm": float, "ref_snr_db": float}

    Returns the strength matrix, plus the physical network when given one.
    """
    if not isinstance(obj, dict):
        raise SchemaError("network JSON must be an object")
    keys = set(obj.keys())
    if keys == _ALPHA_KEYS:
        try:
            cm = ChannelMatrix(np.asarray(obj["alpha"], dtype=float))
        except (TypeError, ValueError) as e:
            raise SchemaError(f"bad alpha matrix: {e}") from e
        if cm.K != obj["k"]:
            raise SchemaError(f'k={obj["k"]} does not match alpha shape {cm.K}')
        return cm, None
    if keys == _PHYSICAL_KEYS:
        try:
            net = PhysicalNetwork(
                gains=db_to_linear(np.asarray(obj["gains_db"], dtype=float)),
                max_tx_power=db_to_linear(np.asarray(obj["tx_power_dbm"], dtype=float) - 30.0),
                noise_power=float(db_to_linear(obj["noise_dbm"] - 30.0)),
                reference_power=float(db_to_linear(obj["ref_snr_db"])),
            )
        except (TypeError, ValueError) as e:
            raise SchemaError(f"bad physical network: {e}") from e
        if net.K != obj["k"]:
            raise SchemaError(f'k={obj["k"]} does not match gains shape {net.K}')
        return strength_from_physical(net), net
    raise SchemaError(
        "network JSON must have exactly the keys {'k', 'alpha'} or "
        "{'k', 'gains_db', 'tx_power_dbm', 'noise_dbm', 'ref_snr_db'}; "
        f"got {sorted(keys)}"
    )


def network_to_json(alpha: ChannelMatrix) -> dict:
    """Object form accepted back by parse_network."""
    return {"k": alpha.K, "alpha": alpha.alpha.tolist()}
