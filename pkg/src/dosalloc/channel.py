"""SINR jamming model: attack power -> packet arrival / dropout probability."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import InvalidModel, OutOfBracket

_SQRT2 = math.sqrt(2.0)


def q_function(x):
    """Gaussian upper-tail probability ``Q(x) = 0.5 * erfc(x / sqrt(2))``.

    Accepts scalars or arrays.
    """
    out = 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChannelModel:
    """Wireless link between sensor and remote estimator.

    Parameters
    ----------
    delta_s : float
        Sensor transmit power (>= 0).
    G_s, G_a : float
        Channel gains of the sensor and of the attacker.
    sigma2 : float
        Receiver noise power.
    L : int
        Packet length in bits; the packet is lost if any bit is flipped.
    """

    delta_s: float
    G_s: float = 1.0
    G_a: float = 1.0
    sigma2: float = 1.0
    L: int = 1

    def __post_init__(self):
        if not self.delta_s >= 0:
            raise InvalidModel("delta_s must be >= 0")
        for name in ("G_s", "G_a", "sigma2"):
            if not getattr(self, name) > 0:
                raise InvalidModel(f"{name} must be > 0")
        if int(self.L) != self.L or self.L < 1:
            raise InvalidModel("L must be an integer >= 1")
        object.__setattr__(self, "L", int(self.L))


def sinr(ch: ChannelModel, attack_power):
    attack_power = np.asarray(attack_power, dtype=float)
    if np.any(attack_power < 0):
        raise ValueError("attack power must be >= 0")
    rho = ch.delta_s * ch.G_s / (attack_power * ch.G_a + ch.sigma2)
    return float(rho) if rho.ndim == 0 else rho


def _log_arrival(ch, attack_power):
    ber = q_function(np.sqrt(2.0 * np.asarray(sinr(ch, attack_power))))
    return ch.L * np.log1p(-np.asarray(ber))


def arrival_prob(ch: ChannelModel, attack_power):
    """``[1 - Q(sqrt(2 * SINR))]^L``: probability the packet gets through."""
    out = np.exp(_log_arrival(ch, attack_power))
    return float(out) if out.ndim == 0 else out


def dropout_prob(ch: ChannelModel, attack_power):
    """``1 - arrival_prob``, evaluated without cancellation."""
    out = -np.expm1(_log_arrival(ch, attack_power))
    return float(out) if out.ndim == 0 else out


def power_for_dropout(ch: ChannelModel, beta: float, lo: float, hi: float,
                      tol: float = 1e-10) -> float:
    """Attack power whose dropout probability equals ``beta``.

    Bisection on ``[lo, hi]``; dropout is strictly increasing in power so
    the root is unique.

    Raises
    ------
    OutOfBracket
        If ``beta`` lies outside ``[dropout(lo), dropout(hi)]``.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    f_lo = dropout_prob(ch, lo)
    f_hi = dropout_prob(ch, hi)
    if not f_lo - tol <= beta <= f_hi + tol:
        raise OutOfBracket(
            f"dropout {beta!r} not attainable in [{lo}, {hi}] "
            f"(range [{f_lo:.12g}, {f_hi:.12g}])")
    if beta <= f_lo:
        return float(lo)
    if beta >= f_hi:
        return float(hi)
    a, b = float(lo), float(hi)
    # 60 halvings at minimum, more if the bracket is wide
    for _ in range(200):
        mid = 0.5 * (a + b)
        if dropout_prob(ch, mid) < beta:
            a = mid
        else:
            b = mid
        if b - a <= 1e-14 * max(1.0, abs(b)):
            break
    return 0.5 * (a + b)
