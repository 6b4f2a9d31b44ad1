"""
Two-level Hamiltonian algebra in the bare and adiabatic bases.

Conventions: hbar = 1, dimensionless time. The bare-basis Hamiltonian is

    H(t) = [[ i g/2,  W/2      ],
            [ W/2,    D - i g/2 ]]

with Rabi frequency W(t) > 0, detuning D(t) and gain/loss rate g(t); g = 0
recovers the Hermitian rotating-wave Hamiltonian. Amplitudes in the bare
basis c and in the adiabatic basis a are related by c = R(theta) a, with
R = [[cos, sin], [-sin, cos]] and theta = atan2(W, D) / 2.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class DomainError(ValueError):
    """Raised when a quantity is undefined for the given drive (e.g. W <= 0)."""


class WindowError(ValueError):
    """Raised for an empty or inverted time window."""


def check_window(window) -> tuple[float, float]:
    t_i, t_f = (float(w) for w in window)
    if not (math.isfinite(t_i) and math.isfinite(t_f)):
        raise WindowError(f"window must be finite, got [{t_i}, {t_f}]")
    if t_i >= t_f:
        raise WindowError(f"window requires tI < tF, got [{t_i}, {t_f}]")
    return t_i, t_f


# ---------------------------------------------------------------------------
# State types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    """Bare-state amplitudes. No unit norm is imposed."""

    c1: complex
    c2: complex

    def __post_init__(self):
        object.__setattr__(self, "c1", complex(self.c1))
        object.__setattr__(self, "c2", complex(self.c2))
        if not all(map(np.isfinite, (self.c1, self.c2))):
            raise ValueError(f"non-finite amplitude in {self!r}")

    @classmethod
    def from_array(cls, arr) -> "StateVector":
        c1, c2 = np.asarray(arr, dtype=complex).ravel()
        return cls(c1, c2)

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=complex)

    @property
    def p1(self) -> float:
        return abs(self.c1) ** 2

    @property
    def p2(self) -> float:
        return abs(self.c2) ** 2

    @property
    def norm(self) -> float:
        return math.sqrt(self.p1 + self.p2)


@dataclass(frozen=True)
class AdiabaticAmplitudes:
    a_minus: complex
    a_plus: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.a_minus, self.a_plus], dtype=complex)


@dataclass(frozen=True)
class AdiabaticFrame:
    """Mixing angle, its rate and the adiabatic eigenvalues at one instant."""

    theta: float
    theta_dot: float
    lambda_minus: float
    lambda_plus: float


# ---------------------------------------------------------------------------
# Drives
# ---------------------------------------------------------------------------

class DriveModel(ABC):
    """A pulse pair W(t), D(t) with derivatives.

    Subclasses must accept scalars and numpy arrays in every method. The
    generic ``theta_dot`` uses the quotient rule; analytic models override it.
    """

    name: str = "drive"

    @abstractmethod
    def rabi(self, t): ...

    @abstractmethod
    def detuning(self, t): ...

    @abstractmethod
    def rabi_rate(self, t): ...

    @abstractmethod
    def detuning_rate(self, t): ...

    def theta_dot(self, t):
        w, d = self.rabi(t), self.detuning(t)
        return (d * self.rabi_rate(t) - w * self.detuning_rate(t)) / (2.0 * (w * w + d * d))

    def support(self) -> tuple[float, float]:
        """Time range on which the drive is defined."""
        return (-math.inf, math.inf)

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...


def _positive_rabi(model: DriveModel, t):
    w = model.rabi(t)
    if np.any(~(np.asarray(w) > 0.0)):
        bad = np.asarray(t)[~(np.asarray(w) > 0.0)] if np.ndim(t) else t
        raise DomainError(f"coupling vanishes: Rabi frequency must be > 0 (t={np.ravel(bad)[:3]})")
    return w


def mixing_angle(model: DriveModel, t):
    """Continuous branch theta in (0, pi/2): pi/2 as D -> -inf, 0 as D -> +inf."""
    w = _positive_rabi(model, t)
    return 0.5 * np.arctan2(w, model.detuning(t))


def mixing_angle_rate(model: DriveModel, t):
    _positive_rabi(model, t)
    return model.theta_dot(t)


def adiabatic_eigenvalues(model: DriveModel, t):
    """(lambda_minus, lambda_plus) = (D -+ sqrt(W^2 + D^2)) / 2.

    The smaller-magnitude root is taken from the product lambda_- lambda_+ =
    -W^2/4 to avoid cancellation when |D| >> W.
    """
    w, d = np.asarray(model.rabi(t), dtype=float), np.asarray(model.detuning(t), dtype=float)
    r = np.hypot(w, d)
    big = 0.5 * (np.abs(d) + r)  # |root| of the same sign as D
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big > 0, -0.25 * w * w / np.where(big > 0, big, 1.0), 0.0)
    lam_plus = np.where(d >= 0, big, -small)
    lam_minus = np.where(d >= 0, small, -big)
    if lam_plus.ndim == 0:
        return float(lam_minus), float(lam_plus)
    return lam_minus, lam_plus


def adiabatic_frame(model: DriveModel, t: float) -> AdiabaticFrame:
    lm, lp = adiabatic_eigenvalues(model, t)
    return AdiabaticFrame(
        theta=float(mixing_angle(model, t)),
        theta_dot=float(mixing_angle_rate(model, t)),
        lambda_minus=lm,
        lambda_plus=lp,
    )


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def to_adiabatic_basis(c: StateVector, theta: float) -> AdiabaticAmplitudes:
    """a = R(theta)^T c."""
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    cs, sn = math.cos(theta), math.sin(theta)
    return AdiabaticAmplitudes(c.c1 * cs - c.c2 * sn, c.c1 * sn + c.c2 * cs)


def from_adiabatic_basis(a: AdiabaticAmplitudes, theta: float) -> StateVector:
    cs, sn = math.cos(theta), math.sin(theta)
    return StateVector(a.a_minus * cs + a.a_plus * sn, -a.a_minus * sn + a.a_plus * cs)


def adiabatic_state(theta: float, which: str = "plus") -> StateVector:
    """|phi_+> = [sin, cos] or |phi_-> = [cos, -sin] at angle theta."""
    if which == "plus":
        return StateVector(math.sin(theta), math.cos(theta))
    if which == "minus":
        return StateVector(math.cos(theta), -math.sin(theta))
    raise ValueError(f"which must be 'plus' or 'minus', got {which!r}")


# ---------------------------------------------------------------------------
# Gain/loss term
# ---------------------------------------------------------------------------

def gamma_shortcut(model: DriveModel, t, sign: int = 1):
    """sign * 2 theta_dot / sin(2 theta), the rate that cancels the
    nonadiabatic coupling entry of the adiabatic-frame Hamiltonian."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    w = _positive_rabi(model, t)
    sin2 = w / np.hypot(w, model.detuning(t))
    return sign * 2.0 * model.theta_dot(t) / sin2


@dataclass(frozen=True)
class GammaPolicy:
    """How the imaginary diagonal term is chosen.

    kind is one of ``off``, ``shortcut`` or ``custom``. Outside ``window``
    (inclusive bounds) gamma is exactly zero; ``window=None`` means no
    truncation. Custom policies carry sampled (t, gamma) values that are
    interpolated with a cubic spline.
    """

    kind: str = "off"
    sign: int = 1
    window: tuple[float, float] | None = None
    samples: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    _spline: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("off", "shortcut", "custom"):
            raise ValueError(f"unknown gamma policy {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        if self.window is not None:
            object.__setattr__(self, "window", check_window(self.window))
        if self.kind == "custom":
            from scipy.interpolate import CubicSpline

            if self.samples is None:
                raise ValueError("custom gamma policy needs samples")
            ts, gs = (np.asarray(s, dtype=float) for s in self.samples)
            if ts.shape != gs.shape or ts.size < 2 or np.any(np.diff(ts) <= 0):
                raise ValueError("custom gamma samples need >= 2 strictly increasing times")
            if not np.all(np.isfinite(gs)):
                raise ValueError("custom gamma samples must be finite")
            object.__setattr__(self, "samples", (tuple(ts.tolist()), tuple(gs.tolist())))
            if self.window is None:
                object.__setattr__(self, "window", (float(ts[0]), float(ts[-1])))
            elif self.window[0] < ts[0] or self.window[1] > ts[-1]:
                raise WindowError("custom gamma window extends beyond its samples")
            object.__setattr__(self, "_spline", CubicSpline(ts, gs))

    @classmethod
    def off(cls) -> "GammaPolicy":
        return cls("off")

    @classmethod
    def shortcut(cls, sign: int = 1, window=None) -> "GammaPolicy":
        return cls("shortcut", sign=sign, window=window)

    @classmethod
    def custom(cls, t, gamma, window=None) -> "GammaPolicy":
        return cls("custom", window=window, samples=(tuple(np.ravel(t)), tuple(np.ravel(gamma))))

    def with_window(self, window) -> "GammaPolicy":
        if self.kind == "custom":
            return GammaPolicy("custom", window=window, samples=self.samples)
        return GammaPolicy(self.kind, sign=self.sign, window=window)

    def active(self, t):
        if self.window is None:
            return np.ones_like(np.asarray(t, dtype=float), dtype=bool)
        return (np.asarray(t) >= self.window[0]) & (np.asarray(t) <= self.window[1])

    def gamma(self, model: DriveModel, t):
        if self.kind == "off":
            return 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else 0.0
        if np.ndim(t) == 0:
            t = float(t)
            if self.window is not None and not (self.window[0] <= t <= self.window[1]):
                return 0.0
            if self.kind == "shortcut":
                return float(gamma_shortcut(model, t, self.sign))
            return float(self._spline(t))
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        on = self.active(t)
        if np.any(on):
            if self.kind == "shortcut":
                out[on] = gamma_shortcut(model, t[on], self.sign)
            else:
                out[on] = self._spline(t[on])
        return out

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind == "shortcut":
            d["sign"] = self.sign
        if self.window is not None:
            d["window"] = list(self.window)
        if self.kind == "custom":
            d["t"], d["gamma"] = list(self.samples[0]), list(self.samples[1])
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GammaPolicy":
        window = tuple(d["window"]) if d.get("window") is not None else None
        if d["kind"] == "custom":
            return cls.custom(d["t"], d["gamma"], window=window)
        return cls(d["kind"], sign=int(d.get("sign", 1)), window=window)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def hamiltonian_entries(model: DriveModel, policy: GammaPolicy, t):
    """(h11, h12 = h21, h22) of the bare-basis Hamiltonian; vectorised in t."""
    g = policy.gamma(model, t)
    w, d = model.rabi(t), model.detuning(t)
    return 0.5j * g, 0.5 * w, d - 0.5j * g


def hamiltonian(model: DriveModel, policy: GammaPolicy, t: float) -> np.ndarray:
    h11, h12, h22 = hamiltonian_entries(model, policy, float(t))
    return np.array([[h11, h12], [h12, h22]], dtype=complex)


def adiabatic_hamiltonian(model: DriveModel, policy: GammaPolicy, t: float) -> np.ndarray:
    """R^T H R - i R^T dR/dt written in closed form.

    With the shortcut rate (sign +1) the (1,2) entry cancels and the (2,1)
    entry equals 2i theta_dot.
    """
    t = float(t)
    theta = float(mixing_angle(model, t))
    theta_dot = float(model.theta_dot(t))
    lm, lp = adiabatic_eigenvalues(model, t)
    g = float(policy.gamma(model, t))
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    return np.array(
        [
            [lm + 0.5j * g * c2, 0.5j * g * s2 - 1j * theta_dot],
            [0.5j * g * s2 + 1j * theta_dot, lp - 0.5j * g * c2],
        ],
        dtype=complex,
    )
