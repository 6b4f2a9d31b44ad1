"""Concrete drives (Landau-Zener, Allen-Eberly, tabulated) and gamma profiles."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline

from .core import DomainError, DriveModel, WindowError, check_window, gamma_shortcut

DEFAULT_WINDOW = (-15.0, 15.0)
PARITY_RTOL = 1e-9


class LandauZener(DriveModel):
    """W = omega (constant), D = T, in units of the sweep scale beta."""

    name = "lz"

    def __init__(self, omega: float):
        omega = float(omega)
        if not omega > 0:
            raise DomainError(f"LZ coupling omega must be > 0, got {omega}")
        self.omega = omega

    def __repr__(self):
        return f"LandauZener(omega={self.omega!r})"

    def __eq__(self, other):
        return isinstance(other, LandauZener) and other.omega == self.omega

    def __hash__(self):
        return hash(("lz", self.omega))

    def rabi(self, t):
        return self.omega + 0.0 * t

    def detuning(self, t):
        return 1.0 * t

    def rabi_rate(self, t):
        return 0.0 * t

    def detuning_rate(self, t):
        return 1.0 + 0.0 * t

    def theta_dot(self, t):
        # Lorentzian -omega / (2 (omega^2 + T^2)), arranged so T = 0 gives -1/(2 omega) exactly
        return -0.5 / (self.omega + t * t / self.omega)

    def gamma_closed_form(self, t):
        return -1.0 / np.sqrt(self.omega**2 + t * t)

    def to_dict(self):
        return {"model": "lz", "omega": self.omega}


class AllenEberly(DriveModel):
    """W = alpha sech t, D = delta tanh t, in units of the pulse width tau."""

    name = "ae"

    def __init__(self, alpha: float, delta: float):
        alpha, delta = float(alpha), float(delta)
        if not alpha > 0:
            raise DomainError(f"AE pulse area alpha must be > 0, got {alpha}")
        if not math.isfinite(delta):
            raise ValueError("AE chirp delta must be finite")
        self.alpha = alpha
        self.delta = delta

    def __repr__(self):
        return f"AllenEberly(alpha={self.alpha!r}, delta={self.delta!r})"

    def __eq__(self, other):
        return isinstance(other, AllenEberly) and (other.alpha, other.delta) == (self.alpha, self.delta)

    def __hash__(self):
        return hash(("ae", self.alpha, self.delta))

    def rabi(self, t):
        return self.alpha / np.cosh(t)

    def detuning(self, t):
        return self.delta * np.tanh(t)

    def rabi_rate(self, t):
        return -self.alpha * np.tanh(t) / np.cosh(t)

    def detuning_rate(self, t):
        return self.delta / np.cosh(t) ** 2

    def theta_dot(self, t):
        a, d = self.alpha, self.delta
        with np.errstate(over="ignore", invalid="ignore"):
            closed = d * a * np.cosh(t) / (d * d - 2 * a * a - d * d * np.cosh(2 * t))
        # cosh(2t) overflows past |t| ~ 355; the sech form is equivalent there
        sech = 1.0 / np.cosh(np.minimum(np.abs(t), 700.0))
        far = -a * d * sech / (2 * (a * a * sech**2 + d * d * np.tanh(t) ** 2))
        return np.where(np.abs(t) < 300.0, closed, far) if np.ndim(t) else (
            float(closed) if abs(t) < 300.0 else float(far))

    def gamma_csch_form(self, t):
        """Explicit csch-form of the shortcut rate; singular (0/0) at t = 0."""
        a, d = self.alpha, self.delta
        csch2 = 1.0 / np.sinh(t) ** 2
        num = -2.0 * d * (np.exp(t) + np.exp(3 * t))
        den = (np.exp(2 * t) - 1.0) ** 2 * np.sqrt(csch2 * (d * d + a * a * csch2))
        return num / den

    def to_dict(self):
        return {"model": "ae", "alpha": self.alpha, "delta": self.delta}


class Tabulated(DriveModel):
    """Sampled W(t), D(t) with cubic-spline interpolation.

    Derivatives are analytic derivatives of the splines; evaluation outside
    the sample range raises WindowError.
    """

    name = "table"

    def __init__(self, t, rabi, detuning):
        t = np.asarray(t, dtype=float)
        rabi = np.asarray(rabi, dtype=float)
        detuning = np.asarray(detuning, dtype=float)
        if not (t.ndim == 1 and t.shape == rabi.shape == detuning.shape):
            raise ValueError("tabulated drive needs 1-D t, rabi, detuning of equal length")
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("tabulated times must be >= 2 and strictly increasing")
        if not (np.all(np.isfinite(rabi)) and np.all(np.isfinite(detuning))):
            raise ValueError("tabulated drive values must be finite")
        self.t = t
        self.rabi_samples = rabi
        self.detuning_samples = detuning
        self._w = CubicSpline(t, rabi)
        self._d = CubicSpline(t, detuning)
        self._dw = self._w.derivative()
        self._dd = self._d.derivative()

    def __repr__(self):
        return f"Tabulated(n={self.t.size}, t=[{self.t[0]}, {self.t[-1]}])"

    def __eq__(self, other):
        return (
            isinstance(other, Tabulated)
            and np.array_equal(other.t, self.t)
            and np.array_equal(other.rabi_samples, self.rabi_samples)
            and np.array_equal(other.detuning_samples, self.detuning_samples)
        )

    __hash__ = None

    def support(self):
        return float(self.t[0]), float(self.t[-1])

    def _check(self, t):
        lo, hi = self.support()
        tt = np.asarray(t)
        if np.any(tt < lo) or np.any(tt > hi):
            raise WindowError(f"time outside tabulated range [{lo}, {hi}]")

    def _eval(self, spline, t):
        self._check(t)
        v = spline(t)
        return float(v) if np.ndim(t) == 0 else v

    def rabi(self, t):
        return self._eval(self._w, t)

    def detuning(self, t):
        return self._eval(self._d, t)

    def rabi_rate(self, t):
        return self._eval(self._dw, t)

    def detuning_rate(self, t):
        return self._eval(self._dd, t)

    @classmethod
    def read_csv(cls, path) -> "Tabulated":
        """Columns t, omega, delta (header required)."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"t", "omega", "delta"} <= set(rows[0]):
            raise ValueError(f"{path}: expected CSV header t,omega,delta")
        return cls(
            [float(r["t"]) for r in rows],
            [float(r["omega"]) for r in rows],
            [float(r["delta"]) for r in rows],
        )

    def to_dict(self):
        return {
            "model": "table",
            "t": self.t.tolist(),
            "omega": self.rabi_samples.tolist(),
            "delta": self.detuning_samples.tolist(),
        }


def model_from_dict(d: dict[str, Any]) -> DriveModel:
    kind = d["model"]
    if kind == "lz":
        return LandauZener(d["omega"])
    if kind == "ae":
        return AllenEberly(d["alpha"], d["delta"])
    if kind == "table":
        return Tabulated(d["t"], d["omega"], d["delta"])
    raise ValueError(f"unknown model {kind!r}")


# ---------------------------------------------------------------------------
# Shortcut profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShortcutProfile:
    times: np.ndarray
    gamma: np.ndarray
    sign: int
    peak_magnitude: float = field(init=False)

    def __post_init__(self):
        self.times.setflags(write=False)
        self.gamma.setflags(write=False)
        object.__setattr__(self, "peak_magnitude", float(np.max(np.abs(self.gamma))))

    @property
    def window(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def __call__(self, t):
        """Linear interpolation of the samples; zero outside the window."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.window
        out = np.interp(t, self.times, self.gamma)
        return np.where((t >= lo) & (t <= hi), out, 0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "gamma"])
            for t, g in zip(self.times.tolist(), self.gamma.tolist()):
                w.writerow([repr(t), repr(g)])

    @classmethod
    def read_csv(cls, path, sign: int = 1) -> "ShortcutProfile":
        t, g = read_gamma_csv(path)
        return cls(t, g, sign)


def read_gamma_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"t", "gamma"} <= set(rows[0]):
        raise ValueError(f"{path}: expected CSV header t,gamma")
    return (np.array([float(r["t"]) for r in rows]), np.array([float(r["gamma"]) for r in rows]))


def synthesize_profile(model: DriveModel, window=DEFAULT_WINDOW, n: int = 3001, sign: int = 1) -> ShortcutProfile:
    t_i, t_f = check_window(window)
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    t = np.linspace(t_i, t_f, n)
    if t_f == -t_i:
        # exact mirror symmetry (and an exact t = 0 node for odd n) keeps even profiles even
        half = np.linspace(t_i, 0.0, (n + 1) // 2) if n % 2 else t[: n // 2]
        t = np.concatenate([half, -half[: n // 2][::-1]])
    return ShortcutProfile(t, np.asarray(gamma_shortcut(model, t, sign), dtype=float), sign)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelDiagnostics:
    min_rabi: float
    rabi_even: bool
    detuning_odd: bool
    symmetric_window: bool
    valid: bool
    warnings: tuple[str, ...] = ()

    @property
    def norm_guarantee(self) -> bool:
        """Endpoint norm returns to one under the shortcut."""
        return self.valid and self.rabi_even and self.detuning_odd and self.symmetric_window

    def to_dict(self):
        return {
            "min_rabi": self.min_rabi,
            "rabi_even": self.rabi_even,
            "detuning_odd": self.detuning_odd,
            "symmetric_window": self.symmetric_window,
            "valid": self.valid,
            "norm_guarantee": self.norm_guarantee,
            "warnings": list(self.warnings),
        }


def _close(a, b, rtol=PARITY_RTOL):
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.finfo(float).tiny)
    return bool(np.all(np.abs(a - b) <= rtol * scale))


def validate_model(model: DriveModel, window=DEFAULT_WINDOW, n: int = 2001) -> ModelDiagnostics:
    warnings = []
    t_i, t_f = check_window(window)
    lo, hi = model.support()
    if t_i < lo or t_f > hi:
        warnings.append(f"window [{t_i}, {t_f}] exceeds drive support [{lo}, {hi}]")
        t_i, t_f = max(t_i, lo), min(t_f, hi)
    t = np.linspace(t_i, t_f, n)
    if isinstance(model, Tabulated):
        t = np.union1d(t, model.t[(model.t >= t_i) & (model.t <= t_f)])
    w = np.asarray(model.rabi(t), dtype=float)
    min_rabi = float(np.min(w))
    valid = min_rabi > 0
    if not valid:
        warnings.append(f"Rabi frequency reaches {min_rabi:g} <= 0; the shortcut rate diverges")

    # parity on the mirrored overlap of the window
    half = min(-t_i, t_f) if t_i < 0 < t_f else 0.0
    if half > 0:
        s = np.linspace(0.0, half, max(n // 2, 2))
        rabi_even = _close(model.rabi(s), model.rabi(-s))
        detuning_odd = _close(model.detuning(s), -np.asarray(model.detuning(-s)))
    else:
        rabi_even = detuning_odd = False
        warnings.append("window does not straddle t = 0; parity undetermined")
    symmetric = math.isclose(t_f, -t_i, rel_tol=PARITY_RTOL, abs_tol=0.0)
    if not symmetric:
        warnings.append("window is not symmetric about t = 0")
    return ModelDiagnostics(min_rabi, rabi_even, detuning_odd, symmetric, valid, tuple(warnings))
