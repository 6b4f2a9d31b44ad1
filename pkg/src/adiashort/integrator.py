"""
Propagation of i dc/dt = H(t) c for the complex 2x2 Hamiltonian.

``integrate`` uses an adaptive Dormand-Prince 8(5,3) pair with dense output,
restarted at gain/loss switch-on/off times.
``propagator_oracle`` is an independent exponential-midpoint propagator
built on the closed-form 2x2 matrix exponential.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import quad

from . import _dop853
from .core import (
    DriveModel,
    GammaPolicy,
    StateVector,
    adiabatic_eigenvalues,
    adiabatic_state,
    check_window,
    hamiltonian_entries,
    mixing_angle,
)
from .models import DEFAULT_WINDOW, model_from_dict

CSV_HEADER = [
    "t", "re_c1", "im_c1", "re_c2", "im_c2",
    "P1", "P2", "norm", "abs_a_minus", "abs_a_plus", "gamma", "theta",
]
INITIAL_STATES = ("bare1", "bare2", "adiabatic", "adiabatic_minus")


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (t={t!r})")
        self.t = t


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to reproduce one run.

    ``initial_state`` is one of ``bare1``, ``bare2``, ``adiabatic`` (exact
    |phi_+(tI)>), ``adiabatic_minus`` (|phi_-(tI)>) or a StateVector.
    """

    model: DriveModel
    policy: GammaPolicy = field(default_factory=GammaPolicy.off)
    window: tuple[float, float] = DEFAULT_WINDOW
    initial_state: str | StateVector = "adiabatic"
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    samples: int = 3001

    def __post_init__(self):
        object.__setattr__(self, "window", check_window(self.window))
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be > 0")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError(f"samples must be an integer >= 2, got {self.samples!r}")
        if not isinstance(self.initial_state, StateVector) and self.initial_state not in INITIAL_STATES:
            raise ValueError(f"initial_state must be one of {INITIAL_STATES} or a StateVector")
        lo, hi = self.model.support()
        if self.window[0] < lo or self.window[1] > hi:
            raise ValueError(f"window {self.window} exceeds drive support [{lo}, {hi}]")

    def initial_vector(self) -> np.ndarray:
        s = self.initial_state
        if isinstance(s, StateVector):
            return s.as_array()
        if s == "bare1":
            return np.array([1.0, 0.0], dtype=complex)
        if s == "bare2":
            return np.array([0.0, 1.0], dtype=complex)
        theta = float(mixing_angle(self.model, self.window[0]))
        return adiabatic_state(theta, "plus" if s == "adiabatic" else "minus").as_array()

    def replace(self, **kw) -> "SimulationConfig":
        d = {k: getattr(self, k) for k in
             ("model", "policy", "window", "initial_state", "rel_tol", "abs_tol", "samples")}
        d.update(kw)
        return SimulationConfig(**d)

    def to_dict(self) -> dict[str, Any]:
        s = self.initial_state
        init = s if isinstance(s, str) else {"c1": [s.c1.real, s.c1.imag], "c2": [s.c2.real, s.c2.imag]}
        return {
            "model": self.model.to_dict(),
            "policy": self.policy.to_dict(),
            "window": list(self.window),
            "initial_state": init,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "samples": self.samples,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SimulationConfig":
        init = d["initial_state"]
        if isinstance(init, dict):
            init = StateVector(complex(*init["c1"]), complex(*init["c2"]))
        return cls(
            model=model_from_dict(d["model"]),
            policy=GammaPolicy.from_dict(d["policy"]),
            window=tuple(d["window"]),
            initial_state=init,
            rel_tol=d["rel_tol"],
            abs_tol=d["abs_tol"],
            samples=d["samples"],
        )


@dataclass(eq=False)
class TrajectoryRecord:
    """Dense time series of one run. Populations and adiabatic amplitudes are
    derived from the stored amplitudes and mixing angle on access."""

    t: np.ndarray
    c: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    config: SimulationConfig | None = None
    stats: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.c = np.asarray(self.c, dtype=complex).reshape(-1, 2)
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        n = self.t.size
        if not (self.c.shape[0] == self.gamma.size == self.theta.size == n):
            raise ValueError("trajectory columns differ in length")
        if n < 1 or np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be non-empty and strictly increasing")

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.theta, other.theta)
        )

    @property
    def p1(self) -> np.ndarray:
        return np.abs(self.c[:, 0]) ** 2

    @property
    def p2(self) -> np.ndarray:
        return np.abs(self.c[:, 1]) ** 2

    @property
    def norm(self) -> np.ndarray:
        return np.sqrt(self.p1 + self.p2)

    @property
    def adiabatic(self) -> np.ndarray:
        """(n, 2) array of (a_minus, a_plus)."""
        cs, sn = np.cos(self.theta), np.sin(self.theta)
        c1, c2 = self.c[:, 0], self.c[:, 1]
        return np.stack([c1 * cs - c2 * sn, c1 * sn + c2 * cs], axis=1)

    @property
    def abs_a_minus(self) -> np.ndarray:
        return np.abs(self.adiabatic[:, 0])

    @property
    def abs_a_plus(self) -> np.ndarray:
        return np.abs(self.adiabatic[:, 1])

    @property
    def final_state(self) -> StateVector:
        return StateVector.from_array(self.c[-1])

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.t,
            "re_c1": self.c[:, 0].real,
            "im_c1": self.c[:, 0].imag,
            "re_c2": self.c[:, 1].real,
            "im_c2": self.c[:, 1].imag,
            "P1": self.p1,
            "P2": self.p2,
            "norm": self.norm,
            "abs_a_minus": self.abs_a_minus,
            "abs_a_plus": self.abs_a_plus,
            "gamma": self.gamma,
            "theta": self.theta,
        }

    def to_csv(self, path) -> None:
        cols = self.columns()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row in zip(*(cols[k].tolist() for k in CSV_HEADER)):
                w.writerow([repr(v) for v in row])

    @classmethod
    def read_csv(cls, path) -> "TrajectoryRecord":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_HEADER:
                raise ValueError(f"{path}: unexpected trajectory header {header}")
            data = np.array([[float(v) for v in row] for row in reader], dtype=float)
        col = {k: data[:, i] for i, k in enumerate(CSV_HEADER)}
        c = np.stack([col["re_c1"] + 1j * col["im_c1"], col["re_c2"] + 1j * col["im_c2"]], axis=1)
        return cls(col["t"], c, col["gamma"], col["theta"])

    def to_json(self, path) -> None:
        doc = {
            "config": self.config.to_dict() if self.config is not None else None,
            "stats": self.stats,
            "columns": {k: v.tolist() for k, v in self.columns().items()},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")

    @classmethod
    def read_json(cls, path) -> "TrajectoryRecord":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        col = {k: np.asarray(v, dtype=float) for k, v in doc["columns"].items()}
        c = np.stack([col["re_c1"] + 1j * col["im_c1"], col["re_c2"] + 1j * col["im_c2"]], axis=1)
        config = SimulationConfig.from_dict(doc["config"]) if doc.get("config") else None
        return cls(col["t"], c, col["gamma"], col["theta"], config=config, stats=doc.get("stats", {}))


def _segments(config: SimulationConfig) -> list[tuple[float, float, GammaPolicy]]:
    """Split the run at gamma switch times; each piece gets a smooth RHS."""
    t_i, t_f = config.window
    policy = config.policy
    cuts = [t_i, t_f]
    if policy.kind != "off" and policy.window is not None:
        cuts += [w for w in policy.window if t_i < w < t_f]
    cuts = sorted(set(cuts))
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        on = policy.kind != "off" and bool(policy.active(mid))
        out.append((a, b, policy if on else GammaPolicy.off()))
    return out


def integrate(config: SimulationConfig) -> TrajectoryRecord:
    """Solve dc/dt = -i H(t) c over the configured window.

    Rows are the ``samples`` uniformly spaced times, filled from the
    solver's dense output; the first and last rows are the exact step
    endpoints. The step controller restarts at gain/loss switch times.
    """
    if config.rel_tol < 100 * np.finfo(float).eps:
        raise IntegrationError(f"rel_tol={config.rel_tol:g} is below the attainable floor")
    t_i, t_f = config.window
    times = np.linspace(t_i, t_f, config.samples)
    states = np.empty((times.size, 2), dtype=complex)
    y = config.initial_vector()
    totals = {"steps": 0, "rejected_steps": 0, "nfev": 0}
    segments = _segments(config)
    for a, b, pol in segments:
        sel = (times >= a) & (times < b) if b < t_f else (times >= a)
        model = config.model

        def entries(t, pol=pol):
            return hamiltonian_entries(model, pol, t)

        try:
            y, states[sel], st = _dop853.solve(entries, a, y, b, config.rel_tol, config.abs_tol, times[sel])
        except _dop853.StepSizeUnderflow as exc:
            raise IntegrationError("step-size underflow", t=exc.t) from exc
        except FloatingPointError as exc:
            raise IntegrationError(str(exc)) from exc
        for k in totals:
            totals[k] += st[k]
    states[-1] = y

    theta = np.asarray(mixing_angle(config.model, times), dtype=float)
    gamma = np.asarray(config.policy.gamma(config.model, times), dtype=float)
    stats = dict(totals, segments=len(segments))
    return TrajectoryRecord(times, states, gamma, theta, config=config, stats=stats)


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------

def expm_2x2(h11, h12, h21, h22, dt) -> np.ndarray:
    """exp(-i H dt) for a stack of 2x2 matrices, shape (n, 2, 2).

    H = m I + A with A traceless, so A^2 = q^2 I, q^2 = -det A, and
    exp(-i H dt) = exp(-i m dt) [cos(q dt) I - i dt sinc(q dt) A].
    """
    h11, h12, h21, h22 = (np.atleast_1d(np.asarray(x, dtype=complex)) for x in (h11, h12, h21, h22))
    m = 0.5 * (h11 + h22)
    a = 0.5 * (h11 - h22)
    q = np.sqrt(a * a + h12 * h21)
    x = q * dt
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    sinc = np.where(small, 1.0 - x * x / 6.0 + x**4 / 120.0, np.sin(xs) / xs)
    cos = np.cos(x)
    ph = np.exp(-1j * m * dt)
    u = np.empty(h11.shape + (2, 2), dtype=complex)
    u[:, 0, 0] = ph * (cos - 1j * dt * sinc * a)
    u[:, 0, 1] = ph * (-1j * dt * sinc * h12)
    u[:, 1, 0] = ph * (-1j * dt * sinc * h21)
    u[:, 1, 1] = ph * (cos + 1j * dt * sinc * a)
    return u


def _ordered_product(u: np.ndarray) -> np.ndarray:
    """u[n-1] @ ... @ u[1] @ u[0] by pairwise reduction."""
    while u.shape[0] > 1:
        if u.shape[0] % 2:
            u = np.concatenate([u, np.eye(2, dtype=complex)[None]])
        u = u[1::2] @ u[0::2]
    return u[0]


def propagator_oracle(config: SimulationConfig, n_steps: int, chunk: int = 1 << 18) -> StateVector:
    """Final state from n_steps equal slices, each propagated exactly under
    H frozen at the slice midpoint. Second order in the slice width."""
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    t_i, t_f = config.window
    dt = (t_f - t_i) / n_steps
    c = config.initial_vector()
    for start in range(0, n_steps, chunk):
        idx = np.arange(start, min(start + chunk, n_steps))
        tm = t_i + (idx + 0.5) * dt
        h11, h12, h22 = hamiltonian_entries(config.model, config.policy, tm)
        u = expm_2x2(h11, h12, h12, h22, dt)
        c = _ordered_product(u) @ c
    return StateVector.from_array(c)


# ---------------------------------------------------------------------------
# Decoupled closed form
# ---------------------------------------------------------------------------

def _quad(f, a, b, tol, what):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err, info = quad(f, a, b, epsabs=tol, epsrel=tol, limit=1000, full_output=1)[:3]
    if err > max(tol, tol * abs(val)) * 10 or not math.isfinite(val):
        raise QuadratureError(f"quadrature of {what} on [{a}, {b}] did not converge (err={err:g})")
    return val


def closed_form_a_plus(model: DriveModel, window=DEFAULT_WINDOW, quad_tol: float = 1e-12,
                       policy: GammaPolicy | None = None) -> complex:
    """a_+(tF) for a_+(tI) = 1 when the upper adiabatic state evolves alone:
    exp(-i int (lambda_+ - i g cos(2 theta) / 2) dt)."""
    t_i, t_f = check_window(window)
    if policy is None:
        policy = GammaPolicy.shortcut(+1)
    phase = _quad(lambda s: adiabatic_eigenvalues(model, s)[1], t_i, t_f, quad_tol, "lambda_plus")
    if policy.kind == "off":
        return complex(np.exp(-1j * phase))
    decay = _quad(lambda s: 0.5 * float(policy.gamma(model, s)) * math.cos(2 * float(mixing_angle(model, s))),
                  t_i, t_f, quad_tol, "gamma cos(2 theta) / 2")
    return complex(np.exp(-1j * phase - decay))
