"""
End-to-end physics checks used by ``adiashort verify`` and the test suite.

Each check returns one or more ``CriterionResult`` rows with the measured
value, the threshold it is held to and a pass flag. Simulation runs are
shared between checks through ``Scenarios``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .analysis import (
    energy_track,
    lz_min_separation,
    lz_survival_asymptote,
    parity_integral,
)
from .core import GammaPolicy, adiabatic_hamiltonian, gamma_shortcut, mixing_angle
from .integrator import SimulationConfig, closed_form_a_plus, integrate, propagator_oracle
from .models import AllenEberly, LandauZener, synthesize_profile

OMEGAS = (0.2, 1.0, 2.0)
ALPHAS = (0.2, 1.0, 2.0)
WINDOW = (-15.0, 15.0)
LONG_WINDOW = (-200.0, 200.0)
ORACLE_STEPS = 200_000


@dataclass(frozen=True)
class CriterionResult:
    criterion: int
    name: str
    passed: bool
    measured: float
    threshold: float
    relation: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] C{self.criterion} {self.name}: measured {self.measured:.3e} "
                f"{self.relation} {self.threshold:.3e}")


def _check(criterion, name, measured, relation, threshold) -> CriterionResult:
    measured = float(measured)
    ok = {
        "<=": measured <= threshold,
        ">=": measured >= threshold,
        ">": measured > threshold,
        "==": measured == threshold,
    }[relation]
    return CriterionResult(criterion, name, bool(ok), measured, float(threshold), relation)


def shortcut_models():
    return [LandauZener(w) for w in OMEGAS] + [AllenEberly(a, 1.0) for a in ALPHAS]


def _label(model) -> str:
    if isinstance(model, LandauZener):
        return f"LZ omega={model.omega:g}"
    return f"AE alpha={model.alpha:g} delta={model.delta:g}"


class Scenarios:
    """Lazily computed runs shared by the criteria.

    ``fast`` cuts the oracle resolution 10x; criteria then widen oracle
    comparisons by 100x (second-order oracle) and other tolerances by 10x.
    """

    def __init__(self, fast: bool = False):
        self.fast = fast
        self.oracle_steps = ORACLE_STEPS // 10 if fast else ORACLE_STEPS
        self.tol_scale = 10.0 if fast else 1.0
        self.oracle_scale = 100.0 if fast else 1.0

    @cached_property
    def shortcut_runs(self):
        return {m: integrate(SimulationConfig(m, GammaPolicy.shortcut(+1), WINDOW, "adiabatic"))
                for m in shortcut_models()}

    @cached_property
    def hermitian_runs(self):
        return {w: integrate(SimulationConfig(LandauZener(w), GammaPolicy.off(), LONG_WINDOW, "bare1",
                                              samples=4001))
                for w in OMEGAS}

    @cached_property
    def flip_runs(self):
        runs = {}
        for w in OMEGAS:
            for sign in (-1, 1):
                cfg = SimulationConfig(LandauZener(w), GammaPolicy.shortcut(sign), WINDOW, "adiabatic_minus")
                runs[(w, sign)] = integrate(cfg)
        return runs

    def oracle(self, traj):
        return propagator_oracle(traj.config, self.oracle_steps)


def criterion_1(sc: Scenarios):
    out = []
    ts = np.linspace(WINDOW[0], WINDOW[1], 1000)
    for m in shortcut_models():
        pol = GammaPolicy.shortcut(+1)
        worst = 0.0
        for t in ts:
            h12 = abs(adiabatic_hamiltonian(m, pol, t)[0, 1])
            scale = max(float(m.rabi(t)), abs(float(m.detuning(t))), abs(float(gamma_shortcut(m, t))))
            worst = max(worst, h12 / scale)
        out.append(_check(1, f"decoupling |H_a(1,2)|/scale, {_label(m)}", worst, "<=", 1e-14 * sc.tol_scale))
        out.append(_check(1, f"decoupling max|a_-|, {_label(m)}",
                          np.max(sc.shortcut_runs[m].abs_a_minus), "<=", 1e-8 * sc.tol_scale))
    return out


def criterion_2(sc: Scenarios):
    out = []
    for m, tr in sc.shortcut_runs.items():
        p2 = tr.p2[-1]
        out.append(_check(2, f"transfer P2(tF), {_label(m)}", p2, ">=", 0.995))
        cos2 = math.cos(float(mixing_angle(m, WINDOW[1]))) ** 2
        out.append(_check(2, f"transfer |P2 - cos^2 theta(tF)|, {_label(m)}", abs(p2 - cos2), "<=",
                          1e-8 * sc.tol_scale))
    return out


def criterion_3(sc: Scenarios):
    out = []
    for m, tr in sc.shortcut_runs.items():
        out.append(_check(3, f"endpoint |norm - 1|, {_label(m)}", abs(tr.norm[-1] - 1.0), "<=",
                          1e-8 * sc.tol_scale))
        out.append(_check(3, f"parity integral, {_label(m)}", abs(parity_integral(m, WINDOW)), "<=",
                          1e-10 * sc.tol_scale))
    tr = sc.shortcut_runs[LandauZener(0.2)]
    out.append(_check(3, "mid-run max|norm - 1|, LZ omega=0.2", np.max(np.abs(tr.norm - 1.0)), ">", 0.05))
    return out


def criterion_4(sc: Scenarios):
    out = []
    for w, tr in sc.hermitian_runs.items():
        out.append(_check(4, f"Hermitian max|norm - 1|, LZ omega={w:g}", np.max(np.abs(tr.norm - 1.0)), "<=",
                          1e-9 * sc.tol_scale))
        p1 = tr.p1[-1]
        out.append(_check(4, f"survival vs oracle, LZ omega={w:g}", abs(p1 - sc.oracle(tr).p1), "<=",
                          1e-6 * sc.oracle_scale))
        out.append(_check(4, f"survival {p1:.6f} vs asymptote {lz_survival_asymptote(w):.6f}, LZ omega={w:g}",
                          abs(p1 - lz_survival_asymptote(w)), "<=", 1e-3 * sc.tol_scale))
    return out


def criterion_5(sc: Scenarios):
    out = []
    for w in OMEGAS:
        m = LandauZener(w)
        tr = sc.shortcut_runs[m]
        a_plus = tr.adiabatic[-1, 1]
        closed = closed_form_a_plus(m, WINDOW)
        out.append(_check(5, f"closed-form a_+(tF), LZ omega={w:g}", abs(a_plus - closed), "<=",
                          1e-7 * sc.tol_scale))
    return out


def criterion_6(sc: Scenarios):
    out = []
    for w in OMEGAS:
        track = energy_track(LandauZener(w), GammaPolicy.shortcut(+1), WINDOW)
        exact, _ = lz_min_separation(w)
        out.append(_check(6, f"min separation > 0, LZ omega={w:g}", track.separation_min, ">", 0.0))
        out.append(_check(6, f"min separation vs analytic {exact:.6f}, LZ omega={w:g}",
                          abs(track.separation_min - exact), "<=", 1e-9 * sc.tol_scale))
    return out


def criterion_7(sc: Scenarios):
    out = []
    for w in OMEGAS:
        flipped, same = sc.flip_runs[(w, -1)], sc.flip_runs[(w, 1)]
        out.append(_check(7, f"sign -1 transfer P1(tF), LZ omega={w:g}", flipped.p1[-1], ">=", 0.995))
        out.append(_check(7, f"sign -1 endpoint |norm - 1|, LZ omega={w:g}", abs(flipped.norm[-1] - 1.0), "<=",
                          1e-8 * sc.tol_scale))
        out.append(_check(7, f"sign +1 endpoint |norm - 1|, LZ omega={w:g}", abs(same.norm[-1] - 1.0), ">", 0.1))
    return out


def criterion_8(sc: Scenarios):
    out = []
    runs = (
        [(f"shortcut {_label(m)}", tr) for m, tr in sc.shortcut_runs.items()]
        + [(f"Hermitian LZ omega={w:g} [-200,200]", tr) for w, tr in sc.hermitian_runs.items()]
        + [(f"sign {s:+d} LZ omega={w:g} from phi_-", tr) for (w, s), tr in sc.flip_runs.items()]
    )
    for label, tr in runs:
        dist = np.linalg.norm(tr.c[-1] - sc.oracle(tr).as_array())
        out.append(_check(8, f"oracle distance, {label}", dist, "<=", 1e-6 * sc.oracle_scale))
    # second-order convergence against the high-accuracy integrated state
    for m in (LandauZener(1.0), AllenEberly(1.0, 1.0)):
        tr = sc.shortcut_runs[m]
        errs = [np.linalg.norm(propagator_oracle(tr.config, n).as_array() - tr.c[-1]) for n in (2000, 4000)]
        ratio = errs[0] / errs[1]
        out.append(_check(8, f"oracle convergence ratio {ratio:.3f}, {_label(m)}", abs(ratio - 4.0), "<=", 0.5))
    return out


def criterion_9(sc: Scenarios):
    out = []
    for w in OMEGAS:
        prof = synthesize_profile(LandauZener(w), WINDOW, n=3001)
        g0 = prof.gamma[np.flatnonzero(prof.times == 0.0)[0]]
        out.append(_check(9, f"gamma(0) = {float(g0)!r} vs -1/omega, LZ omega={w:g}", abs(g0 - (-1.0 / w)), "==", 0.0))
    prof = synthesize_profile(AllenEberly(1.0, 1.0), WINDOW, n=3001)
    edge = max(abs(prof.gamma[0] + 1.0), abs(prof.gamma[-1] + 1.0))
    out.append(_check(9, "AE gamma(+-15) vs -1, alpha=delta=1", edge, "<=", 1e-6 * sc.tol_scale))
    return out


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_all(fast: bool = False, echo=None) -> list[CriterionResult]:
    sc = Scenarios(fast)
    results = []
    for k, fn in CRITERIA.items():
        for r in fn(sc):
            results.append(r)
            if echo is not None:
                echo(r.line())
    return results
