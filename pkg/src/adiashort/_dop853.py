"""
Dormand-Prince 8(5,3) for the linear two-component system

    dy/dt = -i [[h11, h12], [h12, h22]](t) y

Same tableau, error norm, step controller and dense output as
scipy.integrate.DOP853, specialised to scalar complex arithmetic. Because the
right-hand side is linear with a state-independent matrix, the Hamiltonian
is evaluated at all stage times of a step in one vectorised call, which
removes most of the per-step interpreter overhead of the generic solver.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _co

N_STAGES = _co.N_STAGES  # 12
_A = _co.A
_C = _co.C
_ROWS = [[(j, float(a)) for j, a in enumerate(_A[s, :s]) if a != 0.0] for s in range(_A.shape[0])]
_B = [(j, float(b)) for j, b in enumerate(_co.B) if b != 0.0]
_E5 = [(j, float(e)) for j, e in enumerate(_co.E5) if e != 0.0]
_E3 = [(j, float(e)) for j, e in enumerate(_co.E3) if e != 0.0]
_D = [[(j, float(d)) for j, d in enumerate(row) if d != 0.0] for row in _co.D]
# stage nodes 1..11 plus the end point (FSAL derivative)
_C_MAIN = np.concatenate([_C[1:N_STAGES], [1.0]])
_C_EXTRA = _C[N_STAGES + 1:]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0


class StepSizeUnderflow(RuntimeError):
    def __init__(self, t):
        super().__init__(f"required step size is below the spacing of floating point numbers at t={t!r}")
        self.t = t


def _initial_step(entries, t0, y1, y2, f1, f2, t1, rtol, atol):
    # Hairer, Norsett & Wanner, Sec. II.4 (as in scipy)
    s1 = atol + abs(y1) * rtol
    s2 = atol + abs(y2) * rtol
    d0 = math.sqrt(((abs(y1) / s1) ** 2 + (abs(y2) / s2) ** 2) / 2)
    d1 = math.sqrt(((abs(f1) / s1) ** 2 + (abs(f2) / s2) ** 2) / 2)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    a, b, d = (complex(x[0]) for x in entries(np.array([t0 + h0])))
    z1, z2 = y1 + h0 * f1, y2 + h0 * f2
    g1, g2 = -1j * (a * z1 + b * z2), -1j * (b * z1 + d * z2)
    d2 = math.sqrt(((abs(g1 - f1) / s1) ** 2 + (abs(g2 - f2) / s2) ** 2) / 2) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100 * h0, h1, t1 - t0)


def solve(entries, t0, y0, t1, rtol, atol, t_out=()):
    """Integrate from t0 to t1 (t1 > t0).

    ``entries(t_array)`` returns arrays (h11, h12, h22). ``t_out`` holds
    sorted times in [t0, t1] to be filled from the dense output.
    Returns (y_final, y_out (len(t_out), 2), stats).
    """
    t_out = np.asarray(t_out, dtype=float)
    y_out = np.empty((t_out.size, 2), dtype=complex)
    k_out = 0
    while k_out < t_out.size and t_out[k_out] <= t0:
        y_out[k_out] = y0
        k_out += 1

    t = float(t0)
    y1, y2 = complex(y0[0]), complex(y0[1])
    a, b, d = (complex(x[0]) for x in entries(np.array([t])))
    f1, f2 = -1j * (a * y1 + b * y2), -1j * (b * y1 + d * y2)
    nfev = 1
    h_abs = _initial_step(entries, t, y1, y2, f1, f2, t1, rtol, atol)
    nfev += 1
    n_acc = n_rej = 0
    K1 = [0j] * 16
    K2 = [0j] * 16

    while t < t1:
        min_step = 10 * abs(math.nextafter(t, math.inf) - t)
        if h_abs < min_step:
            h_abs = min_step
        rejected = False
        while True:
            if h_abs < min_step:
                raise StepSizeUnderflow(t)
            t_new = t + h_abs
            if t_new > t1:
                t_new = t1
            h = t_new - t
            h_abs = h
            H11, H12, H22 = (x.tolist() for x in entries(t + h * _C_MAIN))
            nfev += N_STAGES
            K1[0], K2[0] = f1, f2
            for s in range(1, N_STAGES):
                z1, z2 = y1, y2
                for j, c in _ROWS[s]:
                    z1 += h * c * K1[j]
                    z2 += h * c * K2[j]
                a, b, d = H11[s - 1], H12[s - 1], H22[s - 1]
                K1[s] = -1j * (a * z1 + b * z2)
                K2[s] = -1j * (b * z1 + d * z2)
            n1, n2 = y1, y2
            for j, c in _B:
                n1 += h * c * K1[j]
                n2 += h * c * K2[j]
            a, b, d = H11[-1], H12[-1], H22[-1]
            g1, g2 = -1j * (a * n1 + b * n2), -1j * (b * n1 + d * n2)
            K1[N_STAGES], K2[N_STAGES] = g1, g2

            s1 = atol + max(abs(y1), abs(n1)) * rtol
            s2 = atol + max(abs(y2), abs(n2)) * rtol
            e51 = e52 = e31 = e32 = 0j
            for j, c in _E5:
                e51 += c * K1[j]
                e52 += c * K2[j]
            for j, c in _E3:
                e31 += c * K1[j]
                e32 += c * K2[j]
            err5 = (abs(e51) / s1) ** 2 + (abs(e52) / s2) ** 2
            err3 = (abs(e31) / s1) ** 2 + (abs(e32) / s2) ** 2
            if err5 == 0.0 and err3 == 0.0:
                err = 0.0
            else:
                err = h * err5 / math.sqrt((err5 + 0.01 * err3) * 2)
            if not math.isfinite(err):
                err = math.inf
            if err < 1.0:
                factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err**ERROR_EXPONENT)
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err**ERROR_EXPONENT) if math.isfinite(err) else MIN_FACTOR
            rejected = True
            n_rej += 1
        n_acc += 1

        if k_out < t_out.size and t_out[k_out] < t_new:
            j_end = k_out
            while j_end < t_out.size and t_out[j_end] < t_new:
                j_end += 1
            y_out[k_out:j_end] = _dense(entries, t, h, y1, y2, n1, n2, f1, f2, g1, g2, K1, K2,
                                        t_out[k_out:j_end])
            nfev += len(_C_EXTRA)
            k_out = j_end

        t, y1, y2, f1, f2 = t_new, n1, n2, g1, g2
        if not (math.isfinite(abs(y1)) and math.isfinite(abs(y2))):
            raise FloatingPointError(f"state became non-finite at t={t!r}")

    while k_out < t_out.size:
        y_out[k_out] = (y1, y2)
        k_out += 1
    stats = {"steps": n_acc, "rejected_steps": n_rej, "nfev": nfev}
    return np.array([y1, y2]), y_out, stats


def _dense(entries, t, h, y1, y2, n1, n2, f1, f2, g1, g2, K1, K2, ts):
    H11, H12, H22 = (x.tolist() for x in entries(t + h * _C_EXTRA))
    for i, s in enumerate(range(N_STAGES + 1, N_STAGES + 1 + len(_C_EXTRA))):
        z1, z2 = y1, y2
        for j, c in _ROWS[s]:
            z1 += h * c * K1[j]
            z2 += h * c * K2[j]
        a, b, d = H11[i], H12[i], H22[i]
        K1[s] = -1j * (a * z1 + b * z2)
        K2[s] = -1j * (b * z1 + d * z2)
    dy1, dy2 = n1 - y1, n2 - y2
    F = [
        (dy1, dy2),
        (h * f1 - dy1, h * f2 - dy2),
        (2 * dy1 - h * (g1 + f1), 2 * dy2 - h * (g2 + f2)),
    ]
    for row in _D:
        p1 = p2 = 0j
        for j, c in row:
            p1 += c * K1[j]
            p2 += c * K2[j]
        F.append((h * p1, h * p2))
    x = (np.asarray(ts) - t) / h
    out = np.zeros((x.size, 2), dtype=complex)
    for i, (c1, c2) in enumerate(reversed(F)):
        out[:, 0] += c1
        out[:, 1] += c2
        out *= (x if i % 2 == 0 else 1.0 - x)[:, None]
    out[:, 0] += y1
    out[:, 1] += y2
    return out
