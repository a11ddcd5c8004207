"""First-order adhesion/detachment kinetics in the reception volume.

Free droplets X adhere to the sensor surface (rate k1) forming a sensed
complex Y, which then detaches into an unsensed state Z (rate k2):

    X -> Y -> Z,    dC/dt = -k1 C,    dB/dt = k1 C - k2 B,

with C(0) = C0 and B(0) = 0, where C is the free-droplet concentration and
B the adhered-complex concentration, both in kg/m^3. The closed forms are

    C(t) = C0 exp(-k1 t)
    B(t) = k1 C0 / (k2 - k1) * (exp(-k1 t) - exp(-k2 t))      (k1 != k2)
    B(t) = C0 k1 t exp(-k1 t)                                  (k1 == k2)

Near the confluent point k1 == k2 the two-exponential form cancels
catastrophically, so evaluation switches to an expm1-based form that is
exact in the limit. A fixed-step Runge-Kutta integrator is included as an
independent numerical check of the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# |k1 - k2| below this fraction of max(k1, k2) uses the confluent-stable form.
CONFLUENT_REL_TOL = 1e-6


@dataclass(frozen=True)
class KineticsParams:
    """Adhesion rate k1 and detachment rate k2, both in 1/s."""

    k1: float
    k2: float

    def __post_init__(self):
        for name in ("k1", "k2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValidationError(f"{name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class KineticsState:
    """Concentrations at time t: free droplets c, adhered complex b, and the
    detached (no longer sensed) mass z accumulated as the integral of k2*b."""

    t: float
    c: float
    b: float
    z: float = 0.0


def _as_time_array(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValidationError("time must be finite and >= 0")
    return arr


def _match(arr, like):
    """Return a scalar if the original input was scalar."""
    return float(arr) if np.ndim(like) == 0 else arr


def free_concentration(c0: float, kin: KineticsParams, t):
    """Free-droplet concentration C(t) = C0 exp(-k1 t).

    Accepts a scalar or array time; returns the matching shape.
    """
    if not (math.isfinite(c0) and c0 >= 0.0):
        raise ValidationError(f"c0 must be finite and >= 0, got {c0!r}")
    tt = _as_time_array(t)
    return _match(c0 * np.exp(-kin.k1 * tt), t)


def bound_concentration(c0: float, kin: KineticsParams, t):
    """Adhered-complex concentration B(t), in kg/m^3.

    Evaluates the two-exponential closed form, switching to the
    expm1-scaled form within CONFLUENT_REL_TOL of k1 == k2 so the value
    stays finite and non-negative through the confluent point. Accepts a
    scalar or array time.
    """
    if not (math.isfinite(c0) and c0 >= 0.0):
        raise ValidationError(f"c0 must be finite and >= 0, got {c0!r}")
    tt = _as_time_array(t)
    k1, k2 = kin.k1, kin.k2
    delta = k1 - k2
    if abs(delta) < CONFLUENT_REL_TOL * max(k1, k2):
        if delta == 0.0:
            b = c0 * k1 * tt * np.exp(-k1 * tt)
        else:
            # B = C0 k1 e^{-k1 t} (e^{delta t} - 1) / delta, stable for small delta
            b = c0 * k1 * np.exp(-k1 * tt) * np.expm1(delta * tt) / delta
    else:
        b = k1 * c0 / (k2 - k1) * (np.exp(-k1 * tt) - np.exp(-k2 * tt))
    # B is provably >= 0; clip pure-roundoff sign flips.
    return _match(np.maximum(b, 0.0), t)


def peak_time(kin: KineticsParams) -> float:
    """Time of the maximum of B(t): ln(k1/k2)/(k1 - k2), or 1/k1 at confluence.

    Evaluated as log1p((ka - kb)/kb)/(ka - kb) with (ka, kb) ordered so the
    result is stable near confluence and bitwise symmetric under swapping
    k1 and k2.
    """
    ka, kb = max(kin.k1, kin.k2), min(kin.k1, kin.k2)
    delta = ka - kb
    if delta == 0.0:
        return 1.0 / ka
    return math.log1p(delta / kb) / delta


def rk4_trajectory(c0: float, kin: KineticsParams, t_end: float, dt: float):
    """Integrate (C, B, Z) with classical fixed-step RK4.

    Returns (t, c, b, z) as float arrays of length n+1 where n = round(t_end/dt).
    Z accumulates the detached mass (dZ/dt = k2 B), so c + b + z is a
    conserved quantity equal to c0 up to roundoff. This integrator exists to
    validate the closed forms and deliberately shares no code with them.
    """
    if not (math.isfinite(c0) and c0 >= 0.0):
        raise ValidationError(f"c0 must be finite and >= 0, got {c0!r}")
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValidationError(f"dt must be finite and > 0, got {dt!r}")
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise ValidationError(f"t_end must be finite and > 0, got {t_end!r}")
    if dt > t_end:
        raise ValidationError(f"dt = {dt!r} exceeds t_end = {t_end!r}")

    k1, k2 = kin.k1, kin.k2
    n = int(round(t_end / dt))
    t = np.arange(n + 1) * dt
    cs = np.empty(n + 1)
    bs = np.empty(n + 1)
    zs = np.empty(n + 1)
    c, b, z = c0, 0.0, 0.0
    cs[0], bs[0], zs[0] = c, b, z
    h = dt
    for i in range(1, n + 1):
        dc1 = -k1 * c
        db1 = k1 * c - k2 * b
        dz1 = k2 * b
        c2 = c + 0.5 * h * dc1
        b2 = b + 0.5 * h * db1
        dc2 = -k1 * c2
        db2 = k1 * c2 - k2 * b2
        dz2 = k2 * b2
        c3 = c + 0.5 * h * dc2
        b3 = b + 0.5 * h * db2
        dc3 = -k1 * c3
        db3 = k1 * c3 - k2 * b3
        dz3 = k2 * b3
        c4 = c + h * dc3
        b4 = b + h * db3
        dc4 = -k1 * c4
        db4 = k1 * c4 - k2 * b4
        dz4 = k2 * b4
        c += h / 6.0 * (dc1 + 2.0 * dc2 + 2.0 * dc3 + dc4)
        b += h / 6.0 * (db1 + 2.0 * db2 + 2.0 * db3 + db4)
        z += h / 6.0 * (dz1 + 2.0 * dz2 + 2.0 * dz3 + dz4)
        cs[i], bs[i], zs[i] = c, b, z
    return t, cs, bs, zs


def solve_kinetics_numeric(
    c0: float, kin: KineticsParams, t_end: float, dt: float
) -> list[KineticsState]:
    """RK4 trajectory of the reaction system as a list of KineticsState.

    t_end is rounded to a whole number of steps of size dt. Intended for
    validating the analytic solutions, not for production evaluation.
    """
    t, cs, bs, zs = rk4_trajectory(c0, kin, t_end, dt)
    return [
        KineticsState(t=float(ti), c=float(ci), b=float(bi), z=float(zi))
        for ti, ci, bi, zi in zip(t, cs, bs, zs)
    ]
