"""Exact travelling-wave solutions on a constant magnetic background.

The wave propagates along +z with profile ``pulse(z - v t)``.  Its Faraday
form is

    F = P (dz - v dt)^dx - Bx dy^dz - By dz^dx - Bz dx^dy + chi P dt^dz

which reads ``E = (-v P, 0, chi P)`` and ``B = (Bx, By - P, Bz)``.
``field_equation_residual`` checks dF = 0 and d*G = 0 for any model by finite
differences in (t, z).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import forms4d
from .errors import DomainError
from .lagrangian_models import BornInfeld, DualityProfile, GeneralFamily, Maxwell

__all__ = [
    "AnsatzSpec",
    "FieldPoint",
    "GaussianPulse",
    "RefinementReport",
    "ansatz_field",
    "ansatz_form",
    "coupling",
    "matched_wave",
    "residual_amplitude",
    "dispersion_coefficients",
    "field_equation_residual",
    "predicted_wave",
    "refinement_study",
    "velocity_BI",
    "velocity_coplanar",
    "velocity_simple",
    "write_residual_csv",
]


@dataclass(frozen=True)
class FieldPoint:
    E: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class GaussianPulse:
    """``A exp(-(u - u0)^2 / (2 sigma^2))``."""

    amplitude: float
    center: float = 0.0
    width: float = 1.0

    def __call__(self, u):
        s = (np.asarray(u, dtype=float) - self.center) / self.width
        return self.amplitude * np.exp(-0.5 * s * s)

    def derivative(self, u):
        s = (np.asarray(u, dtype=float) - self.center) / self.width
        return -self.amplitude * s / self.width * np.exp(-0.5 * s * s)


@dataclass(frozen=True)
class AnsatzSpec:
    profile: GaussianPulse
    v: float
    chi: float = 0.0
    B0: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.v <= 1.0:
            raise ValueError(f"phase velocity must lie in (0, 1], got {self.v}")
        object.__setattr__(self, "B0", tuple(float(b) for b in self.B0))

    @property
    def gamma(self):
        return math.inf if self.v == 1.0 else 1.0 / math.sqrt(1.0 - self.v * self.v)


def velocity_simple(lam, B):
    return 1.0 / math.sqrt(1.0 + 4.0 * lam * B * B)


def velocity_coplanar(lam, Bx, Bz):
    a = 1.0 + 4.0 * lam * Bz * Bz
    v = math.sqrt(a / (1.0 + 4.0 * lam * (Bx * Bx + Bz * Bz)))
    return v, 4.0 * lam * Bx * Bz * v / a


def velocity_BI(kappa, B0):
    Bx, By, Bz = (float(b) for b in B0)
    k2 = kappa * kappa
    a = 1.0 + k2 * Bz * Bz
    v = math.sqrt(a / (1.0 + k2 * (Bx * Bx + By * By + Bz * Bz)))
    return v, k2 * Bx * Bz * v / a


def predicted_wave(model, B0):
    """(v, chi) of the exact wave for ``model`` on background ``B0``.

    Returns None when the model has no exact solution of this form, i.e. a
    non-duality family member with ``By != 0``.
    """
    Bx, By, Bz = (float(b) for b in B0)
    if isinstance(model, Maxwell):
        return 1.0, 0.0
    if isinstance(model, BornInfeld):
        return velocity_BI(model.kappa, B0)
    if isinstance(model, GeneralFamily):
        if isinstance(model.profile, DualityProfile):
            return velocity_BI(2.0 * math.sqrt(model.lam), B0)
        if By == 0.0:
            return velocity_coplanar(model.lam, Bx, Bz)
        return None
    raise TypeError(f"no prediction for {type(model).__name__}")


def matched_wave(model, B0):
    """``predicted_wave`` when it exists, else the Born-Infeld wave with kappa^2 = 4 lambda.

    This is the natural trial wave for a family member with no exact
    solution of the ansatz form: it is exact for every member when By = 0.
    """
    wave = predicted_wave(model, B0)
    if wave is not None:
        return wave
    return velocity_BI(2.0 * math.sqrt(model.lam), B0)


def coupling(model):
    """Coupling strength max(kappa, 2 sqrt(lambda)); zero for Maxwell."""
    if isinstance(model, BornInfeld):
        return model.kappa
    if isinstance(model, GeneralFamily):
        return 2.0 * math.sqrt(model.lam)
    return 0.0


def residual_amplitude(model):
    """Pulse amplitude ``0.1 / coupling`` used by residual tests (0.1 for Maxwell)."""
    c = coupling(model)
    return 0.1 / c if c > 0 else 0.1


def ansatz_form(spec: AnsatzSpec, t, z) -> forms4d.Form:
    t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=float))
    P = spec.profile(z - spec.v * t)
    Bx, By, Bz = spec.B0
    c = np.zeros(P.shape + (6,))
    # P (dz - v dt)^dx = P dz^dx - v P dt^dx
    c[..., 0] = -spec.v * P
    c[..., 2] = spec.chi * P
    c[..., 3] = -Bx
    c[..., 4] = P - By
    c[..., 5] = -Bz
    return forms4d.Form(2, c)


def ansatz_field(spec: AnsatzSpec, t, z) -> FieldPoint:
    E, B = forms4d.to_EB(ansatz_form(spec, t, z))
    return FieldPoint(E, B)


def _star_G(model, F):
    E, B = forms4d.to_EB(F)
    X, Y = forms4d.invariants_via_forms(E, B)
    margin = model.margin(X, Y)
    if not np.all(margin > 0):
        raise DomainError("finite-difference stencil left the model domain")
    d = model.eval(X, Y)
    G = F * (2.0 * d.L_X) - forms4d.hodge(F) * (2.0 * d.L_Y)
    return forms4d.hodge(G)


def field_equation_residual(model, spec: AnsatzSpec, t, z, h):
    """Components of dF and d*G at (t, z) by central differences with step h.

    Returns two arrays of shape ``(..., 4)`` on the 3-form basis.  The fields
    depend on (t, z) only, so the x and y partials are exactly zero.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)

    def forms_at(tt, zz):
        F = ansatz_form(spec, tt, zz)
        return F.coeffs, _star_G(model, F).coeffs

    Ftp, Gtp = forms_at(t + h, z)
    Ftm, Gtm = forms_at(t - h, z)
    Fzp, Gzp = forms_at(t, z + h)
    Fzm, Gzm = forms_at(t, z - h)

    def grad(dt, dz):
        g = np.zeros(dt.shape[:-1] + (4, 6))
        g[..., 0, :] = dt / (2.0 * h)
        g[..., 3, :] = dz / (2.0 * h)
        return g

    rF = forms4d.exterior_derivative(grad(Ftp - Ftm, Fzp - Fzm), 2).coeffs
    rG = forms4d.exterior_derivative(grad(Gtp - Gtm, Gzp - Gzm), 2).coeffs
    return rF, rG


@dataclass(frozen=True)
class RefinementReport:
    steps: tuple
    norms: tuple
    slope: float
    extrapolated: float
    passed: bool
    diagnostic: str


def sample_points(spec: AnsatzSpec, n=9, t=0.0):
    """(t, z) samples across the pulse, avoiding its symmetric centre."""
    p = spec.profile
    z = p.center + spec.v * t + p.width * np.linspace(-2.5, 2.5, n) + 0.137 * p.width
    return np.full_like(z, t), z


def refinement_study(model, spec: AnsatzSpec, steps=(1e-2, 5e-3, 2.5e-3), points=None):
    """Residual norms under step refinement and the observed convergence order.

    The residual vector (all components, all sample points) is Richardson
    extrapolated from the two finest steps assuming an h^2 leading error.
    A wave passes when either the finest residual is at rounding level or the
    observed order is 2 +- 0.1.
    """
    if points is None:
        points = sample_points(spec)
    t, z = points
    vecs = []
    for h in steps:
        rF, rG = field_equation_residual(model, spec, t, z, h)
        vecs.append(np.concatenate([rF.ravel(), rG.ravel()]))
    norms = tuple(float(np.max(np.abs(v))) for v in vecs)
    ratios = [steps[i] / steps[i + 1] for i in range(len(steps) - 1)]
    orders = [
        math.log(norms[i] / norms[i + 1]) / math.log(ratios[i])
        if norms[i] > 0 and norms[i + 1] > 0 else math.nan
        for i in range(len(ratios))
    ]
    slope = float(np.polyfit(np.log(steps), np.log(np.maximum(norms, 1e-300)), 1)[0])
    q = ratios[-1] ** 2
    extrapolated = float(np.max(np.abs((q * vecs[-1] - vecs[-2]) / (q - 1.0))))
    scale = spec.profile.amplitude
    if norms[-1] <= 1e-10 * max(1.0, scale):
        passed, diag = True, "residual at rounding level"
    elif abs(slope - 2.0) <= 0.1 and all(abs(o - 2.0) <= 0.2 for o in orders):
        passed, diag = True, f"second-order convergence (slope {slope:.3f})"
    else:
        passed, diag = False, (
            f"residual plateau: slope {slope:.3f}, extrapolated residual {extrapolated:.3e}"
        )
    return RefinementReport(tuple(steps), norms, slope, extrapolated, passed, diag)


def dispersion_coefficients(model, v, B, P):
    """The two bracketed coefficients multiplying P' in the d*G = 0 components.

    Valid for the background ``(B, 0, 0)`` with no longitudinal field and
    subluminal ``v``; both vanish for every profile value P exactly when the
    wave with speed v solves the theory.
    """
    if not 0.0 < v < 1.0:
        raise ValueError("dispersion coefficients need 0 < v < 1")
    g2 = 1.0 / (1.0 - v * v)
    P = np.asarray(P, dtype=float)
    X = -P * P / g2 - B * B
    Y = -2.0 * B * v * P
    d = model.eval(X, Y)
    c1 = g2 * B * v * d.L_XY + P * d.L_XX
    c2 = (
        d.L_X
        - 2.0 * P * P / g2 * d.L_XX
        - 4.0 * v * B * P * d.L_XY
        - 2.0 * v * v * g2 * B * B * d.L_YY
    )
    return c1, c2


def write_residual_csv(path, rows):
    """Rows of (model_id, B0, v, chi, h, |rF|inf, |rG|inf)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "bx", "by", "bz", "v", "chi", "h", "rF_inf", "rG_inf"])
        for model_id, B0, v, chi, h, rf, rg in rows:
            w.writerow([model_id, *(repr(float(b)) for b in B0), repr(v), repr(chi), repr(h), repr(rf), repr(rg)])
