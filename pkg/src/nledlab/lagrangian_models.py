"""Electromagnetic Lagrangians L(X, Y) with analytic derivatives.

Models
------
``Maxwell``        L = X/2
``BornInfeld``     L = (1 - sqrt(1 - k^2 X - k^4 Y^2/4)) / k^2
``GeneralFamily``  L = c1 + c2 Y + F(X + lam Y^2) with a one-variable profile F
``DualityFamily``  the family member whose profile makes the theory invariant
                   under electric-magnetic duality rotations

All evaluation is vectorised over numpy arrays of X and Y.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forms4d
from .errors import DomainError

__all__ = [
    "BornInfeld",
    "DualityFamily",
    "DualityProfile",
    "GeneralFamily",
    "LDerivs",
    "Maxwell",
    "PolynomialProfile",
    "duality_F",
    "duality_residual",
    "duality_rotate",
    "model_from_dict",
]


@dataclass(frozen=True)
class LDerivs:
    L: np.ndarray
    L_X: np.ndarray
    L_Y: np.ndarray
    L_XX: np.ndarray
    L_XY: np.ndarray
    L_YY: np.ndarray

    def as_tuple(self):
        return (self.L, self.L_X, self.L_Y, self.L_XX, self.L_XY, self.L_YY)


def _bcast(X, Y):
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    return X, Y


class LagrangianModel:
    """Base class.  Subclasses implement ``_eval`` and ``margin``."""

    kind = "abstract"

    def margin(self, X, Y):
        """Positive inside the domain of definition."""
        X, Y = _bcast(X, Y)
        return np.full(X.shape, np.inf)

    def in_domain(self, X, Y):
        return self.margin(X, Y) > 0

    def check_domain(self, X, Y):
        m = self.margin(X, Y)
        if not np.all(m > 0):
            bad = np.flatnonzero(~(np.asarray(m) > 0))
            raise DomainError(
                f"{self.kind}: {bad.size} point(s) outside the domain "
                f"(min margin {np.min(m):.3e})"
            )

    def eval(self, X, Y) -> LDerivs:
        X, Y = _bcast(X, Y)
        self.check_domain(X, Y)
        return self._eval(X, Y)

    def lagrangian(self, X, Y):
        return self.eval(X, Y).L

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Maxwell(LagrangianModel):
    kind = "maxwell"

    def _eval(self, X, Y):
        z = np.zeros_like(X)
        return LDerivs(0.5 * X, z + 0.5, z, z.copy(), z.copy(), z.copy())

    def to_dict(self):
        return {"kind": "maxwell"}


@dataclass(frozen=True)
class BornInfeld(LagrangianModel):
    kappa: float = 1.0
    kind = "bi"

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("Born-Infeld constant must be positive")

    def margin(self, X, Y):
        X, Y = _bcast(X, Y)
        k2 = self.kappa**2
        return 1.0 - k2 * X - 0.25 * k2 * k2 * Y * Y

    def _eval(self, X, Y):
        k2 = self.kappa**2
        R = self.margin(X, Y)
        s = np.sqrt(R)
        r3 = R * s
        # (1 - s) / k2 rewritten to avoid cancellation at weak fields
        L = (X + 0.25 * k2 * Y * Y) / (1.0 + s)
        L_X = 0.5 / s
        L_Y = 0.25 * k2 * Y / s
        L_XX = 0.25 * k2 / r3
        L_XY = 0.125 * k2 * k2 * Y / r3
        L_YY = 0.25 * k2 / s + k2**3 * Y * Y / (16.0 * r3)
        return LDerivs(L, L_X, L_Y, L_XX, L_XY, L_YY)

    def to_dict(self):
        return {"kind": "bi", "kappa": self.kappa}


class Profile:
    """One-variable profile F(xi) with F(0) = 0 and F'(0) = 1/2."""

    def margin(self, xi):
        return np.full(np.shape(xi), np.inf)

    def __call__(self, xi):
        return self.derivs(xi)[0]


@dataclass(frozen=True)
class PolynomialProfile(Profile):
    """``F(xi) = xi/2 + sum_n coeffs[n-2] * xi**n`` for n >= 2."""

    coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))

    def derivs(self, xi):
        xi = np.asarray(xi, dtype=float)
        F = 0.5 * xi
        F1 = np.full_like(xi, 0.5)
        F2 = np.zeros_like(xi)
        for n, a in enumerate(self.coeffs, start=2):
            F = F + a * xi**n
            F1 = F1 + n * a * xi ** (n - 1)
            F2 = F2 + n * (n - 1) * a * xi ** (n - 2)
        return F, F1, F2


@dataclass(frozen=True)
class DualityProfile(Profile):
    """``F(xi) = (1 - sqrt(1 - 4 lam xi)) / (4 lam)``, defined for xi < 1/(4 lam)."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("duality profile needs lambda > 0")

    def margin(self, xi):
        return 1.0 - 4.0 * self.lam * np.asarray(xi, dtype=float)

    def derivs(self, xi):
        xi = np.asarray(xi, dtype=float)
        m = self.margin(xi)
        if not np.all(m > 0):
            raise DomainError(f"xi must stay below 1/(4 lambda) = {0.25 / self.lam}")
        s = np.sqrt(m)
        F = xi / (1.0 + s)  # = (1 - s) / (4 lam) without cancellation
        F1 = 0.5 / s
        F2 = self.lam / (m * s)
        return F, F1, F2


def duality_F(lam: float) -> DualityProfile:
    """The duality-selected profile for coupling ``lam``."""
    return DualityProfile(lam)


@dataclass(frozen=True)
class GeneralFamily(LagrangianModel):
    """``L = c1 + c2 Y + F(X + lam Y^2)``."""

    lam: float
    profile: Profile = field(default_factory=PolynomialProfile)
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def kind(self):
        return "duality" if isinstance(self.profile, DualityProfile) else "family"

    def margin(self, X, Y):
        X, Y = _bcast(X, Y)
        return self.profile.margin(X + self.lam * Y * Y)

    def _eval(self, X, Y):
        lam = self.lam
        F, F1, F2 = self.profile.derivs(X + lam * Y * Y)
        return LDerivs(
            L=self.c1 + self.c2 * Y + F,
            L_X=F1,
            L_Y=self.c2 + 2.0 * lam * Y * F1,
            L_XX=F2,
            L_XY=2.0 * lam * Y * F2,
            L_YY=2.0 * lam * F1 + 4.0 * lam * lam * Y * Y * F2,
        )

    def to_dict(self):
        d = {"kind": self.kind, "lambda": self.lam}
        if isinstance(self.profile, PolynomialProfile):
            d["coeffs"] = list(self.profile.coeffs)
        if self.c1:
            d["c1"] = self.c1
        if self.c2:
            d["c2"] = self.c2
        return d


def DualityFamily(lam: float) -> GeneralFamily:
    return GeneralFamily(lam, DualityProfile(lam))


def model_from_dict(d: dict) -> LagrangianModel:
    """Inverse of ``to_dict``; keys follow the config file (kind, kappa, lambda, coeffs)."""
    kind = str(d.get("kind", "")).lower()
    if kind == "maxwell":
        return Maxwell()
    if kind in ("bi", "born-infeld", "borninfeld"):
        return BornInfeld(float(d.get("kappa", 1.0)))
    if kind in ("duality", "duality-family"):
        return DualityFamily(float(d["lambda"]))
    if kind in ("family", "general-family"):
        coeffs = d.get("coeffs", ())
        if isinstance(coeffs, str):
            coeffs = [float(c) for c in coeffs.replace(",", " ").split()]
        return GeneralFamily(
            float(d["lambda"]),
            PolynomialProfile(tuple(coeffs)),
            c1=float(d.get("c1", 0.0)),
            c2=float(d.get("c2", 0.0)),
        )
    raise ValueError(f"unknown model kind {d.get('kind')!r}")


def _excitation_form(model, F):
    # G = 2 (L_X F - L_Y *F)
    E, B = forms4d.to_EB(F)
    X, Y = forms4d.invariants_via_forms(E, B)
    d = model.eval(X, Y)
    return F * (2.0 * d.L_X) - forms4d.hodge(F) * (2.0 * d.L_Y)


def duality_residual(model, E, B):
    """``*(F^F) - *(G^G)``; zero for duality-invariant theories in the Maxwell class."""
    F = forms4d.from_EB(E, B)
    G = _excitation_form(model, F)
    FF = forms4d.hodge(forms4d.wedge22(F, F)).coeffs[..., 0]
    GG = forms4d.hodge(forms4d.wedge22(G, G)).coeffs[..., 0]
    return FF - GG


def duality_rotate(F, starG, alpha):
    """Rotate the pair (F, *G) by angle ``alpha``."""
    c, s = np.cos(alpha), np.sin(alpha)
    return F * c + starG * s, F * (-s) + starG * c
