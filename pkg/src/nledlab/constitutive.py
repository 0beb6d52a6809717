"""The (E, B) -> (D, H) map of a Lagrangian theory and its inversion at fixed B.

``D = 2 (L_X E + L_Y B)`` and ``H = 2 (L_X B - L_Y E)``.  The solver evolves
(D, B), so ``invert_DB`` recovers E from (D, B) by damped Newton iteration.
All functions take 3-vectors on the last axis and broadcast over the rest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forms4d
from .errors import DomainError, NoConvergence

__all__ = [
    "Excitation",
    "NewtonInfo",
    "energy_density",
    "invert_DB",
    "jacobian_D_of_E",
    "line_search",
    "to_DH",
    "to_DH_via_forms",
]

MAX_ITER = 50
MAX_HALVINGS = 40
RTOL = 1e-12


@dataclass(frozen=True)
class Excitation:
    D: np.ndarray
    H: np.ndarray


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _maxabs(r):
    return np.maximum(np.maximum(np.abs(r[..., 0]), np.abs(r[..., 1])), np.abs(r[..., 2]))


def _eval(model, E, B):
    X, Y = forms4d.invariants(E, B)
    return model.eval(X, Y)


def to_DH(model, E, B) -> Excitation:
    E, B = np.broadcast_arrays(np.asarray(E, dtype=float), np.asarray(B, dtype=float))
    d = _eval(model, E, B)
    LX = d.L_X[..., None]
    LY = d.L_Y[..., None]
    return Excitation(2.0 * (LX * E + LY * B), 2.0 * (LX * B - LY * E))


def to_DH_via_forms(model, E, B) -> Excitation:
    """Same map computed as ``G = 2 (L_X F - L_Y *F)`` through the forms kernel."""
    F = forms4d.from_EB(E, B)
    X, Y = forms4d.invariants_via_forms(*forms4d.to_EB(F))
    d = model.eval(X, Y)
    G = F * (2.0 * d.L_X) - forms4d.hodge(F) * (2.0 * d.L_Y)
    D, H = forms4d.to_EB(G)
    return Excitation(D, H)


def energy_density(model, E, B):
    """Hamiltonian density ``E.D - L``; equals (E^2 + B^2)/2 for Maxwell."""
    E, B = np.broadcast_arrays(np.asarray(E, dtype=float), np.asarray(B, dtype=float))
    d = _eval(model, E, B)
    D = 2.0 * (d.L_X[..., None] * E + d.L_Y[..., None] * B)
    return _dot(E, D) - d.L


def jacobian_D_of_E(model, E, B):
    """``dD/dE`` at fixed B, shape ``(..., 3, 3)`` with rows indexing D."""
    E, B = np.broadcast_arrays(np.asarray(E, dtype=float), np.asarray(B, dtype=float))
    return _jacobian(_eval(model, E, B), E, B)


def _jacobian(d, E, B):
    u = d.L_XX[..., None] * E + d.L_XY[..., None] * B
    w = d.L_XY[..., None] * E + d.L_YY[..., None] * B
    J = 4.0 * (u[..., :, None] * E[..., None, :] + w[..., :, None] * B[..., None, :])
    J = J + 2.0 * d.L_X[..., None, None] * np.eye(3)
    return J


@dataclass
class NewtonInfo:
    """Per-point iteration record of ``invert_DB``.

    ``history[k]`` holds the max-norm residual of every point after iteration
    k (entry 0 is the initial guess); converged points repeat their last value.
    """

    iterations: np.ndarray
    halvings: np.ndarray
    history: list = field(default_factory=list)


def _residual(model, E, B, D):
    X, Y = forms4d.invariants(E, B)
    d = model._eval(X, Y)
    r = 2.0 * (d.L_X[..., None] * E + d.L_Y[..., None] * B) - D
    return r, d


def _solve3(J, r):
    # batched Cramer's rule; np.linalg.solve has large per-call overhead for 3x3
    a, b, c = J[:, 0, 0], J[:, 0, 1], J[:, 0, 2]
    d, e, f = J[:, 1, 0], J[:, 1, 1], J[:, 1, 2]
    g, h, i = J[:, 2, 0], J[:, 2, 1], J[:, 2, 2]
    A = e * i - f * h
    B = f * g - d * i
    C = d * h - e * g
    det = a * A + b * B + c * C
    x = (A * r[:, 0] + (c * h - b * i) * r[:, 1] + (b * f - c * e) * r[:, 2]) / det
    y = (B * r[:, 0] + (a * i - c * g) * r[:, 1] + (c * d - a * f) * r[:, 2]) / det
    z = (C * r[:, 0] + (b * g - a * h) * r[:, 1] + (a * e - b * d) * r[:, 2]) / det
    return np.stack([x, y, z], axis=-1)


def line_search(model, E, B, D, step, r0):
    """Backtracking by halving until the iterate is in domain and the residual drops.

    Works on flat arrays ``(n, 3)``.  Returns the accepted fraction per point
    (0 where no fraction down to ``2**-MAX_HALVINGS`` worked), the residual at
    the accepted iterate, the derivatives there and the acceptance mask.
    """
    n = E.shape[0]
    frac = np.ones(n)
    accepted = np.zeros(n, dtype=bool)
    r_new = r0.copy()
    derivs = {}
    norm0 = _maxabs(r0)
    todo = np.arange(n)
    for _ in range(MAX_HALVINGS + 1):
        Et = E[todo] + frac[todo, None] * step[todo]
        Bt = B[todo]
        X, Y = forms4d.invariants(Et, Bt)
        inside = model.margin(X, Y) > 0
        ok = np.zeros(todo.size, dtype=bool)
        if np.any(inside):
            idx = np.flatnonzero(inside)
            if idx.size == todo.size:
                d = model._eval(X, Y)
            else:
                d = model._eval(X[idx], Y[idx])
            r = 2.0 * (d.L_X[:, None] * Et[idx] + d.L_Y[:, None] * Bt[idx]) - D[todo[idx]]
            better = _maxabs(r) < norm0[todo[idx]]
            ok[idx[better]] = True
            r_new[todo[idx[better]]] = r[better]
            for k, v in zip(_FIELDS, d.as_tuple()):
                derivs.setdefault(k, np.zeros(n))[todo[idx[better]]] = v[better]
        accepted[todo[ok]] = True
        todo = todo[~ok]
        if todo.size == 0:
            break
        frac[todo] *= 0.5
    frac[~accepted] = 0.0
    return frac, r_new, derivs, accepted


_FIELDS = ("L", "L_X", "L_Y", "L_XX", "L_XY", "L_YY")


def invert_DB(model, D, B, guess=None, *, return_info=False, max_iter=MAX_ITER, rtol=RTOL):
    """Solve ``to_DH(model, E, B).D == D`` for E.

    Damped Newton: each step is halved (at most ``MAX_HALVINGS`` times) until
    the iterate is inside the model domain and the max-norm residual drops.
    Converged when ``|D(E) - D|_inf <= rtol * max(1, |D|_inf)`` per point.
    The guess defaults to D (exact for Maxwell); guess points outside the
    model domain are replaced by E = 0.
    """
    D, B = np.broadcast_arrays(np.asarray(D, dtype=float), np.asarray(B, dtype=float))
    shape = D.shape
    Df = D.reshape(-1, 3)
    Bf = B.reshape(-1, 3)
    n = Df.shape[0]
    if guess is None:
        E = Df.copy()
    else:
        E = np.broadcast_to(np.asarray(guess, dtype=float), shape).reshape(-1, 3).copy()

    X, Y = forms4d.invariants(E, Bf)
    outside = ~(model.margin(X, Y) > 0)
    if np.any(outside):
        E[outside] = 0.0
        X, Y = forms4d.invariants(E, Bf)
        if not np.all(model.margin(X, Y) > 0):
            raise DomainError("E = 0 lies outside the model domain")

    tol = rtol * np.maximum(1.0, _maxabs(Df))
    d = model._eval(X, Y)
    r = 2.0 * (d.L_X[:, None] * E + d.L_Y[:, None] * Bf) - Df
    norm = _maxabs(r)
    iterations = np.zeros(n, dtype=int)
    halvings = np.zeros(n, dtype=int)
    history = [norm] if return_info else None
    active = np.flatnonzero(norm > tol)
    da = {k: v[active] for k, v in zip(_FIELDS, d.as_tuple())}

    for _ in range(max_iter):
        if active.size == 0:
            break
        Ea, Ba, ra = E[active], Bf[active], r[active]
        J = _jacobian(_Derivs(**da), Ea, Ba)
        step = -_solve3(J, ra)
        frac, r_new, dnew, accepted = line_search(model, Ea, Ba, Df[active], step, ra)
        if not np.all(accepted):
            stuck = active[~accepted]
            # a point already at rounding level cannot decrease further
            near = _maxabs(r[stuck]) <= 64 * tol[stuck]
            if not np.all(near):
                raise NoConvergence(
                    f"line search failed at {np.count_nonzero(~near)} point(s)",
                    cells=stuck[~near],
                )
        E[active] = Ea + frac[:, None] * step
        r[active] = np.where(accepted[:, None], r_new, ra)
        iterations[active] += 1
        if return_info:
            halvings[active] += np.where(accepted, np.round(-np.log2(np.where(frac > 0, frac, 1.0))), 0).astype(int)
            norm = _maxabs(r)
            history.append(norm)
            norm_a = norm[active]
        else:
            norm_a = _maxabs(r[active])
        keep = (norm_a > tol[active]) & accepted
        active = active[keep]
        da = {k: v[keep] for k, v in dnew.items()}

    if active.size:
        raise NoConvergence(
            f"no convergence after {max_iter} iterations at {active.size} point(s)",
            cells=active,
        )
    E = E.reshape(shape)
    if return_info:
        return E, NewtonInfo(iterations.reshape(shape[:-1]), halvings.reshape(shape[:-1]), history)
    return E


@dataclass
class _Derivs:
    L: np.ndarray
    L_X: np.ndarray
    L_Y: np.ndarray
    L_XX: np.ndarray
    L_XY: np.ndarray
    L_YY: np.ndarray
