"""Time-domain evolution of fields that depend on (t, z) only.

The evolved variables are D_x, D_y, B_x, B_y on a periodic z-grid:

    dDx/dt = -dHy/dz    dDy/dt = dHx/dz
    dBx/dt =  dEy/dz    dBy/dt = -dEx/dz

D_z and B_z are constants of this reduction.  E comes from (D, B) by Newton
inversion in every cell and H from (E, B) in closed form.

Two schemes:

``leapfrog``
    D at cell centres, B at cell faces (face i sits between centres i and
    i+1), advanced by a kick-drift-kick splitting.  For Maxwell theory this is
    the standard Yee scheme and is exactly time-reversible.  For nonlinear
    theories the cross-coupling of E to B and of H to D is evaluated with
    second-order predictors, two inversions per step.
``lax-friedrichs``
    Everything at cell centres, first order, diffusive.  Cross-check only.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constitutive import energy_density, invert_DB, to_DH
from .errors import CFLViolation, NoConvergence
from .lagrangian_models import Maxwell

__all__ = [
    "Grid1D",
    "GridState1D",
    "Snapshot",
    "SolverConfig",
    "init",
    "run",
    "step",
    "write_snapshots_csv",
]

LEAPFROG = "leapfrog"
LAX_FRIEDRICHS = "lax-friedrichs"
SCHEMES = (LEAPFROG, LAX_FRIEDRICHS)


@dataclass(frozen=True)
class Grid1D:
    N: int
    L_z: float

    def __post_init__(self):
        if self.N < 16:
            raise ValueError("need at least 16 cells")
        if not self.L_z > 0:
            raise ValueError("domain length must be positive")

    @property
    def dz(self):
        return self.L_z / self.N

    @property
    def centers(self):
        return (np.arange(self.N) + 0.5) * self.dz

    @property
    def faces(self):
        return (np.arange(self.N) + 1.0) * self.dz


@dataclass
class GridState1D:
    grid: Grid1D
    model: object
    scheme: str
    Dx: np.ndarray
    Dy: np.ndarray
    Bx: np.ndarray
    By: np.ndarray
    Dz: float
    Bz: float
    t: float = 0.0
    E: np.ndarray = None  # (N, 3) at centres, consistent with the current D, B
    newton_iterations: int = 0
    inversions: int = 0

    def copy(self):
        return replace(
            self,
            Dx=self.Dx.copy(), Dy=self.Dy.copy(), Bx=self.Bx.copy(), By=self.By.copy(),
            E=None if self.E is None else self.E.copy(),
        )

    @property
    def staggered(self):
        return self.scheme == LEAPFROG

    def D_centers(self):
        return _stack(self.Dx, self.Dy, self.Dz)

    def B_centers(self):
        if self.staggered:
            return _stack(_to_centers(self.Bx), _to_centers(self.By), self.Bz)
        return _stack(self.Bx, self.By, self.Bz)

    def energy_density(self):
        return energy_density(self.model, self.E, self.B_centers())

    def energy(self):
        return float(np.sum(self.energy_density()) * self.grid.dz)


def _stack(a, b, c):
    return np.stack([a, b, np.full_like(a, c)], axis=-1)


def _to_centers(f):
    # centre i lies between faces i-1 and i
    return 0.5 * (f + np.roll(f, 1))


def _to_faces(c):
    return 0.5 * (c + np.roll(c, -1))


def _diff_to_faces(c, dz):
    return (np.roll(c, -1) - c) / dz


def _diff_to_centers(f, dz):
    return (f - np.roll(f, 1)) / dz


def _invert(state, D, B, guess, where):
    if isinstance(state.model, Maxwell):
        return D.copy()
    try:
        E, info = invert_DB(state.model, D, B, guess, return_info=True)
    except NoConvergence as exc:
        raise NoConvergence(
            f"constitutive inversion failed at t={state.t:.6g} ({where} cells {list(exc.cells)[:10]})",
            cells=exc.cells,
        ) from exc
    state.newton_iterations += int(np.sum(info.iterations))
    state.inversions += D.shape[0]
    return E


def _H(model, E, B):
    return to_DH(model, E, B).H


def init(grid, model, B0, pulse=None, polarization=(1.0, 0.0, 0.0), *, v=None, chi=0.0,
         scheme=LEAPFROG):
    """Initial state carrying ``pulse`` on the constant background ``B0``.

    With ``v`` given the pulse is the travelling-wave ansatz moving along +z:
    ``E = -v P p + chi P z_hat`` and ``B = B0 - P (z_hat x p)`` for
    polarisation p.  Without ``v`` it is a cold start ``E = P p, B = B0``.
    D_z is fixed to its background value, which is what Gauss's law demands
    of a z-only field.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    B0 = np.asarray(B0, dtype=float)
    p = np.asarray(polarization, dtype=float)
    if abs(p[2]) > 0 or not math.isclose(np.linalg.norm(p), 1.0):
        raise ValueError("polarisation must be a unit vector transverse to z")
    zc = grid.centers
    zb = grid.faces if scheme == LEAPFROG else zc

    def fields(z):
        P = np.zeros_like(z) if pulse is None else pulse(z)
        if v is None:
            E = P[:, None] * p
            B = np.broadcast_to(B0, E.shape).copy()
        else:
            E = -v * P[:, None] * p
            E[:, 2] += chi * P
            B = B0 - P[:, None] * np.cross([0.0, 0.0, 1.0], p)
        return E, B

    Ec, Bc = fields(zc)
    _, Bf = fields(zb)
    ex = to_DH(model, Ec, Bc)
    Dz = float(to_DH(model, np.zeros(3), B0).D[2])
    state = GridState1D(
        grid=grid, model=model, scheme=scheme,
        Dx=ex.D[:, 0].copy(), Dy=ex.D[:, 1].copy(),
        Bx=Bf[:, 0].copy(), By=Bf[:, 1].copy(),
        Dz=Dz, Bz=float(B0[2]),
    )
    state.E = _invert(state, state.D_centers(), state.B_centers(), Ec, "centre")
    return state


def step(state: GridState1D, dt: float) -> GridState1D:
    """Advance by ``dt`` (negative values step backwards)."""
    dz = state.grid.dz
    if abs(dt) > dz * (1.0 + 1e-12):
        raise CFLViolation(f"|dt|/dz = {abs(dt) / dz:.4f} exceeds 1")
    if dt == 0.0:
        return state.copy()
    if state.staggered:
        return _step_leapfrog(state, dt)
    return _step_lax_friedrichs(state, dt)


def _step_leapfrog(state, dt):
    s = state.copy()
    dz = s.grid.dz
    model = s.model
    nonlinear = not isinstance(model, Maxwell)
    D0 = s.D_centers()
    E0 = s.E

    # half kick of B with E^n
    Bx_h = s.Bx + 0.5 * dt * _diff_to_faces(E0[:, 1], dz)
    By_h = s.By - 0.5 * dt * _diff_to_faces(E0[:, 0], dz)
    Bf_h = _stack(Bx_h, By_h, s.Bz)
    Bc_h = _stack(_to_centers(Bx_h), _to_centers(By_h), s.Bz)

    # H at faces and time n+1/2
    if nonlinear:
        Bf0 = _stack(s.Bx, s.By, s.Bz)
        H0 = _H(model, _faces3(E0), Bf0)
        D_half = D0.copy()
        D_half[:, 0] -= 0.5 * dt * _diff_to_centers(H0[:, 1], dz)
        D_half[:, 1] += 0.5 * dt * _diff_to_centers(H0[:, 0], dz)
        E_half = _invert(s, D_half, Bc_h, E0, "centre")
        H = _H(model, _faces3(E_half), Bf_h)
    else:
        H = Bf_h

    # drift of D
    Dx = s.Dx - dt * _diff_to_centers(H[:, 1], dz)
    Dy = s.Dy + dt * _diff_to_centers(H[:, 0], dz)
    D1 = _stack(Dx, Dy, s.Dz)

    # second half kick with E^{n+1}; B^{n+1} at centres is extrapolated
    if nonlinear:
        Bc0 = s.B_centers()
        E1 = _invert(s, D1, 2.0 * Bc_h - Bc0, E0, "centre")
    else:
        E1 = D1.copy()
    s.Bx = Bx_h + 0.5 * dt * _diff_to_faces(E1[:, 1], dz)
    s.By = By_h - 0.5 * dt * _diff_to_faces(E1[:, 0], dz)
    s.Dx, s.Dy = Dx, Dy
    s.E = E1
    s.t = state.t + dt
    return s


def _faces3(Ec):
    return np.stack([_to_faces(Ec[:, 0]), _to_faces(Ec[:, 1]), _to_faces(Ec[:, 2])], axis=-1)


def _step_lax_friedrichs(state, dt):
    s = state.copy()
    dz = s.grid.dz
    E = s.E
    H = _H(s.model, E, s.B_centers())
    r = dt / (2.0 * dz)

    def update(q, f):
        return 0.5 * (np.roll(q, -1) + np.roll(q, 1)) - r * (np.roll(f, -1) - np.roll(f, 1))

    s.Dx = update(s.Dx, H[:, 1])
    s.Dy = update(s.Dy, -H[:, 0])
    s.Bx = update(s.Bx, -E[:, 1])
    s.By = update(s.By, E[:, 0])
    s.E = _invert(s, s.D_centers(), s.B_centers(), E, "centre")
    s.t = state.t + dt
    return s


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.5
    t_end: float = 1.0
    record_every: float = 0.0  # time between snapshots; 0 records only the end points
    scheme: str = LEAPFROG

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("CFL number must lie in (0, 1)")
        if self.t_end < 0:
            raise ValueError("end time must be non-negative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class Snapshot:
    t: float
    Dx: np.ndarray
    Dy: np.ndarray
    Bx: np.ndarray
    By: np.ndarray
    E: np.ndarray
    B_centers: np.ndarray
    energy_density: np.ndarray
    energy: float
    max_E: float


def snapshot(state: GridState1D) -> Snapshot:
    u = state.energy_density()
    return Snapshot(
        t=state.t,
        Dx=state.Dx.copy(), Dy=state.Dy.copy(), Bx=state.Bx.copy(), By=state.By.copy(),
        E=state.E.copy(), B_centers=state.B_centers(),
        energy_density=u,
        energy=float(np.sum(u) * state.grid.dz),
        max_E=float(np.max(np.linalg.norm(state.E, axis=-1))),
    )


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0
    final: GridState1D = None

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    @property
    def energies(self):
        return np.array([s.energy for s in self.snapshots])


def time_step(grid, cfl, t_end):
    """Largest step not above ``cfl * dz`` that divides ``t_end`` evenly."""
    dt = cfl * grid.dz
    if t_end <= 0:
        return dt, 0
    n = max(1, math.ceil(t_end / dt - 1e-9))
    return t_end / n, n


def run(state: GridState1D, config: SolverConfig, stop=None, keep=True) -> Trajectory:
    """Step to ``config.t_end`` recording snapshots at the configured cadence.

    ``stop(snapshot)`` is called on every recorded snapshot after the initial
    one and ends the run early when it returns True.  With ``keep=False`` only
    the first and last snapshots are retained.
    """
    if config.scheme != state.scheme:
        raise ValueError("state was initialised for a different scheme")
    dt, n = time_step(state.grid, config.cfl, config.t_end)
    every = n if config.record_every <= 0 else max(1, round(config.record_every / dt))
    traj = Trajectory(dt=dt)
    traj.snapshots.append(snapshot(state))
    for k in range(1, n + 1):
        state = step(state, dt)
        traj.steps = k
        if k % every == 0 or k == n:
            snap = snapshot(state)
            if keep or len(traj.snapshots) < 2:
                traj.snapshots.append(snap)
            else:
                traj.snapshots[-1] = snap
            if stop is not None and stop(snap):
                break
    traj.final = state
    return traj


def write_snapshots_csv(path, grid: Grid1D, snapshots):
    """One row per (t, z) with fields at cell centres."""
    z = grid.centers
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "z", "D_x", "D_y", "B_x", "B_y", "E_x", "E_y", "E_z", "energy_density"])
        for s in snapshots:
            for i in range(grid.N):
                w.writerow([
                    repr(s.t), repr(float(z[i])), repr(float(s.Dx[i])), repr(float(s.Dy[i])),
                    repr(float(s.B_centers[i, 0])), repr(float(s.B_centers[i, 1])),
                    repr(float(s.E[i, 0])), repr(float(s.E[i, 1])), repr(float(s.E[i, 2])),
                    repr(float(s.energy_density[i])),
                ])
