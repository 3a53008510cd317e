"""Conic programs and a first-order ADMM solver.

Problems have the form::

    minimize    1/2 x'Px + q'x
    subject to  A x + s = b,   s in K = K_1 x ... x K_p

with ``K_i`` one of: the zero cone (equalities), the nonnegative orthant, a
second-order cone ``{(t, v): ||v|| <= t}``, the cone of Hermitian PSD
matrices in ``hvec`` coordinates, or the real symmetric PSD cone in ``svec``
coordinates.  The iteration is the OSQP splitting with the box projection
replaced by cone projections; the linear step uses a Cholesky factor of
``P + sigma I + A' diag(rho) A`` that is cached until ``rho`` changes.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import linalg as sla

from .linalg import SQRT2, hmat, hvec, upper_diagonalwise

ConeKind = Literal["zero", "nonneg", "soc", "hpsd", "psd"]


@dataclass(frozen=True)
class Cone:
    kind: ConeKind
    dim: int
    size: int = 0  # matrix order for the PSD kinds

    @classmethod
    def hpsd(cls, n: int) -> "Cone":
        return cls("hpsd", n * n, n)

    @classmethod
    def psd(cls, n: int) -> "Cone":
        return cls("psd", n * (n + 1) // 2, n)


def svec(X: np.ndarray) -> np.ndarray:
    """Isometric coordinates ``[diag, sqrt(2) upper]`` of a real symmetric matrix."""
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    r, c = upper_diagonalwise(n)
    return np.concatenate([np.diagonal(X, axis1=-2, axis2=-1), SQRT2 * X[..., r, c]], axis=-1)


def smat(v: np.ndarray, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    r, c = upper_diagonalwise(n)
    X = np.zeros(v.shape[:-1] + (n, n))
    idx = np.arange(n)
    X[..., idx, idx] = v[..., :n]
    X[..., r, c] = v[..., n:] / SQRT2
    X[..., c, r] = v[..., n:] / SQRT2
    return X


def project_psd(X: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix (real symmetric or Hermitian, stacked allowed)."""
    X = np.asarray(X)
    try:
        w, V = np.linalg.eigh(X)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError("eigendecomposition failed in PSD projection") from exc
    w = np.maximum(w, 0.0)
    return (V * w[..., None, :]) @ np.swapaxes(V.conj(), -1, -2)


def project_soc(x, t: float):
    """Euclidean projection of ``(x, t)`` onto ``{||x|| <= t}``; returns ``(x', t')``."""
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    if nx <= t:
        return x.copy(), float(t)
    if nx <= -t:
        return np.zeros_like(x), 0.0
    a = (t + nx) / 2
    return a * x / nx, float(a)


def _project_soc_inplace(v: np.ndarray):
    t = v[0]
    nx = np.linalg.norm(v[1:])
    if nx <= t:
        return
    if nx <= -t:
        v[:] = 0.0
        return
    a = (t + nx) / 2
    v[0] = a
    v[1:] *= a / nx


@dataclass
class ConicProblem:
    P: np.ndarray | None
    q: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: list[Cone]

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        n = self.q.size
        if self.A.ndim != 2 or self.A.shape[1] != n:
            raise ValueError(f"A must have {n} columns, got shape {self.A.shape}")
        if self.b.shape != (self.A.shape[0],):
            raise ValueError("b must have one entry per row of A")
        if self.P is not None:
            self.P = np.asarray(self.P, dtype=float)
            if self.P.shape != (n, n):
                raise ValueError(f"P must be {n}x{n}")
        if sum(c.dim for c in self.cones) != self.A.shape[0]:
            raise ValueError("cone dimensions do not add up to the number of constraint rows")

    @property
    def num_vars(self) -> int:
        return self.q.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def cone_slices(self) -> list[slice]:
        out, start = [], 0
        for c in self.cones:
            out.append(slice(start, start + c.dim))
            start += c.dim
        return out


class ConicBuilder:
    """Accumulates ``F x + f0 in K`` constraints; each ``add`` returns the row slice."""

    def __init__(self, num_vars: int):
        self.n = num_vars
        self._F: list[np.ndarray] = []
        self._f0: list[np.ndarray] = []
        self.cones: list[Cone] = []
        self.rows = 0

    def _add(self, cone: Cone, F, f0) -> slice:
        F = np.atleast_2d(np.asarray(F, dtype=float))
        f0 = np.broadcast_to(np.asarray(f0, dtype=float), (F.shape[0],)).copy()
        if F.shape != (cone.dim, self.n):
            raise ValueError(f"{cone.kind} block needs shape {(cone.dim, self.n)}, got {F.shape}")
        self._F.append(F)
        self._f0.append(f0)
        self.cones.append(cone)
        sl = slice(self.rows, self.rows + cone.dim)
        self.rows += cone.dim
        return sl

    def add_equality(self, F, f0) -> slice:
        """``F x + f0 == 0``."""
        F = np.atleast_2d(F)
        return self._add(Cone("zero", F.shape[0]), F, f0)

    def add_nonneg(self, F, f0) -> slice:
        """``F x + f0 >= 0``."""
        F = np.atleast_2d(F)
        return self._add(Cone("nonneg", F.shape[0]), F, f0)

    def add_soc(self, G, g, f, f0) -> slice:
        """``||G x + g|| <= f x + f0``."""
        G = np.asarray(G, dtype=float).reshape(-1, self.n)
        F = np.vstack([np.asarray(f, dtype=float).reshape(1, self.n), G])
        return self._add(Cone("soc", F.shape[0]), F, np.concatenate([[f0], np.asarray(g, dtype=float).ravel()]))

    def add_hpsd(self, F, f0, n: int) -> slice:
        """``hmat(F x + f0)`` Hermitian PSD of order ``n``."""
        return self._add(Cone.hpsd(n), F, f0)

    def add_psd(self, F, f0, n: int) -> slice:
        """``smat(F x + f0)`` real symmetric PSD of order ``n``."""
        return self._add(Cone.psd(n), F, f0)

    def build(self, q, P=None) -> ConicProblem:
        if self._F:
            A = -np.vstack(self._F)
            b = np.concatenate(self._f0)
        else:
            A = np.zeros((0, self.n))
            b = np.zeros(0)
        return ConicProblem(P=P, q=np.asarray(q, dtype=float), A=A, b=b, cones=list(self.cones))


@dataclass(frozen=True)
class SolverSettings:
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iters: int = 50_000
    rho: float = 1.0
    sigma: float = 1e-6
    relax: float = 1.6
    adaptive_rho: bool = True
    adapt_every: int = 50
    scaling_iters: int = 0  # Ruiz passes; the design problems are already well scaled
    check_every: int = 10
    eps_infeasible: float = 1e-5
    stall_iters: int = 5_000
    stall_level: float = 1e-3
    time_limit: float | None = None
    trace_path: str | None = None


@dataclass
class SolveReport:
    status: Literal["optimal", "infeasible_suspected", "max_iterations"]
    objective: float
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    primal_residual: float
    dual_residual: float
    iterations: int
    solve_time: float
    z: np.ndarray = field(repr=False, default=None)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _ConeProjector:
    """Projection onto ``K`` and its dual for a fixed cone list; PSD blocks are batched."""

    def __init__(self, cones: list[Cone]):
        self.zero, self.nonneg, self.soc = [], [], []
        groups: dict[tuple[str, int], list[int]] = {}
        start = 0
        for c in cones:
            sl = slice(start, start + c.dim)
            if c.kind == "zero":
                self.zero.append(sl)
            elif c.kind == "nonneg":
                self.nonneg.append(sl)
            elif c.kind == "soc":
                self.soc.append(sl)
            elif c.kind in ("hpsd", "psd"):
                groups.setdefault((c.kind, c.size), []).append(start)
            else:
                raise ValueError(f"unknown cone kind {c.kind!r}")
            start += c.dim
        self.m = start
        self.zero_idx = np.concatenate([np.arange(s.start, s.stop) for s in self.zero]) if self.zero else np.zeros(0, int)
        self.nonneg_idx = np.concatenate([np.arange(s.start, s.stop) for s in self.nonneg]) if self.nonneg else np.zeros(0, int)
        self.psd_groups = []
        for (kind, n), starts in groups.items():
            dim = n * n if kind == "hpsd" else n * (n + 1) // 2
            idx = np.array([np.arange(s0, s0 + dim) for s0 in starts])
            self.psd_groups.append((kind, n, idx))

    def project(self, v: np.ndarray, dual: bool = False) -> np.ndarray:
        out = v.copy()
        if self.zero_idx.size and not dual:
            out[self.zero_idx] = 0.0
        if self.nonneg_idx.size:
            out[self.nonneg_idx] = np.maximum(out[self.nonneg_idx], 0.0)
        for sl in self.soc:
            seg = out[sl]
            _project_soc_inplace(seg)
        for kind, n, idx in self.psd_groups:
            block = out[idx]
            if kind == "hpsd":
                out[idx] = hvec(project_psd(hmat(block, n)))
            else:
                out[idx] = svec(project_psd(smat(block, n)))
        return out

    def block_groups(self):
        """Row groups that must share one scaling factor (non-separable cones)."""
        groups = list(self.soc)
        for _, _, idx in self.psd_groups:
            groups.extend(idx)
        return groups


def _ruiz(P, A, cones_proj: _ConeProjector, iters: int):
    n, m = A.shape[1], A.shape[0]
    D = np.ones(n)
    E = np.ones(m)
    Ps = P.copy() if P is not None else np.zeros((n, n))
    As = A.copy()
    groups = cones_proj.block_groups()
    for _ in range(iters):
        col = np.maximum(np.abs(Ps).max(axis=0), np.abs(As).max(axis=0) if m else 0.0)
        row = np.abs(As).max(axis=1) if m else np.zeros(0)
        col = np.where(col < 1e-4, 1.0, col)
        row = np.where(row < 1e-4, 1.0, row)
        d = 1.0 / np.sqrt(np.minimum(col, 1e4))
        e = 1.0 / np.sqrt(np.minimum(row, 1e4))
        for g in groups:
            e[g] = np.mean(e[g])
        Ps = (d[:, None] * Ps) * d[None, :]
        As = (e[:, None] * As) * d[None, :]
        D *= d
        E *= e
    return D, E, Ps, As


class Workspace:
    """Scaled problem data plus the cached factorisation.

    ``q`` and ``b`` can be swapped between solves (same ``P``, ``A`` and
    cones) via :meth:`solve`; the factorisation and scaling are reused.
    """

    def __init__(self, problem: ConicProblem, settings: SolverSettings | None = None):
        self.problem = problem
        self.settings = settings or SolverSettings()
        self.proj = _ConeProjector(problem.cones)
        P = problem.P
        self.D, self.E, self.Ps, self.As = _ruiz(P, problem.A, self.proj, self.settings.scaling_iters)
        self.has_P = P is not None and np.any(P)
        self.n, self.m = problem.num_vars, problem.num_rows
        self._factor = None
        self._rho_vec = None
        self.rho = self.settings.rho
        self.factorizations = 0

    def _cost_scale(self, q):
        qs = self.D * q
        base = np.abs(self.Ps).max(axis=0).mean() if self.has_P else 0.0
        c = 1.0 / max(base, np.abs(qs).max() if qs.size else 0.0, 1e-4)
        return float(min(c, 1e4))

    def _rho_vector(self, rho):
        r = np.full(self.m, rho)
        if self.proj.zero_idx.size:
            r[self.proj.zero_idx] = 1e3 * rho
        return r

    def _factorize(self, rho, c):
        s = self.settings
        self._rho_vec = self._rho_vector(rho)
        K = c * self.Ps + s.sigma * np.eye(self.n) + self.As.T @ (self._rho_vec[:, None] * self.As)
        self._factor = sla.cho_factor(K, lower=True, check_finite=False)
        self._factored_c = c
        self.factorizations += 1

    def solve(self, q=None, b=None, warm: SolveReport | None = None) -> SolveReport:
        s = self.settings
        prob = self.problem
        q = prob.q if q is None else np.asarray(q, dtype=float)
        b = prob.b if b is None else np.asarray(b, dtype=float)
        D, E = self.D, self.E
        c = self._cost_scale(q)
        qs = c * D * q
        bs = E * b
        Ps, As = self.Ps, self.As
        if self._factor is None or self._factored_c != c:
            self._factorize(self.rho, c)
        rho_vec = self._rho_vec
        n, m = self.n, self.m
        relax = s.relax
        proj = self.proj

        if warm is not None and warm.x.shape == (n,) and warm.z is not None:
            x = warm.x / D
            z = E * warm.z
            y = warm.y / E * c
        else:
            x = np.zeros(n)
            z = np.zeros(m)
            y = np.zeros(m)

        def project_C(v):
            return bs - proj.project(bs - v)

        Dinv = 1.0 / D
        Einv = 1.0 / E
        t0 = time.perf_counter()
        status = "max_iterations"
        it = 0
        rp = rd = np.inf
        best = np.inf
        best_it = 0
        xnorm_at_best = 0.0
        y_prev = y.copy()
        trace = [] if s.trace_path else None
        next_adapt = s.adapt_every
        adapt_gap = s.adapt_every
        for it in range(1, s.max_iters + 1):
            rhs = s.sigma * x - qs + As.T @ (rho_vec * z - y)
            xt = sla.cho_solve(self._factor, rhs, check_finite=False)
            zt = As @ xt
            x = relax * xt + (1 - relax) * x
            zr = relax * zt + (1 - relax) * z
            z_new = project_C(zr + y / rho_vec)
            y_prev = y
            y = y + rho_vec * (zr - z_new)
            z = z_new

            if it % s.check_every and it != s.max_iters:
                continue
            # unscaled residuals
            Ax = Einv * (As @ x)
            zu = Einv * z
            xu = D * x
            yu = E * y / c
            Px = Dinv * (Ps @ x) if self.has_P else np.zeros(n)
            Aty = Dinv * (As.T @ y) / c
            rp = np.abs(Ax - zu).max() if m else 0.0
            rd = np.abs(Px + q + Aty).max() if n else 0.0
            eps_p = s.tol_primal * (1 + max(np.abs(Ax).max() if m else 0, np.abs(zu).max() if m else 0))
            eps_d = s.tol_dual * (1 + max(np.abs(Px).max(), np.abs(Aty).max(), np.abs(q).max() if n else 0))
            if trace is not None:
                trace.append((it, rp, rd, self._objective(xu, q)))
            if rp <= eps_p and rd <= eps_d:
                status = "optimal"
                break
            if m and self._primal_infeasible(y - y_prev, b, c):
                status = "infeasible_suspected"
                break
            scaled = max(rp / eps_p, rd / eps_d) * s.tol_primal
            if scaled < 0.5 * best:
                best, best_it, xnorm_at_best = scaled, it, np.linalg.norm(xu)
            elif it - best_it > s.stall_iters and best > s.stall_level and np.linalg.norm(xu) > 2 * xnorm_at_best:
                status = "infeasible_suspected"
                break
            if s.time_limit is not None and time.perf_counter() - t0 > s.time_limit:
                break
            if s.adaptive_rho and it >= next_adapt:
                # scaled-space balance, as in OSQP
                Axs = As @ x
                cPx = c * (Ps @ x) if self.has_P else np.zeros(n)
                Atys = As.T @ y
                pr = np.abs(Axs - z).max() / (1e-12 + max(np.abs(Axs).max(), np.abs(z).max()))
                dr = np.abs(cPx + qs + Atys).max() / (1e-12 + max(np.abs(cPx).max(), np.abs(Atys).max(), np.abs(qs).max()))
                new_rho = float(np.clip(self.rho * np.sqrt(pr / max(dr, 1e-12)), 1e-6, 1e6))
                if new_rho > 5 * self.rho or new_rho < 0.2 * self.rho:
                    self.rho = new_rho
                    self._factorize(self.rho, c)
                    rho_vec = self._rho_vec
                    # back off so rho cannot oscillate between two levels
                    adapt_gap *= 2
                next_adapt = it + adapt_gap

        xu = D * x
        zu = Einv * z
        yu = E * y / c
        su = b - zu
        if trace is not None:
            _write_trace(s.trace_path, trace)
        return SolveReport(status=status, objective=self._objective(xu, q), x=xu, s=su, y=yu,
                           primal_residual=float(rp), dual_residual=float(rd), iterations=it,
                           solve_time=time.perf_counter() - t0, z=zu)

    def _objective(self, x, q):
        val = float(q @ x)
        if self.has_P:
            val += 0.5 * float(x @ self.problem.P @ x)
        return val

    def _primal_infeasible(self, dy_scaled, b, c) -> bool:
        dy = self.E * dy_scaled / c
        nrm = np.abs(dy).max()
        if nrm < 1e-12:
            return False
        eps = self.settings.eps_infeasible
        Aty = self.problem.A.T @ dy
        if np.abs(Aty).max() > eps * nrm:
            return False
        if b @ dy > -eps * nrm:
            return False
        dual_gap = np.abs(dy - self.proj.project(dy, dual=True)).max()
        return dual_gap <= eps * nrm * 10


def _write_trace(path, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "primal_residual", "dual_residual", "objective"])
        w.writerows(rows)


def solve(problem: ConicProblem, settings: SolverSettings | None = None, warm: SolveReport | None = None) -> SolveReport:
    """One-shot ADMM solve; see :class:`Workspace` for repeated solves."""
    return Workspace(problem, settings).solve(warm=warm)
