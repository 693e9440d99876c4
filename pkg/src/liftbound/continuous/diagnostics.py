"""Regularity diagnostics and convergence studies for grid chains.

``theta2`` and ``theta3`` run over the jump sets as realized on the grid
(one per lattice point and rule, which is the whole family once offsets
are reduced modulo the lattice).  ``theta1`` and ``theta4`` are maxima over
sampled families and therefore lower bounds on the true suprema.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..chain import NotMixedError, mixing_time
from ..conductance import conductance_sweep
from ..decomposition import CertificationError, certify_beta_gamma, pi_star
from .discretize import DiscretizationError, GridChain, build_grid_chain, jump_memberships
from .kernel import _GL_NODES, _GL_WEIGHTS, ContinuousKernel, JumpRule, KernelError, _merge

QUANTILE_POINTS = 2048
CDF_POINTS = 2048


class UnsupportedDiagnosticError(KernelError):
    pass


def _require_1d(kernel: ContinuousKernel, what: str) -> None:
    if kernel.d != 1:
        raise UnsupportedDiagnosticError(f"{what} is implemented for d = 1 only")


def _rule_intervals(rule: JumpRule):
    return _merge([r[0] for r in rule.rectangles])


def _union_mass(kernel: ContinuousKernel, rule: JumpRule, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    out = np.zeros(xs.shape)
    for lo, hi in _rule_intervals(rule):
        out = out + kernel.density.axis_mass(0, xs + lo, xs + hi)
    return out


def _relative_offsets(gc: GridChain) -> np.ndarray:
    """Offsets ``y - x`` in coordinates, torus-wrapped, shape ``(n, n)``."""
    idx = gc.grid.index[:, 0]
    diff = idx[None, :] - idx[:, None]
    if gc.grid.domain.kind == "torus":
        N = gc.grid.N
        diff = (diff + N // 2) % N - N // 2
    return diff / gc.grid.N


def theta2(gc: GridChain) -> float:
    """``max |pi_N(U) - pi(U)|`` over grid jump sets."""
    kernel = gc.kernel
    pts = gc.grid.points
    worst = 0.0
    for rule, mem in zip(kernel.jumps, jump_memberships(kernel, gc.grid)):
        if rule.weight == 0:
            continue
        disc = mem.astype(float) @ gc.pi_N
        if kernel.d == 1:
            cont = _union_mass(kernel, rule, pts[:, 0])
        else:
            cont = np.array([kernel.jump_mass(p, rule) for p in pts])
        worst = max(worst, float(np.max(np.abs(disc - cont))))
    return worst


def _prokhorov_coupling(d_sorted: np.ndarray) -> float:
    """Smallest eps with P[|X - Y| > eps] <= eps for the sampled coupling."""
    M = d_sorted.size
    k = np.arange(M + 1)
    dk = np.concatenate([[0.0], d_sorted])
    return float(np.min(np.maximum(dk, 1.0 - k / M)))


def theta3(gc: GridChain, points: int = QUANTILE_POINTS) -> float:
    """Prokhorov distance between restricted grid and continuous measures.

    Uses the quantile coupling, so each value bounds the distance from
    above; the maximum runs over every grid jump set.
    """
    kernel = gc.kernel
    _require_1d(kernel, "theta3")
    u = (np.arange(points) + 0.5) / points
    off = _relative_offsets(gc)
    pts = gc.grid.points[:, 0]
    worst = 0.0
    for rule, mem in zip(kernel.jumps, jump_memberships(kernel, gc.grid)):
        if rule.weight == 0:
            continue
        ivals = _rule_intervals(rule)
        lengths = np.array([hi - lo for lo, hi in ivals])
        # offset mesh for the continuous CDF, distributed over the union
        per = np.maximum(2, np.round(CDF_POINTS * lengths / lengths.sum()).astype(int))
        mesh = np.concatenate([np.linspace(lo, hi, p) for (lo, hi), p in zip(ivals, per)])
        inner = np.concatenate([np.r_[np.ones(p - 1, dtype=bool), False] for p in per])[:-1]
        for x in range(gc.grid.n):
            ys = np.flatnonzero(mem[x])
            t = off[x, ys]
            order = np.argsort(t, kind="stable")
            t, w = t[order], gc.pi_N[ys][order]
            w = w / w.sum()
            disc_q = t[np.minimum(np.searchsorted(np.cumsum(w), u, side="left"), t.size - 1)]
            pieces = kernel.density.axis_mass(0, pts[x] + mesh[:-1], pts[x] + mesh[1:])
            # segments bridging two merged intervals carry no mass
            pieces = np.where(inner, pieces, 0.0)
            cdf = np.concatenate([[0.0], np.cumsum(pieces)])
            cdf /= cdf[-1]
            cont_q = np.interp(u, cdf, mesh)
            d = np.sort(np.abs(disc_q - cont_q))
            worst = max(worst, _prokhorov_coupling(d))
    return worst


def theta1(gc: GridChain, eps: float, m: int, samples: int, rng: np.random.Generator) -> float:
    """Sampled ``max |pi_N(S) - pi(S)|`` over unions of ``<= m`` arcs of length ``>= eps``."""
    kernel = gc.kernel
    _require_1d(kernel, "theta1")
    a, b = kernel.domain.bounds[0]
    span = b - a
    pts = gc.grid.points[:, 0]
    worst = 0.0
    for _ in range(samples):
        k = int(rng.integers(1, m + 1))
        starts = rng.uniform(a, b, size=k)
        lengths = eps + (span - eps) * rng.random(size=k)
        if kernel.domain.kind == "box":
            ends = np.minimum(starts + lengths, b)
            starts = np.maximum(np.minimum(starts, ends - eps), a)
        else:
            ends = starts + lengths
        ivals = _merge(list(zip(starts, ends)))
        if kernel.domain.kind == "torus":
            member = np.zeros(pts.size, dtype=bool)
            for lo, hi in ivals:
                member |= np.mod(pts - lo, 1.0) <= (hi - lo) + 1e-12
            cont = _torus_union_mass(kernel, ivals)
        else:
            member = np.zeros(pts.size, dtype=bool)
            for lo, hi in ivals:
                member |= (pts >= lo - 1e-12) & (pts <= hi + 1e-12)
            cont = sum(float(kernel.density.axis_mass(0, lo, hi)) for lo, hi in ivals)
        disc = float(gc.pi_N[member].sum())
        worst = max(worst, abs(disc - cont))
    return worst


def _torus_union_mass(kernel: ContinuousKernel, ivals) -> float:
    """Mass of a union of arcs on the unit torus."""
    pieces = []
    for lo, hi in ivals:
        if hi - lo >= 1.0:
            return float(kernel.density.axis_mass(0, 0.0, 1.0))
        s, e = lo % 1.0, lo % 1.0 + (hi - lo)
        if e > 1.0:
            pieces += [(s, 1.0), (0.0, e - 1.0)]
        else:
            pieces.append((s, e))
    return sum(float(kernel.density.axis_mass(0, lo, hi)) for lo, hi in _merge(pieces))


def _theta4_subset(gc: GridChain, S: np.ndarray, memberships, masses) -> float:
    kernel = gc.kernel
    N = gc.grid.N
    h = 0.5 / N
    pts = gc.grid.points[:, 0]
    alpha = kernel.alpha_at(gc.grid.points)
    piN = gc.pi_N
    disc = 0.0
    for rule, mem, mass in zip(kernel.jumps, memberships, masses):
        if rule.weight == 0:
            continue
        block = mem[np.ix_(S, ~S)] * piN[~S][None, :]
        disc += float(((1 - alpha[S]) * piN[S] * rule.weight / mass[S]) @ block.sum(axis=1))
    # continuous part: GL nodes in every cell of S
    xs = (pts[S][:, None] + h * _GL_NODES[None, :]).ravel()
    wts = np.tile(h * _GL_WEIGHTS, S.sum())
    rho = kernel.density(xs[:, None])
    alpha_x = kernel.alpha_at(xs[:, None])
    comp = pts[~S]
    integrand = np.zeros(xs.size)
    for rule in kernel.jumps:
        if rule.weight == 0:
            continue
        ux = _union_mass(kernel, rule, xs)
        inter = np.zeros(xs.size)
        for lo, hi in _rule_intervals(rule):
            z = comp[None, :]
            if kernel.domain.kind == "torus":
                z = xs[:, None] + (np.mod(z - xs[:, None] + 0.5, 1.0) - 0.5)
            a = np.maximum(xs[:, None] + lo, z - h)
            b = np.minimum(xs[:, None] + hi, z + h)
            ok = b > a
            if ok.any():
                vals = np.zeros(ok.shape)
                vals[ok] = kernel.density.axis_mass(0, a[ok], b[ok])
                inter += vals.sum(axis=1)
        integrand += rule.weight * inter / ux
    cont = float(np.sum(wts * (1 - alpha_x) * integrand * rho))
    cover = float(kernel.density.axis_mass(0, pts[S] - h, pts[S] + h).sum())
    return abs(disc - cont) / cover


def theta4(gc: GridChain, samples: int, rng: np.random.Generator) -> float:
    """Sampled ``theta4``: half random subsets and half arcs of the lattice."""
    kernel = gc.kernel
    _require_1d(kernel, "theta4")
    n = gc.grid.n
    mems = jump_memberships(kernel, gc.grid)
    masses = [_union_mass(kernel, r, gc.grid.points[:, 0]) for r in kernel.jumps]
    worst = 0.0
    for s in range(samples):
        if s % 2 == 0:
            S = rng.random(n) < 0.5
        else:
            start, length = int(rng.integers(n)), int(rng.integers(1, n))
            S = np.zeros(n, dtype=bool)
            S[(start + np.arange(length)) % n] = True
        if S.all() or not S.any():
            continue
        worst = max(worst, _theta4_subset(gc, S, mems, masses))
    return worst


@dataclass
class ThetaEstimates:
    N: int
    theta1: float
    theta2: float
    theta3: float
    theta4: float
    sampled: tuple[str, ...] = ("theta1", "theta4")
    sampling_law: str = (
        "theta1: k ~ U{1..m} arcs, start uniform, length eps + (span - eps) U; "
        "theta4: alternating Bernoulli(1/2) subsets and uniform cyclic arcs"
    )

    def to_dict(self) -> dict:
        return dict(self.__dict__, sampled=list(self.sampled))


def theta_diagnostics(
    kernel: ContinuousKernel,
    N: int,
    eps: float = 0.1,
    m: int = 2,
    sample_budget: int = 100,
    seed: int = 0,
    grid_chain: GridChain | None = None,
) -> ThetaEstimates:
    if sample_budget < 100:
        raise ValueError("sample_budget must be at least 100")
    _require_1d(kernel, "theta diagnostics")
    gc = grid_chain if grid_chain is not None else build_grid_chain(kernel, N)
    rng = np.random.Generator(np.random.PCG64(seed))
    return ThetaEstimates(
        N=N,
        theta1=theta1(gc, eps, m, sample_budget, rng),
        theta2=theta2(gc),
        theta3=theta3(gc),
        theta4=theta4(gc, sample_budget, rng),
    )


# ---------------------------------------------------------------------------
# convergence study


@dataclass
class StudyRow:
    N: int
    phi_N: float | None = None
    pi_star_N: float | None = None
    tau_N: int | None = None
    beta_N: float | None = None
    gamma_N: float | None = None
    gamma_method: str | None = None
    theta2: float | None = None
    theta3: float | None = None
    max_one_minus_lambda: float | None = None
    reversibility_residual: float | None = None
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__, errors=list(self.errors))


CSV_VERSION = 1
CSV_COLUMNS = ("N", "phi_N", "pi_star_N", "tau_N", "gamma_N", "theta2", "theta3", "max_one_minus_lambda")


@dataclass
class StudyTable:
    kernel: str
    rows: list[StudyRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# convergence table v{CSV_VERSION}: {','.join(CSV_COLUMNS)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            d = r.to_dict()
            w.writerow(["" if d[c] is None else (f"{d[c]:.12g}" if isinstance(d[c], float) else d[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def convergence_study(
    kernel: ContinuousKernel,
    N_list,
    cut_family: str = "interval",
    beta: float | None = None,
    tau_max_states: int = 200,
    thetas: bool = True,
) -> StudyTable:
    """Per-N conductance, pi_*, mixing time, certificate and regularity values.

    Failures at one N are recorded in that row and the study moves on.
    """
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    if beta is None:
        beta = kernel.constants.get("beta")
    rows = []
    for N in N_list:
        row = StudyRow(N=N, beta_N=beta)
        try:
            gc = build_grid_chain(kernel, N)
        except (DiscretizationError, KernelError) as exc:
            row.errors.append(str(exc))
            rows.append(row)
            continue
        chain = gc.chain
        families = (cut_family,) if kernel.d == 1 else ("interval", "fiedler", "local_search")
        row.phi_N = conductance_sweep(chain, families=families).value
        row.pi_star_N = pi_star(gc.decomposition, gc.pi_N)
        row.max_one_minus_lambda = gc.max_one_minus_lambda
        row.reversibility_residual = gc.reversibility_residual()
        if chain.n <= tau_max_states:
            try:
                row.tau_N = mixing_time(chain)
            except NotMixedError as exc:
                row.errors.append(str(exc))
        if beta is not None:
            try:
                cert = certify_beta_gamma(chain, beta, decomposition=gc.decomposition)
                row.gamma_N, row.gamma_method = cert.gamma, cert.method
            except CertificationError as exc:
                row.errors.append(f"certificate: {exc}")
        if thetas and kernel.d == 1:
            row.theta2 = theta2(gc)
            row.theta3 = theta3(gc)
        rows.append(row)
    return StudyTable(kernel.name, rows)
