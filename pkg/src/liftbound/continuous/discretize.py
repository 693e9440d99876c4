"""Grid discretization of a continuous kernel.

The pipeline is lattice -> cell masses -> proposal ``L`` -> Metropolis
kernel ``K``.  Membership of a lattice point in a jump set is decided by
its coordinates (the cell centre).  A point is never a member of its own
jump sets, since ``{x}`` carries no continuous mass and the holding atom
already accounts for staying put.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chain import FiniteChain
from ..decomposition import Jump, KernelDecomposition
from .kernel import ContinuousKernel, Domain, KernelError

MASS_TOL = 1e-8
MEMBER_TOL = 1e-9


class DiscretizationError(ValueError):
    pass


@dataclass
class Grid:
    """Lattice points ``index / N`` with their integer indices."""

    domain: Domain
    N: int
    index: np.ndarray  # (n, d) integer lattice coordinates

    @property
    def points(self) -> np.ndarray:
        return self.index / self.N

    @property
    def n(self) -> int:
        return self.index.shape[0]

    def labels(self) -> list[str]:
        return [",".join(f"{v:.12g}" for v in row) for row in self.points]

    def subset(self, keep: np.ndarray) -> "Grid":
        return Grid(self.domain, self.N, self.index[keep])


def discretize_states(domain: Domain, N: int, psi: float | None = None) -> Grid:
    """Torus: ``{0, 1/N, ..., (N-1)/N}`` per axis.  Box: ``k/N`` for
    ``N*A - 2 <= k <= N*B + 2`` per axis."""
    if N < 1:
        raise DiscretizationError("N must be positive")
    if psi is not None and N < 4.0 / psi - 1e-9:
        raise DiscretizationError(f"N = {N} is below 4/psi = {4.0 / psi:.6g}")
    axes = []
    for a, b in domain.bounds:
        if domain.kind == "torus":
            axes.append(np.arange(N))
        else:
            lo = int(np.ceil(N * a - 2 - 1e-9))
            hi = int(np.floor(N * b + 2 + 1e-9))
            axes.append(np.arange(lo, hi + 1))
    mesh = np.meshgrid(*axes, indexing="ij")
    index = np.stack([m.ravel() for m in mesh], axis=1)
    return Grid(domain, N, index)


def cell_masses(kernel: ContinuousKernel, grid: Grid) -> np.ndarray:
    h = 0.5 / grid.N
    pts = grid.points
    return kernel.density.box_mass(pts - h, pts + h)


def discretize_measure(kernel: ContinuousKernel, N: int, grid: Grid | None = None):
    """Cell masses of the lattice, zero cells pruned.

    Returns ``(grid, pi_N)`` where ``grid`` keeps only positive-mass points.
    """
    if grid is None:
        grid = discretize_states(kernel.domain, N)
    mass = cell_masses(kernel, grid)
    total = mass.sum()
    if abs(total - 1.0) > MASS_TOL:
        raise DiscretizationError(
            f"discretized mass is {total:.12g}; quadrature or density normalization is off"
        )
    keep = mass > 0
    return grid.subset(keep), mass[keep]


def _offsets(grid: Grid) -> np.ndarray:
    """Pairwise lattice offsets ``(n, n, d)`` in units of 1/N, torus-wrapped."""
    diff = grid.index[None, :, :] - grid.index[:, None, :]
    if grid.domain.kind == "torus":
        N = grid.N
        diff = (diff + N // 2) % N - N // 2
    return diff


def jump_memberships(kernel: ContinuousKernel, grid: Grid) -> list[np.ndarray]:
    """Boolean ``(n, n)`` matrix per jump rule: ``y`` in ``x + U``, ``y != x``."""
    diff = _offsets(grid)
    N = grid.N
    out = []
    for rule in kernel.jumps:
        mem = np.zeros((grid.n, grid.n), dtype=bool)
        for rect in rule.rectangles:
            inside = np.ones((grid.n, grid.n), dtype=bool)
            for i, (lo, hi) in enumerate(rect):
                inside &= (diff[:, :, i] >= lo * N - MEMBER_TOL) & (diff[:, :, i] <= hi * N + MEMBER_TOL)
            mem |= inside
        np.fill_diagonal(mem, False)
        out.append(mem)
    return out


def proposal_kernel(kernel: ContinuousKernel, grid: Grid, pi_N: np.ndarray):
    """``L(x,y) = alpha_x 1[x=y] + (1-alpha_x) sum_{U ni y} K_{x,U} pi_N(y)/pi_N(U)``.

    Returns ``(L, decomposition)``; the decomposition reconstructs ``L``.
    """
    alpha = kernel.alpha_at(grid.points)
    L = np.diag(alpha)
    jumps = [[] for _ in range(grid.n)]
    for rule, mem in zip(kernel.jumps, jump_memberships(kernel, grid)):
        if rule.weight == 0:
            continue
        mass = mem.astype(float) @ pi_N
        if np.any(mass <= 0):
            x = int(np.flatnonzero(mass <= 0)[0])
            raise DiscretizationError(
                f"jump set {rule.rectangles} is empty on the grid at x = {grid.points[x].tolist()}"
            )
        L += (1.0 - alpha)[:, None] * rule.weight * mem * pi_N[None, :] / mass[:, None]
        for x in range(grid.n):
            jumps[x].append(Jump(tuple(int(y) for y in np.flatnonzero(mem[x])), rule.weight))
    return L, KernelDecomposition(alpha, jumps)


@dataclass
class MetropolisResult:
    accept: np.ndarray
    matrix: np.ndarray
    asymmetric_pairs: int


def metropolize(L: np.ndarray, pi_N: np.ndarray) -> MetropolisResult:
    """Metropolis correction of ``L`` towards ``pi_N``.

    Where the forward proposal is zero, ``lambda = 1`` (the entry carries
    nothing).  Pairs proposed in one direction only are counted.
    """
    L = np.asarray(L, dtype=float)
    F = pi_N[:, None] * L
    R = F.T
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(F > 0, np.minimum(1.0, R / np.where(F > 0, F, 1.0)), 1.0)
    asym = int(np.count_nonzero((F > 0) & (R == 0)))
    K = L * lam
    np.fill_diagonal(K, 0.0)
    np.fill_diagonal(K, 1.0 - K.sum(axis=1))
    return MetropolisResult(lam, K, asym)


@dataclass
class GridChain:
    kernel: ContinuousKernel
    N: int
    grid: Grid
    pi_N: np.ndarray
    proposal: np.ndarray
    accept: np.ndarray
    chain: FiniteChain
    decomposition: KernelDecomposition
    asymmetric_pairs: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def max_one_minus_lambda(self) -> float:
        off = ~np.eye(self.grid.n, dtype=bool) & (self.proposal > 0)
        if not off.any():
            return 0.0
        return float(np.max(1.0 - self.accept[off]))

    def reversibility_residual(self) -> float:
        Q = self.chain.flow
        return float(np.max(np.abs(Q - Q.T)))


def build_grid_chain(kernel: ContinuousKernel, N: int) -> GridChain:
    grid = discretize_states(kernel.domain, N, psi=kernel.psi)
    grid, pi_N = discretize_measure(kernel, N, grid)
    L, decomp = proposal_kernel(kernel, grid, pi_N)
    met = metropolize(L, pi_N)
    chain = FiniteChain.from_matrix(met.matrix, states=grid.labels(), stationary=pi_N, reversible=True)
    notes = []
    if met.asymmetric_pairs:
        notes.append(f"{met.asymmetric_pairs} proposal pairs have one-sided support")
    return GridChain(kernel, N, grid, pi_N, L, met.accept, chain, decomp, met.asymmetric_pairs, notes)


# ---------------------------------------------------------------------------
# covering map


@dataclass
class CoveringRegion:
    """Union of closed side-1/N cells centred at the chosen lattice points."""

    N: int
    cells: np.ndarray  # (m, d, 2) per-axis [lo, hi]

    def mass(self, kernel: ContinuousKernel) -> float:
        if self.cells.size == 0:
            return 0.0
        return float(kernel.density.box_mass(self.cells[:, :, 0], self.cells[:, :, 1]).sum())

    def intervals(self) -> list[tuple[float, float]]:
        """Merged intervals (d = 1 only)."""
        if self.cells.shape[1] != 1:
            raise KernelError("intervals are one-dimensional")
        out = []
        for lo, hi in sorted(map(tuple, self.cells[:, 0, :])):
            if out and lo <= out[-1][1] + 1e-15:
                out[-1] = (out[-1][0], max(out[-1][1], hi))
            else:
                out.append((float(lo), float(hi)))
        return out


def covering_map(points, N: int) -> CoveringRegion:
    pts = np.asarray(points, dtype=float)
    if pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    if pts.size == 0:
        return CoveringRegion(N, np.zeros((0, 1, 2)))
    h = 0.5 / N
    cells = np.stack([pts - h, pts + h], axis=-1)
    return CoveringRegion(N, cells)
