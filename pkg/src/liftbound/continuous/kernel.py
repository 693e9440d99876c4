"""Continuous mixture-of-uniforms kernels on a torus or a box.

A kernel holds with probability ``alpha(x)`` and otherwise jumps to
``pi`` restricted to one of finitely many translated rectangle unions
``x + U`` chosen with fixed weights.  Densities are products of 1-D
factors, which keeps cell masses cheap and exact under Gauss-Legendre
quadrature for polynomial factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GL_ORDER = 5
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)
WEIGHT_TOL = 1e-12


class KernelError(ValueError):
    """A continuous kernel violates one of its declared invariants."""


@dataclass(frozen=True)
class Domain:
    kind: str  # "torus" | "box"
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.kind not in ("torus", "box"):
            raise KernelError(f"domain type must be 'torus' or 'box', got {self.kind!r}")
        for a, b in self.bounds:
            if not b > a:
                raise KernelError(f"empty domain interval [{a}, {b}]")
        if self.kind == "torus" and any(tuple(bd) != (0.0, 1.0) for bd in self.bounds):
            raise KernelError("torus domains are the unit torus [0,1)^d")

    @classmethod
    def torus(cls, d: int = 1) -> "Domain":
        return cls("torus", tuple((0.0, 1.0) for _ in range(d)))

    @classmethod
    def box(cls, bounds) -> "Domain":
        return cls("box", tuple((float(a), float(b)) for a, b in bounds))

    @property
    def d(self) -> int:
        return len(self.bounds)

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in self.bounds]))


def gauss_legendre(f, lo, hi):
    """Order-5 Gauss-Legendre integral of a vectorized ``f`` on ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x = mid[..., None] + half[..., None] * _GL_NODES
    return half * (f(x) @ _GL_WEIGHTS)


@dataclass
class Factor:
    """One axis of a product density (or of a table-valued holding rule).

    ``kind`` is "constant", "poly" (increasing-power coefficients) or
    "table" (values at equally spaced nodes spanning ``[lo, hi]``, linear
    in between).
    """

    kind: str
    params: tuple[float, ...]
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        self.params = tuple(float(p) for p in self.params)
        if self.kind not in ("constant", "poly", "table"):
            raise KernelError(f"unknown density factor type {self.kind!r}")
        if self.kind == "table" and len(self.params) < 2:
            raise KernelError("a table needs at least two values")
        if self.kind == "table":
            nodes = np.linspace(self.lo, self.hi, len(self.params))
            vals = np.array(self.params)
            seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes)
            self._nodes, self._vals = nodes, vals
            self._cum = np.concatenate([[0.0], np.cumsum(seg)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape, self.params[0])
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(x, self.params)
        return np.interp(x, self._nodes, self._vals)

    def _cdf(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.lo, self.hi)
        k = np.clip(np.searchsorted(self._nodes, t, side="right") - 1, 0, len(self._nodes) - 2)
        x0 = self._nodes[k]
        v0 = self._vals[k]
        slope = (self._vals[k + 1] - v0) / (self._nodes[k + 1] - x0)
        dt = t - x0
        return self._cum[k] + v0 * dt + 0.5 * slope * dt * dt

    def integral(self, a, b):
        """Integral over ``[a, b]`` (``a <= b`` elementwise)."""
        if self.kind == "table":
            return self._cdf(b) - self._cdf(a)
        return gauss_legendre(self, a, b)


@dataclass
class Density:
    """Product density ``rho(x) = prod_i f_i(x_i)`` on a domain.

    ``C`` and ``D`` are the declared bounds ``1/C < rho < C`` and
    ``|rho'| < D``; they are checked on a sample grid by :meth:`check`.
    """

    domain: Domain
    factors: tuple[Factor, ...]
    kind: str = "product"
    C: float | None = None
    D: float | None = None

    @classmethod
    def uniform(cls, domain: Domain) -> "Density":
        facs = tuple(Factor("constant", (1.0 / (b - a),), a, b) for a, b in domain.bounds)
        return cls(domain, facs, "uniform", C=None)

    @classmethod
    def poly(cls, domain: Domain, coeffs_per_axis, C=None, D=None) -> "Density":
        facs = tuple(
            Factor("poly", c, a, b) for c, (a, b) in zip(coeffs_per_axis, domain.bounds)
        )
        return cls(domain, facs, "poly", C, D)

    @classmethod
    def table(cls, domain: Domain, values, C=None, D=None) -> "Density":
        if domain.d != 1:
            raise KernelError("table densities are one-dimensional")
        a, b = domain.bounds[0]
        return cls(domain, (Factor("table", values, a, b),), "table", C, D)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.ones(x.shape[0])
        for i, (f, (a, b)) in enumerate(zip(self.factors, self.domain.bounds)):
            xi = x[:, i]
            if self.domain.kind == "torus":
                xi = np.mod(xi, 1.0)
                out = out * f(xi)
            else:
                out = out * np.where((xi >= a) & (xi <= b), f(xi), 0.0)
        return out

    def axis_mass(self, i: int, lo, hi) -> np.ndarray:
        """Mass of the i-th factor on ``[lo, hi]`` (clipped or wrapped)."""
        f = self.factors[i]
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if self.domain.kind == "box":
            a, b = self.domain.bounds[i]
            l, h = np.clip(lo, a, b), np.clip(hi, a, b)
            return np.where(h > l, f.integral(l, np.maximum(h, l)), 0.0)
        # torus: integrate over the unwrapped pieces of [lo, hi]
        length = hi - lo
        full = np.floor(length)
        rem_lo = np.mod(lo, 1.0)
        rem_hi = rem_lo + (length - full)
        whole = f.integral(0.0, 1.0)
        first = f.integral(rem_lo, np.minimum(rem_hi, 1.0))
        wrap = np.where(rem_hi > 1.0, f.integral(0.0, np.maximum(rem_hi - 1.0, 0.0)), 0.0)
        return full * whole + first + wrap

    def box_mass(self, lo, hi) -> np.ndarray:
        """Mass of axis-aligned boxes; ``lo``/``hi`` have shape ``(m, d)``."""
        lo = np.atleast_2d(lo)
        hi = np.atleast_2d(hi)
        out = np.ones(lo.shape[0])
        for i in range(self.domain.d):
            out = out * self.axis_mass(i, lo[:, i], hi[:, i])
        return out

    def total_mass(self) -> float:
        lo = np.array([[a for a, _ in self.domain.bounds]])
        hi = np.array([[b for _, b in self.domain.bounds]])
        return float(self.box_mass(lo, hi)[0])

    def check(self, samples: int = 1001) -> list[str]:
        problems = []
        total = self.total_mass()
        if abs(total - 1.0) > 1e-8:
            problems.append(f"density integrates to {total:.12g}, not 1")
        per_axis = max(3, int(round(samples ** (1.0 / self.domain.d))))
        axes = [np.linspace(a, b, per_axis) for a, b in self.domain.bounds]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        vals = self(pts)
        if self.C is not None and not (np.all(vals > 1.0 / self.C) and np.all(vals < self.C)):
            problems.append(f"density leaves (1/C, C) with C = {self.C}")
        if self.D is not None and self.domain.d == 1:
            slope = np.abs(np.diff(vals) / np.diff(axes[0]))
            if slope.max() >= self.D:
                problems.append(f"density slope reaches {slope.max():.6g} >= D = {self.D}")
        return problems


@dataclass(frozen=True)
class JumpRule:
    """Jump to ``pi`` restricted to ``x + union(rectangles)`` with a fixed weight.

    Each rectangle is a tuple of per-axis ``(lo, hi)`` offsets.
    """

    rectangles: tuple[tuple[tuple[float, float], ...], ...]
    weight: float

    def __post_init__(self):
        if not self.rectangles:
            raise KernelError("a jump rule needs at least one rectangle")
        for rect in self.rectangles:
            for lo, hi in rect:
                if not hi > lo:
                    raise KernelError(f"rectangle side [{lo}, {hi}] is empty")
        if self.weight < 0:
            raise KernelError("jump weights must be nonnegative")

    @property
    def q(self) -> int:
        return len(self.rectangles)

    @property
    def psi(self) -> float:
        return min(hi - lo for rect in self.rectangles for lo, hi in rect)


@dataclass
class ContinuousKernel:
    domain: Domain
    density: Density
    alpha: Factor  # constant or table over the domain (d = 1 for tables)
    jumps: tuple[JumpRule, ...]
    name: str = "kernel"
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        self.jumps = tuple(self.jumps)
        problems = self.check_structure()
        if problems:
            raise KernelError("; ".join(problems))

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def q(self) -> int:
        return max(j.q for j in self.jumps if j.weight > 0)

    @property
    def psi(self) -> float:
        return min(j.psi for j in self.jumps if j.weight > 0)

    def alpha_at(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.alpha(x[:, 0])

    def check_structure(self) -> list[str]:
        problems = []
        total = sum(j.weight for j in self.jumps)
        if abs(total - 1.0) > WEIGHT_TOL:
            problems.append(f"jump weights sum to {total:.12g}, not 1")
        for j in self.jumps:
            for rect in j.rectangles:
                if len(rect) != self.d:
                    problems.append("rectangle dimension does not match the domain")
        if self.alpha.kind == "table" and self.d != 1:
            problems.append("table holding rules are one-dimensional")
        a, b = self.domain.bounds[0]
        vals = self.alpha(np.linspace(a, b, 1001))
        if vals.min() < 0.5 - WEIGHT_TOL or vals.max() >= 1.0:
            problems.append("holding probability must lie in [1/2, 1)")
        return problems

    def check(self) -> list[str]:
        return self.check_structure() + self.density.check()

    def jump_mass(self, x, rule: JumpRule) -> float:
        """``pi(x + U)`` for a single point ``x`` (d = 1 unions merged)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if self.d == 1:
            total = 0.0
            for lo, hi in _merge([r[0] for r in rule.rectangles]):
                total += float(self.density.axis_mass(0, x[0] + lo, x[0] + hi))
            return total
        if rule.q > 1:
            raise KernelError("unions of several rectangles are supported for d = 1 only")
        rect = np.array(rule.rectangles[0])
        return float(self.density.box_mass(x + rect[:, 0], x + rect[:, 1])[0])


def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def torus_example_kernel(c: float) -> ContinuousKernel:
    """Hold 1/2, else jump uniformly within torus distance ``c``; ``0 < c < 1/4``.

    ``constants`` carries the worked constants ``pi_* = 2c``,
    ``beta = c/4`` and ``gamma = beta/(2c) + 1/2``.
    """
    if not 0 < c < 0.25:
        raise KernelError(f"need 0 < c < 1/4, got {c}")
    dom = Domain.torus(1)
    beta = c / 4.0
    return ContinuousKernel(
        domain=dom,
        density=Density.uniform(dom),
        alpha=Factor("constant", (0.5,)),
        jumps=(JumpRule((((-c, c),),), 1.0),),
        name=f"torus_ball_c={c:g}",
        constants={"c": c, "pi_star": 2.0 * c, "beta": beta, "gamma": beta / (2.0 * c) + 0.5},
    )


# ---------------------------------------------------------------------------
# row total variation (d = 1)


def _jump_pieces(kernel: ContinuousKernel, x: float):
    """Breakpoints and per-piece density multipliers of the jump part at ``x``."""
    pieces = []
    a = kernel.alpha_at([x])[0]
    for rule in kernel.jumps:
        if rule.weight == 0:
            continue
        mass = kernel.jump_mass([x], rule)
        for lo, hi in _merge([r[0] for r in rule.rectangles]):
            pieces.append((x + lo, x + hi, (1 - a) * rule.weight / mass))
    return pieces


def row_tv(kernel: ContinuousKernel, x: float, y: float) -> float:
    """Exact ``||K(x,.) - K(y,.)||_TV`` for a 1-D kernel with ``x != y``."""
    if kernel.d != 1:
        raise KernelError("row_tv is one-dimensional")
    if kernel.domain.kind == "torus":
        # unwrap y next to x; pieces then span less than one period
        y = x + ((y - x + 0.5) % 1.0 - 0.5)
    ax, ay = kernel.alpha_at([x])[0], kernel.alpha_at([y])[0]
    px, py = _jump_pieces(kernel, x), _jump_pieces(kernel, y)
    cuts = sorted({p for lo, hi, _ in px + py for p in (lo, hi)})

    def level(pieces, t):
        tot = 0.0
        for lo, hi, w in pieces:
            tot += w if lo <= t <= hi else 0.0
        return tot

    cont = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        diff = abs(level(px, mid) - level(py, mid))
        if diff > 0:
            cont += diff * float(kernel.density.axis_mass(0, lo, hi))
    # distinct atoms are singular to everything else, so they add directly
    atoms = ax + ay if x != y else 0.0
    return 0.5 * (atoms + cont)


@dataclass
class ContinuityCheck:
    pairs: int
    max_excess: float
    passed: bool
    worst: tuple[float, float]


def continuity_check(
    kernel: ContinuousKernel, delta_slope: float, pairs: int = 1000, seed: int = 0, max_eps: float = 1.0
) -> ContinuityCheck:
    """Sample pairs and check ``TV <= min(alpha) + eps`` whenever
    ``|x - y| <= delta_slope * eps``, taking the tightest ``eps = |x-y|/slope``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    a, b = kernel.domain.bounds[0]
    worst, worst_pair = -np.inf, (np.nan, np.nan)
    for _ in range(pairs):
        x = rng.uniform(a, b)
        dist = rng.uniform(0.0, delta_slope * max_eps)
        y = x + dist
        if kernel.domain.kind == "torus":
            y = y % 1.0
        elif y > b:
            y = x - dist
        eps = dist / delta_slope
        tv = row_tv(kernel, x, y)
        excess = tv - (min(kernel.alpha_at([x])[0], kernel.alpha_at([y])[0]) + eps)
        if excess > worst:
            worst, worst_pair = excess, (x, y)
    return ContinuityCheck(pairs, float(worst), bool(worst <= 1e-12), worst_pair)
