"""JSON formats for chains, lifts and continuous kernels.

Errors carry the file position for syntax problems and a field path
(``matrix[2][1]``, ``jumps[0].weight``) for schema problems.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .chain import ChainError, FiniteChain
from .continuous.kernel import ContinuousKernel, Density, Domain, Factor, JumpRule, KernelError
from .decomposition import Jump, KernelDecomposition
from .lifting import LiftedChain

SCHEMA_VERSION = "1.0"


class FormatError(ValueError):
    pass


def _reject_constant(name):
    raise FormatError(f"non-finite number {name} is not allowed")


def loads(text: str, source: str = "<input>"):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_json(path):
    path = Path(path)
    return loads(path.read_text(), str(path))


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise FormatError(f"{where}: non-finite number")
    return float(value)


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    return obj[key]


def _vector(value, where: str) -> list[float]:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected a list")
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]


# ---------------------------------------------------------------------------
# chains


def chain_from_dict(obj: dict, where: str = "chain") -> FiniteChain:
    rows = _field(obj, "matrix", where)
    if not isinstance(rows, list) or not rows:
        raise FormatError(f"{where}.matrix: expected a non-empty list of rows")
    matrix = [_vector(r, f"{where}.matrix[{i}]") for i, r in enumerate(rows)]
    n = len(matrix)
    for i, r in enumerate(matrix):
        if len(r) != n:
            raise FormatError(f"{where}.matrix[{i}]: row has {len(r)} entries, expected {n}")
    states = obj.get("states")
    if states is None:
        states = [str(i) for i in range(n)]
    elif not isinstance(states, list) or len(states) != n:
        raise FormatError(f"{where}.states: expected {n} labels")
    stationary = obj.get("stationary")
    if stationary is not None:
        stationary = _vector(stationary, f"{where}.stationary")
    try:
        chain = FiniteChain.from_matrix(np.array(matrix), states=[str(s) for s in states], stationary=stationary)
    except ChainError as exc:
        raise FormatError(f"{where}: {exc}") from None
    return chain


def decomposition_from_dict(obj, chain: FiniteChain, where: str = "decomposition") -> KernelDecomposition:
    if isinstance(obj, dict):
        entries = []
        for s in chain.states:
            if s not in obj:
                raise FormatError(f"{where}: missing entry for state {s!r}")
            entries.append((f"{where}.{s}", obj[s]))
    elif isinstance(obj, list):
        if len(obj) != chain.n:
            raise FormatError(f"{where}: expected {chain.n} per-state entries")
        entries = [(f"{where}[{i}]", e) for i, e in enumerate(obj)]
    else:
        raise FormatError(f"{where}: expected an object keyed by state or a list")
    alpha, jumps = [], []
    for w, entry in entries:
        alpha.append(_number(_field(entry, "alpha", w), f"{w}.alpha"))
        row = []
        for j, jump in enumerate(_field(entry, "jumps", w)):
            jw = f"{w}.jumps[{j}]"
            labels = _field(jump, "set", jw)
            if not isinstance(labels, list):
                raise FormatError(f"{jw}.set: expected a list of labels")
            try:
                idx = tuple(sorted(chain.index(str(lab)) for lab in labels))
            except ChainError as exc:
                raise FormatError(f"{jw}.set: {exc}") from None
            row.append(Jump(idx, _number(_field(jump, "weight", jw), f"{jw}.weight")))
        jumps.append(row)
    return KernelDecomposition(np.array(alpha), jumps)


def load_chain(path) -> tuple[FiniteChain, KernelDecomposition | None]:
    obj = load_json(path)
    chain = chain_from_dict(obj, str(path))
    decomp = None
    if "decomposition" in obj:
        decomp = decomposition_from_dict(obj["decomposition"], chain, f"{path}.decomposition")
    return chain, decomp


def chain_to_dict(chain: FiniteChain, decomp: KernelDecomposition | None = None) -> dict:
    out = {
        "states": list(chain.states),
        "matrix": chain.matrix.tolist(),
    }
    if chain.stationary is not None:
        out["stationary"] = chain.stationary.tolist()
    if decomp is not None:
        out["decomposition"] = {
            s: {
                "alpha": float(decomp.alpha[i]),
                "jumps": [
                    {"set": [chain.states[k] for k in j.states], "weight": float(j.weight)}
                    for j in decomp.jumps[i]
                ],
            }
            for i, s in enumerate(chain.states)
        }
    return out


# ---------------------------------------------------------------------------
# lifts


def lift_from_dict(obj: dict, base_dir: Path | None = None, where: str = "lift") -> LiftedChain:
    parts = {}
    for key in ("base", "hat"):
        part = _field(obj, key, where)
        if isinstance(part, str):
            p = Path(part) if base_dir is None else base_dir / part
            parts[key] = chain_from_dict(load_json(p), str(p))
        else:
            parts[key] = chain_from_dict(part, f"{where}.{key}")
    proj = _field(obj, "projection", where)
    if not isinstance(proj, dict):
        raise FormatError(f"{where}.projection: expected an object mapping hat labels to base labels")
    try:
        return LiftedChain.from_labels(parts["hat"], parts["base"], {str(k): str(v) for k, v in proj.items()})
    except ChainError as exc:
        raise FormatError(f"{where}.projection: {exc}") from None


def load_lift(path) -> LiftedChain:
    path = Path(path)
    return lift_from_dict(load_json(path), path.parent, str(path))


def lift_to_dict(lift: LiftedChain) -> dict:
    return {
        "base": chain_to_dict(lift.base),
        "hat": chain_to_dict(lift.hat),
        "projection": {
            lift.hat.states[i]: lift.base.states[int(b)] for i, b in enumerate(lift.projection)
        },
    }


# ---------------------------------------------------------------------------
# continuous kernels


def _factor(value, lo: float, hi: float, where: str) -> Factor:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Factor("constant", (_number(value, where),), lo, hi)
    kind = _field(value, "type", where)
    if kind == "table":
        return Factor("table", _vector(_field(value, "values", where), f"{where}.values"), lo, hi)
    raise FormatError(f"{where}: expected a number or a table")


def kernel_from_dict(obj: dict, where: str = "kernel") -> ContinuousKernel:
    d = int(_number(_field(obj, "dimension", where), f"{where}.dimension"))
    dom = _field(obj, "domain", where)
    kind = _field(dom, "type", f"{where}.domain")
    try:
        if kind == "torus":
            domain = Domain.torus(d)
        elif kind == "box":
            bounds = _field(dom, "bounds", f"{where}.domain")
            if not isinstance(bounds, list) or len(bounds) != d:
                raise FormatError(f"{where}.domain.bounds: expected {d} [lo, hi] pairs")
            domain = Domain.box([_vector(b, f"{where}.domain.bounds[{i}]") for i, b in enumerate(bounds)])
        else:
            raise FormatError(f"{where}.domain.type: expected 'torus' or 'box', got {kind!r}")

        dens = _field(obj, "density", where)
        dkind = _field(dens, "type", f"{where}.density")
        C = dens.get("C")
        D = dens.get("D")
        if dkind == "uniform":
            density = Density.uniform(domain)
        elif dkind == "poly":
            coeffs = _field(dens, "coeffs", f"{where}.density")
            if coeffs and not isinstance(coeffs[0], list):
                coeffs = [coeffs]
            if len(coeffs) != d:
                raise FormatError(f"{where}.density.coeffs: expected one coefficient list per axis")
            density = Density.poly(
                domain, [_vector(c, f"{where}.density.coeffs[{i}]") for i, c in enumerate(coeffs)], C, D
            )
        elif dkind == "table":
            density = Density.table(domain, _vector(_field(dens, "values", f"{where}.density"), f"{where}.density.values"), C, D)
        else:
            raise FormatError(f"{where}.density.type: unknown type {dkind!r}")

        a, b = domain.bounds[0]
        alpha = _factor(_field(obj, "alpha", where), a, b, f"{where}.alpha")

        rules = []
        for j, jump in enumerate(_field(obj, "jumps", where)):
            jw = f"{where}.jumps[{j}]"
            if "rectangles" in jump:
                rects = jump["rectangles"]
            else:
                rects = [_field(jump, "offsets", jw)]
            parsed = []
            for r, rect in enumerate(rects):
                if not isinstance(rect, list) or len(rect) != d:
                    raise FormatError(f"{jw}: rectangle {r} needs {d} [lo, hi] pairs")
                parsed.append(tuple(tuple(_vector(side, f"{jw}.offsets[{i}]")) for i, side in enumerate(rect)))
            rules.append(JumpRule(tuple(parsed), _number(_field(jump, "weight", jw), f"{jw}.weight")))
        return ContinuousKernel(
            domain=domain,
            density=density,
            alpha=alpha,
            jumps=tuple(rules),
            name=str(obj.get("name", "kernel")),
            constants=dict(obj.get("constants", {})),
        )
    except KernelError as exc:
        raise FormatError(f"{where}: {exc}") from None


def load_kernel(path) -> ContinuousKernel:
    return kernel_from_dict(load_json(path), str(path))


def kernel_to_dict(kernel: ContinuousKernel) -> dict:
    dens = kernel.density
    if dens.kind == "uniform":
        density = {"type": "uniform"}
    elif dens.kind == "poly":
        density = {"type": "poly", "coeffs": [list(f.params) for f in dens.factors]}
    else:
        density = {"type": "table", "values": list(dens.factors[0].params)}
    if dens.C is not None:
        density["C"] = dens.C
    if dens.D is not None:
        density["D"] = dens.D
    alpha = kernel.alpha.params[0] if kernel.alpha.kind == "constant" else {
        "type": "table", "values": list(kernel.alpha.params)
    }
    out = {
        "name": kernel.name,
        "dimension": kernel.d,
        "domain": {"type": kernel.domain.kind, "bounds": [list(b) for b in kernel.domain.bounds]},
        "density": density,
        "alpha": alpha,
        "jumps": [
            {"rectangles": [[list(s) for s in rect] for rect in j.rectangles], "weight": j.weight}
            for j in kernel.jumps
        ],
    }
    if kernel.constants:
        out["constants"] = dict(kernel.constants)
    return out


# ---------------------------------------------------------------------------
# reports


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return value


def dumps_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, plain types, trailing newline."""
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"
