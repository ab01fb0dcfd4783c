"""JSON instance files: parsing, serialization, bundled fixtures and random generation.

File layout (``schema: 1``)::

    {
      "schema": 1, "name": str, "seed": int | null, "tolerance": float | null,
      "algebras": {name: {"block_dims": [n, ...]}},
      "modules":  {name: {"algebra": name, "heights": [m, ...], "left_action": [k, ...] | null}},
      "maps": {
        name: {"role": "cp" | "linear", "domain": alg, "codomain": alg,
               "choi": [[matrix, ...], ...]},              # grid indexed [j][k]
        name: {"role": "phi", "domain": mod, "codomain": mod,
               "underlying": cp-map name, "matrix": matrix}
      },
      "operators": {name: {"module": mod, "blocks": [matrix, ...]}},
      "pair": [phi-map name, phi-map name] | null
    }

Matrices are lists of rows; each entry is an ``[re, im]`` pair.  Role
``linear`` declares a map without claiming complete positivity.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import _linalg as la
from .algebra import BlockAlgebra
from .cpmaps import CPMap, PhiMap, choi_of_linear, is_completely_positive, phi_map_residual
from .exceptions import CPModuleError, DimensionMismatch
from .modules import LeftActionSpec, ModuleOperator, ModuleShape
from .random_instances import MAX_BLOCK_DIM, MAX_HEIGHT, kraus_phi_map, make_rng, random_kraus

SCHEMA = 1
FIXTURES = ("equivalent_pair_5x2.json", "equivalent_pair_4x2.json", "transpose_map.json")


class InstanceError(CPModuleError):
    """Invalid instance file; ``kind`` is one of the diagnostics below."""

    MALFORMED = "malformed JSON"
    DIMENSION = "dimension mismatch"
    NOT_CP = "not completely positive"
    NOT_PHI = "not a phi-map"
    INVALID = "invalid instance"

    def __init__(self, kind, detail=""):
        self.kind = kind
        super().__init__(f"{kind}: {detail}" if detail else kind)


@dataclass(eq=False)
class Instance:
    name: str
    algebras: dict
    modules: dict
    maps: dict
    roles: dict
    operators: dict = field(default_factory=dict)
    pair: tuple | None = None
    seed: int | None = None
    tolerance: float | None = None

    def tol(self, override=None) -> float:
        if override is not None:
            return override
        return self.tolerance if self.tolerance is not None else la.DEFAULT_TOL

    def names(self, role):
        return [n for n, r in self.roles.items() if r == role]

    def phi_maps(self):
        return [self.maps[n] for n in self.names("phi")]

    def ordered_pair(self):
        """``(Phi, Psi)`` for commands comparing two maps."""
        if self.pair is not None:
            return self.maps[self.pair[0]], self.maps[self.pair[1]]
        names = self.names("phi")
        if len(names) < 2:
            raise InstanceError(InstanceError.INVALID, "instance needs a pair of phi-maps")
        return self.maps[names[0]], self.maps[names[1]]


# --- encoding -----------------------------------------------------------------

def encode_matrix(a):
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def decode_matrix(data, rows=None, cols=None):
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(InstanceError.MALFORMED, f"bad matrix entries ({exc})") from None
    if arr.size == 0 and rows is not None and cols is not None and rows * cols == 0:
        return np.zeros((rows, cols), complex)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InstanceError(InstanceError.MALFORMED, "matrix entries must be [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if rows is not None and out.shape != (rows, cols):
        raise InstanceError(InstanceError.DIMENSION, f"matrix has shape {out.shape}, expected {(rows, cols)}")
    return out


def _lookup(table, key, what):
    if key not in table:
        raise InstanceError(InstanceError.INVALID, f"unknown {what} {key!r}")
    return table[key]


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise InstanceError(InstanceError.MALFORMED, f"missing field {key!r} in {where}")
    return obj[key]


def from_dict(data: dict, tol: float | None = None) -> Instance:
    """Build and eagerly validate an instance from decoded JSON."""
    if not isinstance(data, dict):
        raise InstanceError(InstanceError.MALFORMED, "top level must be an object")
    if data.get("schema") != SCHEMA:
        raise InstanceError(InstanceError.MALFORMED, f"unsupported schema {data.get('schema')!r}")
    tolerance = data.get("tolerance")
    check_tol = tol if tol is not None else (tolerance if tolerance is not None else la.DEFAULT_TOL)
    algebras, modules, maps, roles, operators = {}, {}, {}, {}, {}
    try:
        for name, a in _require(data, "algebras", "instance").items():
            algebras[name] = BlockAlgebra(tuple(_require(a, "block_dims", name)))
        for name, m in data.get("modules", {}).items():
            alg = _lookup(algebras, _require(m, "algebra", name), "algebra")
            mult = m.get("left_action")
            action = LeftActionSpec(tuple(mult)) if mult is not None else None
            modules[name] = ModuleShape(alg, tuple(_require(m, "heights", name)), action)
        raw_maps = data.get("maps", {})
        # cp/linear maps first so phi-maps can reference them
        for name, entry in raw_maps.items():
            role = _require(entry, "role", name)
            if role not in ("cp", "linear", "phi"):
                raise InstanceError(InstanceError.INVALID, f"unknown role {role!r} for map {name!r}")
            if role == "phi":
                continue
            A = _lookup(algebras, _require(entry, "domain", name), "algebra")
            B = _lookup(algebras, _require(entry, "codomain", name), "algebra")
            grid = _require(entry, "choi", name)
            if len(grid) != A.num_blocks or any(len(row) != B.num_blocks for row in grid):
                raise InstanceError(InstanceError.DIMENSION, f"Choi grid of {name!r} has the wrong layout")
            choi = tuple(
                tuple(decode_matrix(c, n * m, n * m) for c, m in zip(row, B.block_dims))
                for row, n in zip(grid, A.block_dims)
            )
            phi = CPMap(A, B, choi)
            if role == "cp" and not is_completely_positive(phi, check_tol):
                raise InstanceError(InstanceError.NOT_CP, f"map {name!r} is declared cp but is not")
            maps[name], roles[name] = phi, role
        for name, entry in raw_maps.items():
            if entry["role"] != "phi":
                continue
            E = _lookup(modules, _require(entry, "domain", name), "module")
            F = _lookup(modules, _require(entry, "codomain", name), "module")
            under = _require(entry, "underlying", name)
            if roles.get(under) != "cp":
                raise InstanceError(InstanceError.INVALID, f"underlying map of {name!r} must be a cp map")
            Phi = PhiMap(E, F, decode_matrix(_require(entry, "matrix", name), F.dim, E.dim), maps[under])
            res = phi_map_residual(Phi)
            if res > check_tol * (1.0 + Phi.norm() ** 2):
                raise InstanceError(InstanceError.NOT_PHI, f"{name!r} fails the phi-map identity (residual {res:.3e})")
            maps[name], roles[name] = Phi, "phi"
        for name, entry in data.get("operators", {}).items():
            M = _lookup(modules, _require(entry, "module", name), "module")
            blocks = _require(entry, "blocks", name)
            if len(blocks) != len(M.heights):
                raise InstanceError(InstanceError.DIMENSION, f"operator {name!r} needs one block per module block")
            operators[name] = ModuleOperator(M, M, tuple(decode_matrix(b, h, h) for b, h in zip(blocks, M.heights)))
        pair = data.get("pair")
        if pair is not None:
            if len(pair) != 2 or any(roles.get(p) != "phi" for p in pair):
                raise InstanceError(InstanceError.INVALID, "pair must name two phi-maps")
            pair = tuple(pair)
    except DimensionMismatch as exc:
        raise InstanceError(InstanceError.DIMENSION, str(exc)) from None
    except (TypeError, AttributeError) as exc:
        raise InstanceError(InstanceError.MALFORMED, str(exc)) from None
    return Instance(
        name=str(data.get("name", "")), algebras=algebras, modules=modules, maps=maps, roles=roles,
        operators=operators, pair=pair, seed=data.get("seed"), tolerance=tolerance,
    )


def to_dict(inst: Instance) -> dict:
    map_names = {id(m): n for n, m in inst.maps.items()}

    def alg_name(a):
        for n, b in inst.algebras.items():
            if b == a:
                return n
        raise InstanceError(InstanceError.INVALID, "map refers to an unnamed algebra")

    def mod_name(m):
        for n, b in inst.modules.items():
            if b == m:
                return n
        raise InstanceError(InstanceError.INVALID, "object refers to an unnamed module")

    maps = {}
    for name, m in inst.maps.items():
        role = inst.roles[name]
        if role == "phi":
            maps[name] = {
                "role": "phi", "domain": mod_name(m.domain), "codomain": mod_name(m.codomain),
                "underlying": map_names[id(m.underlying)], "matrix": encode_matrix(m.matrix),
            }
        else:
            maps[name] = {
                "role": role, "domain": alg_name(m.domain), "codomain": alg_name(m.codomain),
                "choi": [[encode_matrix(c) for c in row] for row in m.choi],
            }
    return {
        "schema": SCHEMA,
        "name": inst.name,
        "seed": inst.seed,
        "tolerance": inst.tolerance,
        "algebras": {n: {"block_dims": list(a.block_dims)} for n, a in inst.algebras.items()},
        "modules": {
            n: {
                "algebra": alg_name(m.algebra),
                "heights": list(m.heights),
                "left_action": list(m.left_action.multiplicities) if m.left_action else None,
            }
            for n, m in inst.modules.items()
        },
        "maps": maps,
        "operators": {
            n: {"module": mod_name(op.domain), "blocks": [encode_matrix(b) for b in op.blocks]}
            for n, op in inst.operators.items()
        },
        "pair": list(inst.pair) if inst.pair else None,
    }


def serialize(inst: Instance) -> str:
    return json.dumps(to_dict(inst), indent=1) + "\n"


def loads(text: str, tol: float | None = None) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(InstanceError.MALFORMED, str(exc)) from None
    return from_dict(data, tol)


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("cpmodules") / "data" / name))


def resolve_path(path) -> Path:
    """A path on disk, falling back to the bundled fixture of that name."""
    p = Path(path)
    if not p.exists() and fixture_path(p.name).exists():
        return fixture_path(p.name)
    return p


def parse_instance(path, tol: float | None = None) -> Instance:
    p = resolve_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InstanceError(InstanceError.INVALID, f"cannot read {path}: {exc.strerror}") from None
    return loads(text, tol)


# --- fixtures ----------------------------------------------------------------

def _schur_map(A, weights):
    w = np.asarray(weights, dtype=complex)
    return choi_of_linear(A, A, lambda a: A.element([w * a.blocks[0]]))


def _rect_map(E, F, phi, rows):
    """Phi-map on ``M_2`` given by ``rows``: each row is a pair of (entry index, coefficient) lists."""
    def func(x):
        t = x.blocks[0].ravel()  # T1, T2, T3, T4
        out = np.array([[sum(c * t[i] for i, c in cell) for cell in row] for row in rows], dtype=complex)
        return F.element([out])
    return PhiMap.from_function(E, F, func, phi)


def equivalent_pair_5x2() -> Instance:
    """Equivalent phi-maps ``M_2 -> M_{5x2}``; ``Phi`` is degenerate.

    ``V_reference`` is the stored candidate intertwiner: it satisfies ``Phi = V Psi``
    but its second row has norm ``sqrt(3)``.
    """
    A = BlockAlgebra((2,))
    E = ModuleShape(A, (2,))
    F = ModuleShape(A, (5,))
    phi = _schur_map(A, [[0.25, 0.0], [0.0, 1.0]])
    a, b = 1 / (2 * np.sqrt(2)), 1 / np.sqrt(3)
    Phi = _rect_map(E, F, phi, [
        [[(0, 0.5)], []], [[], [(3, 1.0)]], [[], []], [[(2, 0.5)], []], [[], [(1, 1.0)]],
    ])
    Psi = _rect_map(E, F, phi, [
        [[(0, a)], [(3, -b)]], [[(0, a)], [(3, b)]], [[], [(1, 1.0)]], [[(2, 0.5)], []], [[], [(3, b)]],
    ])
    r = 1 / np.sqrt(2)
    V = np.array([
        [r, r, 0, 0, 0],
        [0, 0, 0, 0, np.sqrt(3)],
        [0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
    ], dtype=complex)
    return Instance(
        name="equivalent_pair_5x2", algebras={"A": A}, modules={"E": E, "F": F},
        maps={"phi": phi, "Phi": Phi, "Psi": Psi}, roles={"phi": "cp", "Phi": "phi", "Psi": "phi"},
        operators={"V_reference": ModuleOperator(F, F, (V,))}, pair=("Phi", "Psi"),
    )


def equivalent_pair_4x2() -> Instance:
    """Equivalent non-degenerate phi-maps ``M_2 -> M_{4x2}`` related by ``diag(1, -1, 1, 1)``."""
    A = BlockAlgebra((2,))
    E = ModuleShape(A, (2,))
    F = ModuleShape(A, (4,), LeftActionSpec((2,)))
    phi = _schur_map(A, [[3.0, 1.0], [1.0, 3.0]])
    s = np.sqrt(2)
    Phi = _rect_map(E, F, phi, [
        [[(0, s)], [(1, s)]], [[(0, -1.0)], [(1, 1.0)]], [[(2, s)], [(3, s)]], [[(2, -1.0)], [(3, 1.0)]],
    ])
    Psi = _rect_map(E, F, phi, [
        [[(0, s)], [(1, s)]], [[(0, 1.0)], [(1, -1.0)]], [[(2, s)], [(3, s)]], [[(2, -1.0)], [(3, 1.0)]],
    ])
    V = np.diag([1.0, -1.0, 1.0, 1.0]).astype(complex)
    return Instance(
        name="equivalent_pair_4x2", algebras={"A": A}, modules={"E": E, "F": F},
        maps={"phi": phi, "Phi": Phi, "Psi": Psi}, roles={"phi": "cp", "Phi": "phi", "Psi": "phi"},
        operators={"V_reference": ModuleOperator(F, F, (V,))}, pair=("Phi", "Psi"),
    )


def transpose_instance() -> Instance:
    A = BlockAlgebra((2,))
    t = choi_of_linear(A, A, lambda a: A.element([a.blocks[0].T]))
    return Instance(name="transpose_map", algebras={"A": A}, modules={}, maps={"transpose": t},
                    roles={"transpose": "linear"})


FIXTURE_BUILDERS = {
    "equivalent_pair_5x2.json": equivalent_pair_5x2,
    "equivalent_pair_4x2.json": equivalent_pair_4x2,
    "transpose_map.json": transpose_instance,
}


def write_fixtures(directory=None):
    """Regenerate the bundled fixture files."""
    directory = Path(directory) if directory else fixture_path("")
    for fname, build in FIXTURE_BUILDERS.items():
        (directory / fname).write_text(serialize(build()))


def load_fixture(name: str) -> Instance:
    return parse_instance(fixture_path(name))


# --- random generation ---------------------------------------------------------

def generate_random(seed: int, dims=None, heights=None, order_pair: bool = False,
                    pure: bool = False, tol: float = la.DEFAULT_TOL) -> Instance:
    """Random phi-map instance, reproducible from ``seed``.

    ``dims`` fixes the block sizes of the domain algebra.  With
    ``order_pair`` a second map ``Psi = Phi_{sqrt(T (+) S)} <= Phi`` is added;
    with ``pure`` the underlying map has a single rank-one Kraus operator.

    Raises
    ------
    ValueError
        If a block size exceeds 4 or a module height exceeds 8.
    """
    from .dilation import module_stinespring
    from .radon_nikodym import module_commutant, phi_TS, sample_positive_contraction

    rng = make_rng(seed, 0)
    if dims is None:
        dims = tuple(int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 3))))
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 or d > MAX_BLOCK_DIM for d in dims):
        raise ValueError(f"block dims must lie in 1..{MAX_BLOCK_DIM}")
    if heights is None:
        heights = tuple(int(rng.integers(1, 3)) for _ in dims)
    heights = tuple(int(h) for h in heights)
    if len(heights) != len(dims) or any(h < 1 or h > MAX_HEIGHT for h in heights):
        raise ValueError(f"module heights must lie in 1..{MAX_HEIGHT}, one per block")
    A = BlockAlgebra(dims)
    E = ModuleShape(A, heights)
    if pure:
        B = BlockAlgebra((int(rng.integers(1, 4)),))
        j = int(rng.integers(len(dims)))
        kraus = random_kraus(rng, BlockAlgebra((dims[j],)), B, max_rank=1)
        kraus = {(j, 0): [kraus[(0, 0)][0]]}
        Phi = kraus_phi_map(E, B, kraus)
    else:
        B = BlockAlgebra(tuple(int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 3)))))
        Phi = kraus_phi_map(E, B, random_kraus(rng, A, B, 2), rng, int(rng.integers(0, 2)))
    if max(Phi.codomain.heights) > MAX_HEIGHT:
        raise ValueError("generated codomain exceeds the height cap; choose smaller dims")
    maps = {"phi": Phi.underlying, "Phi": Phi}
    roles = {"phi": "cp", "Phi": "phi"}
    pair = None
    if order_pair:
        M = module_stinespring(Phi, None, tol)
        TS = sample_positive_contraction(module_commutant(M, tol), rng)
        Psi = phi_TS(M, M.S, TS.sqrt(), tol)
        maps.update({"psi": Psi.underlying, "Psi": Psi})
        roles.update({"psi": "cp", "Psi": "phi"})
        pair = ("Phi", "Psi")
    return Instance(
        name=f"random_{seed}", algebras={"A": A, "B": B}, modules={"E": E, "F": Phi.codomain},
        maps=maps, roles=roles, pair=pair, seed=int(seed),
    )
