"""Scenario files: schema validation, cross-reference resolution, defaults.

A scenario is a JSON document describing one normed space, a catalog of
named operators on it, and a list of theorem checks.  ``load_scenario``
validates the document against the shipped JSON schema, then performs the
semantic checks the schema cannot express (dimension agreement, name
resolution, construction certificates) and returns a fully built
:class:`Scenario`.  Every validation error names the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .errors import ConstructionError, InputError, ScenarioError
from .geometry import NormedSpace
from .operators import (
    DualityMapOperator,
    LinearOperator,
    NormalConeOperator,
    OperatorSum,
    PolyhedralSubdiff,
)
from .convex_sets import PolytopeH

# fields each theorem requires beyond "operator"
_REQUIRED_FIELDS = {
    "representation": ("point",),
    "face_inclusion": ("point", "direction"),
    "support_formula": ("point", "direction"),
    "lower_bound": ("point", "direction", "dual_point"),
    "operator_equality": ("operator2",),
    "trajectory": ("point",),
}

_VECTOR_FIELDS = ("point", "direction", "dual_point")


def _load_schema():
    text = resources.files("monotonelab").joinpath(
        "fixtures/scenario.schema.json"
    ).read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class CheckSpec:
    """One resolved theorem check from a scenario file."""

    index: int
    check_id: str
    theorem: str
    operator: str
    operator2: str | None = None
    point: np.ndarray | None = None
    direction: np.ndarray | None = None
    dual_point: np.ndarray | None = None
    sample_points: tuple | None = None
    expected: float | None = None
    exact: bool = False
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: space, operator catalog, checks, defaults."""

    name: str
    space: NormedSpace
    operators: dict
    checks: tuple
    seed: int = 0
    output_dir: str | None = None


def _vector(raw, n, where):
    v = np.asarray(raw, dtype=float)
    if v.shape != (n,):
        raise ScenarioError(f"{where}: expected a length-{n} vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ScenarioError(f"{where}: entries must be finite")
    return v


def _build_operator(desc, index, space, built):
    name = desc["name"]
    kind = desc["kind"]
    where = f"operators[{index}] ({name})"
    n = space.n

    def need(key):
        if key not in desc:
            raise ScenarioError(f"{where}.{key}: required for kind '{kind}'")
        return desc[key]

    try:
        if kind == "subdiff_poly":
            slopes = np.asarray(need("slopes"), dtype=float)
            intercepts = np.asarray(need("intercepts"), dtype=float)
            if slopes.ndim != 2 or slopes.shape[1] != n:
                raise ScenarioError(f"{where}.slopes: expected rows of length {n}")
            return PolyhedralSubdiff(slopes, intercepts)
        if kind == "normal_cone":
            if "box" in desc:
                lower = _vector(desc["box"]["lower"], n, f"{where}.box.lower")
                upper = _vector(desc["box"]["upper"], n, f"{where}.box.upper")
                return NormalConeOperator(PolytopeH.box(lower, upper))
            rows = np.asarray(need("rows"), dtype=float)
            offsets = np.asarray(need("offsets"), dtype=float)
            if rows.size and (rows.ndim != 2 or rows.shape[1] != n):
                raise ScenarioError(f"{where}.rows: expected rows of length {n}")
            return NormalConeOperator(PolytopeH(rows.reshape(-1, n), offsets, n=n))
        if kind == "linear":
            matrix = np.asarray(need("matrix"), dtype=float)
            if matrix.shape != (n, n):
                raise ScenarioError(f"{where}.matrix: expected shape ({n}, {n})")
            shift = (
                _vector(desc["shift"], n, f"{where}.shift")
                if "shift" in desc
                else np.zeros(n)
            )
            return LinearOperator(matrix, shift)
        if kind == "duality_map":
            return DualityMapOperator(space)
        if kind == "sum":
            parts = need("parts")
            missing = [p for p in parts if p not in built]
            if missing:
                raise ScenarioError(
                    f"{where}.parts: unknown operator name(s) {missing}; "
                    "parts must be defined earlier in the operators list"
                )
            return OperatorSum(tuple(built[p] for p in parts))
    except ScenarioError:
        raise
    except (ConstructionError, InputError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    raise ScenarioError(f"{where}.kind: unknown kind '{kind}'")


def _build_check(raw, index, space, operators):
    where = f"checks[{index}]"
    theorem = raw["theorem"]
    n = space.n

    for ref_key in ("operator", "operator2"):
        if ref_key in raw and raw[ref_key] not in operators:
            raise ScenarioError(
                f"{where}.{ref_key}: unknown operator name '{raw[ref_key]}'"
            )
    for req in _REQUIRED_FIELDS[theorem]:
        if req not in raw:
            raise ScenarioError(f"{where}.{req}: required for theorem '{theorem}'")
    if "expected" in raw and theorem != "support_formula":
        raise ScenarioError(
            f"{where}.expected: only valid for theorem 'support_formula'"
        )

    vectors = {}
    for key in _VECTOR_FIELDS:
        if key in raw:
            vectors[key] = _vector(raw[key], n, f"{where}.{key}")
    if "direction" in vectors and not np.any(vectors["direction"]):
        raise ScenarioError(f"{where}.direction: must be nonzero")

    sample_points = None
    if "sample_points" in raw:
        sample_points = tuple(
            _vector(pt, n, f"{where}.sample_points[{j}]")
            for j, pt in enumerate(raw["sample_points"])
        )

    expected = None
    if "expected" in raw:
        e = raw["expected"]
        expected = math.inf if e == "inf" else (-math.inf if e == "-inf" else float(e))

    return CheckSpec(
        index=index,
        check_id=raw.get("id", f"check_{index:03d}"),
        theorem=theorem,
        operator=raw["operator"],
        operator2=raw.get("operator2"),
        point=vectors.get("point"),
        direction=vectors.get("direction"),
        dual_point=vectors.get("dual_point"),
        sample_points=sample_points,
        expected=expected,
        exact=bool(raw.get("exact", False)),
        overrides=dict(raw.get("overrides", {})),
    )


def load_scenario(path):
    """Load, validate, and resolve a scenario JSON file.

    Parameters
    ----------
    path : str or pathlib.Path
        Location of the scenario document.

    Returns
    -------
    Scenario
        Fully validated scenario with all operators constructed.

    Raises
    ------
    ScenarioError
        On parse errors (with line/column), schema violations, or semantic
        failures; the message names the offending field.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc

    validator = jsonschema.Draft202012Validator(_load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        loc = ".".join(str(part) for part in first.absolute_path) or "<root>"
        raise ScenarioError(f"{loc}: {first.message}")

    p = float(doc["space"]["p"])
    if not (1.0 < p < math.inf):
        raise ScenarioError(f"space.p: p must lie in (1, ∞), got {p}")
    space = NormedSpace(int(doc["space"]["n"]), p)

    operators = {}
    for i, desc in enumerate(doc["operators"]):
        name = desc["name"]
        if name in operators:
            raise ScenarioError(f"operators[{i}].name: duplicate name '{name}'")
        operators[name] = _build_operator(desc, i, space, operators)

    checks = []
    seen_ids = set()
    for i, raw in enumerate(doc["checks"]):
        check = _build_check(raw, i, space, operators)
        if check.check_id in seen_ids:
            raise ScenarioError(f"checks[{i}].id: duplicate id '{check.check_id}'")
        seen_ids.add(check.check_id)
        checks.append(check)

    return Scenario(
        name=doc["name"],
        space=space,
        operators=operators,
        checks=tuple(checks),
        seed=int(doc.get("seed", 0)),
        output_dir=doc.get("output_dir"),
    )
