"""Scenario-context subsets and set algebra over them.

The 17 base subsets partition the pool along six tag axes. Expressions
combine them with intersection (``∩`` or ``&``), union (``∪`` or ``|``) and
difference (``\\`` or ``-``). Intersection binds tighter than union and
difference, which associate left to right; parentheses group.
"""

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Union

from capfi.config.defaults import CLOSE_PROXIMITY_M, MEDIUM_PROXIMITY_M
from capfi.data.models import (
    Crosswalk,
    Manifest,
    Proximity,
    Roadway,
    Sample,
    SpeedState,
    TrafficLight,
)
from capfi.utils.exceptions import UnknownNotationError, ValidationError
from capfi.utils.validators import validate_distance

INTERSECT = "∩"
UNION = "∪"
DIFFERENCE = "\\"


@dataclass(frozen=True)
class ContextSet:
    """A named subset of sample ids, in manifest order."""

    notation: str
    members: tuple[str, ...]
    _lookup: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lookup = frozenset(self.members)
        if len(lookup) != len(self.members):
            raise ValueError(f"Context {self.notation} has duplicate members")
        object.__setattr__(self, "_lookup", lookup)

    @property
    def cardinality(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, sample_id: object) -> bool:
        return sample_id in self._lookup


def proximity_bucket(mean_distance: float) -> Proximity:
    """Bucket a mean distance: (0, 15] close, (15, 30] medium, above 30 far.

    Raises:
        ValueError: For a non-positive distance.
    """
    validate_distance(mean_distance)
    if mean_distance <= CLOSE_PROXIMITY_M:
        return Proximity.CLOSE
    if mean_distance <= MEDIUM_PROXIMITY_M:
        return Proximity.MEDIUM
    return Proximity.FAR


def _tag(axis: str, value: object) -> Callable[[Sample], bool]:
    def predicate(sample: Sample) -> bool:
        current = getattr(sample.tags, axis)
        if current is None:
            raise ValidationError(f"tag '{axis}' is unresolved", sample.id, f"tags.{axis}")
        return current == value

    return predicate


# Group name -> [(notation, predicate)], in reporting order
BASE_GROUPS: dict[str, list[tuple[str, Callable[[Sample], bool]]]] = {
    "Crossing State": [
        ("S_C", lambda s: s.label == 1),
        ("S_NC", lambda s: s.label == 0),
    ],
    "Roadway Type": [
        ("S_FW", _tag("roadway", Roadway.FOUR_WAY)),
        ("S_MB", _tag("roadway", Roadway.MIDBLOCK)),
        ("S_TJ", _tag("roadway", Roadway.T_JUNCTION)),
    ],
    "Traffic-Light State": [
        ("S_Red", _tag("light", TrafficLight.RED)),
        ("S_Yellow", _tag("light", TrafficLight.YELLOW)),
        ("S_Green", _tag("light", TrafficLight.GREEN)),
    ],
    "Crosswalk State": [
        ("S_ZC", _tag("crosswalk", Crosswalk.ZEBRA)),
        ("S_NZC", _tag("crosswalk", Crosswalk.NON_ZEBRA)),
    ],
    "Proximity Level": [
        ("S_CP", _tag("proximity", Proximity.CLOSE)),
        ("S_MP", _tag("proximity", Proximity.MEDIUM)),
        ("S_FP", _tag("proximity", Proximity.FAR)),
    ],
    "Ego-Vehicle Speed": [
        ("S_Acc", _tag("ego_speed_state", SpeedState.ACCELERATING)),
        ("S_Const", _tag("ego_speed_state", SpeedState.CONSTANT)),
        ("S_Stopped", _tag("ego_speed_state", SpeedState.STOPPED)),
        ("S_Dec", _tag("ego_speed_state", SpeedState.DECELERATING)),
    ],
}

BASE_NOTATIONS: tuple[str, ...] = tuple(
    notation for group in BASE_GROUPS.values() for notation, _ in group
)

NOTATION_ALIASES = {"S_CN": "S_NC"}

# High-risk crossing scenarios
HAZARD_EXPRESSIONS: tuple[str, ...] = (
    "S_C∩S_Acc",
    "S_C∩S_CP∩S_MB",
    "S_C∩S_Green",
    "S_C∩S_MB∩S_NZC∩S_Const",
)

ALL_SAMPLES_EXPRESSION = "S_C∪S_NC"

# (feature, source expression, donor expression)
CROSS_CONTEXT_PRESETS: tuple[tuple[str, str, str], ...] = (
    ("speed", "S_C∪S_Dec", "S_Const"),
    ("speed", "S_NC∪S_Const", "S_Dec"),
)


def build_subsets(manifest: Manifest) -> dict[str, ContextSet]:
    """Build the 17 base context subsets of a manifest.

    A sample lands in at most one subset per tag axis and may sit in
    several subsets across axes.
    """
    subsets: dict[str, ContextSet] = {}
    for group in BASE_GROUPS.values():
        for notation, predicate in group:
            members = tuple(sample.id for sample in manifest.samples if predicate(sample))
            subsets[notation] = ContextSet(notation=notation, members=members)
    return subsets


# ---------------- set algebra ----------------

_TOKEN = re.compile(r"\s*(?:(S_[A-Za-z0-9]+)|([∩&∪|\\\-()]))")
_OPERATORS = {"∩": INTERSECT, "&": INTERSECT, "∪": UNION, "|": UNION, "\\": DIFFERENCE, "-": DIFFERENCE}


@dataclass(frozen=True)
class _Node:
    op: Optional[str]
    name: Optional[str] = None
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None


def _tokenize(expr: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    stripped = expr.strip()
    while pos < len(stripped):
        match = _TOKEN.match(stripped, pos)
        if not match or match.end() == pos:
            raise ValueError(f"Cannot parse context expression '{expr}' at position {pos}")
        name, symbol = match.groups()
        if name is not None:
            tokens.append(NOTATION_ALIASES.get(name, name))
        else:
            tokens.append(_OPERATORS.get(symbol, symbol))
        pos = match.end()
    if not tokens:
        raise ValueError("Empty context expression")
    return tokens


class _Parser:
    """Recursive descent: expr := term ((∪|\\) term)*, term := atom (∩ atom)*."""

    def __init__(self, tokens: list[str], expr: str):
        self.tokens = tokens
        self.pos = 0
        self.expr = expr

    def _peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _take(self) -> str:
        token = self._peek()
        if token is None:
            raise ValueError(f"Unexpected end of context expression '{self.expr}'")
        self.pos += 1
        return token

    def parse(self) -> _Node:
        node = self._expr()
        if self._peek() is not None:
            raise ValueError(f"Unexpected '{self._peek()}' in context expression '{self.expr}'")
        return node

    def _expr(self) -> _Node:
        node = self._term()
        while self._peek() in (UNION, DIFFERENCE):
            op = self._take()
            node = _Node(op=op, left=node, right=self._term())
        return node

    def _term(self) -> _Node:
        node = self._atom()
        while self._peek() == INTERSECT:
            self._take()
            node = _Node(op=INTERSECT, left=node, right=self._atom())
        return node

    def _atom(self) -> _Node:
        token = self._take()
        if token == "(":
            node = self._expr()
            if self._take() != ")":
                raise ValueError(f"Missing ')' in context expression '{self.expr}'")
            return node
        if token.startswith("S_"):
            return _Node(op=None, name=token)
        raise ValueError(f"Unexpected '{token}' in context expression '{self.expr}'")


def _evaluate(node: _Node, subsets: Mapping[str, ContextSet]) -> set[str]:
    if node.op is None:
        assert node.name is not None
        if node.name not in subsets:
            raise UnknownNotationError(node.name)
        return set(subsets[node.name].members)
    assert node.left is not None and node.right is not None
    left = _evaluate(node.left, subsets)
    right = _evaluate(node.right, subsets)
    if node.op == INTERSECT:
        return left & right
    if node.op == UNION:
        return left | right
    return left - right


def _render(node: _Node) -> str:
    """Canonical notation; parentheses only where precedence needs them."""
    if node.op is None:
        assert node.name is not None
        return node.name
    assert node.left is not None and node.right is not None
    left = _render(node.left)
    right = _render(node.right)
    if node.op == INTERSECT:
        if node.left.op in (UNION, DIFFERENCE):
            left = f"({left})"
        if node.right.op is not None:
            right = f"({right})"
    elif node.right.op in (UNION, DIFFERENCE):
        right = f"({right})"
    return f"{left}{node.op}{right}"


def subset_algebra(
    expr: str,
    manifest: Manifest,
    subsets: Optional[Mapping[str, ContextSet]] = None,
) -> ContextSet:
    """Evaluate a set expression over context notations.

    Args:
        expr: Expression such as ``"S_C ∩ S_MB ∩ S_NZC ∩ S_Const"`` or ``"S_C & S_Acc"``.
        manifest: Manifest that fixes member order.
        subsets: Precomputed base subsets (built from ``manifest`` if omitted).

    Returns:
        ContextSet whose notation records the normalized expression.

    Raises:
        UnknownNotationError: For a notation that is not defined.
        ValueError: For a malformed expression.
    """
    if subsets is None:
        subsets = build_subsets(manifest)
    tree = _Parser(_tokenize(expr), expr).parse()
    selected = _evaluate(tree, subsets)
    members = tuple(sample_id for sample_id in manifest.ids if sample_id in selected)
    return ContextSet(notation=_render(tree), members=members)


def resolve_contexts(
    selection: Union[str, Iterable[str]],
    manifest: Manifest,
    subsets: Optional[Mapping[str, ContextSet]] = None,
) -> list[ContextSet]:
    """Expand a context selection into ContextSets.

    ``selection`` may be a comma list or an iterable of items; each item is a
    keyword (``base``, ``hazards``, ``all``), a notation, or an expression.
    """
    if subsets is None:
        subsets = build_subsets(manifest)
    items = selection.split(",") if isinstance(selection, str) else list(selection)

    resolved: list[ContextSet] = []
    seen: set[str] = set()
    for raw in items:
        item = raw.strip()
        if not item:
            continue
        if item == "base":
            candidates = [subsets[n] for n in BASE_NOTATIONS]
        elif item == "hazards":
            candidates = [subset_algebra(e, manifest, subsets) for e in HAZARD_EXPRESSIONS]
        elif item == "all":
            candidates = [subset_algebra(ALL_SAMPLES_EXPRESSION, manifest, subsets)]
        else:
            candidates = [subset_algebra(item, manifest, subsets)]
        for context in candidates:
            if context.notation not in seen:
                seen.add(context.notation)
                resolved.append(context)

    if not resolved:
        raise ValueError("Context selection is empty")
    return resolved
