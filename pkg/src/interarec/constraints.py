"""Turns a keyword summary into a validated set of recommendation constraints.

The schema is deliberately narrow: a price band and a color. Price parsing
is total (never raises); each field falls back to absent independently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from typing import Sequence

from .catalog import CatalogSnapshot, Item, Money
from .summarize import ABSENT, KeywordSummary

# first monetary amount in free text; the grouped form is tried first so
# "799,888" is not cut at the comma
_AMOUNT = re.compile(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?")
_CENTS = Decimal("0.01")

_NOT_AVAILABLE = {"not available", "n/a", "none", "unavailable", ""}

# function-call schema for live LLM decomposition; prices are numbers, not
# integers, because extracted summaries carry cents
FUNCTION_CALL_SCHEMA = {
    "name": "get_user_recommendations",
    "description": "Generate dynamic recommendations based on the summary of user behavior",
    "parameters": {
        "type": "object",
        "properties": {
            "lowest_price": {
                "type": "number",
                "description": "get lowest price preference of user.",
            },
            "highest_price": {
                "type": "number",
                "description": "get highest price preference of user.",
            },
            "color": {
                "type": "string",
                "description": "get color preference of user",
            },
        },
    },
}

# base color terms plus synonyms mapped to a canonical base color
_BASE_COLORS = (
    "black", "white", "red", "orange", "yellow", "green", "blue", "purple",
    "pink", "brown", "beige", "grey", "gray", "navy", "cream", "gold",
    "silver", "khaki", "maroon", "olive",
)
_SYNONYMS = {
    "teal": "green",
    "turquoise": "blue",
    "emerald": "green",
    "scarlet": "red",
    "crimson": "red",
    "ivory": "white",
    "charcoal": "grey",
    "tan": "brown",
    "lilac": "purple",
    "violet": "purple",
}


def parse_price(text: str | None) -> Money | None:
    """Extract the first monetary amount from free text, quantized to cents.

    Currency symbols, thousands separators, and surrounding prose are
    ignored. Returns None when there are no digits or the text is a
    not-available marker. Total function: never raises.
    """
    if text is None or text == ABSENT:
        return None
    if text.rstrip(".").strip().casefold() in _NOT_AVAILABLE:
        return None
    match = _AMOUNT.search(text)
    if match is None:
        return None
    amount = Decimal(match.group(0).replace(",", ""))
    return amount.quantize(_CENTS, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class ConstraintSet:
    """Decomposed user preferences: optional price band and color."""

    lowest_price: Money | None = None
    highest_price: Money | None = None
    color: str | None = None

    def is_empty(self) -> bool:
        return self.lowest_price is None and self.highest_price is None and self.color is None

    def to_arguments(self) -> dict:
        """Render as function-call arguments (absent fields omitted)."""
        args: dict = {}
        if self.lowest_price is not None:
            args["lowest_price"] = float(self.lowest_price)
        if self.highest_price is not None:
            args["highest_price"] = float(self.highest_price)
        if self.color is not None:
            args["color"] = self.color
        return args


def constraints_from_arguments(args: dict) -> ConstraintSet:
    """Build a ConstraintSet from function-call arguments (the live path)."""
    def money(key: str) -> Money | None:
        if args.get(key) is None:
            return None
        return Decimal(str(args[key])).quantize(_CENTS, rounding=ROUND_HALF_UP)

    color = args.get("color")
    return ConstraintSet(
        lowest_price=money("lowest_price"),
        highest_price=money("highest_price"),
        color=str(color).strip().lower() if color else None,
    )


def default_color_vocabulary() -> list[tuple[str, str]]:
    """(term, canonical color) pairs with no catalog in hand."""
    vocab = [(c, c) for c in _BASE_COLORS]
    vocab += list(_SYNONYMS.items())
    return vocab


def color_vocabulary(catalog: CatalogSnapshot) -> list[tuple[str, str]]:
    """Catalog-aware vocabulary: distinct lowercase catalog colors first.

    Each full catalog color value maps to itself; the built-in base colors
    and synonym table follow so summary phrasing like "shades of green"
    still resolves.
    """
    vocab: list[tuple[str, str]] = []
    seen = set()
    for item in catalog:
        if item.color:
            value = item.color.strip().lower()
            if value and value not in seen:
                seen.add(value)
                vocab.append((value, value))
    for term, canonical in default_color_vocabulary():
        if term not in seen:
            seen.add(term)
            vocab.append((term, canonical))
    return vocab


def _first_color(text: str, vocabulary: Sequence[tuple[str, str]]) -> str | None:
    """Earliest whole-word vocabulary hit in the text; longest term on ties."""
    lowered = text.lower()
    best: tuple[int, int, str] | None = None
    for term, canonical in vocabulary:
        match = re.search(rf"\b{re.escape(term)}\b", lowered)
        if match is None:
            continue
        key = (match.start(), -len(term))
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], canonical)
    return best[2] if best else None


def decompose(
    summary: KeywordSummary,
    vocabulary: Sequence[tuple[str, str]] | None = None,
) -> ConstraintSet:
    """Pure mapping from a keyword summary to constraints.

    Prices come from the Lowest/Highest Price entries; the color is the
    first vocabulary term found in Product Characteristics.
    """
    if vocabulary is None:
        vocabulary = default_color_vocabulary()
    characteristics = summary.get("Product Characteristics")
    color = None
    if characteristics != ABSENT:
        color = _first_color(characteristics, vocabulary)
    return ConstraintSet(
        lowest_price=parse_price(summary.get("Lowest Price")),
        highest_price=parse_price(summary.get("Highest Price")),
        color=color,
    )


@dataclass(frozen=True)
class Issue:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    status: str  # "valid" or "rejected"
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "valid"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "issues": [{"code": i.code, "message": i.message} for i in self.issues],
        }


def item_matches(constraints: ConstraintSet, item: Item) -> bool:
    """Does one catalog item satisfy every present constraint?

    The price band is inclusive on both ends; the color matches as a whole
    word inside the item's color value, case-insensitively.
    """
    if constraints.lowest_price is not None and item.price < constraints.lowest_price:
        return False
    if constraints.highest_price is not None and item.price > constraints.highest_price:
        return False
    if constraints.color is not None:
        if not item.color:
            return False
        if re.search(rf"\b{re.escape(constraints.color.lower())}\b", item.color.lower()) is None:
            return False
    return True


def validate(constraints: ConstraintSet, catalog: CatalogSnapshot) -> ValidationReport:
    """Range and consistency checks, plus an informational zero-match probe.

    Only RangeViolation and ConsistencyViolation reject; ZeroMatch reports
    an empty feasible set without rejecting.
    """
    issues: list[Issue] = []
    for name, value in (
        ("lowest_price", constraints.lowest_price),
        ("highest_price", constraints.highest_price),
    ):
        if value is not None and (not value.is_finite() or value < 0):
            issues.append(Issue("RangeViolation", f"{name} must be >= 0, got {value}"))
    if (
        constraints.lowest_price is not None
        and constraints.highest_price is not None
        and constraints.lowest_price > constraints.highest_price
    ):
        issues.append(
            Issue(
                "ConsistencyViolation",
                f"lowest_price {constraints.lowest_price} exceeds "
                f"highest_price {constraints.highest_price}",
            )
        )
    rejected = bool(issues)
    if not rejected and not constraints.is_empty():
        if not any(item_matches(constraints, item) for item in catalog):
            issues.append(Issue("ZeroMatch", "no catalog item satisfies the constraints"))
    return ValidationReport(
        status="rejected" if rejected else "valid", issues=tuple(issues)
    )
