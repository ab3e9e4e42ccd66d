"""Item universe: attributes, prices, persistence, and attribute-text serialization.

Prices are exact decimals end to end; they are only converted to floats
inside the numerical choice-model routines.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import DuplicateIdError, InvalidPriceError, MissingFieldError

Money = Decimal


def as_money(value) -> Money:
    """Convert a raw numeric value to an exact decimal amount.

    Floats go through their shortest-repr string so 18.5 stays 18.5.
    """
    if isinstance(value, Decimal):
        return value
    if isinstance(value, bool):
        raise InvalidPriceError(f"price is not a number: {value!r}")
    if isinstance(value, float):
        return Decimal(str(value))
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, str):
        try:
            return Decimal(value)
        except InvalidOperation as exc:
            raise InvalidPriceError(f"price is not a number: {value!r}") from exc
    raise InvalidPriceError(f"price is not a number: {value!r}")


@dataclass(frozen=True)
class Item:
    """One catalog entry. ``extra_attrs`` preserves unknown attributes verbatim."""

    item_id: str
    price: Money
    title: str | None = None
    brand: str | None = None
    color: str | None = None
    extra_attrs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.item_id:
            raise MissingFieldError("item_id must be nonempty")
        if not self.price.is_finite() or self.price < 0:
            raise InvalidPriceError(
                f"item {self.item_id!r}: price must be finite and >= 0, got {self.price}"
            )


def attribute_text(item: Item) -> str:
    """Serialize an item to the text embedded by the re-ranker.

    Present fields join in fixed order (title, brand, color, price with
    two decimals, extra attribute values) separated by single spaces.
    """
    parts = [p for p in (item.title, item.brand, item.color) if p]
    parts.append(f"{item.price:.2f}")
    parts.extend(v for _, v in item.extra_attrs if v)
    return " ".join(parts)


@dataclass(frozen=True)
class CatalogSnapshot:
    """Immutable, insertion-ordered item universe."""

    items: tuple[Item, ...]
    version: int = 1
    _by_id: Mapping[str, Item] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id: dict[str, Item] = {}
        for item in self.items:
            if item.item_id in by_id:
                raise DuplicateIdError(f"duplicate item_id {item.item_id!r}")
            by_id[item.item_id] = item
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Item]:
        return iter(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def get(self, item_id: str) -> Item | None:
        return self._by_id.get(item_id)

    def item_ids(self) -> tuple[str, ...]:
        return tuple(i.item_id for i in self.items)

    def prices(self) -> dict[str, Money]:
        return {i.item_id: i.price for i in self.items}


def _item_from_record(record: Mapping) -> Item:
    if "item_id" not in record or not record.get("item_id"):
        raise MissingFieldError(f"record missing item_id: {record!r}")
    if "price" not in record or record.get("price") is None:
        raise MissingFieldError(f"record {record['item_id']!r} missing price")
    attrs = record.get("attrs") or {}
    return Item(
        item_id=str(record["item_id"]),
        price=as_money(record["price"]),
        title=record.get("title"),
        brand=record.get("brand"),
        color=record.get("color"),
        extra_attrs=tuple((str(k), str(v)) for k, v in attrs.items()),
    )


def import_catalog(records: Iterable[Mapping], version: int = 1) -> CatalogSnapshot:
    """Build a snapshot from raw item records, validating each one.

    Raises DuplicateIdError, InvalidPriceError, or MissingFieldError on the
    first offending record.
    """
    items = tuple(_item_from_record(r) for r in records)
    return CatalogSnapshot(items=items, version=version)


# --- catalog file format (line-delimited JSON) ------------------------------

def read_catalog_records(path: Path | str) -> list[dict]:
    """Decode a catalog file into raw records, keeping prices exact."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            records.append(json.loads(line, parse_float=Decimal))
    return records


def _record_line(item: Item) -> str:
    # price is spliced in as a bare decimal literal so 18.00 survives the
    # round trip instead of collapsing to 18.0
    parts = [f'"item_id": {json.dumps(item.item_id)}', f'"price": {item.price:f}']
    for key, value in (("title", item.title), ("brand", item.brand), ("color", item.color)):
        if value is not None:
            parts.append(f'"{key}": {json.dumps(value, ensure_ascii=False)}')
    if item.extra_attrs:
        attrs = json.dumps(dict(item.extra_attrs), ensure_ascii=False)
        parts.append(f'"attrs": {attrs}')
    return "{" + ", ".join(parts) + "}"


def write_catalog_file(snapshot: CatalogSnapshot, path: Path | str) -> None:
    """Write the snapshot in the catalog file format, one item per line."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for item in snapshot.items:
            fh.write(_record_line(item) + "\n")
    tmp.replace(path)


def load_catalog_file(path: Path | str, version: int = 1) -> CatalogSnapshot:
    return import_catalog(read_catalog_records(path), version=version)


class CatalogStore:
    """Single-writer persistent home for the current snapshot.

    Snapshots are immutable; readers may hold them across imports.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._snapshot: CatalogSnapshot | None = None

    @property
    def _catalog_path(self) -> Path:
        return self.root / "catalog.jsonl"

    @property
    def _meta_path(self) -> Path:
        return self.root / "meta.json"

    def current(self) -> CatalogSnapshot | None:
        with self._lock:
            if self._snapshot is None and self._catalog_path.exists():
                version = 1
                if self._meta_path.exists():
                    version = json.loads(self._meta_path.read_text())["version"]
                self._snapshot = load_catalog_file(self._catalog_path, version=version)
            return self._snapshot

    def import_records(self, records: Sequence[Mapping]) -> CatalogSnapshot:
        """Validate, bump the version, persist, and publish a new snapshot."""
        with self._lock:
            version = self._snapshot.version + 1 if self._snapshot else 1
            if self._snapshot is None and self._meta_path.exists():
                version = json.loads(self._meta_path.read_text())["version"] + 1
            snapshot = import_catalog(records, version=version)
            write_catalog_file(snapshot, self._catalog_path)
            tmp = self._meta_path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"version": version}))
            tmp.replace(self._meta_path)
            self._snapshot = snapshot
            return snapshot
