"""Multinomial-logit choice model: probabilities, revenue, estimation, and
assortment optimization under decomposed constraints.

The outside (no-purchase) weight v0 is fixed to 1 for identifiability and
item weights live in [0, 1]. Every revenue figure that leaves this module
is computed by ``expected_revenue`` with one canonical summation order, so
the optimizer and the brute-force oracle agree bit for bit.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .catalog import CatalogSnapshot
from .constraints import ConstraintSet, item_matches
from .errors import (
    DegenerateDataWarning,
    EmptyTrainingSetError,
    ItemNotOfferedError,
    NeverOfferedError,
    TooLargeError,
    UnknownItemError,
)

NO_PURCHASE = None
UNBOUNDED = None

WEIGHT_FLOOR = 1e-9
WEIGHT_CEIL = 1.0

_BRUTE_FORCE_CAP = 20
_CHUNK = 1 << 16
_TIE_TOL = 1e-12
_TIE_CANDIDATE_CAP = 1024


@dataclass(frozen=True)
class MnlParameters:
    """Preference weights: v0 for walking away, v[item] for purchasing it."""

    v: dict[str, float]
    v0: float = 1.0

    def __post_init__(self):
        if not self.v0 > 0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        for item_id, weight in self.v.items():
            if not 0.0 <= weight <= 1.0:
                raise ValueError(f"weight for {item_id!r} outside [0, 1]: {weight}")

    def weight(self, item_id: str) -> float:
        try:
            return self.v[item_id]
        except KeyError:
            raise UnknownItemError(f"no weight for item {item_id!r}") from None


def mnl_probability(params: MnlParameters, assortment: Iterable[str], k: str) -> float:
    """P(user picks k | assortment offered) = v_k / (v0 + sum of offered weights)."""
    offered = sorted(set(assortment))
    if k not in offered:
        raise ItemNotOfferedError(f"item {k!r} is not in the offered assortment")
    denom = params.v0
    for item_id in offered:
        denom += params.weight(item_id)
    return params.weight(k) / denom


def no_purchase_probability(params: MnlParameters, assortment: Iterable[str]) -> float:
    denom = params.v0
    for item_id in sorted(set(assortment)):
        denom += params.weight(item_id)
    return params.v0 / denom


def expected_revenue(
    params: MnlParameters, catalog: CatalogSnapshot, assortment: Iterable[str]
) -> float:
    """R(S) = sum over S of price_k * P(k|S); the empty set earns 0.

    Terms accumulate in sorted item_id order with a single final division,
    which is the arithmetic every caller must share for exact comparisons.
    """
    offered = sorted(set(assortment))
    if not offered:
        return 0.0
    denom = params.v0
    numer = 0.0
    for item_id in offered:
        item = catalog.get(item_id)
        if item is None:
            raise UnknownItemError(f"item {item_id!r} is not in the catalog")
        w = params.weight(item_id)
        denom += w
        numer += float(item.price) * w
    return numer / denom


# --- estimation ---------------------------------------------------------------

@dataclass(frozen=True)
class Transaction:
    """One observed offer: the assortment shown and what was chosen.

    ``chosen`` is an item_id or None for walking away without a purchase.
    """

    offered: tuple[str, ...]
    chosen: str | None = NO_PURCHASE

    def __post_init__(self):
        if self.chosen is not None and self.chosen not in self.offered:
            raise ItemNotOfferedError(
                f"chosen item {self.chosen!r} was not offered"
            )


def estimate_mnl(
    transactions: Sequence[Transaction],
    items: Sequence[str] | None = None,
) -> MnlParameters:
    """Maximum-likelihood weights from purchase transactions, v0 fixed at 1.

    Optimizes the log-likelihood in log-weight space to gradient norm
    1e-8, then clamps weights to [1e-9, 1]. A weight that lands at the
    upper clamp signals degenerate data (the item outperforms walking
    away); it is reported with a DegenerateDataWarning, never silently.
    """
    if not transactions:
        raise EmptyTrainingSetError("estimation needs at least one transaction")
    observed: set[str] = set()
    for t in transactions:
        observed.update(t.offered)
    if items is None:
        universe = sorted(observed)
    else:
        universe = sorted(set(items))
        missing = [i for i in universe if i not in observed]
        if missing:
            raise NeverOfferedError(
                f"items never offered in any transaction: {missing[:5]}"
            )
    index = {item_id: i for i, item_id in enumerate(universe)}
    n = len(universe)

    # group by offered set: choice counts per item plus the no-purchase count
    groups: dict[tuple[str, ...], np.ndarray] = {}
    for t in transactions:
        key = tuple(sorted(set(t.offered)))
        counts = groups.get(key)
        if counts is None:
            counts = np.zeros(n + 1)
            groups[key] = counts
        counts[n if t.chosen is None else index[t.chosen]] += 1

    group_masks = []
    group_counts = []
    for key, counts in sorted(groups.items()):
        mask = np.zeros(n, dtype=bool)
        for item_id in key:
            mask[index[item_id]] = True
        group_masks.append(mask)
        group_counts.append(counts)

    chosen_totals = np.zeros(n)
    for counts in group_counts:
        chosen_totals += counts[:n]

    def negative_ll_and_grad(w: np.ndarray):
        ll = float(np.dot(chosen_totals, w))
        grad = chosen_totals.copy()
        ev = np.exp(w)
        for mask, counts in zip(group_masks, group_counts):
            total = counts.sum()
            denom = 1.0 + float(ev[mask].sum())
            ll -= total * np.log(denom)
            grad[mask] -= total * ev[mask] / denom
        return -ll, -grad

    def grad_and_hessian(w: np.ndarray):
        grad = chosen_totals.copy()
        hess = np.zeros((n, n))
        ev = np.exp(w)
        for mask, counts in zip(group_masks, group_counts):
            total = counts.sum()
            idx = np.flatnonzero(mask)
            probs = ev[idx] / (1.0 + float(ev[idx].sum()))
            grad[idx] -= total * probs
            hess[np.ix_(idx, idx)] -= total * (np.diag(probs) - np.outer(probs, probs))
        return grad, hess

    # generous log-space box keeps always-chosen items from running away;
    # the statistical clamp to [1e-9, 1] happens afterwards
    lo, hi = np.log(1e-12), np.log(1e6)
    result = minimize(
        negative_ll_and_grad,
        np.zeros(n),
        jac=True,
        method="L-BFGS-B",
        bounds=[(lo, hi)] * n,
        options={"maxiter": 20_000, "ftol": 1e-14, "gtol": 1e-12},
    )
    w = result.x
    # L-BFGS-B stalls near machine epsilon of the objective; Newton steps
    # drive the (projected) gradient norm well under the 1e-8 target
    for _ in range(100):
        grad, hess = grad_and_hessian(w)
        projected = grad.copy()
        projected[(w <= lo + 1e-9) & (projected < 0)] = 0.0
        projected[(w >= hi - 1e-9) & (projected > 0)] = 0.0
        if np.linalg.norm(projected) <= 1e-10:
            break
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        w = np.clip(w - step, lo, hi)

    raw = np.exp(w)
    v: dict[str, float] = {}
    for item_id, value in zip(universe, raw):
        clamped = min(max(float(value), WEIGHT_FLOOR), WEIGHT_CEIL)
        if value > WEIGHT_CEIL + 1e-6:
            warnings.warn(
                f"item {item_id!r}: estimated weight {value:.6g} exceeds 1; "
                "clamped (item beats the no-purchase option)",
                DegenerateDataWarning,
                stacklevel=2,
            )
        v[item_id] = clamped
    return MnlParameters(v=v)


# --- feasibility and optimization ----------------------------------------------

@dataclass(frozen=True)
class FeasibleSpec:
    """What counts as an allowed assortment: constraints plus optional size cap."""

    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    max_cardinality: int | None = UNBOUNDED

    def __post_init__(self):
        if self.max_cardinality is not None and self.max_cardinality < 1:
            raise ValueError(
                f"max_cardinality must be >= 1 when bounded, got {self.max_cardinality}"
            )


@dataclass(frozen=True)
class Assortment:
    """An offered set with its expected revenue (recomputable within 1e-9)."""

    items: tuple[str, ...]
    revenue: float


def filter_catalog(catalog: CatalogSnapshot, constraints: ConstraintSet):
    """Catalog items satisfying every present constraint, catalog order kept."""
    return tuple(item for item in catalog if item_matches(constraints, item))


def brute_force_optimal(
    params: MnlParameters, catalog: CatalogSnapshot, spec: FeasibleSpec
) -> Assortment:
    """Exhaustive oracle: best assortment over all subsets of the filtered items.

    Ties break toward the smaller set, then lexicographic item order.
    Refuses more than 20 post-filter items.
    """
    filtered = sorted(
        (item.item_id for item in filter_catalog(catalog, spec.constraints))
    )
    n = len(filtered)
    if n > _BRUTE_FORCE_CAP:
        raise TooLargeError(
            f"{n} items after filtering exceeds the exhaustive cap of {_BRUTE_FORCE_CAP}"
        )
    if n == 0:
        return Assortment(items=(), revenue=0.0)
    weights = np.array([params.weight(i) for i in filtered])
    prices = []
    for item_id in filtered:
        item = catalog.get(item_id)
        if item is None:
            raise UnknownItemError(f"item {item_id!r} is not in the catalog")
        prices.append(float(item.price))
    pv = np.array(prices) * weights
    cap = spec.max_cardinality if spec.max_cardinality is not None else n

    bit = np.arange(n, dtype=np.uint32)
    best_rev = -1.0
    candidates: list[int] = []
    for start in range(0, 1 << n, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.uint32)
        member = ((masks[:, None] >> bit) & 1).astype(np.float64)
        sizes = member.sum(axis=1)
        denom = 1.0 + member @ weights
        rev = (member @ pv) / denom
        rev[sizes > cap] = -np.inf
        chunk_best = float(rev.max())
        if chunk_best > best_rev + _TIE_TOL * max(1.0, abs(best_rev)):
            best_rev = chunk_best
            candidates = []
        tol = _TIE_TOL * max(1.0, abs(best_rev))
        if chunk_best >= best_rev - tol:
            for m in masks[rev >= best_rev - tol]:
                if len(candidates) < _TIE_CANDIDATE_CAP:
                    candidates.append(int(m))

    # settle near-ties with the canonical arithmetic and the deterministic
    # ordering: highest exact revenue, then fewer items, then lexicographic
    def subset(mask: int) -> tuple[str, ...]:
        return tuple(filtered[i] for i in range(n) if mask >> i & 1)

    scored = [
        (expected_revenue(params, catalog, items), items)
        for items in (subset(m) for m in candidates)
    ]
    revenue, items = min(scored, key=lambda t: (-t[0], len(t[1]), t[1]))
    return Assortment(items=items, revenue=revenue)


def optimize_assortment(
    params: MnlParameters, catalog: CatalogSnapshot, spec: FeasibleSpec
) -> Assortment:
    """Best feasible assortment under the decomposed constraints.

    Unbounded cardinality uses the revenue-ordered procedure: sort the
    filtered items by price descending and evaluate the nested prefix
    sets, one of which is optimal for unconstrained MNL. A bounded
    cardinality falls back to the exhaustive oracle.
    """
    if spec.max_cardinality is not None:
        return brute_force_optimal(params, catalog, spec)
    filtered = filter_catalog(catalog, spec.constraints)
    ordered = sorted(filtered, key=lambda item: (-float(item.price), item.item_id))
    best: tuple[float, int, tuple[str, ...]] | None = None
    for size in range(len(ordered) + 1):
        items = tuple(sorted(item.item_id for item in ordered[:size]))
        revenue = expected_revenue(params, catalog, items)
        key = (-revenue, len(items), items)
        if best is None or key < best:
            best = key
    assert best is not None
    return Assortment(items=best[2], revenue=-best[0])


# --- file formats ---------------------------------------------------------------

def write_mnl_params(params: MnlParameters, path: Path | str) -> None:
    payload = {"v0": params.v0, "v": {k: params.v[k] for k in sorted(params.v)}}
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)


def read_mnl_params(path: Path | str) -> MnlParameters:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return MnlParameters(v={k: float(w) for k, w in payload["v"].items()},
                         v0=float(payload["v0"]))


def write_transactions_file(
    transactions: Iterable[Transaction], path: Path | str
) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for t in transactions:
            fh.write(
                json.dumps({"offered": list(t.offered), "chosen": t.chosen}) + "\n"
            )
    tmp.replace(path)


def read_transactions_file(path: Path | str) -> list[Transaction]:
    transactions = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            transactions.append(
                Transaction(
                    offered=tuple(record["offered"]), chosen=record.get("chosen")
                )
            )
    return transactions
