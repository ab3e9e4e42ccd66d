"""
From purchase logs to a constrained revenue-optimal assortment
==============================================================

Estimates MNL attraction weights from simulated transactions, turns a
keyword summary into price/color constraints, and compares the optimal
assortment with and without those constraints.

Usage: python3 demos/assortment_pipeline.py
"""

from decimal import Decimal

from interarec import (
    CatalogSnapshot,
    ConstraintSet,
    FeasibleSpec,
    Item,
    MnlParameters,
    decompose,
    estimate_mnl,
    optimize_assortment,
    parse_summary_text,
    simulate_transactions,
    validate,
)

# a small apparel catalog; prices are exact decimals
catalog = CatalogSnapshot(
    items=tuple(
        Item(item_id=item_id, title=title, price=Decimal(price), color=color)
        for item_id, title, price, color in [
            ("smock", "puff sleeve mini smock dress", "18.00", "bright green"),
            ("cami", "satin cami maxi dress", "144.00", "deep green"),
            ("wrap", "textured wrap midi dress", "59.50", "green"),
            ("shift", "relaxed shift dress", "32.00", "red"),
            ("slip", "bias cut slip dress", "85.00", "black"),
            ("tea", "floral tea dress", "12.50", "green"),
        ]
    )
)

# pretend these weights are the unknown truth, observe 20k choices, estimate
truth = MnlParameters(
    v={"smock": 0.9, "cami": 0.4, "wrap": 0.7, "shift": 0.5, "slip": 0.3, "tea": 0.8}
)
transactions = simulate_transactions(truth, 20_000, seed=42, offered_size=4)
estimated = estimate_mnl(transactions)
print("estimated attraction weights (truth in parentheses):")
for item_id in sorted(truth.v):
    print(f"  {item_id:6s} {estimated.v[item_id]:.3f}  ({truth.v[item_id]:.2f})")

# a summary as the multimodal backend would phrase it
summary = parse_summary_text(
    """
    {
      "Product Characteristics": "The customer is browsing green dresses.",
      "Lowest Price": "$18.00 for the puff sleeve mini smock dress",
      "Highest Price": "$144.00 for the satin cami maxi dress",
      "Brand Preference": "Not Available",
      "Product Specifications": "Not Available",
      "User Reviews and Testimonials": "Not Available",
      "Comparisons": "Not Available",
      "Promotions": "Not Available"
    }
    """
)
constraints = decompose(summary)
print(f"\ndecomposed constraints: {constraints.to_arguments()}")
report = validate(constraints, catalog)
print(f"validation: {report.status}")

# the constrained optimum keeps only in-band green items
best = optimize_assortment(estimated, catalog, FeasibleSpec(constraints=constraints))
print(f"\nconstrained assortment:   {list(best.items)} revenue {best.revenue:.3f}")

unconstrained = optimize_assortment(
    estimated, catalog, FeasibleSpec(constraints=ConstraintSet())
)
print(f"unconstrained assortment: {list(unconstrained.items)} revenue {unconstrained.revenue:.3f}")
