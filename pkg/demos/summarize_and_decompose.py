"""
Screenshot batches to a merged keyword summary
==============================================

Runs the summarization pipeline against the deterministic mock backend:
canned responses are stored where the backend expects them, batches of
ten screenshots are summarized, and the per-batch results merge into one
summary that decomposes into machine-usable constraints.

Usage: python3 demos/summarize_and_decompose.py
"""

import tempfile
from pathlib import Path

from interarec import (
    MockSummarizerBackend,
    ScreenshotRef,
    build_prompt,
    decompose,
    session_from_items,
    summarize_session,
    write_fixture,
)

root = Path(tempfile.mkdtemp(prefix="summarize-demo-"))
prompt = build_prompt()

# a 12-event browse: two batches of screenshots will reach the backend
items = [f"dress-{i:02d}" for i in range(12)]
session = session_from_items(
    "demo",
    items,
    screenshots=[ScreenshotRef(key=f"shot-{i:02d}") for i in range(12)],
)
keys = [event.screenshot.key for event in session.events]

# the first ten screenshots showed cheap bright-green minis
write_fixture(
    root,
    prompt,
    keys[:10],
    """
    {
      "Product Characteristics": "mini dresses in bright green",
      "Lowest Price": "$18.00 for the smock mini dress",
      "Highest Price": "$60.00 for the wrap dress",
      "Brand Preference": "JDY",
      "Product Specifications": "Not Available",
      "User Reviews and Testimonials": "Not Available",
      "Comparisons": "Not Available",
      "Promotions": "Not Available"
    }
    """,
)

# the last two showed a dearer maxi; merging widens the price band
write_fixture(
    root,
    prompt,
    keys[10:],
    """
    {
      "Product Characteristics": "one satin maxi dress in deep green",
      "Lowest Price": "$144.00 for the satin cami maxi dress",
      "Highest Price": "$144.00 for the satin cami maxi dress",
      "Brand Preference": "Y.A.S",
      "Product Specifications": "Not Available",
      "User Reviews and Testimonials": "Not Available",
      "Comparisons": "Not Available",
      "Promotions": "Not Available"
    }
    """,
)

summary = summarize_session(session, MockSummarizerBackend(root), prompt)
print(f"merged from {summary.source_batch_count} batches:")
for category, value in summary.entries.items():
    print(f"  {category}: {value}")

constraints = decompose(summary)
print(f"\nconstraints: {constraints.to_arguments()}")
print("note the band spans both batches: 18.00 up to 144.00")
