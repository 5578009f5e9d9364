"""Recompute every bundled reference metric from raw confusion counts.

The package ships a table of per-fold confusion counts together with the
rounded metric values reported for them.  This script loads that table,
recomputes accuracy, recall, specificity, precision, and F1 from the raw
tp/tn/fp/fn integers, and confirms that each recomputed value matches its
published counterpart to within 0.1 percentage points (one rounding step).
It also checks that each pooled row is exactly the sum of its five folds.
"""

from cxrbench.metrics import metrics_from_confusion, pool_folds
from cxrbench.reference import (
    load_reference_rows,
    pooled_counts_match_fold_sums,
    validate_reference_rows,
)

rows = load_reference_rows()
models = sorted({r.model for r in rows})
datasets = sorted({r.dataset for r in rows})
print(f"loaded {len(rows)} reference rows ({len(models)} models x {len(datasets)} datasets x 6 folds)")

# --- every metric value is consistent with its confusion counts --------------
discrepancies = validate_reference_rows(rows, tolerance_pp=0.1)
print(f"metric values off by more than 0.1pp: {len(discrepancies)}")

# --- pooled rows are micro averages, not means of fold metrics ---------------
mismatches = pooled_counts_match_fold_sums(rows)
print(f"pooled rows that are not exact fold sums: {len(mismatches)}")

# --- show the arithmetic for one group ----------------------------------------
group = [r for r in rows if r.model == "resnet50" and r.dataset == "dataset1"]
folds = [r for r in group if r.fold != "pooled"]
pooled = next(r for r in group if r.fold == "pooled")

print("\nresnet50 on dataset1:")
print(f"{'fold':>6}  {'tp':>4} {'tn':>5} {'fp':>4} {'fn':>4}   {'acc':>5}")
for r in folds:
    acc = metrics_from_confusion(r.counts).accuracy * 100
    c = r.counts
    print(f"{r.fold:>6}  {c.tp:>4} {c.tn:>5} {c.fp:>4} {c.fn:>4}   {acc:5.1f}")

summed, metrics = pool_folds([r.counts for r in folds])
c = summed
print(f"{'sum':>6}  {c.tp:>4} {c.tn:>5} {c.fp:>4} {c.fn:>4}   {metrics.accuracy * 100:5.1f}")
assert summed == pooled.counts
print(f"published pooled accuracy: {pooled.published['acc']}")
print("the pooled row is the micro average: metrics of the summed counts")
