"""Walk through the stratified five-fold split step by step.

Shows how fold sizes are derived from a class count (the remainder goes to
the last folds), then runs the full assignment on a small labeled collection
and prints the per-fold class balance.  Running the script twice, or on
another machine, produces identical assignments because the shuffle is a
seeded Fisher-Yates over a SplitMix64 stream.
"""

from collections import Counter
from dataclasses import dataclass

from cxrbench.folds import NUM_FOLDS, assign_folds, fold_sizes, fold_split

# --- the remainder rule ------------------------------------------------------
# each class is split separately; fold i (1-indexed) gets one extra item
# iff i > NUM_FOLDS - (n % NUM_FOLDS)
print(f"splitting into {NUM_FOLDS} folds")
for n in (341, 2800, 1493, 2772):
    sizes = fold_sizes(n)
    print(f"  class of {n:>4} items -> fold sizes {sizes} (sum {sum(sizes)})")


# --- a concrete assignment ---------------------------------------------------
@dataclass
class Collection:
    name: str
    ids: list[str]
    labels: list[int]


ids = [f"img-{i:03d}" for i in range(23)]
labels = [1 if i < 7 else 0 for i in range(23)]  # 7 positive, 16 negative
data = Collection(name="demo", ids=ids, labels=labels)

assignment = assign_folds(data, seed=2020)
for fold in range(1, NUM_FOLDS + 1):
    train_ids, test_ids = fold_split(assignment, fold)
    held = Counter(labels[ids.index(i)] for i in test_ids)
    print(
        f"fold {fold}: train={len(train_ids):>2} test={len(test_ids):>2} "
        f"(test has {held[1]} positive, {held[0]} negative)"
    )

# every item is held out exactly once across the five folds
seen = Counter()
for fold in range(1, NUM_FOLDS + 1):
    _, test_ids = fold_split(assignment, fold)
    seen.update(test_ids)
assert set(seen) == set(ids) and set(seen.values()) == {1}
print("coverage: every id held out exactly once")

again = assign_folds(data, seed=2020)
assert again == assignment
print("determinism: same seed reproduces the same assignment")
