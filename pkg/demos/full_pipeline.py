"""Drive every CLI stage end to end against the synthetic corpus.

Same entry points as the installed `cxrbench` command: ingest builds the
image manifest, split assigns cross-validation folds, run fine-tunes the
requested backbones and writes one run record per (backbone, dataset, fold),
report renders metric tables, training curves, and the literature comparison,
and validate re-checks the bundled reference table.  Everything lands in a
temporary directory that is printed at the end so you can poke around.
"""

import sys
import tempfile
from pathlib import Path

from cxrbench import cli

out = Path(tempfile.mkdtemp(prefix="cxrbench-demo-"))


def run(*args):
    argv = [str(a) for a in args]
    print(f"\n$ cxrbench {' '.join(argv)}")
    code = cli.main(argv)
    if code != 0:
        sys.exit(f"stage failed with exit code {code}")


run("ingest", "--synthetic", "--out", out)
run("split", "--synthetic", "--out", out)
run(
    "run", "--synthetic", "--out", out,
    "--backbones", "tiny_cnn",
    "--epochs", 2,
    "--learning-rate", "1e-3",
    "--folds", 1,
)
run("report", "--out", out)
run("validate", "--out", out)

files = [p for p in sorted(out.rglob("*")) if p.is_file()]
sources = [p for p in files if "synthetic_sources" in p.parts]
print(f"\nartifacts under {out} (plus {len(sources)} synthetic source files):")
for path in files:
    if path not in sources:
        print(f"  {path.relative_to(out)}")

comparison = out / "report" / "comparison.txt"
print(f"\n--- {comparison.name} ---")
print(comparison.read_text(), end="")
