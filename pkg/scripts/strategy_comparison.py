"""Compare the built-in strategies on a bundled scenario and write plot-ready CSVs."""

import argparse
from pathlib import Path

from carrier_select.harness import RunConfig, compare

DEFAULT = "baseline,radio-only,profile-only,min-latency,tree,optimal"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="benchmark")
    ap.add_argument("--strategies", default=DEFAULT)
    ap.add_argument("--metric", default="latency", choices=("latency", "throughput"))
    ap.add_argument("--out-dir", type=Path, default=None)
    args = ap.parse_args()
    configs = [RunConfig(args.scenario, strategy=s, metric=args.metric)
               for s in args.strategies.split(",")]
    table = compare(configs)
    print(table.text())
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "comparison.csv").write_text(table.table_csv())
        (args.out_dir / "gamma.csv").write_text(table.gamma_csv())
        print(f"wrote {args.out_dir}/comparison.csv and gamma.csv")


if __name__ == "__main__":
    main()
