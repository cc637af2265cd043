"""Regenerate the bundled scenario files from the builders."""

import argparse
from pathlib import Path

from carrier_select.builders import bundled
from carrier_select.model import dump_scenario

DEFAULT_DIR = Path(__file__).resolve().parents[1] / "src" / "carrier_select" / "scenarios"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_DIR)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, s in bundled().items():
        path = args.out / f"{name}.json"
        dump_scenario(s, path)
        print(path)


if __name__ == "__main__":
    main()
