"""Break down switch disruption: legacy hard switch vs. direct switch, with and without platform overhead."""

import argparse

from carrier_select.builders import switch_timing
from carrier_select.harness import Simulation


def describe(label: str, sim: Simulation) -> None:
    for rec in sim.switch_records():
        total = rec["t_end"] - rec["t_start"]
        print(f"{label:28s} {rec['kind']:9s} {rec['from_network']}->{rec['to_network']}  "
              f"cells={rec['n_t']:2d} scan={rec['scan_cost']:.2f}s attach={rec['attach_cost']:.2f}s "
              f"overhead={rec['platform_overhead']:.2f}s total={total:.2f}s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--platform-overhead", type=float, default=7.3)
    args = ap.parse_args()
    for overhead in (0.0, args.platform_overhead):
        s = switch_timing(platform_overhead=overhead)
        for strategy in ("baseline", "radio-only"):
            sim = Simulation(s, strategy)
            sim.run()
            describe(f"{strategy} (overhead {overhead:g}s)", sim)


if __name__ == "__main__":
    main()
