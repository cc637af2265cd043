"""Scan cost of monitoring only the requested carriers vs. an exhaustive band scan."""

from carrier_select.builders import minimal_search
from carrier_select.monitor import MonitorRequest, run_monitor
from carrier_select.switching import exhaustive_scan


def main() -> None:
    s = minimal_search()
    _, rnd, _ = run_monitor(s, MonitorRequest(s.requested_networks), lambda scan: None, at=0.0)
    full, elapsed = exhaustive_scan(s, 0.0, s.plmn_priority_list)
    print(f"requested networks: {', '.join(s.requested_networks)} of {len(s.networks)}")
    print(f"cells scanned   minimal={rnd.cells_scanned:3d}  exhaustive={full.cells_scanned():3d}  "
          f"saving={1 - rnd.cells_scanned / full.cells_scanned():.0%}")
    print(f"radio time (s)  minimal={rnd.scan_time:6.2f}  exhaustive={elapsed:6.2f}  "
          f"saving={1 - rnd.scan_time / elapsed:.0%}")
    print(f"the monitoring round used {len(rnd.slot_times)} sleep-window slots")


if __name__ == "__main__":
    main()
