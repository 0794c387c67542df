"""Small parameter sweeps reproducing the headline trends as CSV tables.

More relays help (larger null space), more Eve antennas hurt (smaller
null space), and raising the power budget saturates once hardware
distortion dominates.  Full-scale versions of these sweeps back the
acceptance tests; this demo runs reduced trial counts so it finishes in
a few minutes and writes the CSVs next to this script.

Run:  python3 demos/03_parameter_sweeps.py
"""

import os

from relaysec.experiments import SweepSpec, run_sweep, write_csv

HERE = os.path.dirname(os.path.abspath(__file__))


def show(rows):
    for r in rows:
        print(f"  {r.param}={r.value:g}: mean R_s = {r.mean_Rs:.3f} bits "
              f"(feasible {r.feas_frac:.0%}, "
              f"{r.mean_iters_spca:.1f} optimizer iters, "
              f"{r.mean_time_s:.1f} s/trial)")


def main():
    trials = 6
    print(f"running 3 sweeps at {trials} trials per grid point\n")

    print("relay count N (larger null space -> higher rate):")
    spec = SweepSpec(param="N", values=(6, 12, 18), trials=trials, master_seed=1)
    rows = run_sweep(spec)
    show(rows)
    write_csv(os.path.join(HERE, "sweep_N.csv"), rows)

    print("\nEve antennas N_E (smaller null space -> lower rate):")
    spec = SweepSpec(param="N_E", values=(1, 2, 4), trials=trials, master_seed=2)
    rows = run_sweep(spec)
    show(rows)
    write_csv(os.path.join(HERE, "sweep_NE.csv"), rows)

    print("\ntotal budget Q_tot in watts (distortion ceiling -> saturation):")
    spec = SweepSpec(param="Q_tot", values=(100.0, 1000.0, 10000.0, 100000.0),
                     trials=trials, master_seed=3)
    rows = run_sweep(spec)
    show(rows)
    write_csv(os.path.join(HERE, "sweep_Qtot.csv"), rows)

    print(f"\nCSV tables written to {HERE}/sweep_*.csv")


if __name__ == "__main__":
    main()
