#!/usr/bin/env python3
"""Scale-separation sweep: B fixed, N varies, errors at a common time.

Shows the zero-order closure errors (density vs Jacobian, and zero-order vs
exact interaction stress) shrinking as the particle count grows.
"""
import argparse
import sys

from mesochain import harness


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", default="10000,20000,40000,80000",
                        help="comma-separated particle counts")
    parser.add_argument("--b", type=int, default=50)
    parser.add_argument("--time", type=float, default=0.01)
    parser.add_argument("--out", default="out/sweep")
    args = parser.parse_args()

    n_list = [int(tok) for tok in args.n.split(",") if tok]
    config = harness.ExperimentConfig(
        n=max(n_list), b=args.b, snapshots=(args.time,), out_dir=args.out
    )
    report = harness.cmd_sweep_n(config, n_list, sweep_time=args.time)
    print(f"t = {args.time}, B = {args.b}")
    for row in report["points"]:
        print(f"N={row['n']:>7d}  err_J={row['err_jacobian_linf_interior']:.3e}"
              f"  err_Tint={row['err_stress_int_linf_interior']:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
