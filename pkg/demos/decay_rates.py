"""Three dissipation classes, three logarithmic decay rates.

For each nonlinearity we compute nu, classify p = -Im nu, run the profile
model far out in log time and fit the exponent of the L2 norm against
eps^2 log t.  Takes about 15 s.

    python demos/decay_rates.py [--out DIR]
"""
import argparse

from dnls_decay import Scenario, run_scenario

CASES = [
    ("-i*|ux|^2*(u+ux) + 3*u^2*ux", "double root at xi = 0"),
    ("-i*|u|^2*u", "bounded below, constant"),
    ("-i*|u+ux|^2*u", "coercive, p >= <xi>^2"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--out", help="write per-case CSV/JSON under this directory")
    args = ap.parse_args()

    print(f"{'nonlinearity':32s} {'class':28s} {'predicted':>9s} {'fitted':>8s}  verdict")
    for i, (nl, label) in enumerate(CASES):
        s = Scenario(name=f"case{i}", nonlinearity=nl, epsilon=args.eps)
        out = f"{args.out}/case{i}" if args.out else None
        summary = run_scenario(s, out)
        print(f"{nl:32s} {label:28s} {summary.predicted_exponent:9.3f} "
              f"{summary.fit['exponent']:8.4f}  {summary.verdict['reason']}")


if __name__ == "__main__":
    main()
