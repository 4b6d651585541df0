#!/usr/bin/env python3
"""Re-derive the two closed-form rates and compare against the CLI."""
import math
import subprocess
import sys


def sig4(x):
    return float(f"{x:.4g}")


def main():
    if len(sys.argv) != 2:
        print("usage: rate_check.py <arborart-binary>", file=sys.stderr)
        return 2
    cli = sys.argv[1]

    # sqrt(d log p / n) + lambda*sqrt(d)*(R log n / n)^{abar/(2 abar + d)}
    n, p, d, lam, R, abar = 1000, 2, 2, 1.0, 4, 1.0
    eps = math.sqrt(d * math.log(p) / n) + lam * math.sqrt(d) * (R * math.log(n) / n) ** (abar / (2 * abar + d))
    # sqrt(log binom(p,d) / n) + lambda * n^{-abar/(2 abar + d)} with p=10, d=2, abar=1
    gam = math.sqrt(math.log(math.comb(10, 2)) / 1000) + (1 / 1000) ** (1 / 4)

    got_eps = float(subprocess.check_output([cli, "rate", "--eps", "1000,2,2,1,4,1"]).strip())
    got_gam = float(subprocess.check_output([cli, "rate", "--gamma", "1000,10,2,1,1"]).strip())

    ok = True
    for name, mine, theirs, frozen in [
        ("eps", eps, got_eps, 0.6138),
        ("gamma", gam, got_gam, 0.2395),
    ]:
        agree = sig4(mine) == sig4(theirs) and abs(theirs - frozen) <= 5e-5
        print(f"{name}: script={mine:.7f} cli={theirs:.7f} frozen={frozen} -> {'ok' if agree else 'MISMATCH'}")
        ok = ok and agree
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
