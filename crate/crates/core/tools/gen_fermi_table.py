"""Generate piecewise Chebyshev tables for the complete Fermi-Dirac integrals
F_{1/2} and F_{-1/2} (normalized, F_j = -Li_{j+1}(-e^z)) on [-2, 100].

Run: python3 gen_fermi_table.py > ../src/statistics/fermi_table.rs
"""
import mpmath as mp

mp.mp.dps = 40
DEG = 22
BREAKS = [-2, 0, 2, 4, 6, 8, 11, 14, 18, 24, 32, 42, 56, 74, 100]


def fd(j, z):
    return mp.re(-mp.polylog(j + 1, -mp.e ** z))


def cheb_coeffs(f, a, b, n):
    # Chebyshev interpolation at Chebyshev-Gauss nodes.
    nodes = [mp.cos(mp.pi * (k + mp.mpf(1) / 2) / n) for k in range(n)]
    vals = [f((b - a) / 2 * x + (b + a) / 2) for x in nodes]
    out = []
    for m in range(n):
        s = mp.fsum(vals[k] * mp.cos(mp.pi * m * (k + mp.mpf(1) / 2) / n) for k in range(n))
        out.append(2 * s / n)
    out[0] /= 2
    return out


def clenshaw(c, t):
    b1 = b2 = mp.mpf(0)
    for ck in reversed(c[1:]):
        b1, b2 = 2 * t * b1 - b2 + ck, b1
    return t * b1 - b2 + c[0]


def main():
    n = DEG + 1
    print("// Generated by tools/gen_fermi_table.py; do not edit by hand.")
    print("// Piecewise Chebyshev coefficients on [BREAKS[k], BREAKS[k+1]].")
    print()
    print("pub(crate) const BREAKS: [f64; %d] = [%s];" % (len(BREAKS), ", ".join("%.1f" % b for b in BREAKS)))
    print()
    worst = {}
    for name, j in (("HALF", mp.mpf(1) / 2), ("MINUS_HALF", -mp.mpf(1) / 2)):
        print("pub(crate) const %s: [[f64; %d]; %d] = [" % (name, n, len(BREAKS) - 1))
        w = 0
        for a, b in zip(BREAKS[:-1], BREAKS[1:]):
            f = lambda z: fd(j, z)
            c = cheb_coeffs(f, mp.mpf(a), mp.mpf(b), n)
            cf = [float(x) for x in c]
            for k in range(41):
                z = mp.mpf(a) + (b - a) * mp.mpf(k) / 40
                t = (2 * z - a - b) / (b - a)
                approx = clenshaw([mp.mpf(x) for x in cf], t)
                w = max(w, abs(approx / f(z) - 1))
            print("    [")
            for x in cf:
                print("        %s," % repr(x))
            print("    ],")
        print("];")
        print()
        worst[name] = w
    import sys
    print("worst relative error:", {k: float(v) for k, v in worst.items()}, file=sys.stderr)


if __name__ == "__main__":
    main()
