"""Closed-form and high-precision reference values frozen into the C++ tests.

Run with `python3 tests/oracles/oracles.py`; needs mpmath.
"""
import mpmath as mp

mp.mp.dps = 30


def normal_expect(g, t):
    """E[g(W)] for W ~ N(0, t); the interval is split at the kinks of |4w^3 + w^4|."""
    dens = lambda w: mp.exp(-w * w / (2 * t)) / mp.sqrt(2 * mp.pi * t)
    return mp.quad(lambda w: g(w) * dens(w), [-mp.inf, -4, 0, mp.inf])


def ito_residual_x4(t):
    # (1/t) E|4W^3 + W^4|, zero of the integrand at W = -4
    return normal_expect(lambda w: abs(4 * w**3 + w**4), t) / t


def folded_tail(t):
    # (1/t) E[|1 + W| - 1 - W] = 2 (sqrt(t) phi(1/sqrt t) - Phi(-1/sqrt t)) / t
    z = 1 / mp.sqrt(t)
    return 2 * (mp.sqrt(t) * mp.npdf(z) - mp.ncdf(-z)) / t


def main():
    print("ito residual x^4, x=1, t=0.01:", mp.nstr(ito_residual_x4(mp.mpf("0.01")), 15))
    print("ito residual x^4, x=1, t=0.1: ", mp.nstr(ito_residual_x4(mp.mpf("0.1")), 15))
    print("E|W_1| = sqrt(2/pi):          ", mp.nstr(mp.sqrt(2 / mp.pi), 15))
    print("(2/pi)^(-1/4):                ", mp.nstr((2 / mp.pi) ** mp.mpf("-0.25"), 15))
    print("trace x^4 at t=0.01, 0.001:   ", [mp.nstr((6 * t + 3 * t * t) / t, 15) for t in (mp.mpf("0.01"), mp.mpf("0.001"))])
    print("folded tail at t=0.01:        ", mp.nstr(folded_tail(mp.mpf("0.01")), 15))
    for k in range(2, 8):
        n = int(mp.ceil(2 * mp.pi / mp.ldexp(1, -k)))
        print(f"eps=2^-{k}: N={n}, 1/cos(2pi/N)-1 =", mp.nstr(1 / mp.cos(2 * mp.pi / n) - 1, 15))


if __name__ == "__main__":
    main()
