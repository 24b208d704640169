"""High-precision evaluation of the sample-size requirement.

The requirement on a group of size n is

    n >= (4 vc ln(2n / vc + 1) + ln(8 k / delta)) / gain^2

with k = 1 for rationality and k = m for envy-freeness. Prints the smallest
integer n meeting it, found by a linear scan at 50 digits.
"""
import json

from mpmath import mp, mpf, log

mp.dps = 50


def rhs(n, vc, delta, gain, k=1):
    n, vc = mpf(n), mpf(vc)
    return (4 * vc * log(2 * n / vc + 1) + log(8 * mpf(k) / mpf(delta))) / mpf(gain) ** 2


def required(vc, delta, gain, k=1):
    n = 1
    while n < rhs(n, vc, delta, gain, k):
        n += 1
    return n


cases = [
    {"vc": 3, "delta": 0.1, "gain": 0.5, "m": 1},
    {"vc": 3, "delta": 0.1, "gain": 0.5, "m": 6},
    {"vc": 5, "delta": 0.05, "gain": 0.2, "m": 1},
    {"vc": 9, "delta": 0.1, "gain": 0.1, "m": 4},
]
for c in cases:
    c["required_n"] = required(c["vc"], c["delta"], c["gain"], c["m"])
print(json.dumps(cases, indent=2))
