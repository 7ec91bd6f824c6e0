"""Prime-field arithmetic on plain ints.

Field elements are ints in [0, p). Protocol code keeps them raw and reduces
mod p at each operation; there is no element wrapper class, because the
simulator pushes through tens of millions of deliveries and attribute
chasing on a wrapper would dominate the profile.

Two primes matter in practice: 2^61 - 1 for correctness runs (failure
probabilities vanish) and small primes like 97, 101, 5 for Monte Carlo
estimates of the error bounds, where failures must actually happen.
"""

import random

M61 = 2**61 - 1

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for anything we would ever pass in."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # these witnesses decide primality for all n < 3.3 * 10^24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class Field:
    """Arithmetic mod a prime p, plus the sampling helpers protocols need."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        if not is_prime(p):
            raise ValueError(f"field modulus must be prime, got {p}")
        self.p = p

    def __repr__(self):
        return f"Field({self.p})"

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("Field", self.p))

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise ZeroDivisionError("no inverse of 0")
        return pow(a, -1, self.p)

    def rand(self, rng: random.Random) -> int:
        return rng.randrange(self.p)

    def rand_nonzero(self, rng: random.Random) -> int:
        return rng.randrange(1, self.p)

    def sum(self, values) -> int:
        return sum(values) % self.p

    def sum_shares(self, total: int, count: int, rng: random.Random):
        """count random values summing to total; the classic additive split."""
        if count < 1:
            raise ValueError("need at least one share")
        out = [rng.randrange(self.p) for _ in range(count - 1)]
        out.append((total - sum(out)) % self.p)
        return out

    def poly_eval(self, coeffs, x: int) -> int:
        """coeffs[k] is the coefficient of x^k."""
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def rand_poly(self, degree: int, rng: random.Random, c0=None):
        coeffs = [rng.randrange(self.p) for _ in range(degree + 1)]
        if c0 is not None:
            coeffs[0] = c0 % self.p
        return coeffs

    def distinct_nonzero(self, count: int, rng: random.Random):
        """Distinct values from F \\ {0}; needs |F| - 1 >= count."""
        if count > self.p - 1:
            raise ValueError(f"cannot pick {count} distinct nonzero values mod {self.p}")
        seen = set()
        out = []
        while len(out) < count:
            x = rng.randrange(1, self.p)
            if x not in seen:
                seen.add(x)
                out.append(x)
        return out
