"""Portable 64-bit linear congruential generator.

Seeded datasets must be reproducible bit-for-bit by other implementations,
so the generator is fixed here rather than delegated to numpy.
"""

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class LCG64:
    """state <- state * MULTIPLIER + INCREMENT (mod 2**64).

    ``random()`` advances the state once and returns the top 53 bits
    scaled to [0, 1).
    """

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state * MULTIPLIER + INCREMENT) & _MASK
        return self.state

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()
