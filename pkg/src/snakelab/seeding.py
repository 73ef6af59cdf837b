"""Seed derivation.

Replica ``i`` of a campaign with master seed ``m`` uses ``mix64(m ^ i)``, where
``mix64`` is the splitmix64 finalizer.  Compiled kernels take a 32-bit seed,
the high half of ``mix64`` applied once more.
"""

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replica_seed(master: int, i: int) -> int:
    return mix64((master ^ i) & MASK64)


def kernel_seed(seed: int) -> int:
    return mix64(seed & MASK64) >> 32
