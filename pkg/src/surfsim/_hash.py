"""Counter-based hashing used for leaf preference values and seed derivation.

Everything here is a pure function of its integer inputs.  The numba kernels
in :mod:`surfsim.simulate` re-use the same mixing constants, and the test
suite asserts bit-identical agreement between the Python and jitted paths.
"""

import numpy as np

MASK64 = (1 << 64) - 1

# splitmix64 constants
_C1 = 0x9E3779B97F4A7C15
_C2 = 0xBF58476D1CE4E5B9
_C3 = 0x94D049BB133111EB

# domain-separation salts for the sub-streams derived from one master seed
LEAF_SALT = 0x5851F42D4C957F2D
DELAY_SALT = 0x14057B7EF767814F
RUN_SALT = 0x2545F4914F6CDD1D

# numpy-typed copies for the numba kernels
U_C1 = np.uint64(_C1)
U_C2 = np.uint64(_C2)
U_C3 = np.uint64(_C3)
U_LEAF_SALT = np.uint64(LEAF_SALT)

_INV53 = 2.0 ** -53


def splitmix64(x: int) -> int:
    """One splitmix64 step: a 64-bit finalizer with good avalanche."""
    x = (x + _C1) & MASK64
    x = ((x ^ (x >> 30)) * _C2) & MASK64
    x = ((x ^ (x >> 27)) * _C3) & MASK64
    return x ^ (x >> 31)


def leaf_unit(seed: int, i: int) -> float:
    """Uniform value in [0, 1) for leaf ``i <= 0``, keyed by (seed, i).

    Pure and order-independent: repeated queries return identical values.
    """
    a = -i
    h = splitmix64((((seed & MASK64) ^ LEAF_SALT) + a * _C1) & MASK64)
    return (h >> 11) * _INV53


def derive_substream(master_seed: int, salt: int) -> int:
    """64-bit sub-stream seed from a master seed and a fixed salt."""
    return splitmix64(((master_seed & MASK64) ^ salt) & MASK64)


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed for Monte Carlo batches.

    Published mixing function: reports quote the master seed, and any run can
    be reproduced standalone from ``derive_run_seed(master, idx)``.
    """
    base = derive_substream(master_seed, RUN_SALT)
    return splitmix64((base + (run_index + 1) * _C1) & MASK64)
