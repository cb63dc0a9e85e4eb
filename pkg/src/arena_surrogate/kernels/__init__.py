"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names (``lcs_length``, ``bt_mm`` ...) are bound to whichever
backend ``_backend`` selected; ``*_numba`` / ``*_numpy`` are always exposed
so tests can check the two paths against each other.
"""
from .bt import bt_mm, bt_mm_numba, bt_mm_numpy, tally, tally_numba, tally_numpy
from .rank import kendall_counts, kendall_counts_numba, kendall_counts_numpy
from .text import lcs_length, lcs_length_numba, lcs_length_numpy
from .tree import build_tree, build_tree_numba, build_tree_numpy

__all__ = [
    "bt_mm", "bt_mm_numba", "bt_mm_numpy",
    "tally", "tally_numba", "tally_numpy",
    "kendall_counts", "kendall_counts_numba", "kendall_counts_numpy",
    "lcs_length", "lcs_length_numba", "lcs_length_numpy",
    "build_tree", "build_tree_numba", "build_tree_numpy",
]
