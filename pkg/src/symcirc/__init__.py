"""Symmetric Boolean circuits over relational structures.

Modules: ``relstruct`` (structures), ``circuit`` (circuits, naive evaluation,
rigidification), ``perm`` (permutations, partitions, part-size bounds),
``symmetry`` (induced automorphisms, orbits, supports), ``succinct``
(support-based evaluation), ``foc`` (counting logic and its compilation).
"""

__version__ = "0.1.0"
