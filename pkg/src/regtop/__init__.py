"""regtop: fuel-bounded register machines and computable topology over them.

Modules
-------
kernel
    Numeric program codes, universal fuel-bounded evaluation, pairing,
    parameterization/composition of codes, halting-set enumeration.
numberings
    Numberings of countable sets, semi-decider names, reductions,
    products, restrictions.
topology
    Computable topological spaces as descriptor bundles: membership
    translation, open-set algebra, effective closures, sobriety,
    discontinuity records, neighborhood bases.
reals
    Computable reals via rational approximation names, open sets as
    rational-interval enumerators, limits, sobriety recovery, closed-ball
    bases, dense-sequence searches.
nplus_markov
    The one-point-compactified naturals, norm/map conversions, the
    halting-problem diagonal family, weak-sequential-openness search,
    bounded refutation of unsound semi-decision claims.
cli
    JSON-lines command line front end.
"""
from __future__ import annotations

__version__ = "0.1.0"
