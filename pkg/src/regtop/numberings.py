"""Numberings: names for points, semi-deciders, reductions, function names.

A numbering assigns points to natural-number names.  Everything the machine
side ever sees is a name or a program code; the descriptor objects here
carry host-level decoders (``semantics``), domain predicates, and equality
tests purely so tests and demos can state ground truth.  No in-machine
construction reads them.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Optional

from . import kernel
from .kernel import Outcome, pair

__all__ = [
    "NumberingDescriptor",
    "MultiNumberingDescriptor",
    "SemiDeciderName",
    "CoSemiDeciderName",
    "FunctionName",
    "Reduction",
    "identity_numbering",
    "product_name",
    "project_left",
    "project_right",
    "apply_fn_name",
    "semidecide",
    "restrict_numbering",
    "restrict_semidecider",
    "complement_roundtrip",
]


@dataclass(frozen=True)
class NumberingDescriptor:
    """A (sub)numbering: names are naturals, points are whatever
    ``semantics`` returns.  All three callables are host/test-level only."""

    id: str
    domain_oracle: Callable[[int], bool]
    semantics: Callable[[int], Any]
    equality_oracle: Optional[Callable[[Any, Any], bool]] = None

    def point_equal(self, a: Any, b: Any) -> bool:
        if self.equality_oracle is not None:
            return self.equality_oracle(a, b)
        return a == b


@dataclass(frozen=True)
class MultiNumberingDescriptor:
    """Like NumberingDescriptor but a name describes a *set* of points;
    a name is in the domain exactly when that set is non-empty."""

    id: str
    semantics: Callable[[int], frozenset]

    def domain_oracle(self, n: int) -> bool:
        return bool(self.semantics(n))


@dataclass(frozen=True)
class SemiDeciderName:
    """A program halting exactly on the names of some subject set."""

    code: int
    subject: str


@dataclass(frozen=True)
class CoSemiDeciderName:
    """The same kind of code as SemiDeciderName, read as naming the
    complement of the set its halting behavior carves out."""

    code: int
    subject: str


@dataclass(frozen=True)
class FunctionName:
    """A program mapping names to names, extensional on the name fibers."""

    code: int
    source: str
    target: str


@dataclass(frozen=True)
class Reduction:
    """A name translator witnessing that one numbering refines another."""

    code: int
    source: str
    target: str


def identity_numbering(id: str = "nat",
                       limit: Optional[int] = None) -> NumberingDescriptor:
    """Every natural names itself (optionally capped for finite carriers)."""
    if limit is None:
        return NumberingDescriptor(id, lambda n: True, lambda n: n)
    return NumberingDescriptor(
        id, lambda n: n < limit, lambda n: n if n < limit else None)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def product_name(n: int, m: int) -> int:
    """A name for a pair of points: valid iff both components are."""
    return pair(n, m)


def project_left(nm: int) -> int:
    return kernel.unpair(nm)[0]


def project_right(nm: int) -> int:
    return kernel.unpair(nm)[1]


def apply_fn_name(f: FunctionName, n: int, fuel: int) -> Outcome:
    """Evaluate a function name on a point name; the result is a name in
    the target numbering whenever the contract's preconditions hold."""
    return kernel.run(f.code, n, fuel=fuel)


def semidecide(sd: SemiDeciderName | CoSemiDeciderName, n: int,
               fuel: int) -> Outcome:
    """Run a semi-decider on a name.  Halting within fuel is the only
    positive answer; running out is a budget report, never a refutation."""
    return kernel.run(sd.code, n, fuel=fuel)


def restrict_numbering(nu: NumberingDescriptor,
                       keep: Callable[[Any], bool],
                       id: Optional[str] = None) -> NumberingDescriptor:
    """Restrict to the names whose points satisfy ``keep``; semantics
    unchanged.  Restriction composes as set intersection."""
    return replace(
        nu,
        id=id if id is not None else nu.id + "|",
        domain_oracle=lambda n: nu.domain_oracle(n) and keep(nu.semantics(n)),
    )


def restrict_semidecider(sd: SemiDeciderName,
                         restricted: NumberingDescriptor) -> SemiDeciderName:
    """The same code re-read against a restricted numbering: it now denotes
    the old set intersected with the restriction."""
    return SemiDeciderName(sd.code, restricted.id)


def complement_roundtrip(c: CoSemiDeciderName) -> SemiDeciderName:
    """A co-semi-decider is a semi-decider of the complement; the code is
    shared, only the reading flips."""
    return SemiDeciderName(c.code, c.subject)
