"""Computable topological spaces over numbered points.

A space couples a point numbering with a numbering of its effective open
sets and three machine-level capabilities: translating an open's name into
a membership semi-decider, folding a sequence of opens into their union,
and intersecting two opens.  Everything a space hands out is a program
code, so other programs can consume opens without host help.

Two concrete families live here: finite spaces (table-driven, decidable
ground truth) and the halting-set topology every numbering carries (opens
are semi-decider codes read as their own membership tests).  The real line
builds its space in :mod:`regtop.reals` on top of these generics.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Optional, Union

from . import kernel
from ._progcode import CONST, HALT, JMP, UEVAL, encode_instruction, encode_program
from .asm import Asm
from .kernel import Halted, Outcome, OutOfFuel, pair
from .numberings import (
    NumberingDescriptor,
    Reduction,
    SemiDeciderName,
    identity_numbering,
)
from .progs import (
    emit_build_freeze2,
    emit_build_smn,
    emit_half,
    emit_lt_jump,
    emit_sim_invoke,
    emit_unpack2,
    freeze2,
    omega_union_body,
    sim_body,
)

__all__ = [
    "SpaceDescriptor",
    "FiniteSpaceData",
    "OpenName",
    "TauStarName",
    "NeighborhoodName",
    "BasisDescriptor",
    "ClosureWitness",
    "SeqClosureWitness",
    "NormedWitness",
    "DiscontinuityRecord",
    "RelSDClaim",
    "InsufficientRounds",
    "member",
    "open_union",
    "open_intersect",
    "nu_to_taustar",
    "sober_apply",
    "ershov_space",
    "finite_space",
    "load_finite_space",
    "save_finite_space",
    "finite_tau_from_sd",
    "markov_obstructions",
    "weaken_witness",
    "refine_neighborhood",
    "trivial_basis",
    "w_style_union_code",
    "w_style_intersect_code",
    "emit_build_w_intersect",
    "seq_table_code",
    "nest_blob",
    "balanced_blob",
    "witness_to_json",
    "witness_from_json",
    "save_witness_bundle",
    "load_witness_bundle",
    "EMPTY_SET_CODE",
    "FULL_SET_CODE",
]

# Codes every space can reuse: the program that halts on nothing and the
# program that halts on everything.
EMPTY_SET_CODE = encode_program([(JMP, [0])])
FULL_SET_CODE = encode_program([(HALT, [])])

#: Fuel spent translating an open's name through the malcev reduction and
#: running the union/intersect builders.  These are straight-line builders,
#: so the bound is generous rather than tight.
BUILDER_FUEL = 10 ** 6

#: How many entries of a sequence the finite-space union code folds.  The
#: lattice of opens on a desk-scale finite space stabilizes within its own
#: height, far below this; sequences that first grow later than this are
#: outside what the finite tables serve.
FINITE_UNION_HORIZON = 64


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSpaceData:
    """Ground truth for a table-driven finite space."""

    labels: tuple
    opens: tuple  # tuple of frozensets of point indices


@dataclass(frozen=True)
class SpaceDescriptor:
    """A space as programs: name translation, union, intersection.

    ``tstar_builder`` and ``seq_to_closure`` are host-level construction
    hooks a concrete space may install when the generic constructions
    would embed codes too large to be practical (the real line does).
    """

    id: str
    point_numbering: NumberingDescriptor
    tau: NumberingDescriptor
    malcev: Reduction
    union_code: int
    intersect_code: int
    empty_name: int
    full_name: int
    open_semantics: Optional[Callable[[int], Any]] = None
    tstar_builder: Optional[Callable[[int], int]] = None
    seq_to_closure: Optional[Callable[[int], int]] = None
    finite: Optional[FiniteSpaceData] = None


@dataclass(frozen=True)
class OpenName:
    name: int
    space: str


@dataclass(frozen=True)
class TauStarName:
    """Halts exactly on names of opens containing its subject point."""

    code: int
    space: str


@dataclass(frozen=True)
class NeighborhoodName:
    """An open's name put forward as a neighborhood of a specific point."""

    name: int
    point: int
    space: str


@dataclass(frozen=True)
class BasisDescriptor:
    """A point's effective neighborhood basis.

    ``refine_code`` shrinks any neighborhood name to a basis element's
    name; ``cosd_code`` names each basis element's complement by a program
    halting exactly outside the element.
    """

    beta: NumberingDescriptor
    refine_code: int
    cosd_code: int
    subject: Optional[int] = None
    point_param_code: Optional[int] = None


@dataclass(frozen=True)
class ClosureWitness:
    """On a name of an open O containing the point, halts with a name of a
    point of the witnessed set inside O."""

    code: int
    point_name: int
    set_id: str = ""


@dataclass(frozen=True)
class SeqClosureWitness:
    """A total program producing names of a sequence inside the witnessed
    set; fixture annotation says it converges to the subject point."""

    seq_code: int
    set_id: str = ""


@dataclass(frozen=True)
class NormedWitness:
    """A sequence witness plus a program turning any open around the limit
    into an index past which the whole tail lies inside."""

    seq_code: int
    norm_code: int
    set_id: str = ""


@dataclass(frozen=True)
class DiscontinuityRecord:
    """Everything needed to exhibit a continuity failure at one point: the
    point, an open around its image, and an effective-closure witness for
    the preimage's complement."""

    x_name: int
    o2_name: OpenName
    witness: Union[ClosureWitness, SeqClosureWitness, NormedWitness]


@dataclass(frozen=True)
class RelSDClaim:
    """A recorded claim that B is (or is not) semi-decidable inside A ∪ B;
    refuting the negative claim takes a witness semi-decider."""

    set_a: str
    set_b: str
    claimed: bool
    witness: Optional[SemiDeciderName] = None


class InsufficientRounds(Exception):
    """Raised when finite_tau_from_sd's enumeration has not reached a
    fixpoint: the union of emitted opens still differs from the accepted
    set, so more rounds are needed before the result is a τ-name."""

    def __init__(self, accepted: frozenset, emitted: tuple):
        self.accepted = accepted
        self.emitted = emitted
        super().__init__(
            f"enumeration not settled: accepted {sorted(accepted)}, "
            f"emitted opens {list(emitted)}")


# ---------------------------------------------------------------------------
# Shared machine-side builders for spaces whose opens are halting sets
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _union_fold_body() -> int:
    """Input pair(pair(sim, om), s): mint the code freezing om over sim and
    s — exactly the bytes progs.omega_union_code(s) would produce."""
    a = Asm()
    rsim = a.reg()
    rom = a.reg()
    rs = a.reg()
    rdst = a.reg()
    rt = a.reg()
    rt2 = a.reg()
    emit_unpack2(a, 0, rt, rs)
    emit_unpack2(a, rt, rsim, rom)
    emit_build_freeze2(a, rom, rsim, rs, rdst, rt, rt2)
    a.copy(0, rdst)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def w_style_union_code() -> int:
    """Program: sequence-name of opens-as-halting-sets ↦ name of the union.

    The output halts exactly on the union of the members' domains, built by
    dovetailing bounded simulation over the sequence.
    """
    return freeze2(_union_fold_body(), sim_body(), omega_union_body())


def emit_build_w_intersect(a: Asm, ri: int, rj: int, rdst: int, rt: int,
                           rl: int, racc: int, rright: int) -> None:
    """rdst := the code kernel.w_intersect(ri, rj) mints, at runtime.

    Built leaf by leaf so the bytes match the host builder exactly.  rdst
    may coincide with ri or rj; the scratch registers may not.
    """
    ueval210 = encode_instruction(UEVAL, [2, 1, 0])
    halt_leaf = encode_instruction(HALT, [])
    a.const(rt, 1)
    a.pair(rl, rt, ri)
    a.const(rt, CONST)
    a.pair(rl, rt, rl)          # CONST 1 i
    a.const(rt, ueval210)
    a.pair(racc, rl, rt)        # pair(i0, i1)
    a.const(rt, 1)
    a.pair(rl, rt, rj)
    a.const(rt, CONST)
    a.pair(rl, rt, rl)          # CONST 1 j
    a.pair(racc, racc, rl)      # left subtree [[i0, i1], i2]
    a.const(rt, ueval210)
    a.const(rright, halt_leaf)
    a.pair(rright, rt, rright)  # right subtree [i3, i4]
    a.pair(racc, racc, rright)
    a.const(rt, 5)
    a.pair(rdst, rt, racc)


@lru_cache(maxsize=1)
def w_style_intersect_code() -> int:
    """Program: pair(i, j) ↦ the code kernel.w_intersect(i, j) mints.

    The five-instruction product runs both opens sequentially, so its
    domain is the intersection of theirs.
    """
    a = Asm()
    ri = a.reg()
    rj = a.reg()
    rt = a.reg()
    rl = a.reg()
    racc = a.reg()
    rright = a.reg()
    emit_unpack2(a, 0, ri, rj)
    emit_build_w_intersect(a, ri, rj, 0, rt, rl, racc, rright)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def _generic_tstar_body() -> int:
    """Input pair(pair(mal, x), o): halt iff the open named o contains the
    point named x, by translating o and running the semi-decider."""
    a = Asm()
    rmal = a.reg()
    rx = a.reg()
    ro = a.reg()
    rsd = a.reg()
    rt = a.reg()
    emit_unpack2(a, 0, rt, ro)
    emit_unpack2(a, rt, rmal, rx)
    a.ueval(rsd, rmal, ro)      # translation is total
    a.ueval(0, rsd, rx)         # halts iff member
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def _generic_seq2clo_body() -> int:
    """Input pair(pair(sim, pair(mal, seq)), o): find some sequence entry
    inside the open named o and halt with that entry's point name.

    Dovetails bounded simulation of the translated semi-decider over the
    sequence, so members are found even though most entries diverge.
    """
    a = Asm()
    rsim = a.reg()
    rmal = a.reg()
    rseq = a.reg()
    ro = a.reg()
    rsd = a.reg()
    rr = a.reg()
    rn = a.reg()
    re = a.reg()
    rres = a.reg()
    rt = a.reg()
    round_, nloop, nbody, nnext, found = (
        a.label(), a.label(), a.label(), a.label(), a.label())

    emit_unpack2(a, 0, rt, ro)
    emit_unpack2(a, rt, rsim, rt)
    emit_unpack2(a, rt, rmal, rseq)
    a.ueval(rsd, rmal, ro)
    a.const(rr, 1)
    a.mark(round_)
    a.const(rn, 0)
    a.mark(nloop)
    emit_lt_jump(a, rn, rr, rt, nbody)
    a.add(rr, rr, rr)
    a.jmp(round_)
    a.mark(nbody)
    a.ueval(re, rseq, rn)       # total by witness contract
    emit_sim_invoke(a, rsim, rsd, re, rr, rres, rt)
    a.jz(rres, nnext)
    a.jmp(found)
    a.mark(nnext)
    a.inc(rn)
    a.jmp(nloop)

    a.mark(found)
    a.copy(0, re)
    a.halt()
    return a.code()


# A sequence over finitely many distinct values is easier to state as data
# than as control flow: keep the values in one right-nested blob and walk
# it.  The walk body stays a dozen instructions, which matters because
# sequence codes get frozen into other codes and every wrapper layer
# multiplies the embedded size by a constant.
@lru_cache(maxsize=1)
def _seq_table_body() -> int:
    """Input pair(pair(count, blob), k): the min(k, count-1)-th blob entry."""
    a = Asm()
    rcount = a.reg()
    rblob = a.reg()
    rk = a.reg()
    rt = a.reg()
    one = a.reg()
    walk, take = a.label(), a.label()
    emit_unpack2(a, 0, rt, rk)
    emit_unpack2(a, rt, rcount, rblob)
    a.const(one, 1)
    a.monus(rcount, rcount, one)    # last reachable index
    a.mark(walk)
    a.jz(rk, take)
    a.jz(rcount, take)              # clamp at the final entry
    a.unr(rblob, rblob)
    a.monus(rk, rk, one)
    a.monus(rcount, rcount, one)
    a.jmp(walk)
    a.mark(take)
    a.unl(0, rblob)
    a.halt()
    return a.code()


def nest_blob(values: list[int]) -> int:
    """Right-nested pair list pair(v0, pair(v1, … pair(v_last, 0))).

    Pairing doubles the bit length per nesting level, so this shape is
    only for short lists (walk-friendly, self-terminating); bulk tables
    go through :func:`balanced_blob`.
    """
    blob = 0
    for v in reversed(values):
        blob = pair(v, blob)
    return blob


def balanced_blob(values: list[int]) -> int:
    """Balanced pair tree over the values (left half rounded up).

    Bit cost stays near #entries × max-entry-bits instead of doubling per
    element, which is what keeps desk-scale lookup tables representable.
    Indexing needs the entry count supplied alongside.
    """
    n = len(values)
    if n == 0:
        raise ValueError("cannot build an empty blob")
    if n == 1:
        return values[0]
    mid = (n + 1) // 2
    return pair(balanced_blob(values[:mid]), balanced_blob(values[mid:]))


def _emit_tree_get(a: Asm, rblob: int, ridx: int, rsize: int,
                   one: int) -> None:
    """rblob := entry number ridx of a balanced blob of rsize entries.

    Clobbers ridx and rsize plus its own scratch.  Descends by halving the
    remaining size (left half rounded up) exactly as balanced_blob splits.
    """
    rsl = a.reg()
    rrem = a.reg()
    rp = a.reg()
    rph = a.reg()
    rt = a.reg()
    rt2 = a.reg()
    loop, goleft, done = a.label(), a.label(), a.label()
    a.mark(loop)
    a.monus(rt, rsize, one)
    a.jz(rt, done)
    emit_half(a, rsize, rsl, one, rrem, rp, rph, rt, rt2, plus_one=True)
    emit_lt_jump(a, ridx, rsl, rt, goleft)
    a.unr(rblob, rblob)
    a.monus(ridx, ridx, rsl)
    a.monus(rsize, rsize, rsl)
    a.jmp(loop)
    a.mark(goleft)
    a.unl(rblob, rblob)
    a.copy(rsize, rsl)
    a.jmp(loop)
    a.mark(done)


def seq_table_code(values: list[int], default: int | None = None) -> int:
    """A total program: k ↦ values[min(k, len-1)] (the last entry repeats
    forever, making any finite family an infinite sequence).

    The canonical way fixtures present a finite family as a sequence name
    (unions, witness sequences over finitely many distinct entries).
    """
    vals = list(values)
    if default is not None:
        vals = vals + [default]
    if not vals:
        raise ValueError("a sequence table needs at least one entry")
    if len(vals) > 12:
        # Right-nested pairing doubles per entry; past a dozen entries the
        # blob (and everything later freezing this code) blows up.
        raise ValueError("sequence tables are for short fixture lists")
    frozen = pair(len(vals), nest_blob(vals))
    if frozen.bit_length() > 2048:
        # A big immediate is cheapest near the root of a shallow program;
        # specialization keeps it at depth two.
        return kernel.smn(_seq_table_body(), frozen)
    # Small tables: inline the blob so the whole code stays a couple of
    # kilobits (it will be frozen into other codes, each layer of which
    # multiplies the embedded size by a constant).
    a = Asm()
    rcount = a.reg()
    rblob = a.reg()
    rk = a.reg()
    rt = a.reg()
    one = a.reg()
    walk, take = a.label(), a.label()
    a.copy(rk, 0)
    a.const(rt, frozen)
    emit_unpack2(a, rt, rcount, rblob)
    a.const(one, 1)
    a.monus(rcount, rcount, one)
    a.mark(walk)
    a.jz(rk, take)
    a.jz(rcount, take)
    a.unr(rblob, rblob)
    a.monus(rk, rk, one)
    a.monus(rcount, rcount, one)
    a.jmp(walk)
    a.mark(take)
    a.unl(0, rblob)
    a.halt()
    return a.code()


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def _open_nat(open_name: Union[OpenName, int]) -> int:
    return open_name.name if isinstance(open_name, OpenName) else open_name


def member(space: SpaceDescriptor, point_name: int,
           open_name: Union[OpenName, int], fuel: int) -> Outcome:
    """Halt iff the named point lies in the named open, within fuel.

    The malcev reduction turns the open's name into a semi-decider first;
    both stages draw on the same fuel so the accounting stays honest.
    """
    out = kernel.run(space.malcev.code, _open_nat(open_name), fuel=fuel)
    if isinstance(out, OutOfFuel):
        return out
    spent = out.steps
    if spent >= fuel:
        return OutOfFuel(spent)
    out2 = kernel.run(out.value, point_name, fuel=fuel - spent)
    if isinstance(out2, Halted):
        return Halted(out2.value, spent + out2.steps)
    return OutOfFuel(spent + out2.steps)


def open_union(space: SpaceDescriptor, seq_name: int,
               fuel: int = BUILDER_FUEL) -> OpenName:
    """Fold a sequence-name of opens into the name of their union."""
    out = kernel.run(space.union_code, seq_name, fuel=fuel)
    if not isinstance(out, Halted):
        raise RuntimeError(
            f"union builder for {space.id} ran out of fuel ({fuel})")
    return OpenName(out.value, space.id)


def open_intersect(space: SpaceDescriptor, o1: Union[OpenName, int],
                   o2: Union[OpenName, int],
                   fuel: int = BUILDER_FUEL) -> OpenName:
    """Intersect two opens by name."""
    out = kernel.run(space.intersect_code,
                     pair(_open_nat(o1), _open_nat(o2)), fuel=fuel)
    if not isinstance(out, Halted):
        raise RuntimeError(
            f"intersect builder for {space.id} ran out of fuel ({fuel})")
    return OpenName(out.value, space.id)


def nu_to_taustar(space: SpaceDescriptor, point_name: int) -> TauStarName:
    """A point's name, upgraded to the program that halts exactly on names
    of opens containing the point."""
    if space.tstar_builder is not None:
        return TauStarName(space.tstar_builder(point_name), space.id)
    code = kernel.smn(_generic_tstar_body(),
                      pair(space.malcev.code, point_name))
    return TauStarName(code, space.id)


def sober_apply(effcont_preimage_code: int,
                codomain_recovery: Callable[[int, int, int], Outcome],
                x_name: int, fuel: int) -> Outcome:
    """Apply an effectively continuous map, given only its preimage action.

    The codomain's recovery operation does the actual work: it receives the
    preimage code and the point name, builds the program answering "does
    f(x) land in this open?" and turns that answerer back into a point
    name.  Halted(m) carries the recovered name of f(x).
    """
    return codomain_recovery(effcont_preimage_code, x_name, fuel)


# ---------------------------------------------------------------------------
# The halting-set topology of a numbering
# ---------------------------------------------------------------------------


def ershov_space(nu: NumberingDescriptor,
                 id: Optional[str] = None) -> SpaceDescriptor:
    """The topology whose opens are exactly the semi-decidable sets of the
    numbering, each named by its own semi-decider code.

    The malcev translation is the identity program, because an open's name
    already is a membership semi-decider.
    """
    space_id = id if id is not None else f"ershov({nu.id})"
    tau = NumberingDescriptor(
        id=f"{space_id}.tau",
        domain_oracle=lambda n: True,   # fixture-annotated
        semantics=lambda n: n,
    )
    return SpaceDescriptor(
        id=space_id,
        point_numbering=nu,
        tau=tau,
        malcev=Reduction(FULL_SET_CODE, f"{space_id}.tau", "sd"),
        union_code=w_style_union_code(),
        intersect_code=w_style_intersect_code(),
        empty_name=EMPTY_SET_CODE,
        full_name=FULL_SET_CODE,
    )


# ---------------------------------------------------------------------------
# Finite spaces
# ---------------------------------------------------------------------------


def _mask(s: frozenset, npoints: int) -> int:
    m = 0
    for i in s:
        if not (0 <= i < npoints):
            raise ValueError(f"point index {i} out of range")
        m |= 1 << i
    return m


@lru_cache(maxsize=1)
def _finite_sd_body() -> int:
    """Input pair(mask, p): halt iff bit p of mask is set.

    Built window-narrow (registers below the simulator's window) so other
    programs can dovetail these semi-deciders under bounded simulation.
    """
    a = Asm(first_free_reg=1)
    rmask = a.reg()
    rcnt = a.reg()
    one = a.reg()
    two = a.reg()
    rh = a.reg()
    rt = a.reg()
    reject = a.label()
    emit_unpack2(a, 0, rmask, rcnt)
    a.const(one, 1)
    a.const(two, 2)
    _emit_low_bit(a, rmask, rcnt, one, two, rh, rt)
    a.jz(rmask, reject)
    a.const(0, 0)
    a.halt()
    a.mark(reject)
    a.jmp_raw(0)                # not a member: diverge
    return a.code()


@lru_cache(maxsize=1)
def _finite_malcev_body() -> int:
    """Input pair(pair(pair(K, masktable), sdbody), o): freeze open o's
    point mask into the membership semi-decider and hand back that code."""
    a = Asm()
    rk_ = a.reg()
    rtable = a.reg()
    rsdbody = a.reg()
    ro = a.reg()
    rdst = a.reg()
    rt = a.reg()
    rt2 = a.reg()
    one = a.reg()
    emit_unpack2(a, 0, rt, ro)
    emit_unpack2(a, rt, rt, rsdbody)
    emit_unpack2(a, rt, rk_, rtable)
    a.const(one, 1)
    _emit_tree_get(a, rtable, ro, rk_, one)     # rtable := mask of open o
    emit_build_smn(a, rsdbody, rtable, rdst, rt, rt2)
    a.copy(0, rdst)
    a.halt()
    return a.code()


def _emit_low_bit(a: Asm, rmask: int, rshift: int, one: int, two: int,
                  rh: int, rt: int) -> None:
    """rmask := bit number rshift of rmask (masks are small, so halving by
    repeated subtraction is fine).  Clobbers rshift, rh, rt."""
    bitloop, extract, halv, halv_done, par, par_done = (
        a.label(), a.label(), a.label(), a.label(), a.label(), a.label())
    a.mark(bitloop)
    a.jz(rshift, extract)
    a.const(rh, 0)
    a.mark(halv)
    a.monus(rt, rmask, one)
    a.jz(rt, halv_done)
    a.monus(rmask, rmask, two)
    a.inc(rh)
    a.jmp(halv)
    a.mark(halv_done)
    a.copy(rmask, rh)
    a.monus(rshift, rshift, one)
    a.jmp(bitloop)
    a.mark(extract)
    a.mark(par)
    a.monus(rt, rmask, one)
    a.jz(rt, par_done)
    a.monus(rmask, rmask, two)
    a.jmp(par)
    a.mark(par_done)


@lru_cache(maxsize=1)
def _finite_tstar_body() -> int:
    """Input pair(pair(pair(K, masktable), x), o): halt iff point x lies in
    open o, read straight off the mask table.

    Embedding only the table keeps the frozen part a few dozen bits, so
    the minted name stays small enough to decode instantly; routing the
    question through the malcev code would square the size up.
    """
    a = Asm()
    rk_ = a.reg()
    rtable = a.reg()
    rx = a.reg()
    ro = a.reg()
    one = a.reg()
    two = a.reg()
    rh = a.reg()
    rt = a.reg()
    reject = a.label()
    emit_unpack2(a, 0, rt, ro)
    emit_unpack2(a, rt, rt, rx)
    emit_unpack2(a, rt, rk_, rtable)
    a.const(one, 1)
    a.const(two, 2)
    _emit_tree_get(a, rtable, ro, rk_, one)     # rtable := mask of open o
    _emit_low_bit(a, rtable, rx, one, two, rh, rt)
    a.jz(rtable, reject)
    a.const(0, 0)
    a.halt()
    a.mark(reject)
    a.jmp_raw(0)
    return a.code()


@lru_cache(maxsize=1)
def _finite_seq2clo_body() -> int:
    """Input pair(pair(pair(K, masktable), seq), o): scan the sequence for
    an entry inside open o and halt with it.

    Finite membership is decidable, so no bounded simulation is needed;
    the scan diverges exactly when no entry ever lands in o.
    """
    a = Asm()
    rk_ = a.reg()
    rtable = a.reg()
    rseq = a.reg()
    ro = a.reg()
    rmask = a.reg()
    rn = a.reg()
    re = a.reg()
    rb = a.reg()
    one = a.reg()
    two = a.reg()
    rh = a.reg()
    rt = a.reg()
    loop, miss = a.label(), a.label()
    emit_unpack2(a, 0, rt, ro)
    emit_unpack2(a, rt, rt, rseq)
    emit_unpack2(a, rt, rk_, rtable)
    a.const(one, 1)
    a.const(two, 2)
    _emit_tree_get(a, rtable, ro, rk_, one)     # rtable := mask of open o
    a.const(rn, 0)
    a.mark(loop)
    a.ueval(re, rseq, rn)       # total by witness contract
    a.copy(rmask, rtable)
    a.copy(rb, re)
    _emit_low_bit(a, rmask, rb, one, two, rh, rt)
    a.jz(rmask, miss)
    a.copy(0, re)
    a.halt()
    a.mark(miss)
    a.inc(rn)
    a.jmp(loop)
    return a.code()


@lru_cache(maxsize=1)
def _table_lookup2_body() -> int:
    """Input pair(pair(K, blob), pair(i, j)): blob entry number i*K + j,
    where the blob is a balanced tree over K*K entries."""
    a = Asm()
    rk_ = a.reg()
    rblob = a.reg()
    ri = a.reg()
    rj = a.reg()
    rt = a.reg()
    one = a.reg()
    emit_unpack2(a, 0, rt, rj)
    a.unl(ri, rj)
    a.unr(rj, rj)
    emit_unpack2(a, rt, rk_, rblob)
    a.mul(ri, ri, rk_)
    a.add(ri, ri, rj)
    a.mul(rk_, rk_, rk_)
    a.const(one, 1)
    _emit_tree_get(a, rblob, ri, rk_, one)
    a.copy(0, rblob)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def _finite_union_fold_code() -> int:
    """Input pair(pair(pair(K, blob), pair(horizon, empty)), s): fold the
    union table over the first ``horizon`` entries of the sequence s."""
    a = Asm()
    rk_ = a.reg()
    rblob = a.reg()
    rhor = a.reg()
    racc = a.reg()
    rs = a.reg()
    rn = a.reg()
    rcur = a.reg()
    rtree = a.reg()
    rsz = a.reg()
    rt = a.reg()
    one = a.reg()
    loop, done, take = a.label(), a.label(), a.label()

    emit_unpack2(a, 0, rt, rs)          # rt = ctx, rs = sequence name
    emit_unpack2(a, rt, rt, racc)       # rt = pair(K, blob), racc = pair(h, e0)
    a.unl(rhor, racc)
    a.unr(racc, racc)                   # racc = index of the empty open
    emit_unpack2(a, rt, rk_, rblob)
    a.const(one, 1)
    a.const(rn, 0)

    a.mark(loop)
    emit_lt_jump(a, rn, rhor, rt, take)
    a.jmp(done)
    a.mark(take)
    a.ueval(rcur, rs, rn)               # next open's index; total by contract
    a.mul(rt, racc, rk_)
    a.add(rcur, rcur, rt)               # flat index acc*K + idx
    a.copy(rtree, rblob)
    a.mul(rsz, rk_, rk_)
    _emit_tree_get(a, rtree, rcur, rsz, one)
    a.copy(racc, rtree)
    a.inc(rn)
    a.jmp(loop)

    a.mark(done)
    a.copy(0, racc)
    a.halt()
    return a.code()


def finite_space(points: list, opens: list,
                 id: str = "finite") -> SpaceDescriptor:
    """A table-driven space on finitely many points.

    ``points`` are labels (indices name them); ``opens`` are collections of
    point indices.  The family must contain ∅ and the full set and be
    closed under pairwise union and intersection, else the input is not a
    topology and is rejected.
    """
    labels = tuple(points)
    npoints = len(labels)
    open_sets = [frozenset(o) for o in opens]
    as_set = set(open_sets)
    if len(as_set) != len(open_sets):
        raise ValueError("duplicate opens would make names ambiguous")
    full = frozenset(range(npoints))
    if frozenset() not in as_set:
        raise ValueError("the empty set is missing: not a topology")
    if full not in as_set:
        raise ValueError("the full set is missing: not a topology")
    for x in open_sets:
        for y in open_sets:
            if x | y not in as_set:
                raise ValueError(
                    f"not closed under union: {sorted(x)} ∪ {sorted(y)}")
            if x & y not in as_set:
                raise ValueError(
                    f"not closed under intersection: "
                    f"{sorted(x)} ∩ {sorted(y)}")

    k = len(open_sets)
    index = {s: i for i, s in enumerate(open_sets)}
    masks = [_mask(s, npoints) for s in open_sets]
    masktable = balanced_blob(masks)
    union_table = balanced_blob(
        [index[open_sets[i] | open_sets[j]]
         for i in range(k) for j in range(k)])
    intersect_table = balanced_blob(
        [index[open_sets[i] & open_sets[j]]
         for i in range(k) for j in range(k)])

    malcev_code = kernel.smn(
        _finite_malcev_body(), pair(pair(k, masktable), _finite_sd_body()))
    intersect_code = kernel.smn(
        _table_lookup2_body(), pair(k, intersect_table))
    union_code = kernel.smn(
        _finite_union_fold_code(),
        pair(pair(k, union_table),
             pair(FINITE_UNION_HORIZON, index[frozenset()])))

    data = FiniteSpaceData(labels=labels, opens=tuple(open_sets))
    tau = NumberingDescriptor(
        id=f"{id}.tau",
        domain_oracle=lambda n: n < k,
        semantics=lambda n: open_sets[n] if n < k else None,
    )
    # Name-minting hooks that embed only the mask table.  Going through
    # the malcev code instead would stack one name-specialization on top
    # of another, and each layer multiplies the code size by a constant —
    # the direct versions stay decodable in milliseconds.
    tables = pair(k, masktable)

    def _tstar(x: int) -> int:
        return kernel.smn(_finite_tstar_body(), pair(tables, x))

    def _seq2clo(seq_code: int) -> int:
        return kernel.smn(_finite_seq2clo_body(), pair(tables, seq_code))

    return SpaceDescriptor(
        id=id,
        point_numbering=identity_numbering(f"{id}.points", limit=npoints),
        tau=tau,
        malcev=Reduction(malcev_code, f"{id}.tau", "sd"),
        union_code=union_code,
        intersect_code=intersect_code,
        empty_name=index[frozenset()],
        full_name=index[full],
        open_semantics=lambda n: open_sets[n] if n < k else None,
        tstar_builder=_tstar,
        seq_to_closure=_seq2clo,
        finite=data,
    )


def load_finite_space(source: Union[str, Path, dict],
                      id: Optional[str] = None) -> SpaceDescriptor:
    """Build a finite space from its JSON description (path or dict)."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as f:
            doc = json.load(f)
        default_id = Path(source).stem
    else:
        doc = source
        default_id = "finite"
    if doc.get("numbering", "identity") != "identity":
        raise ValueError("only the identity numbering is supported")
    return finite_space(doc["points"], doc["opens"],
                        id=id if id is not None else default_id)


def save_finite_space(space: SpaceDescriptor, path: Union[str, Path]) -> None:
    if space.finite is None:
        raise ValueError("not a finite space")
    doc = {
        "points": list(space.finite.labels),
        "opens": [sorted(s) for s in space.finite.opens],
        "numbering": "identity",
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def finite_tau_from_sd(space: SpaceDescriptor, sd: SemiDeciderName,
                       rounds: int) -> OpenName:
    """Recover an open's τ-name from a semi-decider for it.

    Enumerate accepted point names with round-by-round growing fuel; each
    listed open fully inside the accepted set gets emitted; the result is
    the union of emitted opens.  If that union still differs from the
    accepted set, no fixpoint was reached and InsufficientRounds says so.
    """
    if space.finite is None:
        raise ValueError("finite_tau_from_sd needs a finite space")
    open_sets = space.finite.opens
    npoints = len(space.finite.labels)
    accepted: set[int] = set()
    emitted: list[int] = []
    seen = set()
    for r in range(1, rounds + 1):
        budget = 1 << r
        for p in range(npoints):
            if p not in accepted:
                halted, _ = kernel.halts_within(sd.code, p, budget)
                if halted:
                    accepted.add(p)
        for i, a_i in enumerate(open_sets):
            if i not in seen and a_i <= accepted:
                seen.add(i)
                emitted.append(i)
    union = frozenset().union(*[open_sets[i] for i in emitted]) \
        if emitted else frozenset()
    if union != frozenset(accepted):
        raise InsufficientRounds(frozenset(accepted), tuple(emitted))
    index = {s: i for i, s in enumerate(open_sets)}
    return OpenName(index[union], space.id)


def _closure(a: frozenset, open_sets: tuple, npoints: int) -> frozenset:
    """Smallest closed superset: complement of the largest open avoiding a."""
    full = frozenset(range(npoints))
    comp = full - a
    interior = frozenset()
    for o in open_sets:
        if o <= comp:
            interior |= o
    return full - interior


def markov_obstructions(space: SpaceDescriptor) -> list:
    """All pairs (x, A) with x outside A but inside its closure.

    Each such pair defeats the point-separation property a diagonal
    argument needs: x cannot be semi-decidably told apart from A.  The
    list is empty exactly when the topology is discrete.
    """
    if space.finite is None:
        raise ValueError("markov_obstructions needs a finite space")
    open_sets = space.finite.opens
    npoints = len(space.finite.labels)
    out = []
    for bits in range(1, 1 << npoints):
        a = frozenset(i for i in range(npoints) if bits & (1 << i))
        cl = _closure(a, open_sets, npoints)
        for x in sorted(cl - a):
            out.append((x, a))
    out.sort(key=lambda xa: (xa[0], sorted(xa[1]), len(xa[1])))
    return out


# ---------------------------------------------------------------------------
# Witness conversion and neighborhood refinement
# ---------------------------------------------------------------------------


def weaken_witness(
    w: Union[NormedWitness, SeqClosureWitness], space: SpaceDescriptor,
    point_name: int = 0,
) -> Union[SeqClosureWitness, ClosureWitness]:
    """Convert a stronger closure witness into the next weaker kind.

    A normed witness weakens by forgetting its norm.  A sequence witness
    becomes a closure witness: a program that, given an open around the
    limit, dovetails membership over the sequence and returns the first
    entry found inside.
    """
    if isinstance(w, NormedWitness):
        return SeqClosureWitness(w.seq_code, w.set_id)
    if isinstance(w, SeqClosureWitness):
        if space.seq_to_closure is not None:
            code = space.seq_to_closure(w.seq_code)
        else:
            code = freeze2(_generic_seq2clo_body(), sim_body(),
                           pair(space.malcev.code, w.seq_code))
        return ClosureWitness(code, point_name, w.set_id)
    raise TypeError(f"cannot weaken {type(w).__name__}")


def refine_neighborhood(basis: BasisDescriptor,
                        nb: Union[NeighborhoodName, int],
                        fuel: int) -> Outcome:
    """Shrink a neighborhood name to a basis element's name within fuel."""
    name = nb.name if isinstance(nb, NeighborhoodName) else nb
    return kernel.run(basis.refine_code, name, fuel=fuel)


def trivial_basis(space: SpaceDescriptor,
                  subject: Optional[int] = None) -> BasisDescriptor:
    """The basis whose elements are all the opens themselves: refinement
    is the identity, and complements are named through the finite tables
    when available."""
    if space.finite is not None:
        open_sets = space.finite.opens
        npoints = len(space.finite.labels)
        comp_masks = [
            _mask(frozenset(range(npoints)) - s, npoints) for s in open_sets]
        cosd_code = kernel.smn(
            _finite_malcev_body(),
            pair(pair(len(open_sets), balanced_blob(comp_masks)),
                 _finite_sd_body()))
    else:
        # Without decidable ground truth there is no generic complement
        # namer; hand back the program that never answers.
        cosd_code = EMPTY_SET_CODE
    return BasisDescriptor(
        beta=space.tau,
        refine_code=FULL_SET_CODE,   # identity program: halts with its input
        cosd_code=cosd_code,
        subject=subject,
    )


# ---------------------------------------------------------------------------
# Witness bundles on disk
# ---------------------------------------------------------------------------


def witness_to_json(w) -> dict:
    if isinstance(w, NormedWitness):
        return {"role": "normed", "seq_code": str(w.seq_code),
                "norm_code": str(w.norm_code), "set": w.set_id}
    if isinstance(w, SeqClosureWitness):
        return {"role": "seq", "seq_code": str(w.seq_code), "set": w.set_id}
    if isinstance(w, ClosureWitness):
        return {"role": "closure", "code": str(w.code),
                "point_name": str(w.point_name), "set": w.set_id}
    raise TypeError(f"not a witness: {type(w).__name__}")


def witness_from_json(doc: dict):
    role = doc["role"]
    if role == "normed":
        return NormedWitness(int(doc["seq_code"]), int(doc["norm_code"]),
                             doc.get("set", ""))
    if role == "seq":
        return SeqClosureWitness(int(doc["seq_code"]), doc.get("set", ""))
    if role == "closure":
        return ClosureWitness(int(doc["code"]), int(doc.get("point_name", 0)),
                              doc.get("set", ""))
    raise ValueError(f"unknown witness role {role!r}")


def save_witness_bundle(witnesses: list, path: Union[str, Path]) -> None:
    doc = {"witnesses": [witness_to_json(w) for w in witnesses]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_witness_bundle(path: Union[str, Path]) -> list:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return [witness_from_json(d) for d in doc["witnesses"]]
