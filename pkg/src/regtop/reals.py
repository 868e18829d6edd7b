"""The computable real line: names, opens, membership, recovery.

A real's name is a program sending each precision k to the code of a
rational within 2^-k of the point.  An open set's name is a program whose
halting set is read as a set of rational interval codes, "the open is the
union of these intervals"; the canonical producers emit small fixed-shape
table programs that halt exactly on their own finitely many entries, and
everything downstream recognizes that shape and reads the table directly,
falling back to honest enumeration of the halting set when it is absent.

All machine-side comparisons go through one shared total program,
``bound_check_code``, which settles "is this rational endpoint strictly
clear of the 2^-k certainty window around an approximation?" by exact
cross-multiplication.  It keeps its registers inside the bounded
simulator's window, so membership tests remain testable under fuel even
from inside other programs.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Callable, Optional, Union

from . import kernel
from ._progcode import (ADD, CONST, HALT, JMP, JZ, MONUS, UNL, UNR,
                        decode_program, encode_instruction, encode_program,
                        zz_encode)
from .asm import Asm
from .kernel import Halted, Outcome, OutOfFuel, pair, unpair
from .numberings import NumberingDescriptor, Reduction
from . import progs
from .progs import (
    emit_build_freeze2,
    emit_eq_jump,
    emit_sim_invoke,
    emit_unpack2,
    freeze2,
    freeze2_parts,
    omega_union_body,
    sim_body,
)
from .topology import (
    EMPTY_SET_CODE,
    FULL_SET_CODE,
    OpenName,
    SpaceDescriptor,
    emit_build_w_intersect,
    w_style_union_code,
)

__all__ = [
    "encode_rational",
    "decode_rational",
    "bound_check_code",
    "bound_check_host",
    "rational_real_name",
    "approx",
    "make_real_open",
    "parse_real_open",
    "ball_open",
    "member_real",
    "real_malcev_code",
    "nu_to_taustar_real",
    "real_space",
    "limit_fast",
    "limit_with_modulus",
    "sqrt2_name",
    "closed_ball_basis",
    "BallBasisElement",
    "interval_sd_code",
    "dense_search",
    "real_sober_recovery",
    "sober_recover_real",
    "MEMBER_ROUND_COST",
]

RationalLike = Union[Fraction, int]


# ---------------------------------------------------------------------------
# Rational codes
# ---------------------------------------------------------------------------
#
# A rational is coded as pair(sign, pair(numerator, denominator - 1)) with
# value (-1)^sign * numerator / denominator.  Decoding accepts any natural
# in the sign slot and reads its parity; encoding always produces the
# canonical form (sign in {0, 1}, fraction reduced, sign 0 for zero).


def encode_rational(x: RationalLike) -> int:
    f = Fraction(x)
    sign = 1 if f < 0 else 0
    return pair(sign, pair(abs(f.numerator), f.denominator - 1))


def decode_rational(code: int) -> Fraction:
    sign, rest = unpair(code)
    num, den_minus_1 = unpair(rest)
    value = Fraction(num, den_minus_1 + 1)
    return -value if sign % 2 else value


# ---------------------------------------------------------------------------
# The shared endpoint comparison program
# ---------------------------------------------------------------------------


def bound_check_host(q: Fraction, k: int, end: Fraction, side: int) -> int:
    """Reference semantics of bound_check_code, in exact host arithmetic.

    side 0: is ``end`` strictly below the certainty window, end < q - 2^-k?
    side 1: is ``end`` strictly above it, q + 2^-k < end?
    """
    eps = Fraction(1, 2 ** k)
    if side == 0:
        return 1 if end < q - eps else 0
    return 1 if q + eps < end else 0


@lru_cache(maxsize=1)
def bound_check_code() -> int:
    """Total program: pair(pair(q_code, k), pair(end_code, side)) ->
    bound_check_host(q, k, end, side).

    Signed comparison by cross-multiplication.  A signed value is carried
    as a (positive, negative) register pair so the machine's truncated
    subtraction never loses information; x < y for signed values becomes
    x_pos + y_neg < y_pos + x_neg on naturals.  Registers stay below the
    simulator window so membership bodies can call this even when they
    themselves run under bounded simulation.
    """
    a = Asm(first_free_reg=1)
    r1 = a.reg()   # q code -> |num q| -> T = num*2^k -> alpha_pos
    r2 = a.reg()   # den q -> alpha_neg
    r3 = a.reg()   # 2^k -> D = den_q*2^k -> lhs of final compare
    r4 = a.reg()   # sign q -> sign end
    r5 = a.reg()   # end parse -> |num end| -> L = num_end*D
    r6 = a.reg()   # side
    r7 = a.reg()   # k -> scratch -> den end -> rhs of final compare
    kloop, kdone = a.label(), a.label()
    saz, s0a1, s0a0, join = a.label(), a.label(), a.label(), a.label()
    side0, t10, t00, cmp_, yes = (
        a.label(), a.label(), a.label(), a.label(), a.label())

    a.unl(r1, 0)
    a.unr(r5, 0)
    a.const(0, 1)              # r0 now holds the constant one
    a.unr(r7, r1)              # k
    a.unl(r1, r1)              # q code
    a.unr(r6, r5)              # side
    a.unl(r5, r5)              # end code
    a.unl(r4, r1)              # sign of q
    a.unr(r1, r1)
    a.unr(r2, r1)
    a.inc(r2)                  # denominator of q
    a.unl(r1, r1)              # |numerator| of q
    a.const(r3, 1)
    a.mark(kloop)
    a.jz(r7, kdone)
    a.add(r3, r3, r3)
    a.monus(r7, r7, 0)
    a.jmp(kloop)
    a.mark(kdone)              # r3 = 2^k
    a.mul(r1, r1, r3)          # T = |num q| * 2^k
    a.mul(r3, r3, r2)          # D = den q * 2^k

    # signed numerator of (q -+ 2^-k) over D, as (r1 positive, r2 negative):
    # side 0 wants q - 2^-k, side 1 wants q + 2^-k.
    a.jz(r4, saz)
    a.jz(r6, s0a1)
    a.monus(r7, r2, r1)        # q < 0, side 1:  den - T  signed
    a.monus(r2, r1, r2)
    a.copy(r1, r7)
    a.jmp(join)
    a.mark(s0a1)               # q < 0, side 0:  -(T + den)
    a.add(r2, r1, r2)
    a.const(r1, 0)
    a.jmp(join)
    a.mark(saz)
    a.jz(r6, s0a0)
    a.add(r1, r1, r2)          # q >= 0, side 1:  T + den
    a.const(r2, 0)
    a.jmp(join)
    a.mark(s0a0)               # q >= 0, side 0:  T - den  signed
    a.monus(r7, r1, r2)
    a.monus(r2, r2, r1)
    a.copy(r1, r7)
    a.mark(join)

    a.unl(r4, r5)              # sign of end
    a.unr(r5, r5)
    a.unr(r7, r5)
    a.inc(r7)                  # denominator of end
    a.unl(r5, r5)              # |numerator| of end
    a.mul(r1, r1, r7)          # alpha_pos = signed-num-pos * den_end
    a.mul(r2, r2, r7)          # alpha_neg
    a.mul(r5, r5, r3)          # L = |num end| * D

    # side 0: end < q - 2^-k  ==  (-1)^se L  <  alpha   (after clearing D, den)
    # side 1: q + 2^-k < end  ==  alpha  <  (-1)^se L
    a.jz(r6, side0)
    a.jz(r4, t10)
    a.add(r3, r1, r5)          # side 1, end < 0:  alpha_pos + L < alpha_neg
    a.copy(r7, r2)
    a.jmp(cmp_)
    a.mark(t10)                # side 1, end >= 0: alpha_pos < L + alpha_neg
    a.copy(r3, r1)
    a.add(r7, r5, r2)
    a.jmp(cmp_)
    a.mark(side0)
    a.jz(r4, t00)
    a.copy(r3, r2)             # side 0, end < 0:  alpha_neg < alpha_pos + L
    a.add(r7, r1, r5)
    a.jmp(cmp_)
    a.mark(t00)                # side 0, end >= 0: L + alpha_neg < alpha_pos
    a.add(r3, r5, r2)
    a.copy(r7, r1)
    a.mark(cmp_)
    a.inc(r3)
    a.monus(r3, r3, r7)        # strict less: lhs + 1 <= rhs
    a.jz(r3, yes)
    a.const(0, 0)
    a.halt()
    a.mark(yes)
    a.const(0, 1)
    a.halt()
    return a.code()


def _bound_check_input(q_code: int, k: int, end_code: int, side: int) -> int:
    return pair(pair(q_code, k), pair(end_code, side))


# ---------------------------------------------------------------------------
# Names of opens: interval tables
# ---------------------------------------------------------------------------
#
# The canonical name of a finite union of open rational intervals is a
# twelve-instruction program that halts exactly on the codes of its own
# table entries, so its halting set unions back to exactly the named open.
# The entry list rides as the constant of instruction 2, deliberately one
# of the two cheapest leaf positions of a twelve-leaf code tree: every
# membership decider embeds the open it decides, and a code's bit size
# grows by a factor of two per tree level above each payload.  All other
# eleven instructions are fixed, so consumers can verify the whole shape
# by comparing three constant subtrees and then read the table without
# enumerating anything.


def _emit_rat_le(a: Asm, ca: int, cb: int, sc1: int, sc2: int, sc0: int,
                 pass_label) -> None:
    """Jump to pass_label when value(ca) <= value(cb); fall through if not.

    ca/cb hold rational codes with canonical {0,1} signs and are preserved;
    sc0..sc2 are clobbered.  Cross-multiplied exact comparison.
    """
    apos, bothpos, fail = a.label(), a.label(), a.label()
    a.unr(sc1, ca)
    a.unl(sc1, sc1)            # |num a|
    a.unr(sc0, cb)
    a.unr(sc0, sc0)
    a.inc(sc0)                 # den b
    a.mul(sc1, sc1, sc0)       # X = |num a| * den b
    a.unr(sc2, cb)
    a.unl(sc2, sc2)            # |num b|
    a.unr(sc0, ca)
    a.unr(sc0, sc0)
    a.inc(sc0)                 # den a
    a.mul(sc2, sc2, sc0)       # Y = |num b| * den a
    a.unl(sc0, ca)
    a.jz(sc0, apos)
    a.unl(sc0, cb)
    a.jz(sc0, pass_label)      # a <= 0 <= b: always true
    a.monus(sc0, sc2, sc1)     # both negative: -X <= -Y iff Y <= X
    a.jz(sc0, pass_label)
    a.jmp(fail)
    a.mark(apos)
    a.unl(sc0, cb)
    a.jz(sc0, bothpos)
    a.add(sc0, sc1, sc2)       # a >= 0 >= b: X <= -Y iff X = Y = 0
    a.jz(sc0, pass_label)
    a.jmp(fail)
    a.mark(bothpos)
    a.monus(sc0, sc1, sc2)     # X <= Y
    a.jz(sc0, pass_label)
    a.mark(fail)


def _emit_table_entries(a: Asm, ro: int, rhead: int, rmid: int, rback: int,
                        one: int, rt: int, rt2: int, rh: int, rrem: int,
                        rentries: int, not_table) -> None:
    """rentries := the entry list of the table named in ro, verified in full.

    rhead/rmid/rback hold the three fixed subtrees; the emitted code checks
    the instruction count, the subtrees, and leaf 2's opcode and target
    register, then extracts the zero-terminated entry list.  Jumps to
    not_table when any check fails, leaving rentries untouched.
    """
    s0, s1, s2, s3, s4, s5 = (a.label(), a.label(), a.label(),
                              a.label(), a.label(), a.label())
    a.unl(rt, ro)
    a.const(rt2, _TABLE_LEN)
    emit_eq_jump(a, rt, rt2, rh, rrem, s0)
    a.jmp(not_table)
    a.mark(s0)
    a.unr(rt, ro)              # the twelve-leaf instruction tree
    a.unr(rt2, rt)
    emit_eq_jump(a, rt2, rback, rh, rrem, s1)
    a.jmp(not_table)
    a.mark(s1)
    a.unl(rt, rt)              # first six instructions
    a.unr(rt2, rt)
    emit_eq_jump(a, rt2, rmid, rh, rrem, s2)
    a.jmp(not_table)
    a.mark(s2)
    a.unl(rt, rt)              # first three: pair(pair(i0, i1), i2)
    a.unl(rt2, rt)
    emit_eq_jump(a, rt2, rhead, rh, rrem, s3)
    a.jmp(not_table)
    a.mark(s3)
    a.unr(rt, rt)              # leaf 2: must encode CONST into register 1
    a.unl(rt2, rt)
    emit_eq_jump(a, rt2, one, rh, rrem, s4)
    a.jmp(not_table)
    a.mark(s4)
    a.unr(rt, rt)
    a.unl(rt2, rt)
    emit_eq_jump(a, rt2, one, rh, rrem, s5)
    a.jmp(not_table)
    a.mark(s5)
    a.unr(rentries, rt)        # the zero-terminated entry list


def _emit_table_mint(a: Asm, rblob: int, rhead: int, rmid: int, rback: int,
                     rdst: int, rt: int, rt2: int) -> None:
    """rdst := the canonical table code holding rblob's entry list.

    Byte-identical to make_real_open on the same entries; rhead/rmid/rback
    hold the fixed subtrees.
    """
    a.const(rt, 1)
    a.pair(rt2, rt, rblob)
    a.pair(rt2, rt, rt2)       # leaf 2: CONST loading r1 with the list
    a.pair(rt2, rhead, rt2)    # pair(pair(i0, i1), i2)
    a.pair(rt2, rt2, rmid)     # first six instructions
    a.pair(rt2, rt2, rback)    # the twelve-leaf tree
    a.const(rt, _TABLE_LEN)
    a.pair(rdst, rt, rt2)


def _interval_entry(lo: RationalLike, hi: RationalLike) -> int:
    lo, hi = Fraction(lo), Fraction(hi)
    if not lo < hi:
        raise ValueError(f"interval needs lo < hi, got [{lo}, {hi}]")
    return pair(encode_rational(lo), encode_rational(hi))


_TABLE_LEN = 12


def _table_rows(blob: int) -> list:
    """The twelve rows of a table name holding the given entry list.

    The program: skip the filler, load the zero-terminated right-nested
    entry list, and halt exactly when the input equals one of the entries
    (equality by two truncated subtractions).  The tail self-loop is the
    honest negative of a semi-decider.
    """
    return [
        (JMP, [zz_encode(2)]),
        (HALT, []),                  # filler, never executed
        (CONST, [1, blob]),
        (JZ, [1, zz_encode(8)]),     # list exhausted: reject
        (UNL, [3, 1]),
        (MONUS, [5, 3, 0]),
        (MONUS, [6, 0, 3]),
        (ADD, [5, 5, 6]),
        (JZ, [5, zz_encode(30)]),    # entry == input: jump past the end, halt
        (UNR, [1, 1]),
        (JMP, [zz_encode(-7)]),      # next entry
        (JMP, [zz_encode(0)]),       # reject by diverging
    ]


@lru_cache(maxsize=1)
def _table_fixed_subtrees() -> tuple[int, int, int]:
    """The three constant subtrees shared by all table names.

    A twelve-leaf code tree splits 6/6, each half 3/3, each triple (2,1).
    Instruction 2 -- the table constant -- is the lone leaf of the first
    triple, so everything else lands in three fixed subtrees: the pair
    (instr 0, instr 1), the triple (instrs 3..5), and the back half
    (instrs 6..11).
    """
    leaves = [encode_instruction(op, args) for op, args in _table_rows(0)]
    head_pair = pair(leaves[0], leaves[1])
    mid_triple = pair(pair(leaves[3], leaves[4]), leaves[5])
    back_half = pair(pair(pair(leaves[6], leaves[7]), leaves[8]),
                     pair(pair(leaves[9], leaves[10]), leaves[11]))
    return head_pair, mid_triple, back_half


def _table_blob(entries) -> int:
    blob = 0
    for e in reversed(entries):
        blob = pair(e, blob)
    return blob


def make_real_open(intervals) -> int:
    """Name the union of finitely many open rational intervals.

    The result is the canonical table program described above.  At most
    four intervals are accepted: each extra entry doubles the table
    constant, and these names are made to be embedded whole into
    membership deciders.  Wider unions are taken with the space's union
    operation instead.
    """
    entries = [_interval_entry(lo, hi) for lo, hi in intervals]
    if len(entries) > 4:
        raise ValueError("at most 4 intervals per table name; "
                         "take a union of table names instead")
    return encode_program(_table_rows(_table_blob(entries)))


def _raw_table_entries(code: int):
    """The raw entry codes of a canonical table name, or None.

    Same full-shape test the machine readers apply: exactly twelve
    instructions, byte for byte the template around the entry constant.
    No decoding, no filtering.
    """
    try:
        dec = decode_program(code)
    except Exception:
        return None
    if dec.n != _TABLE_LEN:
        return None
    ins2 = dec.instruction(2)
    if ins2[0] != CONST or ins2[1] != 1:
        return None
    blob = ins2[2]
    if encode_program(_table_rows(blob)) != code:
        return None
    out = []
    rest = blob
    while rest:
        if len(out) > 64:           # not a plausible entry list
            return None
        entry, rest = unpair(rest)
        out.append(entry)
    return out


def parse_real_open(code: int):
    """Entries of a canonical interval-table name, or None for other codes.

    The whole twelve-instruction shape is required, the same test the
    machine-side readers apply.  Entries whose interval is empty or whose
    sign slots the machine comparator would misread contribute nothing and
    are skipped, matching what the membership scan can certify.  Returns a
    list of (lo, hi) Fractions.
    """
    raw = _raw_table_entries(code)
    if raw is None:
        return None
    out = []
    for entry in raw:
        lo_c, hi_c = unpair(entry)
        if unpair(lo_c)[0] > 1 or unpair(hi_c)[0] > 1:
            continue
        lo, hi = decode_rational(lo_c), decode_rational(hi_c)
        if lo < hi:
            out.append((lo, hi))
    return out


def ball_open(center: RationalLike, radius: RationalLike) -> int:
    """The open interval of the given rational center and radius."""
    c, r = Fraction(center), Fraction(radius)
    if r <= 0:
        raise ValueError("radius must be positive")
    return make_real_open([(c - r, c + r)])


# ---------------------------------------------------------------------------
# Names of reals
# ---------------------------------------------------------------------------


def rational_real_name(q: RationalLike) -> int:
    """The constant fast Cauchy name of a rational point."""
    return encode_program([(CONST, [0, encode_rational(q)]), (0, [])])


APPROX_FUEL = 10 ** 6


def approx(name: int, k: int, fuel: int = APPROX_FUEL) -> Fraction:
    """The named point's stage-k rational: within 2^-k of the point."""
    out = kernel.run(name, k, fuel=fuel)
    if not isinstance(out, Halted):
        raise RuntimeError(f"real name {name} gave no stage-{k} rational "
                           f"within {fuel} steps")
    return decode_rational(out.value)


# ---------------------------------------------------------------------------
# The membership core
# ---------------------------------------------------------------------------
#
# One emitted loop settles "does this point lie in this open?" positively:
# at round k it takes the point's stage-k rational q and (a) scans the
# open's interval table, when the fixed shape is present, for an entry
# strictly containing [q - 2^-k, q + 2^-k]; (b) plays one step of a
# dovetailed enumeration of the open's halting set, treating round k as
# pair(candidate, budget-index), and certifies any accepted interval that
# strictly contains the window.  (a) makes canonical names fast; (b) makes
# any name correct in the limit, because an interior point eventually has
# both a fine enough window and an accepted interval around it.


def _frozen_tail() -> int:
    """The context constants every membership body is frozen with.

    pair(bound_check_code, pair(head_pair, pair(mid_triple, back_half))):
    the comparison program plus the three fixed subtrees of the table
    shape.  Passing the subtrees through the context rather than as body
    constants matters: a constant inside the body would be amplified by
    the body's whole tree depth in every code embedding it.
    """
    head_pair, mid_triple, back_half = _table_fixed_subtrees()
    shapes = pair(head_pair, pair(mid_triple, back_half))
    return pair(bound_check_code(), shapes)


def _emit_member_core(a: Asm, rsim: int, ro: int, re: int, rtail: int,
                      certify, rbound: int | None = None,
                      exhausted=None) -> None:
    """Emit the loop; jumps to ``certify`` on success.

    rtail holds the _frozen_tail constants.  With rbound set, rounds
    k < rbound are tried and control jumps to ``exhausted`` afterwards;
    otherwise the loop runs forever (a semi-decider's honest negative).
    The caller marks the target labels.
    """
    one = a.reg()
    rentries, rbchk = a.reg(), a.reg()
    rhead, rmid, rback = a.reg(), a.reg(), a.reg()
    rt, rt2 = a.reg(), a.reg()
    rh, rrem = a.reg(), a.reg()
    rk, rq = a.reg(), a.reg()
    rrest, rlo, rhi, rarg, rres = (
        a.reg(), a.reg(), a.reg(), a.reg(), a.reg())
    rc2, rbud = a.reg(), a.reg()

    no_table = a.label()
    round_, scan, scan_next, scan_done, probe_fail = (
        a.label(), a.label(), a.label(), a.label(), a.label())
    g2, g3 = a.label(), a.label()

    a.const(one, 1)
    a.const(rentries, 0)
    a.unl(rbchk, rtail)
    a.unr(rt, rtail)
    a.unl(rhead, rt)
    a.unr(rt, rt)
    a.unl(rmid, rt)
    a.unr(rback, rt)

    # Table names are recognized in full; anything else keeps an empty
    # table here and leans on the probe path below.
    _emit_table_entries(a, ro, rhead, rmid, rback, one, rt, rt2, rh, rrem,
                        rentries, no_table)
    a.mark(no_table)

    a.const(rk, 0)
    a.mark(round_)
    if rbound is not None:
        a.monus(rt, rbound, rk)
        a.jz(rt, exhausted)
    a.ueval(rq, re, rk)        # stage-k rational of the point

    # fast path: scan the table for an entry clearing both bound checks
    a.copy(rrest, rentries)
    a.mark(scan)
    a.jz(rrest, scan_done)
    a.unl(rt, rrest)
    a.unl(rlo, rt)
    a.unr(rhi, rt)
    a.pair(rarg, rq, rk)
    a.const(rt, 0)
    a.pair(rt, rlo, rt)
    a.pair(rarg, rarg, rt)
    a.ueval(rres, rbchk, rarg)
    a.jz(rres, scan_next)      # entry's lower bound not strictly below
    a.pair(rarg, rq, rk)
    a.pair(rt, rhi, one)
    a.pair(rarg, rarg, rt)
    a.ueval(rres, rbchk, rarg)
    a.jz(rres, scan_next)
    a.jmp(certify)
    a.mark(scan_next)
    a.unr(rrest, rrest)
    a.jmp(scan)
    a.mark(scan_done)

    # honest path: round k probes candidate unl(k) for 16 + 2*unr(k) steps
    a.unl(rc2, rk)
    a.unr(rbud, rk)
    a.add(rbud, rbud, rbud)
    a.const(rt, 16)
    a.add(rbud, rbud, rt)
    emit_sim_invoke(a, rsim, ro, rc2, rbud, rres, rt)
    a.jz(rres, probe_fail)
    # the open accepted candidate rc2 = pair(lo, hi): its interval is part
    # of the open, so a window strictly inside it certifies membership.
    a.unl(rlo, rc2)
    a.unr(rhi, rc2)
    a.unl(rt, rlo)
    a.monus(rt, rt, one)
    a.jz(rt, g2)               # canonical sign on the accepted lower end
    a.jmp(probe_fail)
    a.mark(g2)
    a.unl(rt, rhi)
    a.monus(rt, rt, one)
    a.jz(rt, g3)               # canonical sign on the accepted upper end
    a.jmp(probe_fail)
    a.mark(g3)
    a.pair(rarg, rq, rk)
    a.const(rt, 0)
    a.pair(rt, rlo, rt)
    a.pair(rarg, rarg, rt)
    a.ueval(rres, rbchk, rarg)
    a.jz(rres, probe_fail)
    a.pair(rarg, rq, rk)
    a.pair(rt, rhi, one)
    a.pair(rarg, rarg, rt)
    a.ueval(rres, rbchk, rarg)
    a.jz(rres, probe_fail)
    a.jmp(certify)
    a.mark(probe_fail)
    a.inc(rk)
    a.jmp(round_)


@lru_cache(maxsize=None)
def _member_body(runtime_is_open: bool) -> int:
    """The body behind both membership directions.

    Input pair(pair(sim, pair(frozen, tail)), runtime), tail as built by
    _frozen_tail:
      runtime_is_open False: frozen names the open, runtime names the point
                             (the semi-decider a malcev translation mints);
      runtime_is_open True:  frozen names the point, runtime the open
                             (the point's neighborhood filter).
    Halts exactly on members, by the core loop above.
    """
    a = Asm()
    rctx, rruntime = a.reg(), a.reg()
    rsim, rrest, rfrozen, rtail = a.reg(), a.reg(), a.reg(), a.reg()
    certify = a.label()
    emit_unpack2(a, 0, rctx, rruntime)
    emit_unpack2(a, rctx, rsim, rrest)
    emit_unpack2(a, rrest, rfrozen, rtail)
    if runtime_is_open:
        _emit_member_core(a, rsim, rruntime, rfrozen, rtail, certify)
    else:
        _emit_member_core(a, rsim, rfrozen, rruntime, rtail, certify)
    a.mark(certify)
    a.const(0, 0)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def real_malcev_code() -> int:
    """Program: open's name o -> a semi-decider for membership in o.

    One fixed code for the whole line: it rebuilds, for each o, the same
    two-constant freeze of the membership body that the host-side builder
    would mint, so every translated name has the recognizable shape.
    """
    a = Asm()
    rctx, ro = a.reg(), a.reg()
    rsim, rrest, rbody, rtail = a.reg(), a.reg(), a.reg(), a.reg()
    rsmall, rt, rt2 = a.reg(), a.reg(), a.reg()
    emit_unpack2(a, 0, rctx, ro)
    emit_unpack2(a, rctx, rsim, rrest)
    emit_unpack2(a, rrest, rbody, rtail)
    a.pair(rsmall, ro, rtail)
    emit_build_freeze2(a, rbody, rsim, rsmall, 0, rt, rt2)
    a.halt()
    return freeze2(a.code(), sim_body(),
                   pair(_member_body(False), _frozen_tail()))


def real_membership_sd(open_name: int) -> int:
    """Host-side mint of the same semi-decider real_malcev_code builds."""
    return freeze2(_member_body(False), sim_body(),
                   pair(open_name, _frozen_tail()))


def nu_to_taustar_real(x_name: int) -> int:
    """The point's neighborhood filter: halts on names of opens around it."""
    return freeze2(_member_body(True), sim_body(),
                   pair(x_name, _frozen_tail()))


# ---------------------------------------------------------------------------
# Intersection
# ---------------------------------------------------------------------------


def _machine_rat_value(code: int) -> Fraction:
    """The rational a code denotes under the machine comparator's reading.

    Identical to decode_rational on canonical codes; differs only in the
    sign convention for junk (the comparator treats any nonzero sign slot
    as negative, the parity-tolerant decoder does not).
    """
    sign, rest = unpair(code)
    num, den_minus_1 = unpair(rest)
    value = Fraction(num, den_minus_1 + 1)
    return -value if sign else value


@lru_cache(maxsize=1)
def real_intersect_code() -> int:
    """Program: pair(i, j) -> a name of the intersection of the two opens.

    Two canonical tables merge into a fresh canonical table: each pair of
    entries meets in (the larger lower endpoint, the smaller upper one),
    kept when still nonempty, and the survivors are minted back into the
    twelve-instruction shape -- table names are closed under intersection.
    Anything else falls back to the five-instruction sequential product,
    whose halting set is the intersection of the halting sets.
    """
    head_pair, mid_triple, back_half = _table_fixed_subtrees()
    a = Asm()
    ri, rj = a.reg(), a.reg()
    one, rt, rt2, rh, rrem = a.reg(), a.reg(), a.reg(), a.reg(), a.reg()
    rhead, rmid, rback = a.reg(), a.reg(), a.reg()
    rents_i, rents_j = a.reg(), a.reg()
    rrest_i, rrest_j = a.reg(), a.reg()
    rlo1, rhi1, rlo2, rhi2, rlo, rhi = (
        a.reg(), a.reg(), a.reg(), a.reg(), a.reg(), a.reg())
    rstack, rblob, rent = a.reg(), a.reg(), a.reg()
    outer, inner, adv_i, build, rev, mint, fallback = (
        a.label(), a.label(), a.label(), a.label(), a.label(),
        a.label(), a.label())
    lo_done, hi_done, skip = a.label(), a.label(), a.label()

    emit_unpack2(a, 0, ri, rj)
    a.const(one, 1)
    a.const(rhead, head_pair)
    a.const(rmid, mid_triple)
    a.const(rback, back_half)
    _emit_table_entries(a, ri, rhead, rmid, rback, one, rt, rt2, rh, rrem,
                        rents_i, fallback)
    _emit_table_entries(a, rj, rhead, rmid, rback, one, rt, rt2, rh, rrem,
                        rents_j, fallback)

    a.const(rstack, 0)
    a.copy(rrest_i, rents_i)
    a.mark(outer)
    a.jz(rrest_i, build)
    a.unl(rt, rrest_i)
    a.unl(rlo1, rt)
    a.unr(rhi1, rt)
    a.copy(rrest_j, rents_j)
    a.mark(inner)
    a.jz(rrest_j, adv_i)
    a.unl(rt, rrest_j)
    a.unl(rlo2, rt)
    a.unr(rhi2, rt)
    a.copy(rlo, rlo1)
    _emit_rat_le(a, rlo2, rlo1, rh, rrem, rt, lo_done)
    a.copy(rlo, rlo2)          # lo2 is strictly larger: it is the max
    a.mark(lo_done)
    a.copy(rhi, rhi1)
    _emit_rat_le(a, rhi1, rhi2, rh, rrem, rt, hi_done)
    a.copy(rhi, rhi2)          # hi2 is strictly smaller: it is the min
    a.mark(hi_done)
    _emit_rat_le(a, rhi, rlo, rh, rrem, rt, skip)   # empty meet: drop
    a.pair(rent, rlo, rhi)
    a.pair(rstack, rent, rstack)
    a.mark(skip)
    a.unr(rrest_j, rrest_j)
    a.jmp(inner)
    a.mark(adv_i)
    a.unr(rrest_i, rrest_i)
    a.jmp(outer)

    a.mark(build)              # reverse the survivor stack into list order
    a.const(rblob, 0)
    a.mark(rev)
    a.jz(rstack, mint)
    a.unl(rt, rstack)
    a.pair(rblob, rt, rblob)
    a.unr(rstack, rstack)
    a.jmp(rev)
    a.mark(mint)
    _emit_table_mint(a, rblob, rhead, rmid, rback, 0, rt, rt2)
    a.halt()

    a.mark(fallback)
    emit_build_w_intersect(a, ri, rj, 0, rt, rt2, rh, rrem)
    a.halt()
    return a.code()


def intersect_real_opens(o1: int, o2: int) -> int:
    """Host mint of exactly the code real_intersect_code produces."""
    e1 = _raw_table_entries(o1)
    e2 = _raw_table_entries(o2)
    if e1 is None or e2 is None:
        return kernel.w_intersect(o1, o2)
    kept = []
    for ea in e1:
        lo1, hi1 = unpair(ea)
        for eb in e2:
            lo2, hi2 = unpair(eb)
            lo = lo1 if _machine_rat_value(lo2) <= _machine_rat_value(lo1) \
                else lo2
            hi = hi1 if _machine_rat_value(hi1) <= _machine_rat_value(hi2) \
                else hi2
            if not _machine_rat_value(hi) <= _machine_rat_value(lo):
                kept.append(pair(lo, hi))
    return encode_program(_table_rows(_table_blob(kept)))


# ---------------------------------------------------------------------------
# Host-side membership (the same dovetail, in exact arithmetic)
# ---------------------------------------------------------------------------


def _union_members(code: int):
    """Sequence name inside a dovetailed-union code, if that is its shape."""
    parts = freeze2_parts(code)
    if parts is None:
        return None
    body, big, small = parts
    if body == omega_union_body() and big == sim_body():
        return small
    return None


MEMBER_ROUND_COST = 64


def member_real(x_name: int, open_name, fuel: int):
    """Halt iff the named point lies in the named open, within fuel.

    Mirrors the machine loop with host bookkeeping: the fuel pays for the
    kernel work (stage evaluations and halting-set probes) plus a flat
    MEMBER_ROUND_COST per round standing in for the machine loop's own
    scanning, so a given fuel means comparable work on either side.
    Union-shaped names are expanded member by member as rounds pass.
    """
    o = open_name.name if hasattr(open_name, "name") else open_name
    tables: list = []           # (lo, hi) Fractions known to sit inside o
    probe_targets: list = []    # codes whose halting sets to dovetail
    seq = _union_members(o)
    seq_resolved = 0
    direct = parse_real_open(o)
    if direct is not None:
        tables.extend(direct)
    elif seq is None:
        probe_targets.append(o)

    spent = 0
    k = 0
    while spent < fuel:
        spent += MEMBER_ROUND_COST
        # resolve union members up to round k
        while seq is not None and seq_resolved <= k and spent < fuel:
            out = kernel.run(seq, seq_resolved, fuel=fuel - spent)
            spent += out.steps
            if not isinstance(out, Halted):
                return OutOfFuel(spent)
            t = parse_real_open(out.value)
            if t is not None:
                tables.extend(t)
            else:
                probe_targets.append(out.value)
            seq_resolved += 1
        if spent >= fuel:
            return OutOfFuel(spent)

        out = kernel.run(x_name, k, fuel=fuel - spent)
        spent += out.steps
        if not isinstance(out, Halted):
            return OutOfFuel(spent)
        q = decode_rational(out.value)
        eps = Fraction(1, 2 ** k)
        for lo, hi in tables:
            if lo < q - eps and q + eps < hi:
                return Halted(0, spent)

        c, j = unpair(k)
        budget = 16 + 2 * j
        budget = min(budget, fuel - spent)
        for target in probe_targets:
            if budget <= 0:
                break
            hit, steps = kernel.halts_within(target, c, budget)
            spent += steps if steps is not None else budget
            if hit:
                lo_c, hi_c = unpair(c)
                s_lo, s_hi = unpair(lo_c)[0], unpair(hi_c)[0]
                if s_lo <= 1 and s_hi <= 1:
                    lo, hi = decode_rational(lo_c), decode_rational(hi_c)
                    if lo < q - eps and q + eps < hi:
                        return Halted(0, spent)
        k += 1
    return OutOfFuel(min(spent, fuel))
