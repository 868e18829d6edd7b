"""In-machine bounded simulation and the program combinators built on it.

The centerpiece is :func:`sim_body`: a register-machine program that runs
*another* program from its code for at most a given number of steps and
reports either ``0`` (did not halt within the budget) or
``1 + pair(value, steps)``.  Having that one code makes halting-set unions,
effective open sets, and every other "search over bounded runs" expressible
inside the machine itself rather than only on the host.

Design constraints that shaped the simulator:

* **No frozen constants inside the body.**  Every context value — including
  the simulator's own code, needed to recurse on nested evaluation — arrives
  at runtime in the input, so the body stays a few kilobits and the single
  large embedding happens once, via :func:`regtop.kernel.smn`, in whatever
  deliverable code wants to simulate.  (Pairing doubles bit length per
  level, so each *extra* wrapping layer would multiply code size by ~32.)
* **Eight simulated registers.**  Reads of higher registers correctly give
  zero; a *write* above the window makes the simulation give up and report
  "did not halt" — a sound under-approximation, never a false halt.
  Programs meant to run under simulation are written within the window.
* **One interpretive layer.**  A simulated ``UEVAL`` re-enters the
  simulator through a genuine ``UEVAL`` on the self-code carried in the
  input, so nested calls cost the same per-step factor as the top level
  instead of squaring it.
* **Self-loops abort early.**  A ``JMP`` to its own address — or a taken
  ``JZ`` to its own address — can never make progress, so the verdict "no
  halt within budget" is issued immediately.  Probe programs exploit this:
  a rejecting branch that self-loops costs a handful of simulated steps
  instead of the whole budget.

Budget accounting matches the kernel exactly: a run that halts is reported
with the same value and the same step count the kernel would produce, and a
run is reported halted within budget ``b`` iff the kernel halts it with
fuel ``b``.
"""
from __future__ import annotations

from functools import lru_cache

from . import kernel
from ._progcode import (
    CONST, PAIR, UEVAL, decode_program, encode_instruction, encode_program,
    pair, unpair,
)
from .asm import Asm, Label

__all__ = [
    "SIM_NOT_HALTED",
    "SIM_REG_WINDOW",
    "SIM_STEP_FACTOR",
    "SIM_BASE_STEPS",
    "emit_unpack2",
    "emit_eq_jump",
    "emit_lt_jump",
    "emit_pack",
    "emit_divmod",
    "emit_half",
    "emit_mod_const",
    "emit_pow2",
    "emit_sim_invoke",
    "emit_build_smn",
    "sim_body",
    "sim_input",
    "sim_call",
    "smn_parts",
    "freeze2",
    "freeze2_parts",
    "emit_build_freeze2",
    "w_union_body",
    "w_union_code",
    "omega_union_body",
    "omega_union_code",
    "w_intersect_body",
]

SIM_NOT_HALTED = 0

# Simulated programs may use registers 0..SIM_REG_WINDOW-1.  Reads above the
# window give 0 (exactly like unwritten registers); a write above it aborts
# the simulation with the "did not halt" verdict.
SIM_REG_WINDOW = 8

# Host-step cost of one simulated step, dominated by the per-fetch descent
# of the balanced instruction tree (one halving loop per level, so the true
# factor grows with log² of the simulated program's length).  The constant
# is a measured ceiling for programs up to 256 instructions, used when
# picking outer fuel for a given simulation budget; the fixed prologue is
# charged once per simulation.
SIM_STEP_FACTOR = 900
SIM_BASE_STEPS = 64


# ---------------------------------------------------------------------------
# Reusable assembly fragments
# ---------------------------------------------------------------------------


def emit_unpack2(a: Asm, src: int, left: int, right: int) -> None:
    """left, right := unpair(src).  src may coincide with left or right."""
    if right == src:
        a.unl(left, src)
        a.unr(right, src)
    else:
        a.unr(right, src)
        a.unl(left, src)


def emit_eq_jump(a: Asm, x: int, y: int, scratch: int, scratch2: int,
                 target: Label) -> None:
    """Jump to target when x == y (both truncated differences vanish)."""
    a.monus(scratch, x, y)
    a.monus(scratch2, y, x)
    a.add(scratch, scratch, scratch2)
    a.jz(scratch, target)


def emit_lt_jump(a: Asm, x: int, y: int, scratch: int, target: Label) -> None:
    """Jump to target when x < y, i.e. (x+1) monus y == 0."""
    a.copy(scratch, x)
    a.inc(scratch)
    a.monus(scratch, scratch, y)
    a.jz(scratch, target)


def emit_pack(a: Asm, dest: int, parts: list[int]) -> None:
    """dest := pair(parts[0], pair(parts[1], ... parts[-1])), right-nested."""
    if len(parts) == 1:
        if dest != parts[0]:
            a.copy(dest, parts[0])
        return
    a.pair(dest, parts[-2], parts[-1])
    for p in reversed(parts[:-2]):
        a.pair(dest, p, dest)


def emit_divmod(a: Asm, rn: int, rd: int, rq: int, rr: int, one: int) -> None:
    """rq, rr := divmod(rn, rd) for rd >= 1.  Preserves rn and rd.

    Binary long division with the powers of two recomputed by doubling on
    each descent step: quadratic in the bit length, but free of any stored
    list whose pair encoding would blow up.
    """
    rj = a.reg()       # number of doublings with rd << j <= rn
    rdd = a.reg()      # rd << i while descending
    rpi = a.reg()      # 1 << i
    rc = a.reg()       # inner doubling counter
    rt = a.reg()
    up, dbl = a.label(), a.label()
    down, sub, inner, inner_end, skip, done = (
        a.label(), a.label(), a.label(), a.label(), a.label(), a.label())

    a.const(rq, 0)
    a.copy(rr, rn)
    a.const(rj, 0)
    a.copy(rdd, rd)
    a.mark(up)
    a.monus(rt, rdd, rn)
    a.jz(rt, dbl)               # rdd <= rn: keep doubling
    a.jmp(down)
    a.mark(dbl)
    a.add(rdd, rdd, rdd)
    a.inc(rj)
    a.jmp(up)

    a.mark(down)                # for i = rj-1 .. 0
    a.jz(rj, done)
    a.monus(rj, rj, one)
    a.copy(rdd, rd)
    a.const(rpi, 1)
    a.copy(rc, rj)
    a.mark(inner)               # rdd, rpi <<= i
    a.jz(rc, inner_end)
    a.add(rdd, rdd, rdd)
    a.add(rpi, rpi, rpi)
    a.monus(rc, rc, one)
    a.jmp(inner)
    a.mark(inner_end)
    a.monus(rt, rdd, rr)
    a.jz(rt, sub)               # rdd <= rr: this power fits
    a.jmp(skip)
    a.mark(sub)
    a.monus(rr, rr, rdd)
    a.add(rq, rq, rpi)
    a.mark(skip)
    a.jmp(down)
    a.mark(done)


def emit_half(a: Asm, rsrc: int, rh: int, one: int, rrem: int, rp: int,
              rph: int, rt: int, rt2: int, plus_one: bool = False) -> None:
    """rh := floor((rsrc + plus_one) / 2).  Preserves rsrc; clobbers scratch.

    Restoring division by two: repeatedly take the largest power of two
    that fits, found by doubling a (power, half-power) pair so no separate
    halving is ever needed.
    """
    again, grow, take, done = a.label(), a.label(), a.label(), a.label()
    a.const(rh, 0)
    a.copy(rrem, rsrc)
    if plus_one:
        a.inc(rrem)
    a.mark(again)
    a.monus(rt, rrem, one)
    a.jz(rt, done)              # rrem <= 1: nothing more to take
    a.const(rp, 2)
    a.const(rph, 1)
    a.mark(grow)
    a.add(rt, rp, rp)
    a.monus(rt2, rt, rrem)
    a.jz(rt2, take)             # rp+rp <= rrem: keep growing
    a.monus(rrem, rrem, rp)     # largest power found: take it
    a.add(rh, rh, rph)
    a.jmp(again)
    a.mark(take)
    a.copy(rph, rp)
    a.copy(rp, rt)
    a.jmp(grow)
    a.mark(done)


def emit_mod_const(a: Asm, rv: int, k: int, rk: int, rp: int, rt: int,
                   rt2: int) -> None:
    """rv := rv mod k for a fixed k >= 1, by subtracting doubled multiples."""
    outer, grow, take, done = a.label(), a.label(), a.label(), a.label()
    a.const(rk, k)
    a.mark(outer)
    emit_lt_jump(a, rv, rk, rt, done)
    a.copy(rp, rk)
    a.mark(grow)
    a.add(rt, rp, rp)
    a.monus(rt2, rt, rv)
    a.jz(rt2, take)             # rp+rp <= rv: keep growing
    a.monus(rv, rv, rp)
    a.jmp(outer)
    a.mark(take)
    a.copy(rp, rt)
    a.jmp(grow)
    a.mark(done)


def emit_pow2(a: Asm, rn: int, rout: int, one: int) -> None:
    """rout := 2 ** rn.  Preserves rn."""
    rc = a.reg()
    loop, done = a.label(), a.label()
    a.const(rout, 1)
    a.copy(rc, rn)
    a.mark(loop)
    a.jz(rc, done)
    a.add(rout, rout, rout)
    a.monus(rc, rc, one)
    a.jmp(loop)
    a.mark(done)


def emit_sim_invoke(a: Asm, rsim: int, rcode: int, rx: int, rbud: int,
                    rres: int, rt: int) -> None:
    """rres := verdict of simulating rcode on rx for rbud steps.

    rsim must hold the simulator body's code; the packed argument is built
    in rt.  The verdict is 0 or 1 + pair(value, steps).
    """
    a.pair(rt, rx, rbud)
    a.pair(rt, rcode, rt)
    a.pair(rt, rsim, rt)
    a.ueval(rres, rsim, rt)


# ---------------------------------------------------------------------------
# The bounded simulator
# ---------------------------------------------------------------------------


def _build_sim_body() -> int:
    """Interpreter body.  Input pair(self, pair(code, pair(x, budget)))."""
    a = Asm()
    # Hot-loop registers first: low numbers make smaller instruction leaves,
    # and the whole tree's bit size tracks its fattest leaf.
    rt = a.reg()
    rt2 = a.reg()
    one = a.reg()
    rnode = a.reg()             # fetch: current subtree
    ridx = a.reg()              # fetch: offset inside it
    rsz = a.reg()               # fetch: its leaf count
    rh = a.reg()                # left-subtree size
    rhr = a.reg()               # halving scratch: remainder
    rhp = a.reg()               # halving scratch: power
    rhh = a.reg()               # halving scratch: half power
    rsel = a.reg()              # register-read loop: requested index
    rgot = a.reg()              # register-read loop: value found
    rphase = a.reg()            # register-read loop: which operand
    roc = a.reg()               # opcode field
    rargs = a.reg()             # operand field
    ra = a.reg()                # operand slots (see arity routing below)
    rb = a.reg()
    rc_ = a.reg()
    rvb = a.reg()               # value of the register named by rb
    rvc = a.reg()               # value of the register named by rc_
    rva = a.reg()               # result to write back
    rpc = a.reg()
    rrem = a.reg()              # budget remaining
    rsteps = a.reg()            # steps consumed
    rn = a.reg()                # simulated instruction count
    rtree = a.reg()             # simulated instruction tree
    rself = a.reg()             # this body's own code, for nested UEVAL
    slots = [a.reg() for _ in range(SIM_REG_WINDOW)]

    main = a.label("main")
    lnot = a.label("lnot")
    lhalt = a.label("lhalt")
    lnext = a.label("lnext")
    floop = a.label("floop")
    goleft = a.label("goleft")
    leaf = a.label("leaf")
    ldec = a.label("ldec")
    ar1 = a.label("ar1")
    ar2 = a.label("ar2")
    ar2jz = a.label("ar2jz")
    ar3 = a.label("ar3")
    getgo = a.label("getgo")
    gloop = a.label("gloop")
    gout = a.label("gout")
    gfirst = a.label("gfirst")
    disp = a.label("disp")
    putgo = a.label("putgo")
    dojump = a.label("dojump")
    jfwd = a.label("jfwd")
    joor = a.label("joor")
    jztaken = a.label("jztaken")
    handlers = {name: a.label(name) for name in (
        "h_halt", "h_const", "h_copy", "h_inc", "h_add", "h_monus",
        "h_mul", "h_pair", "h_unl", "h_unr", "h_jz", "h_jmp")}

    # -- prologue: unpack input, set up the simulated frame
    a.const(one, 1)
    a.unl(rself, 0)
    a.unr(rt, 0)
    a.unl(rt2, rt)              # the code
    a.unr(rt, rt)               # pair(x, budget)
    a.unl(rn, rt2)
    a.unr(rtree, rt2)
    a.unl(slots[0], rt)         # fresh frame: r0 = input, the rest 0
    a.unr(rrem, rt)             # rpc and rsteps start at 0 like any register

    # -- main cycle: charge the step, then fetch and dispatch
    a.mark(main)
    a.jz(rrem, lnot)
    a.monus(rrem, rrem, one)
    a.inc(rsteps)
    a.jz(rn, lhalt)             # the empty program only ever halts

    # -- fetch: descend the balanced tree, splitting the span at each level.
    #    No running bounds check: an off-end pc right-walks to a leaf with a
    #    nonzero residual index, which is exactly the virtual-HALT case.
    a.copy(rnode, rtree)
    a.copy(ridx, rpc)
    a.copy(rsz, rn)
    a.mark(floop)
    a.jz(rnode, lhalt)          # an all-zero subtree reads as HALT
    a.monus(rt, rsz, one)
    a.jz(rt, leaf)              # rsz >= 1 on every path, so this is rsz == 1
    emit_half(a, rsz, rh, one, rhr, rhp, rhh, rt, rt2, plus_one=True)
    emit_lt_jump(a, ridx, rh, rt, goleft)
    a.monus(ridx, ridx, rh)     # go right
    a.monus(rsz, rsz, rh)
    a.unr(rnode, rnode)
    a.jmp(floop)
    a.mark(goleft)
    a.copy(rsz, rh)
    a.unl(rnode, rnode)
    a.jmp(floop)

    # -- decode the instruction leaf
    a.mark(leaf)
    a.jz(ridx, ldec)
    a.jmp(lhalt)                # residual index: pc was past the end
    a.mark(ldec)
    a.unl(roc, rnode)
    a.unr(rargs, rnode)
    emit_mod_const(a, roc, 13, rt2, rhp, rt, rhr)

    # -- operand routing.  The register-read loop below fetches the values
    #    of the registers named by rb and rc_, so each arity block places
    #    the fields where its handler expects them:
    #      ra: target register for the write-back
    #      rb: register to read (or the raw immediate for CONST)
    #      rc_: second register to read (or the JZ displacement)
    #    1: INC(3) JMP(11)   2: CONST(1) COPY(2) UNL(8) UNR(9)   JZ(10)
    #    3: ADD(4) MONUS(5) MUL(6) PAIR(7) UEVAL(12)
    routing = (None, ar2, ar2, ar1, ar3, ar3, ar3, ar3, ar2, ar2, ar2jz, ar1)
    a.copy(rt, roc)
    a.jz(rt, handlers["h_halt"])
    for op in range(1, 12):
        a.monus(rt, rt, one)
        a.jz(rt, routing[op])
    a.jmp(ar3)                  # opcode 12: UEVAL
    a.mark(ar1)
    a.copy(ra, rargs)           # INC reads and writes the same register;
    a.copy(rb, rargs)           # JMP only looks at ra
    a.jmp(getgo)
    a.mark(ar2)
    a.unl(ra, rargs)
    a.unr(rb, rargs)
    a.jmp(getgo)
    a.mark(ar2jz)
    a.unl(rb, rargs)            # tested register
    a.unr(rc_, rargs)           # displacement; JZ never writes back
    a.jmp(getgo)
    a.mark(ar3)
    a.unl(ra, rargs)
    a.unr(rt, rargs)
    a.unl(rb, rt)
    a.unr(rc_, rt)

    # -- read the registers named by rb, then rc_ (stale fields read junk
    #    harmlessly; that costs a few host steps, never correctness)
    a.mark(getgo)
    a.const(rphase, 0)
    a.copy(rsel, rb)
    a.mark(gloop)
    hits = [a.label() for _ in range(SIM_REG_WINDOW)]
    a.copy(rt, rsel)
    a.jz(rt, hits[0])
    for k in range(1, SIM_REG_WINDOW):
        a.monus(rt, rt, one)
        a.jz(rt, hits[k])
    a.const(rgot, 0)            # beyond the window: unwritten, reads 0
    a.jmp(gout)
    for k in range(SIM_REG_WINDOW):
        a.mark(hits[k])
        a.copy(rgot, slots[k])
        if k != SIM_REG_WINDOW - 1:
            a.jmp(gout)
    a.mark(gout)
    a.jz(rphase, gfirst)
    a.copy(rvc, rgot)
    a.jmp(disp)
    a.mark(gfirst)
    a.copy(rvb, rgot)
    a.const(rphase, 1)
    a.copy(rsel, rc_)
    a.jmp(gloop)

    # -- dispatch
    a.mark(disp)
    a.copy(rt, roc)
    a.jz(rt, handlers["h_halt"])
    for name in ("h_const", "h_copy", "h_inc", "h_add", "h_monus",
                 "h_mul", "h_pair", "h_unl", "h_unr", "h_jz", "h_jmp"):
        a.monus(rt, rt, one)
        a.jz(rt, handlers[name])
    # fallthrough: UEVAL — recurse on self with the remaining budget
    a.pair(rt, rvc, rrem)
    a.pair(rt, rvb, rt)
    a.pair(rt, rself, rt)
    a.ueval(rva, rself, rt)
    a.jz(rva, lnot)             # callee exhausts the budget: so do we
    a.monus(rva, rva, one)
    a.unr(rt2, rva)             # callee's step count, charged to us
    a.unl(rva, rva)
    a.add(rsteps, rsteps, rt2)
    a.monus(rrem, rrem, rt2)
    a.jmp(putgo)

    a.mark(handlers["h_const"])
    a.copy(rva, rb)             # the immediate, not a register read
    a.jmp(putgo)
    a.mark(handlers["h_copy"])
    a.copy(rva, rvb)
    a.jmp(putgo)
    a.mark(handlers["h_inc"])
    a.copy(rva, rvb)
    a.inc(rva)
    a.jmp(putgo)
    a.mark(handlers["h_add"])
    a.add(rva, rvb, rvc)
    a.jmp(putgo)
    a.mark(handlers["h_monus"])
    a.monus(rva, rvb, rvc)
    a.jmp(putgo)
    a.mark(handlers["h_mul"])
    a.mul(rva, rvb, rvc)
    a.jmp(putgo)
    a.mark(handlers["h_pair"])
    a.pair(rva, rvb, rvc)
    a.jmp(putgo)
    a.mark(handlers["h_unl"])
    a.unl(rva, rvb)
    a.jmp(putgo)
    a.mark(handlers["h_jz"])
    a.jz(rvb, jztaken)          # value of the tested register
    a.jmp(lnext)
    a.mark(jztaken)
    a.copy(rt2, rc_)            # displacement operand
    a.jmp(dojump)
    a.mark(handlers["h_jmp"])
    a.copy(rt2, ra)

    # -- taken jump: rt2 holds the sign-paired displacement
    a.mark(dojump)
    a.unl(rt, rt2)              # sign component
    a.unr(rt2, rt2)             # magnitude component
    a.jz(rt, jfwd)
    a.inc(rt2)                  # backward by rt2 + 1
    emit_lt_jump(a, rpc, rt2, rt, joor)
    a.monus(rpc, rpc, rt2)
    a.jmp(main)
    a.mark(joor)                # before the start: halts on the next fetch
    a.copy(rpc, rn)
    a.jmp(main)
    a.mark(jfwd)
    a.jz(rt2, lnot)             # a jump to itself can never make progress
    a.add(rpc, rpc, rt2)
    a.jmp(main)

    a.mark(handlers["h_unr"])
    a.unr(rva, rvb)             # falls into the write-back

    # -- write-back: rva into simulated register ra
    a.mark(putgo)
    put_hits = [a.label() for _ in range(SIM_REG_WINDOW)]
    a.copy(rt, ra)
    a.jz(rt, put_hits[0])
    for k in range(1, SIM_REG_WINDOW):
        a.monus(rt, rt, one)
        a.jz(rt, put_hits[k])
    a.jmp(lnot)                 # write outside the window: give up soundly
    for k in range(SIM_REG_WINDOW):
        a.mark(put_hits[k])
        a.copy(slots[k], rva)
        if k != SIM_REG_WINDOW - 1:
            a.jmp(lnext)
    a.mark(lnext)
    a.inc(rpc)
    a.jmp(main)

    a.mark(handlers["h_halt"])
    a.mark(lhalt)               # report 1 + pair(r0, steps)
    a.pair(0, slots[0], rsteps)
    a.inc(0)
    a.halt()
    a.mark(lnot)
    a.const(0, 0)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def sim_body() -> int:
    """Code of the bounded simulator.

    Run it on pair(sim_body(), pair(code, pair(x, budget))): the result is
    0 when φ_code(x) does not halt within `budget` steps, else
    1 + pair(value, steps) with the kernel's exact value and step count.
    A write to a register outside 0..7 by the simulated program yields the
    0 verdict (see module notes).
    """
    return _build_sim_body()


def sim_input(code: int, x: int, budget: int) -> int:
    """The packed argument for simulating (code, x, budget)."""
    return pair(sim_body(), pair(code, pair(x, budget)))


def sim_call(code: int, x: int, budget: int,
             fuel: int | None = None) -> tuple[int, int] | None:
    """Host convenience: simulate and decode the verdict.

    Returns (value, steps) when the simulated run halts within the budget,
    None when it does not.  Raises if the *outer* fuel runs out, since that
    is a host budgeting error, not a verdict.
    """
    if fuel is None:
        fuel = SIM_BASE_STEPS + budget * SIM_STEP_FACTOR
    out = kernel.run(sim_body(), sim_input(code, x, budget), fuel)
    if isinstance(out, kernel.OutOfFuel):
        raise RuntimeError(
            f"simulator ran out of host fuel ({fuel}) at budget {budget}")
    if out.value == SIM_NOT_HALTED:
        return None
    return unpair(out.value - 1)


# ---------------------------------------------------------------------------
# Recognizing and minting parameterized codes
# ---------------------------------------------------------------------------


def smn_parts(code: int) -> tuple[int, int] | None:
    """Recognize the exact code shape kernel.smn produces.

    Returns (body, frozen) for such codes, None for anything else.  Lets
    tests and diagnostics verify that a minted code really is a single
    parameterization of a fixed body rather than per-instance logic.
    """
    dec = decode_program(code)
    if dec.n != 4:
        return None
    i0 = dec.instruction(0)
    i1 = dec.instruction(1)
    i2 = dec.instruction(2)
    i3 = dec.instruction(3)
    if i0[0] != CONST or i0[1] != 1:
        return None
    if i1 != (PAIR, 0, 1, 0):
        return None
    if i2[0] != CONST or i2[1] != 1:
        return None
    if i3 != (UEVAL, 0, 1, 0):
        return None
    return i2[2], i0[2]


def emit_build_smn(a: Asm, rbody: int, rfrozen: int, rdst: int, rt: int,
                   rt2: int) -> None:
    """rdst := a code equal to kernel.smn(body, frozen), built at runtime.

    Byte-identical to the host builder, so factories that mint codes
    in-machine produce exactly what smn_parts and the size accounting
    expect.  rdst must differ from rbody, rfrozen and the scratch regs.
    """
    pair_leaf = encode_instruction(PAIR, [0, 1, 0])
    ueval_leaf = encode_instruction(UEVAL, [0, 1, 0])
    a.const(rt, 1)
    a.pair(rt2, rt, rfrozen)
    a.pair(rt2, rt, rt2)        # CONST 1 frozen
    a.pair(rdst, rt, rbody)
    a.pair(rdst, rt, rdst)      # CONST 1 body
    a.const(rt, pair_leaf)
    a.pair(rt2, rt2, rt)        # left subtree
    a.const(rt, ueval_leaf)
    a.pair(rdst, rdst, rt)      # right subtree
    a.pair(rdst, rt2, rdst)     # instruction tree
    a.const(rt, 4)
    a.pair(rdst, rt, rdst)


def freeze2(body: int, big: int, small: int) -> int:
    """Code c with φ_c(x) = φ_body(pair(pair(big, small), x)); +7 steps.

    Same job as kernel.smn with the frozen context split across two
    constants.  Pairing costs bits by doubling the larger component, so a
    code's size tracks its deepest heavy leaf: this shape puts ``big`` two
    levels down (32x its bits) and ``body``/``small`` three (64x), whereas
    smn over pair(big, small) pays 64x the big component.  Minting a code
    that freezes a simulator copy next to a small parameter block this way
    halves the deliverable.
    """
    return encode_program([
        (CONST, [2, small]),
        (CONST, [4, body]),
        (CONST, [1, big]),
        (PAIR, [1, 1, 2]),      # r1 := pair(big, small)
        (PAIR, [0, 1, 0]),      # r0 := pair(r1, x)
        (UEVAL, [0, 4, 0]),     # r0 := φ_body(r0); falling off the end halts
    ])


def freeze2_parts(code: int) -> tuple[int, int, int] | None:
    """Recognize the exact code shape freeze2 produces.

    Returns (body, big, small) for such codes, None for anything else.
    """
    dec = decode_program(code)
    if dec.n != 6:
        return None
    i = [dec.instruction(k) for k in range(6)]
    if i[0][0] != CONST or i[0][1] != 2:
        return None
    if i[1][0] != CONST or i[1][1] != 4:
        return None
    if i[2][0] != CONST or i[2][1] != 1:
        return None
    if i[3] != (PAIR, 1, 1, 2):
        return None
    if i[4] != (PAIR, 0, 1, 0):
        return None
    if i[5] != (UEVAL, 0, 4, 0):
        return None
    return i[1][2], i[2][2], i[0][2]


def emit_build_freeze2(a: Asm, rbody: int, rbig: int, rsmall: int,
                       rdst: int, rt: int, rt2: int) -> None:
    """rdst := a code equal to freeze2(body, big, small), built at runtime.

    Byte-identical to the host builder.  rdst must differ from the three
    input registers and the scratch registers.
    """
    pair_112 = encode_instruction(PAIR, [1, 1, 2])
    pair_010 = encode_instruction(PAIR, [0, 1, 0])
    ueval_040 = encode_instruction(UEVAL, [0, 4, 0])
    a.const(rt, 2)
    a.pair(rt2, rt, rsmall)
    a.const(rt, CONST)
    a.pair(rt2, rt, rt2)        # CONST 2 small
    a.const(rt, 4)
    a.pair(rdst, rt, rbody)
    a.const(rt, CONST)
    a.pair(rdst, rt, rdst)      # CONST 4 body
    a.pair(rt2, rt2, rdst)
    a.pair(rdst, rt, rbig)
    a.pair(rdst, rt, rdst)      # CONST 1 big
    a.pair(rt2, rt2, rdst)      # left subtree
    a.const(rt, pair_112)
    a.const(rdst, pair_010)
    a.pair(rt, rt, rdst)
    a.const(rdst, ueval_040)
    a.pair(rt, rt, rdst)        # right subtree
    a.pair(rdst, rt2, rt)       # instruction tree
    a.const(rt, 6)
    a.pair(rdst, rt, rdst)


# ---------------------------------------------------------------------------
# Halting-set combinators
# ---------------------------------------------------------------------------


def _build_w_union_body() -> int:
    """Input pair(pair(sim, pair(i, j)), x): halt iff φ_i or φ_j halts on x.

    Alternates bounded simulations of both programs with doubling budgets;
    the halting run's value is passed through.
    """
    a = Asm()
    rsim = a.reg()
    ri = a.reg()
    rj = a.reg()
    rx = a.reg()
    rbud = a.reg()
    rres = a.reg()
    rt = a.reg()
    one = a.reg()
    loop, found = a.label(), a.label()

    emit_unpack2(a, 0, rt, rx)
    emit_unpack2(a, rt, rsim, rt)
    emit_unpack2(a, rt, ri, rj)
    a.const(one, 1)
    a.const(rbud, 16)
    a.mark(loop)
    for rprog in (ri, rj):
        nxt = a.label()
        emit_sim_invoke(a, rsim, rprog, rx, rbud, rres, rt)
        a.jz(rres, nxt)
        a.jmp(found)
        a.mark(nxt)
    a.add(rbud, rbud, rbud)
    a.jmp(loop)

    a.mark(found)
    a.monus(rres, rres, one)    # pair(value, steps)
    a.unl(0, rres)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def w_union_body() -> int:
    return _build_w_union_body()


def w_union_code(i: int, j: int) -> int:
    """Code whose halting set is dom(φ_i) ∪ dom(φ_j)."""
    return freeze2(w_union_body(), sim_body(), pair(i, j))


def _build_omega_union_body() -> int:
    """Input pair(pair(sim, seq), x): halt iff φ_{φ_seq(k)} halts on x for
    some k, where seq is total.

    Round r probes programs 0..r-1 with budget r; r doubles, so any member
    is certified with at most a constant-factor overshoot of
    max(index, steps).
    """
    a = Asm()
    rsim = a.reg()
    rseq = a.reg()
    rx = a.reg()
    rr = a.reg()
    rk = a.reg()
    rck = a.reg()
    rres = a.reg()
    rt = a.reg()
    one = a.reg()
    round_, kloop, kbody, knext, found = (
        a.label(), a.label(), a.label(), a.label(), a.label())

    emit_unpack2(a, 0, rt, rx)
    emit_unpack2(a, rt, rsim, rseq)
    a.const(one, 1)
    a.const(rr, 1)
    a.mark(round_)
    a.const(rk, 0)
    a.mark(kloop)
    emit_lt_jump(a, rk, rr, rt, kbody)
    a.add(rr, rr, rr)           # round exhausted: double and restart
    a.jmp(round_)
    a.mark(kbody)
    a.ueval(rck, rseq, rk)      # total by contract
    emit_sim_invoke(a, rsim, rck, rx, rr, rres, rt)
    a.jz(rres, knext)
    a.jmp(found)
    a.mark(knext)
    a.inc(rk)
    a.jmp(kloop)

    a.mark(found)
    a.monus(rres, rres, one)
    a.unl(0, rres)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def omega_union_body() -> int:
    return _build_omega_union_body()


def omega_union_code(seq_code: int) -> int:
    """Code whose halting set is the union over k of dom(φ_{φ_seq(k)})."""
    return freeze2(omega_union_body(), sim_body(), seq_code)


def _build_w_intersect_body() -> int:
    """Input pair(pair(i, j), x): run both sequentially; halt iff both halt."""
    a = Asm()
    ri = a.reg()
    rj = a.reg()
    rx = a.reg()
    rt = a.reg()
    emit_unpack2(a, 0, rt, rx)
    emit_unpack2(a, rt, ri, rj)
    a.ueval(rt, ri, rx)
    a.ueval(rt, rj, rx)
    a.copy(0, rx)
    a.halt()
    return a.code()


@lru_cache(maxsize=1)
def w_intersect_body() -> int:
    return _build_w_intersect_body()
