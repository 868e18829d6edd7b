"""In-machine toolbox: emit helpers, the bounded simulator, code factories.

The simulator must agree with the host interpreter on verdict, value, and
exact step count; the in-machine code builders must emit byte-identical
codes to their host counterparts; and the halting-set combinators must
realize the right domains within their advertised budgets.
"""
from __future__ import annotations

import random
import time

import pytest

from regtop import kernel
from regtop._progcode import (
    ADD, CONST, COPY, HALT, INC, JMP, JZ, MONUS, MUL, PAIR, UEVAL, UNL, UNR,
    encode_instruction, encode_program, pair, unpair, zz_encode,
)
from regtop.asm import Asm
from regtop.kernel import Halted, OutOfFuel, run
from regtop.progs import (
    SIM_BASE_STEPS, SIM_REG_WINDOW, SIM_STEP_FACTOR, emit_build_freeze2,
    emit_build_smn, emit_divmod, emit_eq_jump, emit_half, emit_lt_jump,
    emit_mod_const, emit_pack, emit_pow2, emit_unpack2, freeze2,
    freeze2_parts, omega_union_code, sim_body, sim_call, sim_input,
    smn_parts, w_intersect_body, w_union_body, w_union_code,
)

# ---------------------------------------------------------------------------
# Fixed programs.  Everything fed to the simulator keeps its registers
# below SIM_REG_WINDOW; Asm(first_free_reg=1) allocates from r1 up.
# ---------------------------------------------------------------------------

HALT_CODE = kernel.assemble("HALT")
LOOP_CODE = kernel.assemble("JMP 0")
SUCC_CODE = kernel.assemble("INC 0\nHALT")
PAIRFST_CODE = kernel.assemble("UNL 0 0\nHALT")


def _parity_code(accept_even: bool) -> int:
    # halts exactly on inputs of one parity; the rest spin on a self-loop
    a = Asm(first_free_reg=1)
    two = a.reg()
    tmp = a.reg()
    loop, accept, reject = a.label(), a.label(), a.label()
    a.const(two, 2)
    a.mark(loop)
    a.jz(0, accept if accept_even else reject)
    a.const(tmp, 1)
    a.monus(tmp, 0, tmp)
    a.jz(tmp, reject if accept_even else accept)   # r0 == 1
    a.monus(0, 0, two)
    a.jmp(loop)
    a.mark(reject)
    a.jmp(reject)
    a.mark(accept)
    a.halt()
    return a.code()


EVENS_CODE = _parity_code(True)
ODDS_CODE = _parity_code(False)


def _only_on_code(k: int) -> int:
    # halts exactly on input k
    a = Asm(first_free_reg=1)
    t = a.reg()
    c = a.reg()
    spin, ge, acc = a.label(), a.label(), a.label()
    a.const(c, k)
    a.monus(t, 0, c)
    a.jz(t, ge)                 # x <= k
    a.mark(spin)
    a.jmp(spin)
    a.mark(ge)
    a.monus(t, c, 0)
    a.jz(t, acc)                # and k <= x
    a.jmp(spin)
    a.mark(acc)
    a.halt()
    return a.code()


def _run_helper(build, inputs) -> int:
    """Assemble a tiny host program around an emitted snippet and run it."""
    a = Asm()
    regs = [a.reg() for _ in range(len(inputs))]
    cursor = a.reg()
    a.copy(cursor, 0)
    for i, r in enumerate(regs):
        if i < len(regs) - 1:
            a.unl(r, cursor)
            a.unr(cursor, cursor)
        else:
            a.copy(r, cursor)
    build(a, regs)
    a.halt()
    packed = inputs[-1]
    for v in reversed(inputs[:-1]):
        packed = pair(v, packed)
    out = run(a.code(), packed, fuel=10**7)
    assert isinstance(out, Halted)
    return out.value


# ---------------------------------------------------------------------------
# Emitted helper snippets against Python oracles
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,d", [(0, 1), (1, 1), (7, 3), (8, 2), (100, 7),
                                 (99, 10), (1, 9), (255, 16), (6000, 11)])
def test_emit_divmod(n, d):
    def build(a, regs):
        rn, rd = regs
        rq, rr, one = a.reg(), a.reg(), a.reg()
        a.const(one, 1)
        emit_divmod(a, rn, rd, rq, rr, one)
        a.pair(0, rq, rr)

    assert _run_helper(build, [n, d]) == pair(n // d, n % d)


@pytest.mark.parametrize("n", list(range(12)) + [100, 255, 256, 999])
@pytest.mark.parametrize("plus_one", [False, True])
def test_emit_half(n, plus_one):
    def build(a, regs):
        (rsrc,) = regs
        rh, one = a.reg(), a.reg()
        scratch = [a.reg() for _ in range(5)]
        a.const(one, 1)
        emit_half(a, rsrc, rh, one, *scratch, plus_one=plus_one)
        a.pair(0, rh, rsrc)       # rsrc must survive

    assert _run_helper(build, [n]) == pair((n + plus_one) // 2, n)


@pytest.mark.parametrize("k", [1, 2, 7, 13])
def test_emit_mod_const(k):
    def build(a, regs):
        (rv,) = regs
        scratch = [a.reg() for _ in range(4)]
        emit_mod_const(a, rv, k, *scratch)
        a.copy(0, rv)

    for v in list(range(0, 3 * k + 2)) + [997]:
        assert _run_helper(build, [v]) == v % k


def test_emit_pow2():
    def build(a, regs):
        (rn,) = regs
        rout, one = a.reg(), a.reg()
        a.const(one, 1)
        emit_pow2(a, rn, rout, one)
        a.pair(0, rout, rn)       # rn must survive

    for n in range(11):
        assert _run_helper(build, [n]) == pair(2 ** n, n)


def test_emit_eq_and_lt_jumps():
    def build_eq(a, regs):
        rx, ry = regs
        s1, s2 = a.reg(), a.reg()
        yes = a.label()
        emit_eq_jump(a, rx, ry, s1, s2, yes)
        a.const(0, 0)
        a.halt()
        a.mark(yes)
        a.const(0, 1)

    def build_lt(a, regs):
        rx, ry = regs
        s = a.reg()
        yes = a.label()
        emit_lt_jump(a, rx, ry, s, yes)
        a.const(0, 0)
        a.halt()
        a.mark(yes)
        a.const(0, 1)

    for x in range(4):
        for y in range(4):
            assert _run_helper(build_eq, [x, y]) == int(x == y)
            assert _run_helper(build_lt, [x, y]) == int(x < y)


def test_emit_pack_unpack_round_trip():
    def build(a, regs):
        r1, r2, r3 = regs
        packed = a.reg()
        emit_pack(a, packed, [r1, r2, r3])
        o1, rest, o2, o3 = a.reg(), a.reg(), a.reg(), a.reg()
        emit_unpack2(a, packed, o1, rest)
        emit_unpack2(a, rest, o2, o3)
        a.pair(0, o2, o3)
        a.pair(0, o1, 0)

    assert _run_helper(build, [3, 5, 9]) == pair(3, pair(5, 9))


def test_emit_unpack2_aliasing():
    # src may be reused as either output register
    def build_left(a, regs):
        (src,) = regs
        right = a.reg()
        emit_unpack2(a, src, src, right)
        a.pair(0, src, right)

    def build_right(a, regs):
        (src,) = regs
        left = a.reg()
        emit_unpack2(a, src, left, src)
        a.pair(0, left, src)

    v = pair(11, 4)
    assert _run_helper(build_left, [v]) == v
    assert _run_helper(build_right, [v]) == v


# ---------------------------------------------------------------------------
# Simulator: fixed programs, exact accounting
# ---------------------------------------------------------------------------


def test_sim_halt_program():
    host = run(HALT_CODE, 42, fuel=10)
    assert sim_call(HALT_CODE, 42, 1) == (host.value, host.steps) == (42, 1)


def test_sim_zero_budget_never_halts():
    assert sim_call(HALT_CODE, 42, 0) is None


def test_sim_empty_program():
    # code 0 declares zero instructions; pc 0 is already a virtual halt
    host = run(0, 9, fuel=10)
    assert isinstance(host, Halted)
    assert sim_call(0, 9, 1) == (host.value, host.steps) == (9, 1)


def test_sim_succ_budget_boundary():
    host = run(SUCC_CODE, 5, fuel=10)
    assert sim_call(SUCC_CODE, 5, host.steps) == (6, host.steps)
    assert sim_call(SUCC_CODE, 5, host.steps - 1) is None


def test_sim_pairfst():
    x = pair(13, 77)
    host = run(PAIRFST_CODE, x, fuel=10)
    assert sim_call(PAIRFST_CODE, x, 5) == (13, host.steps)


def test_sim_arithmetic_program():
    code = kernel.assemble("""
        CONST 1 10
        ADD 2 0 1
        MUL 3 2 2
        MONUS 4 3 1
        PAIR 0 4 2
        HALT
    """)
    x = 7
    host = run(code, x, fuel=100)
    expect = pair((x + 10) ** 2 - 10, x + 10)
    assert host.value == expect
    assert sim_call(code, x, 10) == (expect, host.steps)


def test_sim_virtual_halt_off_the_end():
    code = kernel.assemble("INC 0")       # no HALT: falls off the end
    host = run(code, 3, fuel=10)
    assert (host.value, host.steps) == (4, 2)
    assert sim_call(code, 3, 2) == (4, 2)
    assert sim_call(code, 3, 1) is None


def test_sim_forward_jump_overshoot():
    # a taken jump far past the end halts via the same virtual-halt charge
    code = encode_program([(JMP, [zz_encode(100)]), (INC, [0])])
    host = run(code, 8, fuel=10)
    assert isinstance(host, Halted)
    assert sim_call(code, 8, host.steps) == (host.value, host.steps)
    assert sim_call(code, 8, host.steps - 1) is None


def test_sim_backward_jump_out_of_range():
    # jumping before instruction 0 is also a virtual halt on the next fetch
    code = encode_program([(INC, [0]), (JMP, [zz_encode(-5)]), (INC, [0])])
    host = run(code, 0, fuel=10)
    assert isinstance(host, Halted)
    assert sim_call(code, 0, host.steps) == (host.value, host.steps)
    assert sim_call(code, 0, host.steps - 1) is None


def test_sim_evens_and_odds():
    for x in range(7):
        host = run(EVENS_CODE, x, fuel=1000)
        got = sim_call(EVENS_CODE, x, 200)
        if x % 2 == 0:
            assert got == (host.value, host.steps)
        else:
            assert got is None
        assert (sim_call(ODDS_CODE, x, 200) is None) == (x % 2 == 0)


def test_sim_self_loop_aborts_early():
    # an unconditional jump to itself can never halt; the simulator reports
    # not-halted immediately instead of grinding through the whole budget
    t0 = time.monotonic()
    assert sim_call(LOOP_CODE, 0, 10**9) is None
    assert time.monotonic() - t0 < 2.0


def test_sim_taken_jz_self_loop_aborts_early():
    code = encode_program([(JZ, [0, zz_encode(0)])])
    t0 = time.monotonic()
    assert sim_call(code, 0, 10**9) is None       # r0 == 0: taken, stuck
    assert time.monotonic() - t0 < 2.0
    host = run(code, 7, fuel=10)                  # r0 != 0: falls through
    assert isinstance(host, Halted)
    assert sim_call(code, 7, host.steps) == (host.value, host.steps)


def test_sim_non_progress_loop_still_costs_budget():
    # a two-instruction spin is real work: verdict not-halted at any budget
    code = encode_program([(INC, [1]), (JMP, [zz_encode(-1)])])
    assert isinstance(run(code, 0, fuel=5000), OutOfFuel)
    assert sim_call(code, 0, 64) is None


def test_sim_write_outside_window_gives_up():
    # the simulator tracks SIM_REG_WINDOW registers; a simulated write above
    # that is refused (not-halted) rather than answered wrongly
    code = encode_program([(CONST, [SIM_REG_WINDOW, 3]), (HALT, [])])
    assert isinstance(run(code, 0, fuel=10), Halted)
    assert sim_call(code, 0, 50) is None


def test_sim_reads_outside_window_as_zero():
    # reads of never-written registers are 0 on the host too: exact parity
    code = encode_program([(COPY, [0, SIM_REG_WINDOW + 1]), (HALT, [])])
    host = run(code, 5, fuel=10)
    assert host.value == 0
    assert sim_call(code, 5, 10) == (host.value, host.steps)


def test_sim_garbage_opcode_reduces_mod_13():
    # a leaf with opcode field 16 behaves as INC on both host and simulator
    code = pair(2, pair(pair(16, 0), 0))
    host = run(code, 9, fuel=10)
    assert host.value == 10
    assert sim_call(code, 9, 10) == (host.value, host.steps)


def test_sim_ueval_exact_step_accounting():
    double = encode_program([(ADD, [0, 0, 0]), (HALT, [])])
    wrapper = encode_program([
        (UNL, [1, 0]), (UNR, [0, 0]), (UEVAL, [0, 1, 0]), (HALT, []),
    ])
    code = kernel.smn(wrapper, double)
    host = run(code, 21, fuel=1000)
    assert host.value == 42
    got = sim_call(code, 21, host.steps)
    assert got == (host.value, host.steps)
    assert sim_call(code, 21, host.steps - 1) is None


def test_sim_ueval_divergent_callee():
    # the callee burns the whole remaining budget: verdict not-halted
    code = encode_program([(CONST, [1, LOOP_CODE]), (UEVAL, [0, 1, 0]),
                           (HALT, [])])
    assert isinstance(run(code, 0, fuel=500), OutOfFuel)
    assert sim_call(code, 0, 64) is None


def test_sim_sparse_program():
    # a program long enough for the host's sparse decode path
    from regtop._progcode import DENSE_MAX
    n = DENSE_MAX + 1
    code = encode_program([(INC, [0])] * (n - 1) + [(HALT, [])])
    host = run(code, 0, fuel=2 * n)
    assert (host.value, host.steps) == (n - 1, n)
    got = sim_call(code, 0, n, fuel=10**9)
    assert got == (host.value, host.steps)


def test_sim_random_codes_parity():
    rng = random.Random(0xC0DE)
    ops = [CONST, COPY, INC, ADD, MONUS, MUL, PAIR, UNL, UNR, JZ, JMP]
    R = SIM_REG_WINDOW
    for trial in range(150):
        n = rng.randrange(1, 12)
        prog = []
        for i in range(n):
            op = rng.choice(ops)
            if op == CONST:
                prog.append((op, [rng.randrange(R), rng.randrange(50)]))
            elif op in (COPY, UNL, UNR):
                prog.append((op, [rng.randrange(R), rng.randrange(R)]))
            elif op == INC:
                prog.append((op, [rng.randrange(R)]))
            elif op in (ADD, MONUS, MUL, PAIR):
                prog.append((op, [rng.randrange(R), rng.randrange(R),
                                  rng.randrange(R)]))
            elif op == JZ:
                prog.append((op, [rng.randrange(R),
                                  zz_encode(rng.randrange(-i - 1, n - i + 2))]))
            else:
                prog.append((op, [zz_encode(rng.randrange(-i - 1, n - i + 2))]))
        code = encode_program(prog)
        x = rng.randrange(0, 30)
        budget = rng.randrange(1, 120)
        host = run(code, x, fuel=budget)
        got = sim_call(code, x, budget)
        if isinstance(host, Halted):
            assert got == (host.value, host.steps), (trial, code, x, budget)
        else:
            assert got is None, (trial, code, x, budget)


def test_sim_step_factor_ceiling():
    # the advertised per-step overhead bound holds across program sizes
    worst = 0.0
    for n in (4, 20, 52, 124, 252):
        prog = encode_program([(INC, [0])] * (n - 1) + [(HALT, [])])
        host = run(prog, 0, fuel=10**6)
        outer = run(sim_body(), sim_input(prog, 0, host.steps), fuel=10**9)
        assert isinstance(outer, Halted)
        worst = max(worst, outer.steps / host.steps)
    assert worst <= SIM_STEP_FACTOR


def test_sim_body_stays_small():
    # code size doubles at each power-of-two instruction count, and every
    # minted deliverable embeds this body: hold the line at 256
    from regtop._progcode import decode_program
    body = sim_body()
    assert decode_program(body).n <= 256
    assert body.bit_length() <= 32_000


def test_sim_call_rejects_exhausted_outer_fuel():
    with pytest.raises(RuntimeError):
        sim_call(LOOP_CODE, 0, 10, fuel=20)       # outer fuel far too small


# ---------------------------------------------------------------------------
# Code factories: host and in-machine builders
# ---------------------------------------------------------------------------


def test_smn_parts_round_trip():
    rng = random.Random(7)
    for _ in range(20):
        body, frozen = rng.randrange(0, 10**6), rng.randrange(0, 10**6)
        code = kernel.smn(body, frozen)
        assert smn_parts(code) == (body, frozen)
    assert smn_parts(HALT_CODE) is None
    assert smn_parts(freeze2(5, 6, 7)) is None


def test_emit_build_smn_byte_identical():
    a = Asm()
    rbody, rfrozen, rdst, t1, t2 = (a.reg() for _ in range(5))
    a.unl(rbody, 0)
    a.unr(rfrozen, 0)
    emit_build_smn(a, rbody, rfrozen, rdst, t1, t2)
    a.copy(0, rdst)
    a.halt()
    builder = a.code()
    rng = random.Random(8)
    for _ in range(10):
        body, frozen = rng.randrange(0, 10**6), rng.randrange(0, 10**6)
        out = run(builder, pair(body, frozen), fuel=10**5)
        assert out.value == kernel.smn(body, frozen)


def test_freeze2_value_and_overhead():
    # φ_c(x) = φ_body(pair(pair(big, small), x)), seven steps of setup
    body = encode_program([
        (UNL, [1, 0]), (UNR, [0, 0]),
        (UNL, [2, 1]), (UNR, [1, 1]),
        (ADD, [0, 0, 1]), (ADD, [0, 0, 2]),
        (HALT, []),
    ])
    direct = run(body, pair(pair(100, 20), 3), fuel=100)
    assert direct.value == 123
    code = freeze2(body, 100, 20)
    host = run(code, 3, fuel=100)
    assert (host.value, host.steps) == (123, direct.steps + 7)
    # registers stay inside the window, so minted codes are simulatable
    assert sim_call(code, 3, 100) == (host.value, host.steps)


def test_freeze2_parts_round_trip():
    rng = random.Random(9)
    for _ in range(20):
        b, g, s = (rng.randrange(0, 10**6) for _ in range(3))
        assert freeze2_parts(freeze2(b, g, s)) == (b, g, s)
    assert freeze2_parts(kernel.smn(3, 4)) is None
    assert freeze2_parts(HALT_CODE) is None


def test_freeze2_packs_big_constant_shallower():
    big = 1 << 4096
    small = 7
    direct = kernel.smn(0, pair(big, small))
    split = freeze2(0, big, small)
    assert split.bit_length() < direct.bit_length() * 0.6


def test_emit_build_freeze2_byte_identical():
    a = Asm()
    rbody, rbig, rsmall, rdst, t1, t2 = (a.reg() for _ in range(6))
    a.unl(rbody, 0)
    a.unr(t1, 0)
    a.unl(rbig, t1)
    a.unr(rsmall, t1)
    emit_build_freeze2(a, rbody, rbig, rsmall, rdst, t1, t2)
    a.copy(0, rdst)
    a.halt()
    builder = a.code()
    rng = random.Random(10)
    for _ in range(10):
        b, g, s = (rng.randrange(0, 10**6) for _ in range(3))
        out = run(builder, pair(b, pair(g, s)), fuel=10**5)
        assert out.value == freeze2(b, g, s)


# ---------------------------------------------------------------------------
# Halting-set combinators
# ---------------------------------------------------------------------------

UNION_FUEL = 10**6


def test_w_union_covers_both_domains():
    u = w_union_code(EVENS_CODE, ODDS_CODE)
    for x in range(8):
        assert isinstance(run(u, x, fuel=UNION_FUEL), Halted), x


def test_w_union_survives_one_divergent_side():
    for u in (w_union_code(EVENS_CODE, LOOP_CODE),
              w_union_code(LOOP_CODE, EVENS_CODE)):
        for x in range(6):
            out = run(u, x, fuel=UNION_FUEL)
            assert isinstance(out, Halted) == (x % 2 == 0), (x, out)


def test_w_union_diverges_when_both_do():
    u = w_union_code(LOOP_CODE, LOOP_CODE)
    assert isinstance(run(u, 0, fuel=UNION_FUEL), OutOfFuel)


def test_w_union_passes_the_halting_value_through():
    u = w_union_code(SUCC_CODE, LOOP_CODE)
    out = run(u, 11, fuel=UNION_FUEL)
    assert isinstance(out, Halted) and out.value == 12


def test_w_union_escalates_budgets():
    # the first member certified only well past the opening budget of 16
    u = w_union_code(EVENS_CODE, LOOP_CODE)
    x = 60                                    # ~180 simulated steps to halt
    assert run(EVENS_CODE, x, fuel=10**4).steps > 16
    assert isinstance(run(u, x, fuel=10 * UNION_FUEL), Halted)


def test_w_union_code_is_a_recognizable_embedding():
    u = w_union_code(EVENS_CODE, ODDS_CODE)
    parts = freeze2_parts(u)
    assert parts is not None
    body, big, small = parts
    assert body == w_union_body()
    assert big == sim_body()
    assert unpair(small) == (EVENS_CODE, ODDS_CODE)


def test_w_union_code_size_budget():
    u = w_union_code(EVENS_CODE, ODDS_CODE)
    assert u.bit_length() < 1_000_000


def test_omega_union_dovetails_a_code_sequence():
    targets = [_only_on_code(0), _only_on_code(2), _only_on_code(4)]
    a = Asm()                               # the sequence itself runs raw
    t, c = a.reg(), a.reg()
    l0, l1 = a.label(), a.label()
    a.copy(t, 0)
    a.jz(t, l0)
    a.const(c, 1)
    a.monus(t, t, c)
    a.jz(t, l1)
    a.const(0, targets[2])
    a.halt()
    a.mark(l0)
    a.const(0, targets[0])
    a.halt()
    a.mark(l1)
    a.const(0, targets[1])
    a.halt()
    seq = a.code()
    for k in range(5):
        assert run(seq, k, fuel=100).value == targets[min(k, 2)]

    ou = omega_union_code(seq)
    for x in range(6):
        out = run(ou, x, fuel=4 * UNION_FUEL)
        assert isinstance(out, Halted) == (x in (0, 2, 4)), (x, out)


def test_w_intersect_realizes_intersections():
    code = kernel.w_intersect(EVENS_CODE, _only_on_code(4))
    for x in range(7):
        out = run(code, x, fuel=5000)
        assert isinstance(out, Halted) == (x == 4), (x, out)


def test_w_intersect_body_shape():
    # sequential chaining of two raw evaluations; input pair(pair(i,j), x)
    body = w_intersect_body()
    out = run(body, pair(pair(SUCC_CODE, SUCC_CODE), 5), fuel=100)
    assert isinstance(out, Halted)


# ---------------------------------------------------------------------------
# Cost-model constants relied on elsewhere
# ---------------------------------------------------------------------------


def test_cost_model_constants_hold():
    assert encode_instruction(PAIR, [0, 1, 0]) == 47
    assert encode_instruction(UEVAL, [0, 1, 0]) == 107
    assert pair(3, 4) == 32
    # smn and freeze2 setup overheads, pinned end to end
    body = encode_program([(UNR, [0, 0]), (HALT, [])])
    direct = run(body, pair(9, 4), fuel=10)
    s = run(kernel.smn(body, 9), 4, fuel=100)
    assert s.steps == direct.steps + 5
    body2 = encode_program([(HALT, [])])
    d2 = run(body2, pair(pair(1, 2), 3), fuel=10)
    f2 = run(freeze2(body2, 1, 2), 3, fuel=100)
    assert f2.steps == d2.steps + 7
