"""Pure-Python interpreter backend.

The step semantics here are the reference: the compiled backend must agree
on every (halted, value, steps) triple.  One global step counter spans nested
evaluation — a callee burns the caller's remaining fuel.  A fetch outside the
program text behaves as HALT and, like every executed instruction, costs one
step; consequently no halting run reports zero steps.
"""
from __future__ import annotations

from ._progcode import (
    ADD, CONST, COPY, HALT, HALT_TUPLE, INC, JMP, JZ, MONUS, MUL, PAIR,
    UNL, UNR, UEVAL, Decoded, pair, unpair,
)

#: Registers below this index live in a flat list; the rest in a dict.
REG_SLOTS = 64


def _new_regs(x: int) -> tuple[list[int], dict[int, int]]:
    fast = [0] * REG_SLOTS
    fast[0] = x
    return fast, {}


def execute(decode, code: int, x: int, fuel: int) -> tuple[bool, int, int]:
    """Run program ``code`` on input ``x`` with at most ``fuel`` steps.

    ``decode`` maps a code to a :class:`Decoded` (injected so the caller can
    cache).  Returns ``(halted, value, steps)``; on fuel exhaustion ``value``
    is 0 and ``steps == fuel``.
    """
    prog: Decoded = decode(code)
    n = prog.n
    dense = prog.dense
    sparse = prog.sparse
    fast, over = _new_regs(x)
    pc = 0
    steps = 0
    frames: list = []

    def get(r: int) -> int:
        return fast[r] if r < REG_SLOTS else over.get(r, 0)

    def put(r: int, v: int) -> None:
        if r < REG_SLOTS:
            fast[r] = v
        else:
            over[r] = v

    while True:
        if steps == fuel:
            return (False, 0, steps)
        if 0 <= pc < n:
            ins = dense[pc] if dense is not None else sparse.get(pc, HALT_TUPLE)
        else:
            ins = HALT_TUPLE
        steps += 1
        op = ins[0]
        if op == HALT:
            v = fast[0]
            if frames:
                fast, over, pc, n, dense, sparse, dest = frames.pop()
                put(dest, v)
                continue
            return (True, v, steps)
        if op == CONST:
            put(ins[1], ins[2])
            pc += 1
        elif op == COPY:
            put(ins[1], get(ins[2]))
            pc += 1
        elif op == INC:
            put(ins[1], get(ins[1]) + 1)
            pc += 1
        elif op == ADD:
            put(ins[1], get(ins[2]) + get(ins[3]))
            pc += 1
        elif op == MONUS:
            d = get(ins[2]) - get(ins[3])
            put(ins[1], d if d > 0 else 0)
            pc += 1
        elif op == MUL:
            put(ins[1], get(ins[2]) * get(ins[3]))
            pc += 1
        elif op == PAIR:
            put(ins[1], pair(get(ins[2]), get(ins[3])))
            pc += 1
        elif op == UNL:
            put(ins[1], unpair(get(ins[2]))[0])
            pc += 1
        elif op == UNR:
            put(ins[1], unpair(get(ins[2]))[1])
            pc += 1
        elif op == JZ:
            pc = ins[2] if get(ins[1]) == 0 else pc + 1
        elif op == JMP:
            pc = ins[1]
        else:  # UEVAL
            callee = get(ins[2])
            arg = get(ins[3])
            frames.append((fast, over, pc + 1, n, dense, sparse, ins[1]))
            prog = decode(callee)
            n = prog.n
            dense = prog.dense
            sparse = prog.sparse
            fast, over = _new_regs(arg)
            pc = 0
