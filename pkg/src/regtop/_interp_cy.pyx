# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled interpreter backend.

Covers the common case — densely decoded programs (declared length within
the dense limit) and fuel below 2^62 — with C-typed control flow.  Anything
outside that raises Delegate and the caller re-runs the pure backend; the
semantics are deterministic, so restarting from scratch is sound.

Register values stay Python objects (they are arbitrary-precision), but the
program counter, step counter, and dispatch all run at C level.  Step-for-step
the observable behavior must equal `_interp_py.execute`.
"""

from math import isqrt

from ._progcode import Delegate, unpair as _big_unpair

# Values at least this large go through the shared unpair (memoized,
# subquadratic square root); below it the inline math.isqrt is faster.
cdef object _BIG_GATE = 1 << 8192

cdef enum:
    OP_HALT = 0
    OP_CONST = 1
    OP_COPY = 2
    OP_INC = 3
    OP_ADD = 4
    OP_MONUS = 5
    OP_MUL = 6
    OP_PAIR = 7
    OP_UNL = 8
    OP_UNR = 9
    OP_JZ = 10
    OP_JMP = 11
    OP_UEVAL = 12

cdef enum:
    REG_SLOTS = 64

cdef tuple HALT_TUPLE = (0, 0, 0, 0)

cdef object _FUEL_CAP = 1 << 62


cdef inline object _get(list fast, dict over, object r):
    if r < REG_SLOTS:
        return fast[r]
    v = over.get(r)
    return 0 if v is None else v


cdef inline void _put(list fast, dict over, object r, object v):
    if r < REG_SLOTS:
        fast[r] = v
    else:
        over[r] = v


def execute(decode, code, x, fuel):
    """Mirror of the reference backend; returns (halted, value, steps)."""
    cdef long long cfuel, steps, pc, n
    cdef int op
    cdef list dense, fast, frames
    cdef dict over
    cdef tuple ins, frame
    cdef object a, b, c, v, target, callee, arg

    if fuel >= _FUEL_CAP:
        raise Delegate("fuel beyond compiled-backend range")
    prog = decode(code)
    if prog.dense is None:
        raise Delegate("sparsely decoded program")
    cfuel = fuel
    n = prog.n
    dense = prog.dense
    fast = [0] * REG_SLOTS
    fast[0] = x
    over = {}
    frames = []
    steps = 0
    pc = 0

    while True:
        if steps == cfuel:
            return (False, 0, steps)
        if 0 <= pc < n:
            ins = <tuple> dense[pc]
        else:
            ins = HALT_TUPLE
        steps += 1
        op = <int> ins[0]

        if op == OP_HALT:
            v = fast[0]
            if frames:
                frame = <tuple> frames.pop()
                fast = <list> frame[0]
                over = <dict> frame[1]
                pc = <long long> frame[2]
                n = <long long> frame[3]
                dense = <list> frame[4]
                _put(fast, over, frame[5], v)
                continue
            return (True, v, steps)

        elif op == OP_CONST:
            _put(fast, over, ins[1], ins[2])
            pc += 1
        elif op == OP_COPY:
            _put(fast, over, ins[1], _get(fast, over, ins[2]))
            pc += 1
        elif op == OP_INC:
            a = ins[1]
            _put(fast, over, a, _get(fast, over, a) + 1)
            pc += 1
        elif op == OP_ADD:
            _put(fast, over, ins[1],
                 _get(fast, over, ins[2]) + _get(fast, over, ins[3]))
            pc += 1
        elif op == OP_MONUS:
            v = _get(fast, over, ins[2]) - _get(fast, over, ins[3])
            _put(fast, over, ins[1], v if v > 0 else 0)
            pc += 1
        elif op == OP_MUL:
            _put(fast, over, ins[1],
                 _get(fast, over, ins[2]) * _get(fast, over, ins[3]))
            pc += 1
        elif op == OP_PAIR:
            a = _get(fast, over, ins[2])
            b = _get(fast, over, ins[3])
            v = a + b
            _put(fast, over, ins[1], v * (v + 1) // 2 + b)
            pc += 1
        elif op == OP_UNL:
            v = _get(fast, over, ins[2])
            if v >= _BIG_GATE:
                _put(fast, over, ins[1], _big_unpair(v)[0])
            else:
                a = (isqrt(8 * v + 1) - 1) // 2
                b = v - a * (a + 1) // 2
                _put(fast, over, ins[1], a - b)
            pc += 1
        elif op == OP_UNR:
            v = _get(fast, over, ins[2])
            if v >= _BIG_GATE:
                _put(fast, over, ins[1], _big_unpair(v)[1])
            else:
                a = (isqrt(8 * v + 1) - 1) // 2
                _put(fast, over, ins[1], v - a * (a + 1) // 2)
            pc += 1
        elif op == OP_JZ:
            if _get(fast, over, ins[1]) == 0:
                target = ins[2]
                if 0 <= target < n:
                    pc = <long long> target
                else:
                    pc = -1          # out of range: next fetch is a HALT
            else:
                pc += 1
        elif op == OP_JMP:
            target = ins[1]
            if 0 <= target < n:
                pc = <long long> target
            else:
                pc = -1
        else:  # OP_UEVAL
            callee = _get(fast, over, ins[2])
            arg = _get(fast, over, ins[3])
            prog = decode(callee)
            if prog.dense is None:
                raise Delegate("sparsely decoded callee")
            frames.append((fast, over, pc + 1, n, dense, ins[1]))
            n = prog.n
            dense = prog.dense
            fast = [0] * REG_SLOTS
            fast[0] = arg
            over = {}
            pc = 0
