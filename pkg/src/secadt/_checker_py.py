"""Pure-Python finite-trace evaluation kernel.

Same contract as the compiled ``secadt._checker`` module: evaluate a
post-order formula program backwards over each trace, keeping one row of
truth values for the current position and one for the next.

Returns, per trace, 0 if the formula holds at the first position, otherwise
the 1-based earliest witness position (first failure of the operand of a
top-level ``G``, else 1).
"""

ATOM, NOT, AND, OR, XOR, IMPLIES, ALWAYS, EVENTUALLY = range(8)


def check_batch(opcodes, left, right, atoms, events, offsets):
    ops = list(opcodes)
    lhs = list(left)
    rhs = list(right)
    syms = list(atoms)
    m = len(ops)
    root = m - 1
    top_always = ops[root] == ALWAYS
    watch = lhs[root]
    out = []
    for t in range(len(offsets) - 1):
        start, stop = offsets[t], offsets[t + 1]
        nxt = [False] * m
        cur = [False] * m
        # position n (past the end)
        for k in range(m):
            op = ops[k]
            if op == ATOM or op == EVENTUALLY:
                v = False
            elif op == ALWAYS:
                v = True
            elif op == NOT:
                v = not nxt[lhs[k]]
            elif op == AND:
                v = nxt[lhs[k]] and nxt[rhs[k]]
            elif op == OR:
                v = nxt[lhs[k]] or nxt[rhs[k]]
            elif op == XOR:
                v = nxt[lhs[k]] != nxt[rhs[k]]
            else:
                v = (not nxt[lhs[k]]) or nxt[rhs[k]]
            nxt[k] = v
        witness = 0
        for i in range(stop - 1, start - 1, -1):
            ev = events[i]
            for k in range(m):
                op = ops[k]
                if op == ATOM:
                    v = ev == syms[k]
                elif op == NOT:
                    v = not cur[lhs[k]]
                elif op == AND:
                    v = cur[lhs[k]] and cur[rhs[k]]
                elif op == OR:
                    v = cur[lhs[k]] or cur[rhs[k]]
                elif op == XOR:
                    v = cur[lhs[k]] != cur[rhs[k]]
                elif op == IMPLIES:
                    v = (not cur[lhs[k]]) or cur[rhs[k]]
                elif op == ALWAYS:
                    v = cur[lhs[k]] and nxt[k]
                else:
                    v = cur[lhs[k]] or nxt[k]
                cur[k] = v
            if top_always and not cur[watch]:
                witness = i - start + 1
            cur, nxt = nxt, cur
        if nxt[root]:
            out.append(0)
        else:
            out.append(witness if top_always else 1)
    return out
