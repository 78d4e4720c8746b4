# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled finite-trace evaluation kernel; see ``_checker_py`` for the contract."""

from libc.stdlib cimport malloc, free

cdef enum:
    ATOM = 0
    NOT = 1
    AND = 2
    OR = 3
    XOR = 4
    IMPLIES = 5
    ALWAYS = 6
    EVENTUALLY = 7


cdef inline void _row(const int[:] ops, const int[:] lhs, const int[:] rhs,
                      const int[:] syms, int m, int ev, bint past_end,
                      char* cur, const char* nxt) noexcept nogil:
    cdef int k, op
    cdef char v
    for k in range(m):
        op = ops[k]
        if op == ATOM:
            v = 0 if past_end else (ev == syms[k])
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
            v = 1 if past_end else (cur[lhs[k]] and nxt[k])
        else:
            v = 0 if past_end else (cur[lhs[k]] or nxt[k])
        cur[k] = v


def check_batch(const int[:] opcodes, const int[:] left, const int[:] right,
                const int[:] atoms, const int[:] events, const int[:] offsets):
    cdef int m = opcodes.shape[0]
    cdef int ntraces = offsets.shape[0] - 1
    cdef int root = m - 1
    cdef bint top_always = opcodes[root] == ALWAYS
    cdef int watch = left[root]
    cdef int t, i, start, stop, witness
    cdef char* cur = <char*> malloc(m)
    cdef char* nxt = <char*> malloc(m)
    cdef char* tmp
    cdef int* res = <int*> malloc(max(ntraces, 1) * sizeof(int))
    if cur == NULL or nxt == NULL or res == NULL:
        free(cur)
        free(nxt)
        free(res)
        raise MemoryError()
    try:
        with nogil:
            for t in range(ntraces):
                start = offsets[t]
                stop = offsets[t + 1]
                _row(opcodes, left, right, atoms, m, -1, True, nxt, nxt)
                witness = 0
                i = stop - 1
                while i >= start:
                    _row(opcodes, left, right, atoms, m, events[i], False, cur, nxt)
                    if top_always and not cur[watch]:
                        witness = i - start + 1
                    tmp = cur
                    cur = nxt
                    nxt = tmp
                    i -= 1
                if nxt[root]:
                    res[t] = 0
                elif top_always:
                    res[t] = witness
                else:
                    res[t] = 1
        return [res[t] for t in range(ntraces)]
    finally:
        free(cur)
        free(nxt)
        free(res)
