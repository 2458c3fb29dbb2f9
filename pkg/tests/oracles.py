"""Slow reference implementations used to derive and cross-check expected values.

They follow the textbook definitions directly and share no code with the
package beyond script access and index-set membership.
"""

from cbrank.streams import IndexFamily, index_member, stabilization_stage


def naive_s_indices(script, x):
    out, prev = [], -1
    for n in range(1, len(x) + 1):
        settle = stabilization_stage(script, n)
        found = None
        # past the settling stage A_s|n never changes, so one extra stage decides
        for s in range(prev + 1, max(prev + 1, settle) + 1):
            if script.approx_prefix(s, n) == x[:n]:
                found = s
                break
        if found is None:
            return out + [None] * (len(x) - n + 1)
        out.append(found)
        prev = found
    return out


def naive_phi(script, x, cap):
    """Blocks 1^s 0 for each defined s-index; ones forever after the first undefined one."""
    text = ""
    for s in naive_s_indices(script, x):
        if s is None:
            return (text + "1" * cap)[:cap]
        text += "1" * s + "0"
    return text[:cap]


def naive_pair(left, right, cap):
    """Interleave two (possibly unequal) strings; stops at the first missing bit."""
    out = []
    for p in range(cap):
        src = left if p % 2 == 0 else right
        if p // 2 >= len(src):
            break
        out.append(src[p // 2])
    return "".join(out)


def naive_dyn(component_bits, cap):
    """Phase machine over fixed component output strings.

    Returns (output, boundaries) where boundaries are the output lengths at
    which each phase completed.
    """
    phase, consumed, zeros = 0, [0], [0]
    out, bounds = [], []
    for p in range(cap):
        src = next((i for i in range(phase) if index_member(IndexFamily.I(i), p)), phase)
        bits = component_bits(src)
        if consumed[src] >= len(bits):
            break
        b = bits[consumed[src]]
        consumed[src] += 1
        zeros[src] += b == "0"
        out.append(b)
        if all(zeros[i] for i in range(phase + 1)):
            bounds.append(p + 1)
            phase += 1
            consumed.append(0)
            zeros = [0] * (phase + 1)
    return "".join(out), bounds
