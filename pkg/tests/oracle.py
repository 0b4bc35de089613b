"""Independent boson realization of the U(3) operators, used as a test oracle.

Three bosons: sigma (scalar) and tau_+, tau_- (circular components). The Fock
state (n_sigma, n_plus, n_minus) with n = n_plus + n_minus, l = n_plus - n_minus
is identified with the U(2) basis state |N; n, l>. All operators are built from
creation/annihilation products in the full Fock space of N bosons and then
restricted to one l block.
"""
import numpy as np

S, P, M = 0, 1, 2


def fock(N):
    states = [(N - p - m, p, m) for p in range(N + 1) for m in range(N + 1 - p)]
    return states, {s: i for i, s in enumerate(states)}


def hop(N, cre, ann):
    """Matrix of b_cre^dagger b_ann on the N-boson space."""
    states, index = fock(N)
    out = np.zeros((len(states), len(states)))
    for j, s in enumerate(states):
        if s[ann] == 0:
            continue
        t = list(s)
        c = np.sqrt(t[ann])
        t[ann] -= 1
        t[cre] += 1
        c *= np.sqrt(t[cre])
        out[index[tuple(t)], j] += c
    return out


def operators(N):
    b = lambda c, a: hop(N, c, a)
    n = b(P, P) + b(M, M)
    l = b(P, P) - b(M, M)
    l2 = l @ l
    d_plus = np.sqrt(2) * (b(P, S) - b(S, M))
    d_minus = np.sqrt(2) * (-b(M, S) + b(S, P))
    r_plus = np.sqrt(2) * (b(P, S) + b(S, M))
    r_minus = np.sqrt(2) * (b(M, S) + b(S, P))
    w2 = 0.5 * (d_plus @ d_minus + d_minus @ d_plus) + l2
    w2bar = 0.5 * (r_plus @ r_minus + r_minus @ r_plus) + l2
    n2 = n @ n
    one = np.eye(n.shape[0])
    return {
        "n": n, "n2": n2, "n3": n2 @ n, "n4": n2 @ n2,
        "l2": l2, "l4": l2 @ l2, "nl2": n @ l2, "n2l2": n2 @ l2,
        "W2": w2, "W2bar": w2bar, "W4": w2 @ w2, "l2W2": l2 @ w2,
        "sym_nW2": n @ w2 + w2 @ n, "sym_n2W2": n2 @ w2 + w2 @ n2,
        "sym_W2W2bar": 0.5 * (w2 @ w2bar + w2bar @ w2),
        "pairing": N * (N + 1) * one - w2,
    }


def block_indices(N, l):
    _, index = fock(N)
    return [index[(N - n, (n + l) // 2, (n - l) // 2)] for n in range(l, N + 1, 2)]


def restrict(op, N, l):
    ids = block_indices(N, l)
    return op[np.ix_(ids, ids)]
