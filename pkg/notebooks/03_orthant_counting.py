"""Counting recoverable sign patterns.

For a fixed support, l1 recovery depends only on the sign pattern of the
nonzeros.  Face counting enumerates the patterns up to a global sign flip
and turns the surviving fraction into the success models of the
multi-vector methods.  The orthant count cnd(n, d) bounds how many
patterns a d-column block can reach.
"""
from jsrec import (check_nsp_uniform, cnd, face_count, gaussian_matrix, make_rng, prob_boosted, prob_l1, prob_l11,
                   random_support, sample_sign_patterns)

rng = make_rng(7)
A = gaussian_matrix(20, 80, rng)
I = random_support(80, 7, rng)
fc = face_count(A, I)
p = prob_l1(fc)
print(f"support size 7: {fc.surviving} of {fc.total} patterns recoverable, p = {p:.4f}")
print("null space property holds:", check_nsp_uniform(A, I).holds)
for r in (1, 2, 4, 8):
    print(f"  r={r}: l1,1 model {prob_l11(p, r):.4f}   boosted model {prob_boosted(p, r):.4f}")

print("\northant counts cnd(n, d), n = 1..8 down, d = 1..4 across")
for n in range(1, 9):
    print(" ".join(f"{cnd(n, d):4d}" for d in range(1, 5)))

stats = sample_sign_patterns(rng.standard_normal((6, 3)), 20000, rng)
print(f"\n6x3 block: {stats.unique_pairs} pattern pairs reached, bound {cnd(6, 3) // 2}")
