"""Boosted l1 and ReMBo on the same instance.

Boosted l1 solves basis pursuit on every column and keeps the first
support that explains all of B.  ReMBo instead draws random combinations
of the columns, which lets it reach sign patterns that no single column
has.
"""
from jsrec import boosted_l1, gaussian_matrix, make_rng, random_support, rembo_l1, row_sparse_matrix

rng = make_rng(11)
A = gaussian_matrix(20, 60, rng)
for s in (6, 7, 8, 9):
    X0 = row_sparse_matrix(random_support(60, s, rng), 4, rng)
    B = A @ X0
    b = boosted_l1(A, B)
    rb = rembo_l1(A, B, 20, rng=make_rng(11, s))
    print(f"s={s:2d}  boosted: {'recovered' if b.recovered else 'failed':<9} after {b.iterations_used} columns   "
          f"ReMBo: {'recovered' if rb.recovered else 'failed':<9} after {rb.iterations_used} draws")
