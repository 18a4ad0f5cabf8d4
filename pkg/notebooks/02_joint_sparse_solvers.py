"""Columnwise l1,1 against the sum-of-row-norms l1,2 program.

The first instance has well-separated columns and both programs succeed.
The second uses the diagonal construction, where l1,1 succeeds and
l1,2 does not.  The third mixes a recoverable and an unrecoverable
vector, which only l1,2 gets right.
"""
from jsrec import (construct_diag_counterexample, construct_l12_succeeds_l11_fails, face_count, gaussian_matrix,
                   is_recovered, make_rng, random_support, row_sparse_matrix, solve_l11, solve_l12)
from jsrec.core import normalize_columns


def report(label, A, inst):
    ok11 = is_recovered(solve_l11(A, inst.B).X, inst.X0)
    ok12 = is_recovered(solve_l12(A, inst.B).X, inst.X0)
    print(f"{label:<28} l1,1 {'ok' if ok11 else 'FAIL':<5} l1,2 {'ok' if ok12 else 'FAIL'}")


rng = make_rng(3)
A = gaussian_matrix(20, 60, rng)
X0 = row_sparse_matrix(random_support(60, 4, rng), 3, rng)
ok11 = is_recovered(solve_l11(A, A @ X0).X, X0)
ok12 = is_recovered(solve_l12(A, A @ X0).X, X0)
print(f"{'random 4-row-sparse, r=3':<28} l1,1 {'ok' if ok11 else 'FAIL':<5} l1,2 {'ok' if ok12 else 'FAIL'}")

Ad = normalize_columns(gaussian_matrix(10, 30, rng))
report("diagonal construction", Ad, construct_diag_counterexample(Ad, 11, rng))

while True:
    I = random_support(60, 7, rng)
    fc = face_count(A, I)
    if 0 < fc.surviving < fc.total:
        break
w = construct_l12_succeeds_l11_fails(A, I, rng)
report(f"mixture, gamma={w.gamma:.3g}", A, w.instance)
