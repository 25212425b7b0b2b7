"""The ladder of excited states at fixed central value.

For every node count n there is exactly one shooting parameter; the ladder
c_0 < c_1 < c_2 < ... is climbed by reusing each converged bracket's upper
endpoint as the next level's lower endpoint.  The frequencies sit close to
the linear-trap eigenvalues d + 4n for moderate b.
"""

from hartreetrap import ProblemSpec, find_excited_state

d, b = 7, 1.0
spec = ProblemSpec(d=d)

print(f"d = {d}, b = {b}")
print(f"{'n':>2} {'c_star':>18} {'omega':>18} {'d + 4n':>7}")
for n in range(4):
    res = find_excited_state(b, n, spec)
    print(f"{n:>2} {res.c_star:>18.12f} {res.omega:>18.12f} {d + 4 * n:>7}")
