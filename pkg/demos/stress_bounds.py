"""Random-schedule stress over the phase algorithm at growing sizes.

For M = n calls, the algorithm may touch at most ceil(2*sqrt(M)) registers,
write only the first ceil(2*sqrt(M)) - 1 of them, complete Phi phases with
Phi(Phi+1)/2 <= 2M, and perform at most 2M invalidation writes.  The fast
runner checks all of that on every run; this demo prints the observed maxima
next to the bounds.
"""

import time

from tsforge.core import registers_for_phase
from tsforge.fastrun import stress


def main():
    runs = 5000
    print(f"{runs} random schedules per size\n")
    print(f"{'n=M':>4} {'bound m':>8} {'max acc':>8} {'max wr':>7} "
          f"{'max phases':>11} {'max inval':>10} {'bad':>4} {'secs':>6}")
    for n in (8, 16, 32, 64):
        t0 = time.perf_counter()
        results = stress(n, runs, seed=0)
        dt = time.perf_counter() - t0
        m = registers_for_phase(n)
        bad = sum(not r.ok for r in results)
        print(f"{n:>4} {m:>8} {max(r.max_reg_accessed for r in results):>8} "
              f"{max(r.max_reg_written for r in results):>7} "
              f"{max(r.completed_phases for r in results):>11} "
              f"{max(r.invalidation_writes for r in results):>10} "
              f"{bad:>4} {dt:>6.1f}")


if __name__ == "__main__":
    main()
