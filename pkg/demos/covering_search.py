"""Search reachable configurations for maximal register covering.

A process covers a register when its next access is a write to it.  The
search walks the deduplicated configuration graph and reports the largest k
such that k processes cover registers with at most 3 per register, together
with a schedule that reproduces the configuration.
"""

from tsforge.covering import (covers, ordered_signature, replay,
                              search_max_covering, signature)
from tsforge.simulator import Workload


def main():
    for n in (1, 2, 3):
        workload = Workload(algo="phase", n=n)
        report = search_max_covering(workload)
        print(f"n={n}: max covering k = {report.max_k}, "
              f"signature {report.signature}, "
              f"{report.nodes_visited} configurations visited")
        state = replay(workload, report.witness_schedule)
        assert signature(state) == report.signature
        for pid in range(1, n + 1):
            reg = covers(state, pid)
            where = f"covers R[{reg}]" if reg else "not covering"
            print(f"   p{pid}: {where}")
        print(f"   witness schedule: {report.witness_schedule}")
        print(f"   ordered signature: {ordered_signature(report.signature)}\n")


if __name__ == "__main__":
    main()
