"""Walk through seven strictly sequential getTS calls of the phase algorithm.

The calls return (1,0), (2,0), (2,1), (3,0), (3,1), (3,2), (4,0): a fresh
round whenever the previous round's register survived, a turn timestamp
whenever the caller catches the register unchanged and invalidates it.
"""

from tsforge.core import value_text
from tsforge.simulator import ExecState, Workload
from tsforge.traces import TraceBuilder
from tsforge.verify import compute_phases


def main():
    n = 7
    workload = Workload(algo="phase", n=n)
    print(f"{n} processes, one call each, m = {workload.m} registers "
          f"(the last one is a read-only sentinel)\n")

    state = ExecState(workload)
    builder = TraceBuilder("phase", n, workload.M, workload.m)
    for pid in range(1, n + 1):
        while state.can_run(pid):
            state.advance(pid, builder)
        call = builder.trace.calls[-1]
        regs = " ".join(f"R[{i + 1}]={value_text(v)}"
                        for i, v in enumerate(state.registers))
        print(f"p{pid} returns {call.ts.text():6}  {regs}")
    trace = builder.finish(state.stats())

    partition = compute_phases(trace)
    print(f"\nphase starts (step indices): {partition.starts}")
    print(f"completed phases: {partition.completed_phases}")
    for phase in range(1, partition.top_phase + 1):
        start, end = partition.segment(phase)
        writes = {s.reg for s in trace.steps
                  if s.op == "write" and start <= s.i <= end}
        print(f"phase {phase}: steps {start}..{end}, "
              f"first-writes to registers {sorted(writes)}")


if __name__ == "__main__":
    main()
