"""Run the four household tasks: hybrid effector vs plain gripping.

The hybrid scripted policies pass everything; with suction disabled every
task dies on an infeasible pick (glass slide wider than the jaw stroke,
handleless lid/drawer/flap), which is the whole case for the hybrid
end effector.

Run: python3 demos/04_task_suite.py [trials]
"""

import sys
import time

from vacgrip.harness import run_suite, summary_table

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 15
suites = []
start = time.monotonic()
for variant in ("hybrid", "grasp_only"):
    for task_id in (1, 2, 3, 4):
        suite = run_suite(task_id, trials=trials, seed_base=0, variant=variant)
        suites.append(suite)
        line = (
            f"task {task_id} [{variant:>10}]: {suite.successes:>2}/{trials}"
            f"  causes={suite.cause_breakdown()}"
        )
        if suite.mean_error_offset() is not None:
            line += f"  lid offset {suite.mean_error_offset() * 100:.1f} cm"
        print(line)

print(f"\n{summary_table(suites)}")
print(f"\n{2 * 4 * trials} trials in {time.monotonic() - start:.1f} s")
