"""Run every built-in scenario and print the per-task outcome."""

from subalgebroid.gallery import NAMES, gallery
from subalgebroid.scenario import run

for name in NAMES:
    report = run(gallery(name))
    print(f"{name}: {'pass' if report.passed else 'FAIL'}")
    for task in report.tasks:
        print(f"  {task['kind']:<24} {task['label'] or '':<28} {'ok' if task['passed'] else 'failed'}")
