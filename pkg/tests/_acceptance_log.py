"""Per-criterion acceptance outcomes, printed in the pytest terminal summary."""

RESULTS = []


def record(number, title, ok, detail, elapsed):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} | {detail} | {elapsed:.2f}s"
    RESULTS.append((number, line))
    print(line)
    return ok
