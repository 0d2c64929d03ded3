"""Collects one verdict line per acceptance criterion for the terminal summary."""

REPORT: list[str] = []


def verdict(tag: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {tag}: {detail}"
    REPORT.append(line)
    print(line, flush=True)
    return line


def note(text: str):
    line = f"        {text}"
    REPORT.append(line)
    print(line, flush=True)
