"""Collected one-line verdicts, echoed in the terminal summary."""
from __future__ import annotations

VERDICTS: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    VERDICTS.append(line)
    print(line)
    return ok
