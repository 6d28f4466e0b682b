"""Registry for the acceptance suite's one-line verdicts.

Tests record a line per gate; the conftest terminal-summary hook re-prints
the collected lines after the run so they are visible without -s.
"""

RESULTS = []
_SEEN = set()


def record(label, passed, detail):
    """Register one verdict line; repeat labels are ignored so a failing
    gate is not reported twice by its cleanup path."""
    if label in _SEEN:
        return bool(passed)
    _SEEN.add(label)
    line = f"[acceptance {label}] {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return bool(passed)
