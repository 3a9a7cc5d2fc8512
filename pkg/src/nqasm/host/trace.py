"""Protocol legality check over a recorded message trace."""

from __future__ import annotations

import re
from collections import defaultdict

__all__ = ["PROTOCOL_PATTERN", "protocol_violations"]

_CODES = {
    "RegisterApp": "R",
    "RegisterAppOK": "K",
    "RegisterAppErr": "E",
    "SubroutineMsg": "S",
    "MemoryUpdate": "M",
    "Done": "D",
    "StopApp": "X",
}

# RegisterApp (OK|Err) (Subroutine MemoryUpdate* Done)* StopApp
PROTOCOL_PATTERN = re.compile(r"R(?:E|K(?:SM*D)*X)")


def protocol_violations(trace) -> list[str]:
    """Names of the nodes whose message stream does not follow the protocol.

    Each node runs one app per network run, so the stream is grouped by node.
    """
    streams: dict[str, list[str]] = defaultdict(list)
    for entry in trace:
        streams[entry.node].append(_CODES[entry.kind])
    return [node for node, codes in sorted(streams.items()) if not PROTOCOL_PATTERN.fullmatch("".join(codes))]
