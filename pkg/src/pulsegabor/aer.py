"""Address-event plumbing: routing tables and pulse histograms.

Pulses leave every stage as (address, tick) events.  A routing table
fans each source address out to any number of (target, port) pairs;
delivery order within a tick is normalized by sorting, so any event
ordering produces the same result.  Histograms accumulate per-address
counts over a window and render to CSV or greyscale images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .images import to_uint8
from .kernel import ConfigurationError

__all__ = [
    "AddressEvent",
    "RoutingTable",
    "route",
    "PulseHistogram",
    "histogram_to_image",
]

PORTS = ("plus", "minus", "gate")


@dataclass(frozen=True)
class AddressEvent:
    """One pulse: which unit, which tick."""

    source: int
    tick: int

    def __post_init__(self) -> None:
        if self.source < 0:
            raise ValueError(f"address must be >= 0, got {self.source}")
        if self.tick < 0:
            raise ValueError(f"tick must be >= 0, got {self.tick}")


class RoutingTable:
    """Source address -> list of (target, port) destinations.

    A source may have zero or many targets; grid-mapped units use
    row-major addresses (y * width + x).
    """

    def __init__(self) -> None:
        self._entries: dict[int, list] = {}

    def add(self, source: int, target: int, port: str) -> None:
        if source < 0 or target < 0:
            raise ConfigurationError("addresses must be >= 0")
        if port not in PORTS:
            raise ConfigurationError(f"unknown port {port!r}, expected one of {PORTS}")
        self._entries.setdefault(int(source), []).append((int(target), port))

    def targets(self, source: int) -> list:
        return list(self._entries.get(source, []))

    def fan_out(self, source: int) -> int:
        return len(self._entries.get(source, []))

    @property
    def sources(self) -> list:
        return sorted(self._entries)

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def __contains__(self, source: int) -> bool:
        return source in self._entries

    def to_json(self, path=None):
        """Serialize as a list of {source, target, port} records.

        Records are sorted so identical tables serialize identically.
        Returns the JSON string; writes it to ``path`` when given.
        """
        records = [
            {"source": src, "target": tgt, "port": port}
            for src in sorted(self._entries)
            for tgt, port in sorted(self._entries[src])
        ]
        text = json.dumps(records, indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "RoutingTable":
        table = cls()
        for record in json.loads(text):
            table.add(record["source"], record["target"], record["port"])
        return table


def route(events, table: RoutingTable) -> list:
    """Expand events through the table into delivery tuples.

    Returns (source, target, port, tick) tuples sorted by
    (tick, source, target, port) — one delivery per matching table
    entry, independent of the order events arrive in.  Events from
    addresses the table has never seen fail fast.
    """
    deliveries = []
    for event in events:
        if event.source not in table:
            raise ConfigurationError(f"event from unknown source {event.source}")
        for target, port in table.targets(event.source):
            deliveries.append((event.source, target, port, event.tick))
    deliveries.sort(key=lambda d: (d[3], d[0], d[1], d[2]))
    return deliveries


class PulseHistogram:
    """Per-address pulse totals over a tick window [t0, t1)."""

    def __init__(self, n_addresses: int, t0_tick: int = 0) -> None:
        if n_addresses < 1:
            raise ValueError(f"need at least one address, got {n_addresses}")
        self.counts = np.zeros(n_addresses, dtype=np.int64)
        self.t0_tick = int(t0_tick)
        self.t1_tick = int(t0_tick)

    def add(self, fired: np.ndarray, tick: int) -> None:
        """Accumulate one tick's boolean (or count) pulse vector."""
        fired = np.asarray(fired)
        if fired.shape != self.counts.shape:
            raise ValueError(f"shape mismatch {fired.shape} vs {self.counts.shape}")
        self.counts += fired.astype(np.int64)
        self.t1_tick = max(self.t1_tick, int(tick) + 1)

    def merge(self, other: "PulseHistogram") -> "PulseHistogram":
        """Concatenate adjacent windows; counts add."""
        if other.counts.shape != self.counts.shape:
            raise ValueError("histogram address spaces differ")
        if other.t0_tick != self.t1_tick:
            raise ValueError(
                f"windows not adjacent: [{self.t0_tick},{self.t1_tick}) then "
                f"[{other.t0_tick},{other.t1_tick})"
            )
        merged = PulseHistogram(self.counts.size, self.t0_tick)
        merged.counts = self.counts + other.counts
        merged.t1_tick = other.t1_tick
        return merged

    def copy(self) -> "PulseHistogram":
        out = PulseHistogram(self.counts.size, self.t0_tick)
        out.counts = self.counts.copy()
        out.t1_tick = self.t1_tick
        return out

    def to_csv(self, path=None):
        """Two columns: address, count."""
        lines = ["address,count"]
        lines += [f"{i},{c}" for i, c in enumerate(self.counts)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
        return text


def histogram_to_image(hist: PulseHistogram, width: int, height: int) -> np.ndarray:
    """Render counts on a row-major grid as a greyscale image.

    Linear rescale, max count -> 255, round-half-up; an all-zero
    histogram renders black.
    """
    if width < 1 or height < 1:
        raise ValueError("grid must be at least 1x1")
    if hist.counts.size != width * height:
        raise ValueError(
            f"{hist.counts.size} addresses do not fill a {width}x{height} grid"
        )
    return to_uint8(hist.counts.reshape(height, width))
