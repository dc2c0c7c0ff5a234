"""Application graphs of MELs and the EdgeLets that flow through them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple


class GraphError(ValueError):
    def __init__(self, message: str, cycle: Sequence[str] = ()) -> None:
        super().__init__(message)
        self.cycle = list(cycle)


@dataclass
class MEL:
    id: str
    host_edge: str
    shrink_factor: float
    instructions_per_mb: float
    shrink_instructions_per_mb: float = 0.0
    uplinks: List[str] = field(default_factory=list)
    downlinks: List[str] = field(default_factory=list)
    assignment_id: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.shrink_factor <= 1.0:
            raise ValueError(f"MEL {self.id}: shrink factor {self.shrink_factor} outside [0, 1]")
        if self.instructions_per_mb < 0 or self.shrink_instructions_per_mb < 0:
            raise ValueError(f"MEL {self.id}: instruction coefficients must be >= 0")
        if not self.assignment_id:
            self.assignment_id = self.id


@dataclass
class ApplicationGraph:
    mels: Dict[str, MEL]

    def successors(self, mel_id: str) -> List[str]:
        """Downstream MELs, from either side of the link declaration."""
        out = list(self.mels[mel_id].downlinks)
        for other in self.mels.values():
            if mel_id in other.uplinks and other.id not in out:
                out.append(other.id)
        return out

    def edges(self) -> List[Tuple[str, str]]:
        return [(a, b) for a in self.mels for b in self.successors(a)]

    @property
    def entry_mels(self) -> List[str]:
        targets = {b for _, b in self.edges()}
        return [m for m in self.mels if m not in targets]

    @property
    def exit_mels(self) -> List[str]:
        return [m for m in self.mels if not self.successors(m)]

    def entries_for(self, assignment_id: str) -> List[MEL]:
        entry = set(self.entry_mels)
        return [m for m in self.mels.values() if m.id in entry and m.assignment_id == assignment_id]


@dataclass(slots=True)
class EdgeLet:
    id: int
    payload_size: float  # MB
    source_iot: str
    destination_mel: Optional[str]  # None: final result addressed to the broker
    created_at: float
    hops: int = 0
    root_id: int = -1
    parent_id: int = -1
    entry_edge: str = ""
    entry_arrival: float = 0.0

    def __post_init__(self) -> None:
        if self.payload_size < 0:
            raise ValueError(f"EdgeLet {self.id}: negative payload")
        if self.root_id < 0:
            self.root_id = self.id


def validate_graph(g: ApplicationGraph) -> List[str]:
    """Check references and acyclicity; return a topological order.

    Raises GraphError naming the dangling link or the offending cycle.
    """
    for mel in g.mels.values():
        for ref in list(mel.uplinks) + list(mel.downlinks):
            if ref not in g.mels:
                raise GraphError(f"MEL {mel.id} links to unknown MEL {ref}")
    succ = {m: g.successors(m) for m in g.mels}
    white, grey, black = 0, 1, 2
    colour = {m: white for m in g.mels}
    order: List[str] = []

    def visit(node: str, stack: List[str]) -> None:
        colour[node] = grey
        stack.append(node)
        for nxt in succ[node]:
            if colour[nxt] == grey:
                cycle = stack[stack.index(nxt):] + [nxt]
                raise GraphError("cycle in MEL graph: " + " -> ".join(cycle), cycle)
            if colour[nxt] == white:
                visit(nxt, stack)
        stack.pop()
        colour[node] = black
        order.append(node)

    for m in g.mels:
        if colour[m] == white:
            visit(m, [])
    order.reverse()
    return order


def data_to_instructions(data_size: float, instructions_per_mb: float) -> float:
    if data_size < 0 or instructions_per_mb < 0:
        raise ValueError("data_to_instructions inputs must be non-negative")
    return instructions_per_mb * data_size


def mel_processing_time(data_size: float, mel: MEL, mips: float) -> float:
    """max(shrink time, processing time) for one EdgeLet on a host of ``mips``."""
    if not mips > 0:
        raise ValueError(f"MIPS must be positive, got {mips}")
    proc = data_to_instructions(data_size, mel.instructions_per_mb) / mips
    shrink = data_to_instructions(mel.shrink_factor * data_size, mel.shrink_instructions_per_mb) / mips
    return max(shrink, proc)


def shrink_and_forward(
    e: EdgeLet, mel: MEL, downlinks: Iterable[str], next_id: Callable[[], int]
) -> List[EdgeLet]:
    """EdgeLets leaving ``mel``: one per downlink, or a single final result."""
    if e.destination_mel != mel.id:
        raise ValueError(f"EdgeLet {e.id} is addressed to {e.destination_mel}, not {mel.id}")
    size = mel.shrink_factor * e.payload_size
    targets: List[Optional[str]] = list(downlinks) or [None]
    return [
        EdgeLet(
            id=next_id(),
            payload_size=size,
            source_iot=e.source_iot,
            destination_mel=target,
            created_at=e.created_at,
            hops=e.hops + 1,
            root_id=e.root_id,
            parent_id=e.id,
            entry_edge=e.entry_edge,
            entry_arrival=e.entry_arrival,
        )
        for target in targets
    ]
