"""
Discrete-event model of one message flow along a node chain, on simpy.

Each hop is either a forwarder (per-packet cut-through) or a store node that
holds the complete message, computes, and originates the next message.
Links transmit one packet at a time; propagation overlaps freely.
Events at equal timestamps run in scheduling order, so runs are deterministic.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import simpy

from .models import LinkSpec, PacketizationSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hop:
    """Timing role of one chain node for a single run"""

    per_packet_overhead: float = 0.0
    per_message_overhead: float = 0.0
    stores: bool = False
    compute: float = 0.0
    emits: int = 0


@dataclass(frozen=True)
class Packet:
    size: int
    last: bool
    handoff: float


@dataclass
class EngineResult:
    t_p: float = 0.0
    t_t: float = 0.0
    completed_at: float = 0.0
    link_bytes: List[int] = field(default_factory=list)
    link_packets: List[int] = field(default_factory=list)

    @property
    def t_s(self) -> float:
        return self.t_p + self.t_t


def packetize(message_bytes: int, packetization: PacketizationSpec) -> List[int]:
    """On-wire packet sizes for one message; an empty message still costs one header"""
    mtu, header = packetization.mtu_payload, packetization.header_bytes
    count = max(1, math.ceil(message_bytes / mtu))
    sizes = [mtu + header] * (count - 1)
    sizes.append(message_bytes - mtu * (count - 1) + header)
    return sizes


class ChainSimulation:
    def __init__(self, hops: Sequence[Hop], links: Sequence[LinkSpec], packetization: PacketizationSpec):
        if len(links) != len(hops) - 1:
            raise ValueError(f"{len(hops)} hops need {len(hops) - 1} links")
        if not hops[0].stores or not hops[-1].stores:
            raise ValueError("the first and last hops must hold whole messages")
        self.hops = list(hops)
        self.links = list(links)
        self.packetization = packetization
        self.env = simpy.Environment()
        self.inboxes = [simpy.Store(self.env) for _ in self.hops]
        self.wires = [simpy.Store(self.env) for _ in self.links]
        self.result = EngineResult(link_bytes=[0] * len(self.links), link_packets=[0] * len(self.links))

    def run(self) -> EngineResult:
        for index in range(len(self.hops)):
            self.env.process(self._node(index))
        for index in range(len(self.links)):
            self.env.process(self._link(index))
        self.env.run()
        return self.result

    def _node(self, index: int):
        hop = self.hops[index]
        if index > 0:
            inbox = self.inboxes[index]
            if not hop.stores:
                while True:
                    packet = yield inbox.get()
                    yield self.env.timeout(hop.per_packet_overhead)
                    self.wires[index].put(packet)
                    if packet.last:
                        return
            while True:
                packet = yield inbox.get()
                if packet.last:
                    break
            self.result.t_t += self.env.now - packet.handoff

        if hop.compute:
            yield self.env.timeout(hop.compute)
            self.result.t_p += hop.compute

        if index == len(self.hops) - 1:
            self.result.completed_at = self.env.now
            return
        yield from self._emit(index, hop)

    def _emit(self, index: int, hop: Hop):
        handoff = self.env.now
        yield self.env.timeout(hop.per_message_overhead)
        sizes = packetize(hop.emits, self.packetization)
        for position, size in enumerate(sizes):
            yield self.env.timeout(hop.per_packet_overhead)
            self.wires[index].put(Packet(size=size, last=position == len(sizes) - 1, handoff=handoff))

    def _link(self, index: int):
        link = self.links[index]
        wire = self.wires[index]
        inbox = self.inboxes[index + 1]
        while True:
            packet = yield wire.get()
            yield self.env.timeout(packet.size * 8 / link.bandwidth)
            self.result.link_bytes[index] += packet.size
            self.result.link_packets[index] += 1
            arrival = self.env.timeout(link.prop_delay)
            arrival.callbacks.append(lambda _, p=packet: inbox.put(p))
            if packet.last:
                return


def run_chain(hops: Sequence[Hop], links: Sequence[LinkSpec], packetization: PacketizationSpec) -> EngineResult:
    return ChainSimulation(hops, links, packetization).run()
