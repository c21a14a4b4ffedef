"""Verifiable blind delegation over a one-way quantum channel.

The server streams every qubit of ell+1 resource registers to the client and
never hears back.  The client secretly reserves one register for the
computation and runs color tests on the rest.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .builder import build_coloring, build_gnd
from .compiler import ByproductTracker, Circuit, compile_plan, resolve
from .engine import unwind
from .verifier import check_color_test, tested_registers
from .statevec import DEFAULT_WIDTH_CAP, StateVector

SERVER_TO_CLIENT = "server->client"


class ChannelClosed(RuntimeError):
    pass


class ProtocolViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    seq: int
    register: int
    vertex: int
    payload: object = field(compare=False, repr=False)
    direction: str = SERVER_TO_CLIENT

    def line(self) -> str:
        return f"seq={self.seq} register={self.register} vertex={self.vertex}"


class Channel:
    """In-order, lossless, one-directional queue."""

    def __init__(self):
        self._queue = deque()
        self.closed = False
        self.log = []

    def send(self, msg: Message):
        if self.closed:
            raise ChannelClosed("send on closed channel")
        if msg.direction != SERVER_TO_CLIENT:
            raise ProtocolViolation("only server->client messages exist")
        self._queue.append(msg)
        self.log.append(msg)

    def recv(self) -> Message:
        if self._queue:
            return self._queue.popleft()
        if self.closed:
            raise ChannelClosed("channel-closed")
        raise ChannelClosed("recv on empty channel")

    def pending(self) -> int:
        return len(self._queue)

    def close(self):
        self.closed = True


class SimulatedRegister:
    """Server-side quantum state of one resource register.

    Delivering a qubit hands over the right to measure it; the state is
    built lazily, entangling a vertex only when one of its edges is needed.
    """

    def __init__(self, h, rng, width_cap=DEFAULT_WIDTH_CAP):
        self.h = h
        self.incident = h.incident()
        self.sv = StateVector(width_cap)
        self.rng = rng
        self.handle = {}
        self.applied = set()

    def _activate(self, v):
        if v not in self.handle:
            self.handle[v] = self.sv.activate("plus")

    def _entangle(self, v):
        self._activate(v)
        for e in self.incident[v]:
            if e not in self.applied:
                for x in e:
                    self._activate(x)
                self.sv.apply_gcz([self.handle[x] for x in e])
                self.applied.add(e)

    def measure(self, v, basis) -> int:
        self._entangle(v)
        return self.sv.measure(self.handle[v], basis, rng=self.rng).bit

    def state_of(self, vertices) -> np.ndarray:
        for v in vertices:
            self._entangle(v)
        return self.sv.vector([self.handle[v] for v in vertices])


@dataclass(frozen=True)
class QubitHandle:
    register: SimulatedRegister
    vertex: int
    flip_p: float = 0.0
    rng: object = None

    def measure(self, basis) -> int:
        bit = self.register.measure(self.vertex, basis)
        if self.flip_p and (self.flip_p >= 1 or self.rng.random() < self.flip_p):
            bit ^= 1
        return bit


class Server:
    """Honest when ``flip_p`` is 0; otherwise every reported bit is inverted
    with that probability (1 inverts everything)."""

    def __init__(self, n, d, ell, rng, flip_p=0.0, width_cap=DEFAULT_WIDTH_CAP):
        self.block = build_gnd(n, d)
        self.ell = ell
        self.rng = rng
        self.flip_p = flip_p
        self.width_cap = width_cap
        self.seq = 0

    def stream(self, channel: Channel):
        order = range(self.block.n_vertices)
        for reg in range(self.ell + 1):
            register = SimulatedRegister(self.block.h, self.rng, self.width_cap)
            for v in order:
                payload = QubitHandle(register, v, self.flip_p, self.rng)
                channel.send(Message(self.seq, reg, v, payload))
                self.seq += 1
                yield


class Client:
    PHASES = ("ChoosingReserve", "Receiving", "Testing", "Running", "Done")

    def __init__(self, circuit: Circuit, n, d, delta, eps, rng):
        self.block = build_gnd(n, d)
        self.coloring = build_coloring(self.block)
        self.plan = compile_plan(circuit, self.block)
        self.circuit = circuit
        self.params = (n, d, delta, eps)
        self.ell = tested_registers(self.coloring.k, delta, eps)
        self.rng = rng
        self.phase = "ChoosingReserve"
        self.reserved = None
        self.records = []
        self.log = []
        self.frame = None
        self.output_state = None
        self.output_bits = None
        self.verdict = None
        self._steps = {st.vertex: st for st in self.plan.steps}
        self._incident = self.block.h.incident()
        self._expect = (0, 0)

    def choose_reserve(self):
        self.reserved = int(self.rng.integers(0, self.ell + 1))
        self.phase = "Receiving"

    def _begin_register(self, reg):
        self._outcomes = {}
        self._handles = {}
        if reg == self.reserved:
            self.phase = "Running"
            self._tracker = ByproductTracker(self.block)
        else:
            self.phase = "Testing"
            # drawn when the register starts; the one-way channel hides it either way
            self._color = int(self.rng.integers(0, self.coloring.k))

    def on_message(self, msg: Message):
        if self.reserved is None:
            raise ProtocolViolation("reserve index must be chosen before any qubit arrives")
        if (msg.register, msg.vertex) != self._expect:
            raise ProtocolViolation(
                f"expected register {self._expect[0]} vertex {self._expect[1]}, got {msg.register}/{msg.vertex}"
            )
        reg, v = msg.register, msg.vertex
        if v == 0:
            self._begin_register(reg)
        if reg == self.reserved:
            if v in self.block.output_ports:
                self._handles[v] = msg.payload
                basis = bit = None
            else:
                basis = resolve(self._steps[v], self._tracker)
                bit = msg.payload.measure(basis)
                self._tracker.record(v, basis, bit)
        else:
            basis = "X" if self.coloring.color_of[v] == self._color else "Z"
            bit = msg.payload.measure(basis)
            self._outcomes[v] = bit
        line = msg.line()
        if basis is not None:
            line += f" basis={basis} outcome={bit}"
        self.log.append(line)
        last = v == self.block.n_vertices - 1
        self._expect = (reg + 1, 0) if last else (reg, v + 1)
        if last:
            self._end_register(reg)

    def _end_register(self, reg):
        if reg == self.reserved:
            self.frame = self._tracker.finish()
            ports = self.block.output_ports
            register = self._handles[ports[0]].register
            self.output_state = unwind(register.state_of(ports), self.frame)
            self.output_bits = [
                self._handles[p].measure("Z") ^ self.frame.x[w] for w, p in enumerate(ports)
            ]
        else:
            self.records.append(check_color_test(self.block.h, self.coloring, self._color, self._outcomes, reg, self._incident))
        self.phase = "Receiving"
        if reg == self.ell:
            self.verdict = all(r.passed for r in self.records)
            self.phase = "Done"
            n, d, delta, eps = self.params
            self.log.append(
                f"verdict={'ACCEPT' if self.verdict else 'REJECT'} reserved={self.reserved} "
                f"n={n} d={d} delta={delta} eps={eps} ell={self.ell}"
            )


@dataclass
class VbqcResult:
    accepted: bool
    reserved: int
    output_state: np.ndarray | None
    output_bits: list | None
    frame: object
    records: list
    server_transcript: list
    client_log: list
    messages: list


def run_vbqc(circuit: Circuit, n, d, delta, eps, server="honest", seed=0, width_cap=DEFAULT_WIDTH_CAP) -> VbqcResult:
    """Run both parties, stepping them alternately over one channel.

    ``server`` is "honest", "flip" (invert every reported bit) or "flip:<p>".
    The client stream is seeded with ``[seed, 0]`` and the server with ``[seed, 1]``.
    """
    client = Client(circuit, n, d, delta, eps, np.random.default_rng([seed, 0]))
    flip_p = _server_flip(server)
    srv = Server(n, d, client.ell, np.random.default_rng([seed, 1]), flip_p, width_cap)
    channel = Channel()
    client.choose_reserve()
    for _ in srv.stream(channel):
        client.on_message(channel.recv())
    channel.close()
    messages = list(channel.log)
    if any(m.direction != SERVER_TO_CLIENT for m in messages):
        raise ProtocolViolation("client-originated message found")
    transcript = [m.line() for m in messages]
    transcript.append(f"end registers={client.ell + 1} messages={len(messages)}")
    accepted = bool(client.verdict)
    return VbqcResult(
        accepted,
        client.reserved,
        client.output_state if accepted else None,
        client.output_bits if accepted else None,
        client.frame,
        client.records,
        transcript,
        client.log,
        messages,
    )


def _server_flip(text: str) -> float:
    if text == "honest":
        return 0.0
    if text == "flip":
        return 1.0
    if text.startswith("flip:"):
        p = float(text.split(":", 1)[1])
        if not 0 <= p <= 1:
            raise ValueError("flip probability must lie in [0, 1]")
        return p
    raise ValueError(f"unknown server {text!r}")
