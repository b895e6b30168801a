"""
Coordinator/node exchange of moment summaries.

Nodes publish a :class:`NodeSummaryMessage` (one JSON object per line);
the coordinator keeps one summary per node and builds the pairwise
energy-coefficient matrix without ever seeing raw samples. Message size
is O(d) regardless of how many rows a node holds.

Wire format::

    {"schema_version": 1, "node_id": "...", "summary": {...}, "sample_digest": "..."}

Responses are ``{"ok": true}`` or ``{"ok": false, "error": "..."}``.
Two transports speak it: :class:`InProcessTransport` and
:class:`TcpTransport` (served by :class:`CoordinatorServer`).
"""
from __future__ import annotations

import hashlib
import json
import socket
import socketserver
import threading
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

import numpy as np

from .approx import APPROX_METHODS, energy_from_summaries
from .moments import MomentSummary

__all__ = [
    "SCHEMA_VERSION",
    "ProtocolError",
    "NodeSummaryMessage",
    "Registry",
    "Coordinator",
    "collect",
    "HMatrix",
    "h_matrix",
    "linear_penalty",
    "penalty_weights",
    "Transport",
    "InProcessTransport",
    "TcpTransport",
    "CoordinatorServer",
    "NodeClient",
    "file_digest",
]

SCHEMA_VERSION = 1


class ProtocolError(ValueError):
    pass


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


@dataclass(frozen=True)
class NodeSummaryMessage:
    node_id: str
    summary: MomentSummary
    schema_version: int = SCHEMA_VERSION
    sample_digest: str | None = None

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "node_id": self.node_id,
               "summary": self.summary.to_dict()}
        if self.sample_digest is not None:
            out["sample_digest"] = self.sample_digest
        return out

    def to_line(self) -> str:
        # json floats use repr, the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, obj) -> NodeSummaryMessage:
        if not isinstance(obj, dict):
            raise ProtocolError("malformed message: expected a JSON object")
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ProtocolError(
                f"schema mismatch: version {version!r}, expected {SCHEMA_VERSION}"
            )
        node_id = obj.get("node_id")
        if not isinstance(node_id, str) or not node_id:
            raise ProtocolError("malformed message: node_id must be a nonempty string")
        digest = obj.get("sample_digest")
        if digest is not None and not isinstance(digest, str):
            raise ProtocolError("malformed message: sample_digest must be a string")
        try:
            summary = MomentSummary.from_dict(obj["summary"])
        except (KeyError, ValueError) as exc:
            raise ProtocolError(f"malformed summary: {exc}") from None
        return cls(node_id, summary, version, digest)

    @classmethod
    def from_line(cls, line: str) -> NodeSummaryMessage:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed JSON: {exc}") from None
        return cls.from_dict(obj)


class Registry(Mapping):
    """Read-only view of accepted summaries plus the rejection log."""

    def __init__(self, summaries: dict, rejections: list):
        self._summaries = dict(summaries)
        self.rejections = list(rejections)

    def __getitem__(self, key):
        return self._summaries[key]

    def __iter__(self):
        return iter(self._summaries)

    def __len__(self):
        return len(self._summaries)


class Coordinator:
    """Accepts node messages; one writer at a time updates the registry."""

    def __init__(self):
        self._lock = threading.Lock()
        self._summaries: dict[str, MomentSummary] = {}
        self._rejections: list[tuple[str | None, str]] = []
        self._changed = threading.Condition(self._lock)

    def submit(self, message: NodeSummaryMessage) -> None:
        with self._lock:
            try:
                self._accept(message)
            except ProtocolError as exc:
                self._rejections.append((message.node_id, str(exc)))
                raise
            self._changed.notify_all()

    def _accept(self, message):
        if message.node_id in self._summaries:
            raise ProtocolError(f"duplicate node_id {message.node_id!r}")
        if self._summaries:
            d = next(iter(self._summaries.values())).d
            if message.summary.d != d:
                raise ProtocolError(
                    f"dimension mismatch: node {message.node_id!r} has d={message.summary.d}, "
                    f"registered nodes have d={d}"
                )
        self._summaries[message.node_id] = message.summary

    def handle_line(self, line: str) -> str:
        """Process one wire message and return the response line."""
        try:
            message = NodeSummaryMessage.from_line(line)
        except ProtocolError as exc:
            with self._lock:
                self._rejections.append((None, str(exc)))
            return _response(False, str(exc))
        try:
            self.submit(message)
        except ProtocolError as exc:
            return _response(False, str(exc))
        return _response(True)

    def wait_for(self, count: int, timeout: float | None = None) -> bool:
        with self._changed:
            return self._changed.wait_for(lambda: len(self._summaries) >= count, timeout)

    def snapshot(self) -> Registry:
        with self._lock:
            return Registry(self._summaries, self._rejections)


def _response(ok: bool, error: str | None = None) -> str:
    obj = {"ok": True} if ok else {"ok": False, "error": error}
    return json.dumps(obj) + "\n"


def collect(messages: Iterable) -> Registry:
    """Feed messages (objects or wire lines) to a fresh coordinator.

    Rejected messages leave the registry unchanged and are listed in
    ``Registry.rejections``.
    """
    coordinator = Coordinator()
    for msg in messages:
        if isinstance(msg, NodeSummaryMessage):
            try:
                coordinator.submit(msg)
            except ProtocolError:
                pass
        else:
            coordinator.handle_line(msg)
    return coordinator.snapshot()


@dataclass(frozen=True, eq=False)
class HMatrix:
    """Pairwise energy coefficients across nodes, ids sorted.

    ``mean`` and ``sd`` describe the strict upper triangle (population
    standard deviation).
    """

    ids: tuple[str, ...]
    values: np.ndarray
    method: str
    flags: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.ids)

    def upper(self) -> np.ndarray:
        return self.values[np.triu_indices(self.k, 1)]

    @property
    def mean(self) -> float:
        return float(self.upper().mean())

    @property
    def sd(self) -> float:
        return float(self.upper().std())

    def to_dict(self) -> dict:
        return {
            "ids": list(self.ids),
            "method": self.method,
            "values": self.values.tolist(),
            "flags": {f"{a}|{b}": sorted(v) for (a, b), v in sorted(self.flags.items())},
            "mean": self.mean,
            "sd": self.sd,
        }


def h_matrix(registry: Mapping, method: str = "taylor") -> HMatrix:
    """Energy coefficient for every pair of registered nodes."""
    if method not in APPROX_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {APPROX_METHODS}")
    ids = tuple(sorted(registry))
    k = len(ids)
    if k < 2:
        raise ValueError("need at least 2 nodes")
    values = np.zeros((k, k))
    flags = {}
    for i in range(k):
        for j in range(i + 1, k):
            est = energy_from_summaries(registry[ids[i]], registry[ids[j]], method)
            values[i, j] = values[j, i] = est.coefficient
            if est.flags:
                flags[(ids[i], ids[j])] = est.flags
    return HMatrix(ids, values, method, flags)


def linear_penalty(h, base_weight):
    """``base_weight * (1 - H)``: full alignment weight for identical nodes."""
    return base_weight * (1.0 - np.asarray(h))


def penalty_weights(
    h: HMatrix, base_weight: float = 1.0,
    mapping: Callable = linear_penalty,
) -> np.ndarray:
    """Map coefficients to pairwise penalty weights (``k x k``)."""
    if not base_weight > 0:
        raise ValueError("base_weight must be positive")
    return np.asarray(mapping(h.values, base_weight), dtype=np.float64)


# -- transports -----------------------------------------------------------


class Transport(Protocol):
    def request(self, line: str) -> str: ...


class InProcessTransport:
    """Delivers wire lines straight to a :class:`Coordinator`."""

    def __init__(self, coordinator: Coordinator):
        self.coordinator = coordinator

    def request(self, line: str) -> str:
        return self.coordinator.handle_line(line)


class TcpTransport:
    def __init__(self, address: tuple[str, int], timeout: float = 30.0):
        self.address = address
        self.timeout = timeout

    def request(self, line: str) -> str:
        with socket.create_connection(self.address, timeout=self.timeout) as sock:
            sock.sendall(line.encode("utf-8"))
            with sock.makefile("r", encoding="utf-8") as fh:
                return fh.readline()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace")
            if not line.strip():
                continue
            self.wfile.write(self.server.coordinator.handle_line(line).encode("utf-8"))
            self.wfile.flush()


class CoordinatorServer(socketserver.ThreadingTCPServer):
    """Newline-delimited JSON over TCP in front of a :class:`Coordinator`."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, coordinator: Coordinator | None = None):
        self.coordinator = coordinator or Coordinator()
        super().__init__(address, _Handler)

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


class NodeClient:
    def __init__(self, node_id: str, transport: Transport):
        self.node_id = node_id
        self.transport = transport

    def publish(self, summary: MomentSummary, digest: str | None = None) -> dict:
        line = NodeSummaryMessage(self.node_id, summary, sample_digest=digest).to_line()
        reply = self.transport.request(line)
        if not reply:
            raise ConnectionError("coordinator closed the connection")
        return json.loads(reply)
