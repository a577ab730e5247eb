import numpy as np
import pytest

from saginshare.models.enums import COORDINATOR_SENDER, OPERATORS, EnvelopeKind, OperatorId
from saginshare.models.errors import MissingPayload, ParseError
from saginshare.systems.consensus_system import (HEADER, Coordinator, Envelope,
                                                 InProcessTransport, SocketTransport,
                                                 admm_dual_update, admm_global_average,
                                                 consensus_residual)


class DoublingAgent:
    """Answers every envelope with twice its payload."""

    def __init__(self, operator: OperatorId, stale: bool = False):
        self.operator = operator
        self.stale = stale

    def handle_bytes(self, data: bytes) -> bytes:
        request = Envelope.decode(data)
        iteration = request.iteration - 1 if self.stale else request.iteration
        return Envelope(EnvelopeKind.LOCAL_SHARE, self.operator.value, iteration,
                        2.0 * request.payload).encode()


def agents(**kwargs):
    return {z.value: DoublingAgent(z, **kwargs) for z in OPERATORS}


def test_envelope_wire_layout():
    envelope = Envelope(EnvelopeKind.GLOBAL_BROADCAST, COORDINATOR_SENDER, 7,
                        np.array([1.5, -2.0]))
    data = envelope.encode()
    assert len(data) == HEADER.size + 16
    assert HEADER.unpack_from(data) == (EnvelopeKind.GLOBAL_BROADCAST.value, 255, 7, 2)
    decoded = Envelope.decode(data)
    assert decoded.kind is EnvelopeKind.GLOBAL_BROADCAST and decoded.iteration == 7
    np.testing.assert_array_equal(decoded.payload, [1.5, -2.0])


@pytest.mark.parametrize("data", [
    b"\x01\x00",
    HEADER.pack(1, 0, 1, 3) + b"\x00" * 8,
    HEADER.pack(99, 0, 1, 0),
])
def test_envelope_decode_errors(data):
    with pytest.raises(ParseError):
        Envelope.decode(data)


def test_global_average():
    a, b = np.array([1.0, 4.0]), np.array([3.0, 0.0])
    zero = np.zeros(2)
    np.testing.assert_allclose(admm_global_average({0: a, 1: b}, {0: zero, 1: zero}, 2.0),
                               [2.0, 2.0])
    nu = {0: np.array([2.0, 0.0]), 1: np.array([0.0, -4.0])}
    np.testing.assert_allclose(admm_global_average({0: a, 1: b}, nu, 2.0), [2.5, 1.0])


def test_global_average_missing_agent():
    with pytest.raises(MissingPayload):
        admm_global_average({0: np.zeros(1)}, {0: np.zeros(1)}, 1.0)


def test_dual_update():
    np.testing.assert_allclose(admm_dual_update(np.array([0.5]), np.array([3.0]),
                                                np.array([2.0]), 1.5), [2.0])
    with pytest.raises(ValueError):
        admm_dual_update(np.zeros(1), np.zeros(1), np.zeros(1), 0.0)


def test_residual():
    consensus = np.array([1.0, 1.0])
    assert consensus_residual({0: np.array([1.0, 1.5]), 1: np.array([0.0, 1.0])},
                              consensus) == pytest.approx(1.0)


@pytest.mark.parametrize("transport_class", [InProcessTransport, SocketTransport])
def test_coordinator_round(transport_class):
    transport = transport_class(agents())
    try:
        coordinator = Coordinator(transport)
        replies = coordinator.broadcast(EnvelopeKind.GLOBAL_BROADCAST, np.array([1.0, 2.0]),
                                        [0, 1], expect=EnvelopeKind.LOCAL_SHARE)
        assert sorted(replies) == [0, 1]
        for z, reply in replies.items():
            assert reply.sender == z and reply.iteration == 1
            np.testing.assert_array_equal(reply.payload, [2.0, 4.0])
        assert coordinator.frames == 4
    finally:
        transport.close()


def run_transcript(transport_class) -> str:
    transport = transport_class(agents())
    try:
        coordinator = Coordinator(transport)
        for step in range(3):
            coordinator.round(EnvelopeKind.GLOBAL_BROADCAST,
                              {0: np.full(3, step), 1: np.arange(3.0)},
                              expect=EnvelopeKind.LOCAL_SHARE)
        return coordinator.digest
    finally:
        transport.close()


def test_transports_share_digest():
    assert run_transcript(InProcessTransport) == run_transcript(SocketTransport)
    assert run_transcript(InProcessTransport) == run_transcript(InProcessTransport)


def test_stale_reply_rejected():
    transport = InProcessTransport(agents(stale=True))
    try:
        with pytest.raises(MissingPayload):
            Coordinator(transport).round(EnvelopeKind.GLOBAL_BROADCAST, {0: np.zeros(1)},
                                         expect=EnvelopeKind.LOCAL_SHARE)
    finally:
        transport.close()


def test_wrong_kind_rejected():
    transport = InProcessTransport(agents())
    try:
        with pytest.raises(MissingPayload):
            Coordinator(transport).round(EnvelopeKind.GLOBAL_BROADCAST, {1: np.zeros(1)},
                                         expect=EnvelopeKind.BARRIER)
    finally:
        transport.close()
