"""Toy tabular scoring oracle and remote-client parity."""

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from streamcot.errors import OracleUnavailable, ResidualTarget, SchemaError
from streamcot.oracle import (
    NEG_INF,
    PositionScore,
    PrefixScore,
    RemoteOracle,
    ToyTabularLm,
    sequence_logprob,
)


def test_uniform_table_scores_uniform():
    lm = ToyTabularLm.uniform([0, 1, 2, 3])
    ps = lm.score([0], [1, 2, 3])
    assert len(ps.positions) == 3
    for pos in ps.positions:
        for lp in pos.dist.values():
            assert lp == pytest.approx(math.log(0.25))
    assert sequence_logprob(ps) == pytest.approx(3 * math.log(0.25))


def test_delta_row_scores_one():
    table = np.array(
        [
            [0.0, 1.0],  # after 0, always 1
            [0.5, 0.5],
            [0.5, 0.5],  # begin marker
        ]
    )
    lm = ToyTabularLm([0, 1], table)
    ps = lm.score([0], [1])
    assert ps.positions[0].logprob_of_target() == pytest.approx(0.0)


def test_bigram_table_direct_lookup():
    table = np.array(
        [
            [0.2, 0.3, 0.5],
            [0.6, 0.1, 0.3],
            [0.25, 0.25, 0.5],
            [0.4, 0.4, 0.2],  # begin marker
        ]
    )
    lm = ToyTabularLm([7, 8, 9], table)
    ps = lm.score([], [7, 8])  # begin -> 7, then 7 -> 8
    assert ps.positions[0].dist[7] == pytest.approx(math.log(0.4))
    assert ps.positions[1].dist[8] == pytest.approx(math.log(0.3))
    assert sequence_logprob(ps) == pytest.approx(math.log(0.4) + math.log(0.3))


def test_table_validation():
    with pytest.raises(ValueError):
        ToyTabularLm([0, 1], np.ones((2, 2)))  # wrong shape
    bad = np.full((3, 2), 0.4)
    with pytest.raises(ValueError):
        ToyTabularLm([0, 1], bad)  # rows do not sum to 1


def test_scoring_determinism():
    rng = np.random.default_rng(3)
    lm = ToyTabularLm.random([0, 1, 2], np.random.default_rng(3))
    lm2 = ToyTabularLm.random([0, 1, 2], np.random.default_rng(3))
    a = lm.score([0, 1], [2, 0, 1])
    b = lm2.score([0, 1], [2, 0, 1])
    assert a == b
    del rng


def test_residual_target_raises():
    ps = PrefixScore(
        positions=(PositionScore(target_token=5, dist={1: 0.0}, other_mass=NEG_INF),)
    )
    with pytest.raises(ResidualTarget):
        sequence_logprob(ps)


class _ToyService(BaseHTTPRequestHandler):
    """Wraps a shared ToyTabularLm behind the scoring wire protocol."""

    lm: ToyTabularLm = None
    fail_always = False

    def do_POST(self):
        if self.fail_always:
            self.send_response(503)
            self.end_headers()
            return
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        ps = self.lm.score(body["context"], body["target"])
        payload = {
            "positions": [
                {"token": p.target_token, "dist": {str(k): v for k, v in p.dist.items()}}
                for p in ps.positions
            ]
        }
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def toy_service():
    _ToyService.lm = ToyTabularLm.random([0, 1, 2, 3], np.random.default_rng(9))
    _ToyService.fail_always = False
    server = HTTPServer(("127.0.0.1", 0), _ToyService)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", _ToyService.lm
    finally:
        server.shutdown()
        thread.join()


def test_remote_client_matches_toy(toy_service):
    url, lm = toy_service
    client = RemoteOracle(url=url)
    context, target = [0, 2], [1, 3, 0]
    local = lm.score(context, target)
    remote = client.score(context, target)
    assert len(remote.positions) == len(local.positions)
    for lp, rp in zip(local.positions, remote.positions):
        assert rp.target_token == lp.target_token
        for tok, val in lp.dist.items():
            assert rp.dist[tok] == pytest.approx(val, abs=1e-9)


def test_remote_client_surfaces_unavailable(toy_service):
    url, _ = toy_service
    _ToyService.fail_always = True
    client = RemoteOracle(url=url, max_attempts=2, backoff_s=0.01)
    with pytest.raises(OracleUnavailable):
        client.score([0], [1])


def test_remote_client_requires_url(monkeypatch):
    monkeypatch.delenv("ORACLE_URL", raising=False)
    with pytest.raises(OracleUnavailable):
        RemoteOracle()


def test_parse_rejects_unnormalized_response():
    from streamcot.oracle import _parse_response

    bad = {"positions": [{"token": 0, "dist": {"0": math.log(0.5)}}]}
    with pytest.raises(SchemaError):
        _parse_response(bad, 1)
