import hashlib
import pytest

from numpy.random import PCG64, Generator, SeedSequence

from rfidcheck.errors import InvalidArgumentError, InvalidStateError
from rfidcheck.protocol import (
    AuthFailure,
    AuthSuccess,
    Direction,
    Fault,
    FaultKind,
    Match,
    ProtocolConfig,
    Reject,
    ServerDatabase,
    TagState,
    format_bits,
    hash_bits,
    keyed_hash,
    logical_shift,
    random_bits,
    reader_challenge,
    rot,
    run_session,
    server_authenticate,
    tag_finalize,
    tag_respond,
)
from rfidcheck.protocol.messages import ServerError


def test_hash_is_deterministic_and_has_l_bits(pcfg, rng):
    for _ in range(1000):
        x = random_bits(rng, 128)
        value = hash_bits(pcfg, x)
        assert value == hash_bits(pcfg, x)
        assert value.bit_length() <= 128


def test_hash_of_empty_string_matches_digest_prefix():
    cfg = ProtocolConfig(l=8)
    assert hash_bits(cfg, 0, width=0) == hashlib.sha256(b"").digest()[0]


def test_hash_expands_short_digests():
    cfg = ProtocolConfig(l=512, hash_id="sha256")
    data = (5).to_bytes(64, "big")
    expected = hashlib.sha256(data).digest() + hashlib.sha256(
        data + (1).to_bytes(4, "big")
    ).digest()
    assert hash_bits(cfg, 5) == int.from_bytes(expected, "big")


def test_keyed_hash_of_zeros():
    cfg = ProtocolConfig(l=8)
    assert keyed_hash(cfg, 0, 0) == hashlib.sha256(b"\x00\x00").digest()[0]


def test_keyed_hash_separates_keys(rng):
    cfg = ProtocolConfig(l=64)
    for _ in range(100):
        k1, k2, m = (random_bits(rng, 64) for _ in range(3))
        if k1 != k2:
            assert keyed_hash(cfg, k1, m) != keyed_hash(cfg, k2, m)


def test_keyed_hash_rejects_wide_arguments():
    cfg = ProtocolConfig(l=8)
    with pytest.raises(InvalidArgumentError):
        keyed_hash(cfg, 256, 0)
    with pytest.raises(InvalidArgumentError):
        keyed_hash(cfg, 0, -1)


def test_rot():
    assert rot(0b10110010, 2, Direction.RIGHT, width=8) == 0b10101100
    assert rot(0b10110010, 0, Direction.LEFT, width=8) == 0b10110010
    assert rot(0b10110010, 8, Direction.LEFT, width=8) == 0b10110010
    assert rot(rot(0xABCD, 5, Direction.LEFT, width=16), 5, Direction.RIGHT, width=16) == 0xABCD
    with pytest.raises(InvalidArgumentError):
        rot(1, 9, Direction.LEFT, width=8)


def test_logical_shift_fills_with_zeros():
    assert logical_shift(0b10110010, 2, Direction.RIGHT, width=8) == 0b00101100
    assert logical_shift(0b10110010, 2, Direction.LEFT, width=8) == 0b11001000


def test_format_bits():
    assert format_bits(0xAB, 8) == "ab"
    assert format_bits(1, 12) == "001"


def test_protocol_config_validation():
    with pytest.raises(InvalidArgumentError):
        ProtocolConfig(l=10)
    with pytest.raises(InvalidArgumentError):
        ProtocolConfig(l=0)
    with pytest.raises(InvalidArgumentError):
        ProtocolConfig(hash_id="no-such-hash")
    with pytest.raises(InvalidArgumentError):
        ProtocolConfig(shift="arithmetic")


def test_tag_state_needs_both_nonces():
    with pytest.raises(InvalidStateError):
        TagState(1, pending_r1=2)


def test_tag_finalize_without_session(pcfg):
    with pytest.raises(InvalidStateError):
        tag_finalize(pcfg, TagState(1), 0)


def test_fault_free_session(pcfg, rng):
    db = ServerDatabase(pcfg)
    tag = db.register_random(rng, b"payload")

    transcript = run_session(pcfg, tag, db, rng)

    assert transcript.mutual
    assert [entry.step for entry in transcript.entries] == [1, 2, 3, 4, 5, 6]
    assert isinstance(transcript.server_result, AuthSuccess)
    assert transcript.server_result.d == b"payload"
    assert transcript.server_result.matched is Match.NEW
    assert transcript.probes == 1

    record = db[0]
    assert transcript.tag.t == record.t_new
    assert record.t_old == tag.t
    assert record.t_new == hash_bits(pcfg, record.u_new)


@pytest.mark.parametrize("shift", ["rotate", "logical"])
def test_repeated_sessions_keep_tag_and_server_in_sync(shift, rng):
    cfg = ProtocolConfig(l=64, shift=shift)
    db = ServerDatabase(cfg)
    tags = [db.register_random(rng) for _ in range(5)]

    for _ in range(20):
        for index, tag in enumerate(tags):
            transcript = run_session(cfg, tag, db, rng)
            assert transcript.mutual
            assert transcript.server_result.record_index == index
            assert transcript.probes == 2 * index + 1
            tags[index] = transcript.tag


def test_lost_reply_recovers_through_old_pair(pcfg, rng):
    db = ServerDatabase(pcfg)
    tag = db.register_random(rng)

    transcript = run_session(pcfg, tag, db, rng, Fault.parse("drop_m3"))
    assert not transcript.mutual
    assert transcript.server_accepted
    assert len(transcript.entries) == 5
    assert not transcript.entries[-1].delivered
    assert transcript.tag.t == tag.t
    assert db[0].t_old == tag.t

    retry = run_session(pcfg, transcript.tag, db, rng)
    assert retry.mutual
    assert retry.server_result.matched is Match.OLD
    assert retry.probes == 2

    again = run_session(pcfg, retry.tag, db, rng)
    assert again.mutual
    assert again.server_result.matched is Match.NEW


def test_corrupted_response_is_rejected_by_server(pcfg, rng):
    db = ServerDatabase(pcfg)
    tag = db.register_random(rng)
    record = (db[0].u_new, db[0].t_new)

    transcript = run_session(pcfg, tag, db, rng, Fault.corrupt(2))

    assert isinstance(transcript.server_result, AuthFailure)
    assert transcript.server_result.probes == 2
    assert any(isinstance(entry.message, ServerError) for entry in transcript.entries)
    assert not transcript.mutual
    assert transcript.tag == TagState(tag.t)
    assert (db[0].u_new, db[0].t_new) == record


def test_corrupted_reply_is_rejected_by_tag(pcfg, rng):
    db = ServerDatabase(pcfg)
    tag = db.register_random(rng)

    transcript = run_session(pcfg, tag, db, rng, Fault.corrupt(5))

    assert transcript.server_accepted
    assert not transcript.tag_accepted
    assert transcript.tag.t == tag.t
    assert run_session(pcfg, transcript.tag, db, rng).mutual


def test_dropped_challenge_ends_the_session(pcfg, rng):
    db = ServerDatabase(pcfg)
    tag = db.register_random(rng)
    transcript = run_session(pcfg, tag, db, rng, Fault.drop(1))
    assert len(transcript.entries) == 1
    assert transcript.server_result is None
    assert transcript.probes == 0


def test_tag_rejects_unrelated_reply(pcfg, rng):
    db = ServerDatabase(pcfg)
    tag = db.register_random(rng)
    challenge = reader_challenge(pcfg, rng)
    _, pending = tag_respond(pcfg, tag, challenge.r1, rng)
    outcome = tag_finalize(pcfg, pending, random_bits(rng, 128))
    assert isinstance(outcome, Reject)
    assert outcome.tag == TagState(tag.t)


def test_server_probes_every_pair_on_failure(pcfg, rng):
    db = ServerDatabase(pcfg)
    for _ in range(4):
        db.register_random(rng)
    result = server_authenticate(pcfg, db, 0, 0, 0)
    assert isinstance(result, AuthFailure)
    assert result.probes == 8


def test_fault_parse():
    assert Fault.parse("none") == Fault()
    assert Fault.parse("drop_m3") == Fault(FaultKind.DROP, 5)
    assert Fault.parse("corrupt:2") == Fault(FaultKind.CORRUPT, 2)
    assert str(Fault.parse("drop:5")) == "drop_m3"
    with pytest.raises(InvalidArgumentError):
        Fault.parse("corrupt:3")
    with pytest.raises(InvalidArgumentError):
        Fault.parse("explode")


@pytest.mark.slow
def test_many_sessions_and_recoveries():
    cfg = ProtocolConfig(l=128)
    rng = Generator(PCG64(SeedSequence(2024)))
    db = ServerDatabase(cfg)
    tags = [db.register_random(rng) for _ in range(10)]

    for i in range(10_000):
        index = i % len(tags)
        transcript = run_session(cfg, tags[index], db, rng)
        assert transcript.mutual
        tags[index] = transcript.tag

    for i in range(1000):
        index = i % len(tags)
        lost = run_session(cfg, tags[index], db, rng, Fault.parse("drop_m3"))
        retry = run_session(cfg, lost.tag, db, rng)
        assert retry.mutual
        tags[index] = retry.tag
