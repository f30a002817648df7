import math

import numpy as np
import pytest

from worldkit.core import Modality, ObservationFrame, encode_frame
from worldkit.memory import (
    FEATURE_DIM,
    MemoryConfig,
    MemoryStore,
    MemoryStoreError,
    featurize,
)


def brute_force_select(records, config, query, now_step, k):
    """Independent top-k reference: score every record, sort, slice."""
    scored = []
    for r in records:
        sim = float(np.dot(query, r.feature))
        rec = math.exp(-config.recency_decay * (now_step - r.step))
        score = config.similarity_weight * sim + (1 - config.similarity_weight) * rec
        scored.append((score, r))
    scored.sort(key=lambda pair: (-pair[0], -pair[1].step, pair[1].id))
    return [r.id for _, r in scored[:k]]


def frame_payload(values):
    size = int(math.isqrt(len(values)))
    return encode_frame(ObservationFrame(size, size, bytes(values)))


def random_unit_feature(rng):
    v = rng.normal(size=FEATURE_DIM)
    return v / np.linalg.norm(v)


def store_with_session(config=None, session="sess"):
    store = MemoryStore(config)
    store.create_session(session)
    return store


# -- featurize -------------------------------------------------------------


def test_zero_frame_featurizes_to_zero_vector():
    vec = featurize(Modality.VIDEO_FRAMES, frame_payload([0] * 25))
    assert not vec.any()


def test_nonzero_frame_is_unit_norm():
    vec = featurize(Modality.IMAGE, frame_payload(list(range(1, 26))))
    assert abs(np.linalg.norm(vec) - 1.0) <= 1e-9


def test_text_featurize_deterministic_and_unit():
    a = featurize(Modality.TEXT, b"around the world")
    b = featurize(Modality.TEXT, b"around the world")
    assert np.array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1.0) <= 1e-9


def test_short_text_is_zero_vector():
    assert not featurize(Modality.TEXT, b"ab").any()


def test_other_modalities_are_zero_vectors():
    for modality in (Modality.ACTION, Modality.AUDIO, Modality.POINT_CLOUD):
        assert not featurize(modality, b"payload").any()


def test_frame_longer_than_dim_truncates():
    vec = featurize(Modality.IMAGE, frame_payload([255] * 49))
    assert vec.size == FEATURE_DIM
    assert abs(np.linalg.norm(vec) - 1.0) <= 1e-9


# -- record -------------------------------------------------------------------


def test_steps_count_from_zero():
    store = store_with_session()
    ids = [store.record("sess", Modality.TEXT, f"note {i}".encode()) for i in range(5)]
    steps = [store.get("sess", i).step for i in ids]
    assert steps == [0, 1, 2, 3, 4]


def test_unknown_session_rejected():
    store = MemoryStore()
    with pytest.raises(MemoryStoreError):
        store.record("ghost", Modality.TEXT, b"hello there")


def test_step_counter_survives_eviction():
    store = store_with_session(MemoryConfig(capacity=2))
    for i in range(4):
        store.record("sess", Modality.TEXT, f"record {i}".encode())
        store.manage("sess")
    new_id = store.record("sess", Modality.TEXT, b"one more entry")
    assert store.get("sess", new_id).step == 4


# -- select -------------------------------------------------------------------


def test_exact_match_at_zero_age_scores_one():
    store = store_with_session()
    rid = store.record("sess", Modality.TEXT, b"the quick brown fox")
    record = store.get("sess", rid)
    score = store.score(record, record.feature, now_step=record.step)
    assert score == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_and_ancient_scores_vanish():
    store = store_with_session()
    rid = store.record("sess", Modality.TEXT, b"the quick brown fox")
    record = store.get("sess", rid)
    query = np.zeros(FEATURE_DIM)
    score = store.score(record, query, now_step=record.step + 10_000)
    assert score == pytest.approx(0.0, abs=1e-12)


def test_select_matches_brute_force_oracle():
    config = MemoryConfig(capacity=5000)
    store = store_with_session(config)
    rng = np.random.default_rng(41)
    records = []
    for i in range(1000):
        rid = store.record("sess", Modality.TEXT, f"entry number {i}".encode())
        rec = store.get("sess", rid)
        if rng.random() < 0.1:
            rec.feature = np.zeros(FEATURE_DIM)
        else:
            rec.feature = random_unit_feature(rng)
        records.append(rec)
    for _ in range(20):
        query = random_unit_feature(rng)
        k = int(rng.integers(1, 20))
        got = [r.id for r in store.select("sess", query, now_step=1000, k=k)]
        assert got == brute_force_select(records, config, query, 1000, k)


def test_select_ties_prefer_newer_then_lexicographic():
    store = store_with_session()
    a = store.record("sess", Modality.ACTION, b"x")  # zero feature, step 0
    b = store.record("sess", Modality.ACTION, b"y")  # zero feature, step 1
    # same similarity (0); same step -> impossible here, so age decides
    got = [r.id for r in store.select("sess", np.zeros(FEATURE_DIM), now_step=1, k=2)]
    assert got == [b, a]


def test_select_returns_at_most_size():
    store = store_with_session()
    store.record("sess", Modality.TEXT, b"only one record")
    assert len(store.select("sess", np.zeros(FEATURE_DIM), 0, k=10)) == 1


def test_fresh_record_is_top_one():
    store = store_with_session()
    for i in range(20):
        store.record("sess", Modality.TEXT, f"background chatter {i}".encode())
    rid = store.record("sess", Modality.TEXT, b"a very distinctive payload")
    record = store.get("sess", rid)
    top = store.select("sess", record.feature, now_step=record.step, k=1)
    assert top[0].id == rid


# -- compress -------------------------------------------------------------------


def test_identical_frames_merge_with_weight_two():
    store = store_with_session()
    payload = frame_payload(list(range(25)))
    a = store.record("sess", Modality.VIDEO_FRAMES, payload, {"first": "yes"})
    b = store.record("sess", Modality.VIDEO_FRAMES, payload, {"first": "no", "only_b": "1"})
    survivors = store.compress("sess", [a, b])
    assert survivors == [a]
    merged = store.get("sess", a)
    assert merged.weight == 2.0
    assert merged.step == 0
    assert merged.metadata == {"first": "yes", "only_b": "1"}  # earlier wins on clash
    assert len(store.records("sess")) == 1


def test_orthogonal_features_both_survive():
    store = store_with_session()
    a = store.record("sess", Modality.IMAGE, frame_payload([255] + [0] * 24))
    b = store.record("sess", Modality.IMAGE, frame_payload([0] + [255] + [0] * 23))
    assert store.compress("sess", [a, b]) == [a, b]


def test_different_modalities_never_merge():
    store = store_with_session()
    a = store.record("sess", Modality.TEXT, b"hello hello hello")
    rec_a = store.get("sess", a)
    b = store.record("sess", Modality.IMAGE, frame_payload([1] * 25))
    store.get("sess", b).feature = rec_a.feature.copy()
    assert len(store.compress("sess")) == 2


def test_compress_is_idempotent():
    store = store_with_session()
    rng = np.random.default_rng(3)
    base = random_unit_feature(rng)
    for i in range(12):
        rid = store.record("sess", Modality.TEXT, f"payload {i}".encode())
        rec = store.get("sess", rid)
        rec.feature = base if i % 3 else random_unit_feature(rng)
    once = store.compress("sess")
    twice = store.compress("sess")
    assert once == twice


def test_compress_preserves_total_weight():
    store = store_with_session()
    rng = np.random.default_rng(13)
    features = [random_unit_feature(rng) for _ in range(4)]
    for i in range(40):
        rid = store.record("sess", Modality.TEXT, f"payload {i}".encode())
        store.get("sess", rid).feature = features[int(rng.integers(4))].copy()
    before = sum(r.weight for r in store.records("sess"))
    store.compress("sess")
    after = sum(r.weight for r in store.records("sess"))
    assert after == before


def test_cross_session_ids_rejected():
    store = MemoryStore()
    store.create_session("a")
    store.create_session("b")
    rid = store.record("b", Modality.TEXT, b"belongs to session b")
    with pytest.raises(MemoryStoreError):
        store.compress("a", [rid])


# -- manage ---------------------------------------------------------------------


def test_manage_noop_under_capacity():
    store = store_with_session(MemoryConfig(capacity=10))
    store.record("sess", Modality.TEXT, b"only one")
    assert store.manage("sess") == []


def test_manage_evicts_oldest_at_equal_weight():
    store = store_with_session(MemoryConfig(capacity=2))
    a = store.record("sess", Modality.TEXT, b"first entry")
    store.record("sess", Modality.TEXT, b"second entry")
    store.record("sess", Modality.TEXT, b"third entry")
    assert store.manage("sess") == [a]
    assert len(store.records("sess")) == 2


def test_manage_matches_retention_oracle():
    config = MemoryConfig(capacity=2)
    store = store_with_session(config)
    heavy = store.record("sess", Modality.TEXT, b"heavy old record")
    store.get("sess", heavy).weight = 10.0
    light_a = store.record("sess", Modality.TEXT, b"light newer record")
    light_b = store.record("sess", Modality.TEXT, b"light newest record")
    now = store.step_counter("sess")
    rho = {
        r.id: r.weight * math.exp(-config.recency_decay * (now - r.step))
        for r in store.records("sess")
    }
    expected_victim = min(rho, key=lambda i: (rho[i], store.get("sess", i).step, i))
    assert expected_victim == light_a  # older of the two light records
    assert store.manage("sess", now_step=now) == [expected_victim]
    assert {r.id for r in store.records("sess")} == {heavy, light_b}


def test_pinned_records_survive():
    store = store_with_session(MemoryConfig(capacity=1))
    a = store.record("sess", Modality.TEXT, b"precious record")
    store.pin("sess", a)
    b = store.record("sess", Modality.TEXT, b"disposable record")
    assert store.manage("sess") == [b]
    assert store.get("sess", a).pinned


def test_all_pinned_over_capacity_errors():
    store = store_with_session(MemoryConfig(capacity=1))
    for i in range(2):
        store.pin("sess", store.record("sess", Modality.TEXT, f"keep {i}".encode()))
    with pytest.raises(MemoryStoreError):
        store.manage("sess")


# -- isolation / persistence ------------------------------------------------------


def test_session_isolation_byte_level():
    store = MemoryStore(MemoryConfig(capacity=3))
    store.create_session("a")
    store.create_session("b")
    store.record("b", Modality.TEXT, b"stable state of b")
    snapshot = store.serialize_session("b")
    for i in range(6):
        store.record("a", Modality.TEXT, f"noise {i}".encode())
    store.compress("a")
    store.manage("a")
    assert store.serialize_session("b") == snapshot


def test_log_replay_reconstructs_byte_exactly():
    config = MemoryConfig(capacity=4)
    store = store_with_session(config)
    payload = frame_payload(list(range(25)))
    store.record("sess", Modality.VIDEO_FRAMES, payload, {"turn": "0"})
    store.record("sess", Modality.VIDEO_FRAMES, payload, {"turn": "1"})
    store.record("sess", Modality.TEXT, b"move_forward,then turn")
    rid = store.record("sess", Modality.TEXT, b"pinned note")
    store.pin("sess", rid)
    store.compress("sess")
    for i in range(5):
        store.record("sess", Modality.ACTION, f"a{i}".encode())
    store.manage("sess")
    log = store.export_log("sess")
    rebuilt = MemoryStore.replay_log(log, config)
    assert rebuilt.serialize_session("sess") == store.serialize_session("sess")
    assert rebuilt.export_log("sess") == log
