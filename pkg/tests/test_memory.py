from __future__ import annotations

import json
import os
import threading

import pytest

from econlab.memory import (
    KINDS,
    STAGES,
    DanglingRefError,
    MemoryRecord,
    MemoryStore,
    MemoryStoreError,
)


@pytest.fixture
def store(tmp_path):
    return MemoryStore(str(tmp_path))


def test_ids_start_at_one_and_increase(store):
    ids = [store.append("s1", "idea", "theoretical_context", text=f"t{i}") for i in range(3)]
    assert ids == [1, 2, 3]


def test_ids_are_independent_per_session(store):
    assert store.append("a", "idea", "theoretical_context") == 1
    assert store.append("b", "idea", "theoretical_context") == 1
    assert store.append("a", "design", "experiment_spec") == 2


def test_unknown_stage_is_rejected_with_choices(store):
    with pytest.raises(MemoryStoreError) as excinfo:
        store.append("s1", "brainstorm", "theoretical_context")
    assert str(excinfo.value) == f"unknown stage 'brainstorm'; expected one of {STAGES}"


def test_unknown_kind_is_rejected_with_choices(store):
    with pytest.raises(MemoryStoreError) as excinfo:
        store.append("s1", "idea", "musings")
    assert str(excinfo.value) == f"unknown kind 'musings'; expected one of {KINDS}"


def test_dangling_ref_is_rejected_before_write(tmp_path):
    store = MemoryStore(str(tmp_path), resolver=lambda ref: ref == "m-1")
    store.append("s1", "idea", "theoretical_context", refs=["m-1"])
    with pytest.raises(DanglingRefError) as excinfo:
        store.append("s1", "idea", "theoretical_context", refs=["m-1", "job-9"])
    assert str(excinfo.value) == "dangling ref 'job-9': no matching manifest, config hash, or job"
    assert excinfo.value.ref == "job-9"
    # nothing partial was appended
    assert [r.record_id for r in store.query("s1")] == [1]


def test_refs_are_unchecked_without_a_resolver(store):
    store.append("s1", "idea", "theoretical_context", refs=["anything-goes"])
    assert store.query("s1")[0].refs == ["anything-goes"]


def test_records_are_persisted_one_json_object_per_line(tmp_path):
    store = MemoryStore(str(tmp_path))
    store.append("sx", "idea", "theoretical_context", body={"q": "why"}, text="note")
    store.append("sx", "design", "experiment_spec")
    path = os.path.join(str(tmp_path), "sessions", "sx", "memory.jsonl")
    lines = open(path).read().strip().splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first["record_id"] == 1
    assert first["body"] == {"q": "why"}
    assert first["text"] == "note"


def test_reload_continues_the_id_sequence(tmp_path):
    MemoryStore(str(tmp_path)).append("s1", "idea", "theoretical_context")
    reopened = MemoryStore(str(tmp_path))
    assert reopened.append("s1", "analysis", "outcome_synthesis") == 2
    records = reopened.query("s1")
    assert [r.record_id for r in records] == [1, 2]
    assert records[0].kind == "theoretical_context"


def test_append_does_not_rewrite_earlier_lines(tmp_path):
    store = MemoryStore(str(tmp_path))
    store.append("s1", "idea", "theoretical_context", text="first")
    path = os.path.join(str(tmp_path), "sessions", "s1", "memory.jsonl")
    before = open(path).read()
    store.append("s1", "idea", "theoretical_context", text="second")
    after = open(path).read()
    assert after.startswith(before)


def test_query_filters_by_kind_and_stage(store):
    store.append("s1", "idea", "theoretical_context")
    store.append("s1", "design", "experiment_spec")
    store.append("s1", "execution", "execution_trace")
    store.append("s1", "execution", "execution_trace")
    assert len(store.query("s1")) == 4
    assert [r.record_id for r in store.query("s1", kind="execution_trace")] == [3, 4]
    assert [r.record_id for r in store.query("s1", stage="design")] == [2]
    assert store.query("s1", kind="execution_trace", stage="idea") == []


def test_timestamps_come_from_the_injected_clock(tmp_path):
    ticks = iter([100.0, 200.0])
    store = MemoryStore(str(tmp_path), clock=lambda: next(ticks))
    store.append("s1", "idea", "theoretical_context")
    store.append("s1", "idea", "theoretical_context")
    assert [r.timestamp for r in store.query("s1")] == [100.0, 200.0]


def test_concurrent_appends_get_unique_ids(store):
    def worker():
        for _ in range(25):
            store.append("s1", "execution", "execution_trace")

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    ids = [r.record_id for r in store.query("s1")]
    assert ids == list(range(1, 101))


# -- rendering ---------------------------------------------------------------


def test_render_layout():
    record = MemoryRecord(
        record_id=7,
        session_id="s1",
        stage="analysis",
        kind="outcome_synthesis",
        timestamp=0.0,
        body={"verdict": "supported", "seeds": 3},
        text="treatment beat control everywhere",
        refs=["job-1", "m-2"],
    )
    assert record.render() == (
        "[analysis/outcome_synthesis #7]\n"
        "verdict: supported\n"
        "seeds: 3\n"
        "treatment beat control everywhere\n"
        "refs: job-1, m-2"
    )


def test_render_omits_empty_sections():
    record = MemoryRecord(
        record_id=1,
        session_id="s",
        stage="idea",
        kind="theoretical_context",
        timestamp=0.0,
    )
    assert record.render() == "[idea/theoretical_context #1]"


def test_render_context_requires_positive_budget(store):
    store.append("s1", "idea", "theoretical_context")
    with pytest.raises(MemoryStoreError, match="budget must be > 0"):
        store.render_context("s1", 0)


def test_render_context_of_empty_session_is_empty(store):
    assert store.render_context("nope", 100) == ""


def test_render_context_keeps_order_oldest_first(store):
    store.append("s1", "idea", "theoretical_context", text="alpha")
    store.append("s1", "design", "experiment_spec", text="beta")
    out = store.render_context("s1", 10_000)
    assert out == (
        "[idea/theoretical_context #1]\nalpha"
        "\n\n"
        "[design/experiment_spec #2]\nbeta"
    )


def test_render_context_drops_oldest_when_budget_binds(store):
    store.append("s1", "idea", "theoretical_context", text="x" * 50)
    store.append("s1", "idea", "theoretical_context", text="y" * 50)
    store.append("s1", "idea", "theoretical_context", text="z" * 50)
    rendered = [r.render() for r in store.query("s1")]
    budget = len(rendered[-1]) + 2 + len(rendered[-2])
    out = store.render_context("s1", budget)
    assert out == rendered[-2] + "\n\n" + rendered[-1]


def test_render_context_budget_fitting_only_the_last_record(store):
    store.append("s1", "idea", "theoretical_context", text="earlier " * 10)
    store.append("s1", "analysis", "outcome_synthesis", text="latest")
    last = store.query("s1")[-1].render()
    assert store.render_context("s1", len(last)) == last


def test_newest_record_survives_even_a_tiny_budget(store):
    store.append("s1", "idea", "theoretical_context", text="a rather long body of text")
    out = store.render_context("s1", 1)
    assert out == store.query("s1")[0].render()


def test_record_round_trips_through_dict():
    record = MemoryRecord(
        record_id=3,
        session_id="s9",
        stage="execution",
        kind="execution_trace",
        timestamp=123.5,
        body={"job": "job-1"},
        text="ran fine",
        refs=["job-1"],
    )
    assert MemoryRecord.from_dict(record.to_dict()) == record
