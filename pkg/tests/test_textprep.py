"""Tokenization, camel splitting, and preprocessing contracts."""

from __future__ import annotations

import random

import pytest

from quickar.textprep import (
    CAMEL_PART,
    SPLIT_AND_KEEP_WHOLE,
    SPLIT_ONLY,
    StopList,
    WHOLE,
    default_stoplist,
    preprocess,
    split_camel,
    tokenize,
    words_sha,
)


def test_tokenize_splits_on_punctuation():
    assert tokenize("memory leak/garbage-collection issue") == [
        "memory", "leak", "garbage", "collection", "issue"]


def test_tokenize_empty_input():
    assert tokenize("") == []


def test_tokenize_preserves_surface_case():
    assert tokenize("Creating a memory leak with Java") == [
        "Creating", "a", "memory", "leak", "with", "Java"]


def test_tokenize_discards_pure_digits_keeps_mixed():
    assert tokenize("utf8 2 codec42 007") == ["utf8", "codec42"]


# Hand-written acronym-boundary oracle: 20 identifiers with their expected
# splits, labeled once by eye.
CAMEL_TABLE = [
    ("GenericContainerInstantiator", ["Generic", "Container", "Instantiator"]),
    ("memory", ["memory"]),
    ("XMLHttpRequest", ["XML", "Http", "Request"]),
    ("RestClientService", ["Rest", "Client", "Service"]),
    ("getValue", ["get", "Value"]),
    ("HTTPSConnection", ["HTTPS", "Connection"]),
    ("parseJSON", ["parse", "JSON"]),
    ("IOError", ["IO", "Error"]),
    ("Base64Encoder", ["Base64", "Encoder"]),
    ("toUTF8String", ["to", "UTF8", "String"]),
    ("simpleword", ["simpleword"]),
    ("ALLCAPS", ["ALLCAPS"]),
    ("X", ["X"]),
    ("aB", ["a", "B"]),
    ("ABc", ["A", "Bc"]),
    ("readFile2Buffer", ["read", "File2", "Buffer"]),
    ("SQLiteOpenHelper", ["SQ", "Lite", "Open", "Helper"]),
    ("miXedCaseID", ["mi", "Xed", "Case", "ID"]),
    ("HTMLParser2", ["HTML", "Parser2"]),
    ("value42x", ["value42x"]),
]


@pytest.mark.parametrize("identifier,expected", CAMEL_TABLE)
def test_split_camel_table(identifier, expected):
    assert split_camel(identifier) == expected


def test_split_camel_parts_concatenate():
    rng = random.Random(11)
    alphabet = "abcXYZmnoPQR0189"
    for _ in range(300):
        token = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 14)))
        assert "".join(split_camel(token)) == token


def test_preprocess_split_only_keeps_down(stops):
    seq = preprocess("Tracking down a memory leak/garbage-collection issue in Java",
                     stops, SPLIT_ONLY)
    assert seq.normalized() == [
        "tracking", "down", "memory", "leak", "garbage", "collection", "issue", "java"]


def test_preprocess_keep_whole_emits_parts_then_whole():
    no_stops = StopList(set())
    seq = preprocess("RestClientService", no_stops, SPLIT_AND_KEEP_WHOLE)
    assert seq.surfaces() == ["Rest", "Client", "Service", "RestClientService"]
    assert [t.origin for t in seq] == [CAMEL_PART, CAMEL_PART, CAMEL_PART, WHOLE]


def test_preprocess_all_stop_words(stops):
    assert preprocess("the of and", stops, SPLIT_ONLY).normalized() == []


def test_stop_filter_applies_to_camel_parts():
    stops = StopList({"in"})
    seq = preprocess("CheckIn", stops, SPLIT_AND_KEEP_WHOLE)
    # The "In" part is stopped after normalization; the whole form stays.
    assert seq.normalized() == ["check", "checkin"]


def test_preprocess_idempotent(stops):
    texts = [
        "Tracking down a memory leak/garbage-collection issue in Java",
        "RestClientService ignores content encoding",
        "XMLHttpRequest fails on UTF8 payload (issue #42)",
        "",
    ]
    for text in texts:
        once = preprocess(text, stops, SPLIT_ONLY).normalized()
        twice = preprocess(" ".join(once), stops, SPLIT_ONLY).normalized()
        assert twice == once


def test_no_stop_words_in_output(stops):
    seq = preprocess("The Quick BrownFox jumps over a lazy dog in the yard",
                     stops, SPLIT_AND_KEEP_WHOLE)
    assert not [t for t in seq if t.normalized in stops]


def test_normalized_is_lowercased_surface(stops):
    seq = preprocess("GenericContainerInstantiator KeepsTrack", stops, SPLIT_AND_KEEP_WHOLE)
    for tok in seq:
        assert tok.normalized == tok.surface.lower()


def test_preprocess_deterministic(stops):
    text = "Tracking down a memory leak in the GenericContainerInstantiator"
    runs = [preprocess(text, stops, SPLIT_AND_KEEP_WHOLE).normalized() for _ in range(5)]
    assert all(run == runs[0] for run in runs)


def test_default_stoplist_shape(stops):
    assert "a" in stops and "in" in stops and "with" in stops and "to" in stops
    assert "down" not in stops  # direction words carry signal
    assert all(w == w.lower() for w in stops.words)


def test_stoplist_sha_differs_per_content(tmp_path):
    one = tmp_path / "one.txt"
    two = tmp_path / "two.txt"
    one.write_text("alpha\nbeta\n")
    two.write_text("alpha\ngamma\n")
    assert StopList.from_file(one).sha != StopList.from_file(two).sha
    # Comments and ordering do not change the canonical hash.
    three = tmp_path / "three.txt"
    three.write_text("# comment\nbeta\nalpha\n")
    assert StopList.from_file(one).sha == StopList.from_file(three).sha
    assert words_sha({"alpha", "beta"}) == StopList.from_file(one).sha


def test_unknown_mode_rejected(stops):
    with pytest.raises(ValueError):
        preprocess("anything", stops, "chunk")
