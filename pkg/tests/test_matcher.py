import pytest
from hypothesis import given, settings, strategies as st

from emoindex.matcher import AhoCorasick, naive_match


def build(pairs):
    ac = AhoCorasick()
    for p, label in pairs:
        ac.add(p, label)
    ac.build()
    return ac


def test_overlapping_and_nested_patterns():
    pairs = [("he", "he"), ("she", "she"), ("his", "his"), ("hers", "hers")]
    assert build(pairs).labels_in("ushers") == {"he", "she", "hers"}


def test_variants_share_label():
    ac = build([("怒り", "怒り"), ("いかり", "怒り")])
    assert ac.labels_in("いかりといかり") == {"怒り"}


def test_suffix_output_through_fail_links():
    # "bc" is only reachable as a suffix of the longer partial match "abc"
    ac = build([("abcd", "abcd"), ("bc", "bc")])
    assert ac.labels_in("xabcx") == {"bc"}


def test_unbuilt_automaton_refuses():
    ac = AhoCorasick()
    ac.add("a", "a")
    with pytest.raises(RuntimeError):
        ac.labels_in("a")


def test_empty_pattern_rejected():
    with pytest.raises(ValueError):
        AhoCorasick().add("", "x")


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.text(alphabet="あいうアイ", min_size=1, max_size=4), min_size=1, max_size=12),
    st.text(alphabet="あいうアイx", max_size=40),
)
def test_equals_naive_scan(patterns, text):
    pairs = [(p, f"L{i % 4}") for i, p in enumerate(patterns)]
    assert build(pairs).labels_in(text) == naive_match(text, pairs)
