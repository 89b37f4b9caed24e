"""Tests for the edit-distance matcher core."""

import itertools
import random

import pytest

from oracles import memo_recurrence_distance, recurrence_distance
from pubforge.matcher import (
    InitialsPattern,
    MatchError,
    MatchThresholds,
    SynonymDB,
    SynonymEntry,
    SynonymError,
    apply_synonyms,
    best_match,
    classify_initials,
    levenshtein,
    match_names,
    normalize,
    resolve_affiliation_index,
    similarity,
    split_printed_name,
)


def test_oracles_agree_with_each_other():
    rng = random.Random(11)
    for _ in range(200):
        a = "".join(rng.choice("abc") for _ in range(rng.randrange(0, 6)))
        b = "".join(rng.choice("abc") for _ in range(rng.randrange(0, 6)))
        assert recurrence_distance(a, b) == memo_recurrence_distance(a, b)


# Worked examples, frozen by hand from the recurrence before the
# implementation existed.
FROZEN_DISTANCES = [
    ("atlas", "atlassian", 4),
    ("maurizio", "fabrizio", 2),
    ("raise", "race", 2),
    ("", "", 0),
    ("", "abc", 3),
    ("kitten", "sitting", 3),
    ("flaw", "lawn", 2),
]


@pytest.mark.parametrize("a,b,expected", FROZEN_DISTANCES)
def test_frozen_distances(a, b, expected):
    assert levenshtein(a, b) == expected
    assert levenshtein(b, a) == expected


def test_case_folded_collaboration_example():
    assert levenshtein(normalize("ATLAS"), normalize("Atlassian")) == 4


def test_exhaustive_small_alphabet_against_oracle():
    words = [""]
    for length in range(1, 4):
        words.extend("".join(w) for w in itertools.product("ab", repeat=length))
    for a in words:
        for b in words:
            assert levenshtein(a, b) == recurrence_distance(a, b), (a, b)


def test_random_pairs_against_memo_oracle():
    rng = random.Random(4242)
    for _ in range(300):
        a = "".join(rng.choice("abcde") for _ in range(rng.randrange(0, 12)))
        b = "".join(rng.choice("abcde") for _ in range(rng.randrange(0, 12)))
        assert levenshtein(a, b) == memo_recurrence_distance(a, b), (a, b)


def test_distance_properties():
    rng = random.Random(99)
    samples = [
        "".join(rng.choice("abcd") for _ in range(rng.randrange(0, 10))) for _ in range(40)
    ]
    for a in samples:
        assert levenshtein(a, a) == 0
    for a, b in zip(samples, reversed(samples)):
        d = levenshtein(a, b)
        assert d == levenshtein(b, a)
        assert d <= max(len(a), len(b))
        assert d >= abs(len(a) - len(b))
        if a != b:
            assert d >= 1
    for a, b, c in zip(samples[::3], samples[1::3], samples[2::3]):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


def test_single_edit_distance_is_one():
    rng = random.Random(7)
    alphabet = "abcdefgh"
    for _ in range(100):
        word = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 10)))
        pos = rng.randrange(len(word))
        deleted = word[:pos] + word[pos + 1 :]
        assert levenshtein(word, deleted) == 1
        inserted = word[:pos] + "z" + word[pos:]
        assert levenshtein(word, inserted) == 1
        replaced = word[:pos] + "z" + word[pos + 1 :]
        assert levenshtein(word, replaced) in (0, 1)


def test_normalize_whitespace_case_and_compatibility():
    assert normalize("  A   B ") == "a b"
    assert normalize("Straße") == "strasse"
    assert normalize("A B") == "a b"
    assert normalize("\tx\n\ny\t") == "x y"
    assert normalize("") == ""


def test_normalize_accent_folding_is_optional():
    accented = "Bòb"
    assert normalize(accented) == "bòb"
    assert normalize(accented) != normalize("Bob")
    assert normalize(accented, fold_accents=True) == "bob"
    assert normalize("Università", fold_accents=True) == "universita"


def test_normalize_unifies_precomposed_and_decomposed():
    assert normalize("Bòb") == normalize("Bòb")


def test_normalize_idempotent():
    rng = random.Random(21)
    pool = "aA éÀ\tß zZ."
    for _ in range(200):
        text = "".join(rng.choice(pool) for _ in range(rng.randrange(0, 15)))
        once = normalize(text)
        assert normalize(once) == once
        folded = normalize(text, fold_accents=True)
        assert normalize(folded, fold_accents=True) == folded


def test_similarity_bounds_and_paper_value():
    assert similarity("", "") == 1.0
    assert similarity("abc", "") == 0.0
    value = similarity("atlas", "atlassian")
    assert value == pytest.approx(1 - 4 / 9)
    rng = random.Random(3)
    for _ in range(100):
        a = "".join(rng.choice("ab") for _ in range(rng.randrange(0, 8)))
        b = "".join(rng.choice("ab") for _ in range(rng.randrange(0, 8)))
        assert 0.0 <= similarity(a, b) <= 1.0


def test_best_match_prefers_lowest_index_on_tie():
    index, distance = best_match("abc", ["abd", "abe", "abc "])
    assert (index, distance) == (2, 0)
    index, distance = best_match("abc", ["abd", "abe"])
    assert (index, distance) == (0, 1)


def test_best_match_requires_candidates():
    with pytest.raises(MatchError):
        best_match("anything", [])


def test_classify_initials_patterns():
    assert classify_initials("J.") == (InitialsPattern.DOT, False)
    assert classify_initials("J.B.") == (InitialsPattern.DOTDOT, False)
    assert classify_initials("J. B.") == (InitialsPattern.DOTDOT, True)
    assert classify_initials("J.-B.") == (InitialsPattern.DOT_HYPHEN, False)
    assert classify_initials("J-B.") == (InitialsPattern.HYPHEN_DOT, False)
    assert classify_initials("J. -B.") == (InitialsPattern.DOT_HYPHEN, True)
    assert classify_initials("JB") == (InitialsPattern.OTHER, False)
    assert classify_initials("J") == (InitialsPattern.OTHER, False)
    assert classify_initials("") == (InitialsPattern.OTHER, False)
    assert classify_initials("J.B") == (InitialsPattern.OTHER, False)
    assert classify_initials("Ø.") == (InitialsPattern.DOT, False)


def test_classify_initials_spacing_distinguishes():
    spaced = classify_initials("J. B.")
    compact = classify_initials("J.B.")
    assert spaced.pattern == compact.pattern
    assert spaced != compact


def _sample_db() -> SynonymDB:
    return SynonymDB(
        institutes=[
            SynonymEntry(
                id="2",
                original="Department of Physics, University of Alberta, Edmonton AB, Canada",
                synonyms=[
                    "Department of Physics, University of Alberta, Edmonton, AB, Canada; "
                    "University of Alberta, Edmonton; Canada"
                ],
            )
        ],
        authors=[
            SynonymEntry(
                original='A. B\\"ub',
                inspire="INSPIRE-00000000",
                foaf_name="A Bub",
                synonyms=["A. Bòb", "A. B¨ b"],
            )
        ],
    )


def test_apply_synonyms_accepts_original_and_alternates():
    entry = _sample_db().authors[0]
    assert apply_synonyms('A. B\\"ub', entry)
    assert apply_synonyms("A. Bòb", entry)
    assert apply_synonyms("a. bòb", entry)
    assert apply_synonyms("A. B¨ b", entry)
    assert not apply_synonyms("A. Bub", entry)
    assert not apply_synonyms("A. Bob", entry)


def test_apply_synonyms_normalizes_whitespace():
    entry = SynonymEntry(original="University  of   Testing", synonyms=["UoT Dept"])
    assert apply_synonyms(" university of testing ", entry)
    assert apply_synonyms("uot  dept", entry)
    assert not apply_synonyms("uotdept", entry)


def test_synonym_db_round_trip_and_lookup():
    db = _sample_db()
    text = db.to_json()
    again = SynonymDB.from_json(text)
    assert again.to_json() == text
    assert again.find_institute("", "2") is not None
    assert again.find_institute(
        "department of physics,  university of alberta, edmonton ab, canada"
    ) is not None
    assert again.find_author("", "INSPIRE-00000000") is not None
    assert again.find_author('a. b\\"ub') is not None
    assert again.find_author("nobody") is None


def test_synonym_db_rejects_duplicate_originals():
    with pytest.raises(SynonymError):
        SynonymDB.from_json(
            '{"institutes": [{"id": "1", "original": "Same Place", "synonyms": []},'
            ' {"id": "2", "original": "same  place", "synonyms": []}], "authors": []}'
        )


def test_synonym_db_rejects_duplicate_synonyms_within_entry():
    with pytest.raises(SynonymError):
        SynonymDB.from_json(
            '{"institutes": [], "authors": [{"original": "A. One",'
            ' "synonyms": ["A One", "a  one"]}]}'
        )


def test_synonym_db_rejects_bad_shapes():
    with pytest.raises(SynonymError):
        SynonymDB.from_json("[]")
    with pytest.raises(SynonymError):
        SynonymDB.from_json('{"institutes": [{"id": "1"}], "authors": []}')
    with pytest.raises(SynonymError):
        SynonymDB.from_json("not json")


def test_thresholds_defaults_and_parsing():
    assert MatchThresholds() == MatchThresholds(author_distance=2, close_similarity=0.80)
    parsed = MatchThresholds.from_json('{"author_distance": 3, "close_similarity": 0.9}')
    assert parsed.author_distance == 3
    assert parsed.close_similarity == pytest.approx(0.9)
    round_tripped = MatchThresholds.from_json(parsed.to_json())
    assert round_tripped == parsed
    with pytest.raises(MatchError):
        MatchThresholds.from_json('{"author_distance": -1}')
    with pytest.raises(MatchError):
        MatchThresholds.from_json('{"close_similarity": 1.5}')


def test_match_names_exact_close_and_missing():
    reference = ["A. Aa", "B. Bb", "C. Cc"]
    printed = ["A. Aa", "B. Bbx", "Z. Zz"]
    results = match_names(reference, printed, 2)
    assert [r.target_index for r in results] == [0, 1, None]
    assert results[0].distance == 0
    assert results[0].similarity == 1.0
    assert results[1].distance == 1
    assert not results[1].suppressed_by_synonym
    assert results[2].target_index is None


def test_match_names_synonym_rescue():
    entry = SynonymEntry(original="Q. Qq", synonyms=["Quentin Q."])
    results = match_names(["Q. Qq"], ["Quentin Q."], 2, lambda i: entry)
    assert results[0].target_index == 0
    assert results[0].suppressed_by_synonym

    results = match_names(["Q. Qq"], ["Someone Else"], 2, lambda i: entry)
    assert results[0].target_index is None
    assert not results[0].suppressed_by_synonym


def test_match_names_missing_iff_no_target():
    rng = random.Random(13)
    # Triple the index so distinct names sit more than two edits apart.
    reference = [f"Name{i}{i}{i} Fam{i}{i}{i}" for i in range(10)]
    printed = [n for n in reference if rng.random() < 0.5] + ["Unrelated Person"]
    for result in match_names(reference, printed, 2):
        assert (result.target_index is None) == (
            reference[result.reference_index] not in printed
        )


def test_match_names_folds_accents():
    results = match_names(["A. Bòb"], ["A. Bob"], 0)
    assert results[0].target_index == 0
    assert results[0].distance == 0


def test_split_printed_name():
    assert split_printed_name("A. Aa") == ("A.", "Aa")
    assert split_printed_name("J. B. Smith") == ("J. B.", "Smith")
    assert split_printed_name("J.-B. Smith") == ("J.-B.", "Smith")
    assert split_printed_name("Smith") == ("", "Smith")
    assert split_printed_name("A B Cee") == ("A B", "Cee")
    assert split_printed_name("") == ("", "")


def test_resolve_affiliation_index_retry():
    assert resolve_affiliation_index(2, 3) == 2
    assert resolve_affiliation_index(171, 3) == 1
    assert resolve_affiliation_index(171, 200) == 171
    assert resolve_affiliation_index(10, 3) is None
    assert resolve_affiliation_index(0, 3) is None
    assert resolve_affiliation_index(4, 3) is None
    assert resolve_affiliation_index(105, 7) == 5
