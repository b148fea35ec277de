import numpy as np

from helpers import build_lexicon
from oracles import brute_edit_distance

from phmm.corpus import GenConfig, generate
from phmm.lexicon import MultiObservation
from phmm.metrics import (
    alignment,
    edit_distance,
    evaluate,
    report_to_dict,
)
from phmm.parallel import model_count


def test_edit_distance_identical():
    assert edit_distance(["a", "b", "c"], ["a", "b", "c"]) == (0, 0, 0)


def test_edit_distance_single_deletion():
    assert edit_distance(["a", "b", "c"], ["a", "c"]) == (0, 0, 1)


def test_edit_distance_empty_sides():
    assert edit_distance([], ["x", "y"]) == (0, 2, 0)
    assert edit_distance(["x", "y"], []) == (0, 0, 2)
    assert edit_distance([], []) == (0, 0, 0)


def test_edit_distance_prefers_substitution():
    # [a,b] vs [b,a] admits sub/sub or del+match+ins at equal cost
    assert edit_distance(["a", "b"], ["b", "a"]) == (2, 0, 0)


def test_edit_distance_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        ref = [str(x) for x in rng.integers(0, 4, size=rng.integers(0, 7))]
        hyp = [str(x) for x in rng.integers(0, 4, size=rng.integers(0, 7))]
        s, i, d = edit_distance(ref, hyp)
        assert s + i + d == brute_edit_distance(ref, hyp)


def test_edit_distance_total_symmetric_with_swapped_ops():
    rng = np.random.default_rng(1)
    for _ in range(50):
        ref = [str(x) for x in rng.integers(0, 3, size=rng.integers(0, 6))]
        hyp = [str(x) for x in rng.integers(0, 3, size=rng.integers(0, 6))]
        s1, i1, d1 = edit_distance(ref, hyp)
        s2, i2, d2 = edit_distance(hyp, ref)
        assert s1 + i1 + d1 == s2 + d2 + i2


def test_alignment_lengths_consistent():
    ref, hyp = ["a", "b", "c"], ["a", "x", "c", "d"]
    pairs = alignment(ref, hyp)
    assert [r for r, _ in pairs if r is not None] == ref
    assert [h for _, h in pairs if h is not None] == hyp


def _recovery_setup(seed=0):
    lex = build_lexicon(
        np.random.default_rng(seed), vocab=4, n_phonemes=4, separated=True, n_states=3
    )
    corpus = generate(
        lex, GenConfig(n_utterances=20, seed=5, signs_per_utterance=(1, 1))
    )
    return lex, corpus


def test_evaluate_perfect_recovery_gives_zero_ser():
    lex, corpus = _recovery_setup()
    report = evaluate(lex, corpus, mode="exhaustive", max_signs=1)
    assert report.sign_error_rate == 0.0
    assert report.exact_match_rate == 1.0
    assert report.n_decode_failures == 0
    assert report.substitutions == report.insertions == report.deletions == 0


def test_evaluate_counts_failures_as_deletions():
    lex, corpus = _recovery_setup(1)
    # poison one utterance: alternate two different phonemes' private
    # symbols, so no single-sign hypothesis can cover all frames
    corpus[3].mobs = MultiObservation(
        channels={ch: np.array([0, 7, 0, 7], dtype=int) for ch in lex.channels}
    )
    corpus[3].signs = ["s0", "s1"]
    clean_ref = sum(len(u.signs) for k, u in enumerate(corpus) if k != 3)
    report = evaluate(lex, corpus, mode="exhaustive", max_signs=1)
    assert report.n_decode_failures == 1
    assert report.deletions == 2
    assert report.n_reference_signs == clean_ref + 2


def test_evaluate_model_count_delegates():
    lex, corpus = _recovery_setup(2)
    report = evaluate(lex, corpus, mode="exhaustive", max_signs=1)
    assert (report.factored_models, report.product_models) == model_count(lex)


def test_ser_invariant_under_sign_renaming():
    lex, corpus = _recovery_setup(3)
    report = evaluate(lex, corpus, mode="exhaustive", max_signs=1)

    renamed = build_lexicon(
        np.random.default_rng(3), vocab=4, n_phonemes=4, separated=True, n_states=3
    )
    mapping = {sid: f"Z{sid}" for sid in list(renamed.signs)}
    renamed.signs = {
        mapping[sid]: type(sign)(mapping[sid], sign.channels)
        for sid, sign in renamed.signs.items()
    }
    for utt in corpus:
        utt.signs = [mapping[s] for s in utt.signs]
    report2 = evaluate(renamed, corpus, mode="exhaustive", max_signs=1)
    assert report2.sign_error_rate == report.sign_error_rate
    assert report2.exact_match_rate == report.exact_match_rate


def test_report_dict_schema():
    lex, corpus = _recovery_setup(4)
    d = report_to_dict(evaluate(lex, corpus, mode="exhaustive", max_signs=1))
    assert d["report_version"] == 1
    assert set(d["model_count"]) == {"factored", "product"}
    assert "mean_decode_seconds" in d["timing"]
    assert all({"ref", "hyp", "count"} == set(c) for c in d["confusions"])
