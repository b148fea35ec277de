"""Sign-model composition and joint multi-channel decoding.

Per-channel phoneme models are concatenated left to right into sign and
utterance models. Joint decoding maximizes the sum of per-channel log
probabilities; channels align independently in the exhaustive decoder,
while the synchronized decoder constrains every channel to cross sign
boundaries at the same frame.

Composition wiring: the final state of every non-final sub-model keeps
a self-loop of (1 - exit_prob) and routes exit_prob * pi_next[j] to
state j of its successor; the final sub-model's last state stays
absorbing. These rewired rows are structural constants, not trained
parameters.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import emissions as em_mod
from .errors import (
    EmptySequenceError,
    NoFiniteHypothesisError,
    SearchSpaceTooLargeError,
    UnequalChannelLengthsError,
    UnknownSignError,
    ValidationError,
)
from .hmm import Hmm, Topology, viterbi_lattice, viterbi_score_lattice
from .lexicon import EPENTHESIS_BETWEEN_SIGNS
from .logmath import LOG_ZERO, safe_log

MAX_CANDIDATES = 1_000_000

EPS_UNIT = "<eps>"


@dataclass
class Hypothesis:
    """A decoded sign sequence with its per-channel alignment scores."""

    signs: tuple
    channel_scores: dict
    total: float
    state_paths: dict

    @staticmethod
    def combine(signs, channel_scores, state_paths):
        total = math.fsum(channel_scores.values())
        return Hypothesis(tuple(signs), channel_scores, total, state_paths)


def block_ids(lexicon, channel, signs):
    """Phoneme id sequence for an utterance, epenthesis included."""
    if not signs:
        raise EmptySequenceError("sign sequence is empty")
    inv = lexicon.inventory(channel)
    insert_eps = lexicon.epenthesis_policy == EPENTHESIS_BETWEEN_SIGNS
    ids = []
    for k, sid in enumerate(signs):
        sign = lexicon.signs.get(sid)
        if sign is None:
            raise UnknownSignError(sid)
        if k > 0 and insert_eps:
            ids.append(inv.epenthesis)
        ids.extend(sign.channels[channel])
    return ids


def compose_models(blocks, exit_prob=0.5):
    """Concatenate sub-models into one left-to-right chain.

    blocks is a list of (phoneme_id, Hmm). Returns (Hmm, offsets) where
    offsets[k] is the composed index of block k's first state. A single
    block composes to a copy of itself.
    """
    if not blocks:
        raise EmptySequenceError("no blocks to compose")
    if len(blocks) == 1:
        return blocks[0][1].copy(), [0]
    sizes = [b.n_states for _, b in blocks]
    offsets = list(itertools.accumulate([0] + sizes[:-1]))
    n = sum(sizes)
    pi = np.zeros(n)
    pi[: sizes[0]] = blocks[0][1].pi
    trans = np.zeros((n, n))
    for k, (_, model) in enumerate(blocks):
        off = offsets[k]
        size = sizes[k]
        trans[off : off + size, off : off + size] = model.trans
        if k < len(blocks) - 1:
            last = off + size - 1
            nxt_off = offsets[k + 1]
            nxt = blocks[k + 1][1]
            trans[last, :] = 0.0
            trans[last, last] = 1.0 - exit_prob
            trans[last, nxt_off : nxt_off + nxt.n_states] = exit_prob * nxt.pi
    first = blocks[0][1].emissions
    if isinstance(first, em_mod.DiscreteEmission):
        probs = np.vstack([b.emissions.probs for _, b in blocks])
        emissions = em_mod.DiscreteEmission(probs)
    else:
        means = np.vstack([b.emissions.means for _, b in blocks])
        variances = np.vstack([b.emissions.variances for _, b in blocks])
        emissions = em_mod.GaussianEmission(means, variances)
    return Hmm(pi, trans, emissions, Topology.ERGODIC), offsets


def compose_utterance_model(lexicon, channel, signs):
    """Concatenated channel model for a sign sequence, epenthesis per policy."""
    inv = lexicon.inventory(channel)
    blocks = [(pid, inv.phonemes[pid]) for pid in block_ids(lexicon, channel, signs)]
    model, _ = compose_models(blocks, lexicon.exit_prob)
    return model


def _channel_viterbi(model, obs):
    """(score, path) of the best alignment; (-inf, None) when impossible."""
    logb = em_mod.log_density_seq(model.emissions, obs)
    log_pi, log_trans = model.log_params()
    score, path = viterbi_lattice(log_pi, log_trans, logb)
    if score == LOG_ZERO:
        return LOG_ZERO, None
    return score, [int(s) for s in path]


def _cached_model(lexicon, channel, signs, cache):
    """(model, log_pi, log_trans), memoized per (channel, sign sequence)."""
    key = (channel, signs)
    if cache is not None:
        entry = cache.get(key)
        if entry is not None:
            return entry
    model = compose_utterance_model(lexicon, channel, signs)
    entry = (model, *model.log_params())
    if cache is not None:
        cache[key] = entry
    return entry


def _score_total(lexicon, signs, mobs, cache):
    """Sum of per-channel best-path scores, without path extraction."""
    scores = []
    for ch in lexicon.channels:
        entry = _cached_model(lexicon, ch, signs, cache)
        model, log_pi, log_trans = entry
        logb = em_mod.log_density_seq(model.emissions, mobs.channels[ch])
        scores.append(viterbi_score_lattice(log_pi, log_trans, logb))
    return math.fsum(scores)


def score_hypothesis(lexicon, signs, mobs, cache=None):
    """Score one sign sequence: independent per-channel Viterbi alignments.

    Each channel is aligned on its own composed model; the total is the
    sum of per-channel log scores. A channel with no feasible path
    contributes -inf and is left without a state path.
    """
    signs = tuple(signs)
    channel_scores = {}
    state_paths = {}
    for ch in lexicon.channels:
        model, _, _ = _cached_model(lexicon, ch, signs, cache)
        score, path = _channel_viterbi(model, mobs.channels[ch])
        channel_scores[ch] = score
        state_paths[ch] = path
    return Hypothesis.combine(signs, channel_scores, state_paths)


def _candidate_count(vocab, max_signs):
    total = 0
    for k in range(1, max_signs + 1):
        total += vocab**k
        if total > MAX_CANDIDATES:
            return total
    return total


def decode_exhaustive(lexicon, mobs, max_signs, cache=None):
    """Best hypothesis over every sign sequence of length 1..max_signs.

    Implements the joint objective exactly: channels align
    independently and the argmax runs over the full enumeration.
    """
    if max_signs < 1:
        raise ValidationError("max_signs must be >= 1")
    sign_ids = sorted(lexicon.signs)
    if not sign_ids:
        raise ValidationError("lexicon has no signs")
    n_cand = _candidate_count(len(sign_ids), max_signs)
    if n_cand > MAX_CANDIDATES:
        raise SearchSpaceTooLargeError(n_cand, MAX_CANDIDATES)
    if cache is None:
        cache = {}
    best_key = None
    best_signs = None
    for k in range(1, max_signs + 1):
        for signs in itertools.product(sign_ids, repeat=k):
            total = _score_total(lexicon, signs, mobs, cache)
            if total == LOG_ZERO:
                continue
            key = (-total, k, signs)
            if best_key is None or key < best_key:
                best_key = key
                best_signs = signs
    if best_signs is None:
        raise NoFiniteHypothesisError("all candidate hypotheses score -inf")
    return score_hypothesis(lexicon, best_signs, mobs, cache=cache)


def model_count(lexicon):
    """(factored, product) model counts for the lexicon's inventories.

    factored is the sum of per-channel content inventory sizes plus one
    epenthesis model per channel when the policy uses them; product is
    the cross-product count a single monolithic inventory would need.
    """
    sizes = [len(lexicon.inventory(ch).content_ids) for ch in lexicon.channels]
    factored = sum(sizes)
    if lexicon.epenthesis_policy == EPENTHESIS_BETWEEN_SIGNS:
        factored += len(lexicon.channels)
    product = 1
    for s in sizes:
        product *= s
    return factored, product


# ---------------------------------------------------------------------------
# Boundary-synchronized joint decoding
# ---------------------------------------------------------------------------


class _Unit:
    """One channel's composed model for a sign (or the epenthesis filler),
    prepared for segment-level dynamic programming."""

    def __init__(self, model, obs, exit_prob):
        self.n = model.n_states
        self.final = self.n - 1
        self.log_pi, log_trans = model.log_params()
        self.log_trans = log_trans.copy()
        # Mid-utterance pricing: the unit's final state dwells with 1 - exit
        # probability; the complement leaves through the boundary.
        self.log_trans[self.final, self.final] = safe_log(1.0 - exit_prob)
        self.log_exit = float(safe_log(exit_prob))
        self.logb = em_mod.log_density_seq(model.emissions, obs)

    def segment_scores(self, t0):
        """DP from entry frame t0 to the end of the utterance.

        Returns (exit_scores, last_score): exit_scores[t] is the best
        score of a path entering at t0 and leaving the unit between t
        and t+1 (boundary log included); last_score is the best
        unanchored score through the absorbing (final-unit) pricing up
        to the last frame.
        """
        t_len = self.logb.shape[0]
        delta = self.log_pi + self.logb[t0]
        final_iso = delta[self.final]
        exit_scores = np.full(t_len, LOG_ZERO)
        exit_scores[t0] = delta[self.final] + self.log_exit
        for t in range(t0 + 1, t_len):
            cand = delta[:, None] + self.log_trans
            others = np.delete(cand[:, self.final], self.final)
            arrivals = np.max(others) if others.size else LOG_ZERO
            delta = np.max(cand, axis=0) + self.logb[t]
            final_iso = max(arrivals, final_iso) + self.logb[t, self.final]
            exit_scores[t] = delta[self.final] + self.log_exit
        if t_len - 1 == t0:
            last = float(np.max(delta))
        else:
            non_final = np.delete(delta, self.final)
            best_nf = np.max(non_final) if non_final.size else LOG_ZERO
            last = float(max(best_nf, final_iso))
        return exit_scores, last


@dataclass
class _Token:
    score: float
    signs: tuple
    segments: tuple  # (unit_key, entry_frame, exit_frame) triples

    def key(self):
        return (-self.score, len(self.signs), self.signs)


def _best_token(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if a.key() <= b.key() else b


def decode_synced(lexicon, mobs, beam_width):
    """Sign-boundary-synchronized joint Viterbi decode.

    All channels must have the same observation length; every channel
    crosses each sign (and epenthesis) boundary at the same frame. With
    an unbounded beam this is exact for the synchronized search space;
    pruning keeps the best beam_width boundary tokens per frame.
    """
    if beam_width < 1:
        raise ValidationError("beam_width must be >= 1")
    lengths = {ch: len(mobs.channels[ch]) for ch in lexicon.channels}
    t_len = None
    for ch, ln in lengths.items():
        if t_len is None:
            t_len = ln
        elif ln != t_len:
            raise UnequalChannelLengthsError(
                f"channel lengths differ: {lengths}"
            )
    if t_len == 0:
        raise ValidationError("empty observation sequences")

    use_eps = lexicon.epenthesis_policy == EPENTHESIS_BETWEEN_SIGNS
    sign_ids = sorted(lexicon.signs)
    unit_keys = list(sign_ids) + ([EPS_UNIT] if use_eps else [])

    units = {}
    for key in unit_keys:
        per_channel = []
        for ch in lexicon.channels:
            inv = lexicon.inventory(ch)
            if key == EPS_UNIT:
                pids = [inv.epenthesis]
            else:
                pids = list(lexicon.signs[key].channels[ch])
            blocks = [(pid, inv.phonemes[pid]) for pid in pids]
            model, _ = compose_models(blocks, lexicon.exit_prob)
            per_channel.append(_Unit(model, mobs.channels[ch], lexicon.exit_prob))
        units[key] = per_channel

    # exit_table[key][c][t0] -> exit scores array; last_table[key][c][t0] -> float
    exit_table = {key: [{} for _ in lexicon.channels] for key in unit_keys}
    last_table = {key: [{} for _ in lexicon.channels] for key in unit_keys}

    def channel_scores_for(key, t0):
        for c, unit in enumerate(units[key]):
            if t0 not in exit_table[key][c]:
                ex, last = unit.segment_scores(t0)
                exit_table[key][c][t0] = ex
                last_table[key][c][t0] = last
        return [exit_table[key][c][t0] for c in range(len(lexicon.channels))]

    def entry_token(t0, key, cells):
        """Best token available to enter unit `key` at frame t0."""
        is_sign = key != EPS_UNIT
        if t0 == 0:
            return _Token(0.0, (), ()) if is_sign else None
        best = None
        prev = cells[t0 - 1]
        for vkey, tok in prev.items():
            if use_eps:
                allowed = (vkey == EPS_UNIT) if is_sign else (vkey != EPS_UNIT)
            else:
                allowed = is_sign
            if allowed:
                best = _best_token(best, tok)
        return best

    cells = [dict() for _ in range(t_len)]
    for t in range(t_len):
        for key in unit_keys:
            best = None
            for t0 in range(t + 1):
                entry = entry_token(t0, key, cells)
                if entry is None or entry.score == LOG_ZERO:
                    continue
                per_channel = channel_scores_for(key, t0)
                seg = math.fsum(ex[t] for ex in per_channel)
                if seg == LOG_ZERO:
                    continue
                signs = entry.signs + ((key,) if key != EPS_UNIT else ())
                tok = _Token(
                    entry.score + seg,
                    signs,
                    entry.segments + ((key, t0, t),),
                )
                best = _best_token(best, tok)
            if best is not None:
                cells[t][key] = best
        if len(cells[t]) > beam_width:
            kept = sorted(cells[t].items(), key=lambda kv: kv[1].key() + (kv[0],))
            cells[t] = dict(kept[:beam_width])

    best = None
    for key in sign_ids:
        for t0 in range(t_len):
            entry = entry_token(t0, key, cells)
            if entry is None or entry.score == LOG_ZERO:
                continue
            channel_scores_for(key, t0)
            tail = math.fsum(
                last_table[key][c][t0] for c in range(len(lexicon.channels))
            )
            if tail == LOG_ZERO:
                continue
            tok = _Token(
                entry.score + tail,
                entry.signs + (key,),
                entry.segments + ((key, t0, t_len - 1),),
            )
            best = _best_token(best, tok)
    if best is None or best.score == LOG_ZERO:
        raise NoFiniteHypothesisError("no synchronized hypothesis has finite score")
    return _rebuild_hypothesis(lexicon, mobs, best)


def _rebuild_hypothesis(lexicon, mobs, token):
    """Recover per-channel scores and state paths for the winning token."""
    channel_scores = {}
    state_paths = {}
    for c, ch in enumerate(lexicon.channels):
        inv = lexicon.inventory(ch)
        total_c = 0.0
        path = []
        offset = 0
        for k, (key, t0, t1) in enumerate(token.segments):
            if key == EPS_UNIT:
                pids = [inv.epenthesis]
            else:
                pids = list(lexicon.signs[key].channels[ch])
            blocks = [(pid, inv.phonemes[pid]) for pid in pids]
            model, _ = compose_models(blocks, lexicon.exit_prob)
            unit = _Unit(model, mobs.channels[ch], lexicon.exit_prob)
            is_last = k == len(token.segments) - 1
            seg_score, seg_path = _segment_viterbi(unit, t0, t1, is_last)
            total_c += seg_score
            path.extend(offset + s for s in seg_path)
            offset += unit.n
        channel_scores[ch] = total_c
        state_paths[ch] = path
    return Hypothesis.combine(token.signs, channel_scores, state_paths)


def _segment_viterbi(unit, t0, t1, is_last):
    """Best within-unit path over frames [t0, t1].

    Non-final segments are anchored on the unit's final state and
    include the boundary exit log probability; the last segment is
    unanchored and priced with the absorbing final state.
    """
    n = unit.n
    log_trans = unit.log_trans.copy()
    if is_last:
        log_trans[unit.final, unit.final] = 0.0
    delta = unit.log_pi + unit.logb[t0]
    psi = np.zeros((t1 - t0 + 1, n), dtype=np.intp)
    for t in range(t0 + 1, t1 + 1):
        cand = delta[:, None] + log_trans
        psi[t - t0] = np.argmax(cand, axis=0)
        delta = cand[psi[t - t0], np.arange(n)] + unit.logb[t]
    if is_last:
        end = int(np.argmax(delta))
        score = float(delta[end])
    else:
        end = unit.final
        score = float(delta[end] + unit.log_exit)
    path = [end]
    for t in range(t1 - t0, 0, -1):
        path.append(int(psi[t, path[-1]]))
    path.reverse()
    return score, path
