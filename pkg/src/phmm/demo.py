"""Built-in demo lexicon: 3 channels, 8 signs, well-separated discrete
emissions.

Each channel has four content phonemes plus an epenthesis filler, all
3-state left-to-right models. Every phoneme owns a private pair of
symbols carrying all of its emission mass (tilted per state), so signs
are nearly unambiguous and generate-and-recover pipelines have a known
good answer.
"""

from __future__ import annotations

import numpy as np

from .emissions import DiscreteEmission
from .hmm import Hmm, Topology
from .lexicon import (
    DEFAULT_CHANNELS,
    EPENTHESIS_BETWEEN_SIGNS,
    Lexicon,
    PhonemeInventory,
    Sign,
)

N_CONTENT = 4
N_STATES = 3
STATE_TILT = (0.8, 0.5, 0.2)
SELF_LOOP = 0.5


def _phoneme_model(own_pair, alphabet_size):
    probs = np.zeros((N_STATES, alphabet_size))
    lo, hi = own_pair
    for s, tilt in enumerate(STATE_TILT):
        probs[s, lo] = tilt
        probs[s, hi] = 1.0 - tilt
    trans = np.zeros((N_STATES, N_STATES))
    for i in range(N_STATES - 1):
        trans[i, i] = SELF_LOOP
        trans[i, i + 1] = 1.0 - SELF_LOOP
    trans[-1, -1] = 1.0
    pi = np.zeros(N_STATES)
    pi[0] = 1.0
    return Hmm(pi, trans, DiscreteEmission(probs), Topology.LEFT_TO_RIGHT)


def demo_lexicon():
    """The 8-sign, 3-channel demo lexicon with epenthesis between signs."""
    alphabet = 2 * (N_CONTENT + 1)
    prefixes = {"right_hand": "R", "left_hand": "L", "head": "H"}
    inventories = {}
    for ch in DEFAULT_CHANNELS:
        tag = prefixes[ch]
        phonemes = {}
        for k in range(N_CONTENT):
            phonemes[f"{tag}{k}"] = _phoneme_model((2 * k, 2 * k + 1), alphabet)
        eps_id = f"{tag}_eps"
        phonemes[eps_id] = _phoneme_model((2 * N_CONTENT, 2 * N_CONTENT + 1), alphabet)
        inventories[ch] = PhonemeInventory(phonemes=phonemes, epenthesis=eps_id)

    signs = {}
    for k in range(8):
        right = k % 4
        left = (k // 2) % 4
        head = (k % 4 + k // 4) % 4
        sid = f"sign{k}"
        signs[sid] = Sign(
            sid,
            {
                "right_hand": [f"R{right}"],
                "left_hand": [f"L{left}"],
                "head": [f"H{head}"],
            },
        )
    return Lexicon(
        channels=list(DEFAULT_CHANNELS),
        inventories=inventories,
        signs=signs,
        epenthesis_policy=EPENTHESIS_BETWEEN_SIGNS,
    )
