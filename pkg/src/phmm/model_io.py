"""Model-file serialization: lexicon structure, per-channel inventories
with full model parameters, and a provenance block.

One JSON document per file, full-precision decimal numbers, versioned
with format_version. Loading a file with a higher version fails loudly.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import __version__
from .emissions import DiscreteEmission, GaussianEmission
from .errors import FileFormatError
from .hmm import Hmm, Topology
from .lexicon import Lexicon, PhonemeInventory, Sign, validate_lexicon

FORMAT_VERSION = 1


def config_hash(config):
    """Stable hash of a JSON-serializable configuration mapping."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _matrix(values):
    return [[float(v) for v in row] for row in np.asarray(values, dtype=float)]


def _emission_to_json(em):
    if isinstance(em, DiscreteEmission):
        return {"kind": "discrete", "probs": _matrix(em.probs)}
    if isinstance(em, GaussianEmission):
        return {
            "kind": "gaussian",
            "means": _matrix(em.means),
            "variances": _matrix(em.variances),
        }
    raise FileFormatError(f"cannot serialize emission model {type(em)!r}")


def _emission_from_json(data):
    kind = data.get("kind")
    if kind == "discrete":
        return DiscreteEmission(np.asarray(data["probs"], dtype=float))
    if kind == "gaussian":
        return GaussianEmission(
            np.asarray(data["means"], dtype=float),
            np.asarray(data["variances"], dtype=float),
        )
    raise FileFormatError(f"unknown emission kind {kind!r}")


def _hmm_to_json(model):
    return {
        "topology": model.topology.value,
        "pi": [float(v) for v in model.pi],
        "trans": _matrix(model.trans),
        "emission": _emission_to_json(model.emissions),
    }


def _hmm_from_json(data):
    return Hmm(
        pi=np.asarray(data["pi"], dtype=float),
        trans=np.asarray(data["trans"], dtype=float),
        emissions=_emission_from_json(data["emission"]),
        topology=Topology(data["topology"]),
    )


def lexicon_to_json(lexicon, provenance=None):
    return {
        "format_version": FORMAT_VERSION,
        "provenance": dict(provenance or {}, tool_version=__version__),
        "channels": list(lexicon.channels),
        "epenthesis_policy": lexicon.epenthesis_policy,
        "exit_prob": float(lexicon.exit_prob),
        "inventories": {
            ch: {
                "epenthesis": inv.epenthesis,
                "phonemes": {
                    pid: _hmm_to_json(m) for pid, m in inv.phonemes.items()
                },
            }
            for ch, inv in lexicon.inventories.items()
        },
        "signs": {
            sid: {ch: list(seq) for ch, seq in sign.channels.items()}
            for sid, sign in lexicon.signs.items()
        },
    }


def lexicon_from_json(data):
    version = data.get("format_version")
    if not isinstance(version, int) or version > FORMAT_VERSION:
        raise FileFormatError(
            f"unsupported format_version {version!r} (supported: {FORMAT_VERSION})"
        )
    inventories = {}
    for ch, inv in data["inventories"].items():
        inventories[ch] = PhonemeInventory(
            phonemes={pid: _hmm_from_json(m) for pid, m in inv["phonemes"].items()},
            epenthesis=inv.get("epenthesis"),
        )
    signs = {
        sid: Sign(sid, {ch: list(seq) for ch, seq in chans.items()})
        for sid, chans in data["signs"].items()
    }
    lexicon = Lexicon(
        channels=list(data["channels"]),
        inventories=inventories,
        signs=signs,
        epenthesis_policy=data.get("epenthesis_policy", "none"),
        exit_prob=float(data.get("exit_prob", 0.5)),
    )
    validate_lexicon(lexicon)
    return lexicon, data.get("provenance", {})


def save_model(path, lexicon, provenance=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(lexicon_to_json(lexicon, provenance), fh)
        fh.write("\n")


def load_model(path):
    """Returns (lexicon, provenance); the lexicon is fully validated."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"invalid model file: {exc}") from exc
    return lexicon_from_json(data)
