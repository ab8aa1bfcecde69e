#!/usr/bin/env python3
"""Builds the offline fixture under data/fixture.

The corpus is synthetic. Each record has a topic (a handful of content words).
Ground-truth and model answers describe the topic in a plain factual register;
fabricated answers mention the topic less, introduce invented proper names and
use an embellished register. Embeddings come from "fixture-bow-128", a signed
hashed bag of words, and are written in the same cache layout the C++ embedder
reads, so the pipeline runs without any provider.

Usage: scripts/make_fixture.py [--out data/fixture] [--records 500] [--seed 7]
"""

import argparse
import hashlib
import json
import math
import random
from pathlib import Path

MODEL = "fixture-bow-128"
DIM = 128

CONTENT = """
river harbor valley mountain glacier desert forest island canal bridge castle temple
library museum railway airport market cathedral fortress village province coast
wheat copper cotton silk salt timber coffee tobacco wool iron tin silver gold marble
comet planet orbit eclipse nebula telescope satellite asteroid meteor galaxy
vaccine enzyme protein fungus bacteria virus neuron muscle bone cell tissue organ
treaty empire republic monarchy senate parliament council dynasty charter colony
violin piano opera ballet sonnet novel fresco mosaic sculpture tapestry chorus
engine turbine boiler piston magnet battery circuit lens prism compass clock
falcon salmon beetle orchid cedar maple tulip coral whale sparrow otter bison
volcano earthquake monsoon drought flood tide current storm avalanche lightning
algebra geometry calculus theorem prime fraction equation lattice matrix vector
printing weaving pottery brewing mining smelting tanning milling baking dyeing
""".split()

FACTUAL = """
the is was in of and a to by for from with on as at which it its
located established built known mainly primarily commonly generally usually often
region century period early late northern southern eastern western central
used produced recorded documented measured studied described observed considered
important major significant large small several many most some both
because since during after before between across through within around
""".split()

CONVERSATIONAL = """
basically honestly well essentially really simply just actually pretty quite
""".split()

EMBELLISHED = """
renowned legendary acclaimed celebrated pioneering visionary fabled illustrious
secret hidden lost forgotten rediscovered unprecedented extraordinary remarkable
according archives manuscript treatise chronicle codex decree society institute
academy foundation expedition guild order brotherhood commission laureate
professor doctor baron countess admiral sage master founder inventor
reportedly allegedly famously triumphantly mysteriously ultimately astonishingly
""".split()

SYLLABLES = "zor val ix quen mar thal bri dov ost rem kai lun fen sar tov gri".split()


def clean_text(text: str) -> str:
    """Same rules as the library: strip tags repeatedly, drop controls,
    collapse whitespace, lowercase ASCII."""
    while True:
        out, removed, i = [], False, 0
        while i < len(text):
            if text[i] == "<":
                close = text.find(">", i + 1)
                if close != -1:
                    out.append(" ")
                    i = close + 1
                    removed = True
                    continue
            out.append(text[i])
            i += 1
        text = "".join(out)
        if not removed:
            break
    result, pending = [], False
    for ch in text:
        c = ord(ch)
        if ch == " " or 9 <= c <= 13:
            pending = bool(result)
            continue
        if c < 0x20 or c == 0x7F:
            continue
        if pending:
            result.append(" ")
            pending = False
        result.append(ch.lower() if "A" <= ch <= "Z" else ch)
    return "".join(result)


def embed(cleaned: str) -> list:
    counts = {}
    for token in cleaned.split():
        token = token.strip(".,;:!?\"'()")
        if token:
            counts[token] = counts.get(token, 0) + 1
    v = [0.0] * DIM
    for token, c in counts.items():
        h = hashlib.sha256(token.encode()).digest()
        idx = int.from_bytes(h[:8], "big") % DIM
        sign = 1.0 if h[8] & 1 else -1.0
        v[idx] += sign * (1.0 + math.log(c))
    norm = math.sqrt(sum(x * x for x in v))
    return [round(x / norm, 8) for x in v]


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def cache_name(cleaned: str) -> str:
    return sha256_hex(MODEL + "\n" + sha256_hex(cleaned)) + ".json"


def invented_name(rng: random.Random) -> str:
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3))).capitalize()


def compose(rng, length, pools):
    """`length` words drawn from weighted pools, first letter capitalised and
    sentences of 8-14 words."""
    names, weights = zip(*pools)
    words = [rng.choice(rng.choices(names, weights)[0]) for _ in range(length)]
    out, since = [], 0
    for i, w in enumerate(words):
        if since == 0:
            w = w[:1].upper() + w[1:]
        since += 1
        if since >= rng.randint(8, 14) or i == length - 1:
            w += "."
            since = 0
        out.append(w)
    return " ".join(out)


def make_record(i, rng):
    topic = rng.sample(CONTENT, 6)
    question = f"What is known about the {topic[0]} of the {topic[1]} {topic[2]} (case {i})?"
    gt = compose(rng, rng.randint(52, 68), [(topic, 0.40), (FACTUAL, 0.60)])
    mc = compose(rng, rng.randint(52, 68), [(topic, 0.35), (FACTUAL, 0.50), (CONVERSATIONAL, 0.15)])
    names = [invented_name(rng) for _ in range(4)]
    fab = compose(rng, rng.randint(52, 68),
                  [(topic, 0.20), (names, 0.15), (EMBELLISHED, 0.35), (FACTUAL, 0.30)])
    return {"id": f"q{i:04d}", "question": question, "ground_truth": gt}, mc, fab


def dirty(text, rng):
    """Markup and case noise that cleaning removes."""
    words = text.split(" ")
    k = rng.randrange(len(words))
    words[k] = f"<b>{words[k]}</b>"
    return "<p>" + " ".join(words).upper() + "</p>"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "fixture"))
    ap.add_argument("--records", type=int, default=500)
    ap.add_argument("--queries", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    rng = random.Random(args.seed)

    records, replay, texts = [], [], []
    for i in range(args.records):
        rec, mc, fab = make_record(i, rng)
        if i % 25 == 0:
            rec["ground_truth"] = dirty(rec["ground_truth"], rng)
        records.append(rec)
        replay.append({"id": rec["id"], "kind": "model_correct", "text": mc})
        replay.append({"id": rec["id"], "kind": "hallucinated_fabrication", "text": fab})
        texts += [rec["ground_truth"], mc, fab]

    raw = list(records)
    # repeated questions (dropped by dedup) and out-of-window answers (dropped by the filter)
    for j in range(0, 10):
        src = records[j * 37]
        raw.append({"id": f"dup{j}", "question": "  " + src["question"].upper(), "ground_truth": src["ground_truth"]})
    for j in range(0, 10):
        n = 30 if j % 2 else 90
        raw.append({"id": f"len{j}", "question": f"Out of window question {j}?",
                    "ground_truth": " ".join(["word"] * n)})

    queries = []
    for j in range(args.queries):
        rec, mc, fab = make_record(args.records + j, rng)
        text = [rec["ground_truth"], mc, fab][j % 3]
        queries.append({"id": f"query{j:02d}", "text": text})
        texts.append(text)

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "raw_corpus.jsonl", "w") as f:
        for r in raw:
            f.write(json.dumps(r) + "\n")
    with open(out / "replay.jsonl", "w") as f:
        for r in replay:
            f.write(json.dumps(r) + "\n")
    with open(out / "queries.jsonl", "w") as f:
        for q in queries:
            f.write(json.dumps(q) + "\n")

    cache = out / "embeddings"
    cache.mkdir(exist_ok=True)
    for stale in cache.glob("*.json"):
        stale.unlink()
    for text in texts:
        cleaned = clean_text(text)
        entry = {"model": MODEL, "text_sha256": sha256_hex(cleaned), "embedding": embed(cleaned)}
        (cache / cache_name(cleaned)).write_text(json.dumps(entry, separators=(",", ":")) + "\n")

    config = {
        "corpus": "raw_corpus.jsonl",
        "preprocess": {"l_min": 50, "l_max": 70},
        "generator": {"replay": "replay.jsonl", "kinds": ["model_correct", "hallucinated_fabrication"],
                      "endpoint": "http://127.0.0.1:9"},
        "embedder": {"backend": "fixture", "model": MODEL, "cache_dir": "embeddings"},
        "umap": {"n_neighbors": 10, "min_dist": 0.2, "spread": 1.2, "learning_rate": 0.8, "n_components": 3},
        "seeds": [50, 100, 150, 200],
        "classify": {"input": "queries.jsonl"},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"{len(raw)} raw records, {len(replay)} replay answers, {len(texts)} cached embeddings")


if __name__ == "__main__":
    main()
