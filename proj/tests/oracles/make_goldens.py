#!/usr/bin/env python3
"""Reference implementations used to produce the frozen golden files.

Nothing here imports or runs the C++ code. Each oracle re-implements one
documented rule in plain Python:

  split      paragraph / sentence splitting with byte spans
  hashing    seeded FNV-1a + splitmix64 feature hashing
  tfidf      n-gram candidates and tf * idf * token_count weights
  counts     manifest documents and SKOS concepts
  linking    exact-then-shortest label linking and breadth-first expansion

Run from the repository root:  python3 tests/oracles/make_goldens.py
"""

import json
import math
import random
import re
import sys
import unicodedata
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
GOLDEN = ROOT / "tests" / "golden"
FIXTURES = ROOT / "fixtures"

MASK64 = (1 << 64) - 1

# ---------------------------------------------------------------- split

ASCII_WS = b" \t\n\r\f\v"


def normalize_body(text: str) -> bytes:
    text = unicodedata.normalize("NFC", text).replace("\r\n", "\n").replace("\r", "\n")
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.encode("utf-8")


def strip_span(body: bytes, s: int, e: int):
    while s < e and body[s] in ASCII_WS:
        s += 1
    while e > s and body[e - 1] in ASCII_WS:
        e -= 1
    return s, e


def blank(line: bytes) -> bool:
    return line.decode("utf-8").strip() == ""


def paragraph_spans(body: bytes):
    spans, start, pos, end = [], None, 0, 0
    for line in body.split(b"\n"):
        if blank(line):
            if start is not None:
                spans.append(strip_span(body, start, end))
                start = None
        else:
            if start is None:
                start = pos
            end = pos + len(line)
        pos += len(line) + 1
    if start is not None:
        spans.append(strip_span(body, start, end))
    return spans


def sentence_spans(body: bytes, s: int, e: int):
    out, start = [], s
    for m in re.finditer(rb"[.?!](?=[ \t\n\r\f\v])", body[s:e]):
        cut = s + m.end()
        piece = strip_span(body, start, cut)
        if piece[1] > piece[0]:
            out.append(piece)
        start = cut
    piece = strip_span(body, start, e)
    if piece[1] > piece[0]:
        out.append(piece)
    return out


def hard_pieces(body: bytes, s: int, e: int, limit: int):
    out, pos = [], s
    while pos < e:
        if e - pos <= limit:
            out.append((pos, e))
            break
        window = body[pos:pos + limit + 1]
        ws = max(window.rfind(bytes([c])) for c in ASCII_WS)
        if ws > 0:
            piece = strip_span(body, pos, pos + ws)
            if piece[1] > piece[0]:
                out.append(piece)
            pos += ws
        else:
            cut = pos + limit
            while cut > pos and (body[cut] & 0xC0) == 0x80:
                cut -= 1
            if cut == pos:
                cut = pos + limit
            out.append((pos, cut))
            pos = cut
        while pos < e and body[pos] in ASCII_WS:
            pos += 1
    return out


def closes_sentence(body: bytes, s: int, e: int) -> bool:
    trimmed = body[s:e].rstrip(b"\"')]")
    return bool(trimmed) and trimmed[-1:] in (b".", b"?", b"!")


def split(text: str, min_chars=80, max_chars=2000):
    body = normalize_body(text)
    pieces = []
    for s, e in paragraph_spans(body):
        if e - s <= max_chars:
            pieces.append((s, e))
            continue
        chunk = None
        for ss, se in sentence_spans(body, s, e):
            if chunk and se - chunk[0] <= max_chars:
                chunk = (chunk[0], se)
                continue
            if chunk:
                pieces.append(chunk)
            chunk = None
            if se - ss > max_chars:
                pieces.extend(hard_pieces(body, ss, se, max_chars))
            else:
                chunk = (ss, se)
        if chunk:
            pieces.append(chunk)
    merged, i = [], 0
    while i < len(pieces):
        s, e = pieces[i]
        while (e - s < min_chars and not closes_sentence(body, s, e) and i + 1 < len(pieces)
               and pieces[i + 1][1] - s <= max_chars):
            i += 1
            e = pieces[i][1]
        merged.append((s, e))
        i += 1
    return [{"ordinal": n, "span": [s, e], "text": body[s:e].decode("utf-8")} for n, (s, e) in enumerate(merged)]


def long_paragraph() -> str:
    rng = random.Random(20240101)
    vocab = ("household survey panel employment income welfare policy care model data "
             "measurement sample weight response attitude regime family labour market").split()
    sentences = []
    while sum(len(s) + 1 for s in sentences) < 7400:
        n = rng.randint(6, 40)
        words = [rng.choice(vocab) for _ in range(n)]
        sentences.append(" ".join(words).capitalize() + rng.choice([".", ".", ".", "?", "!"]))
    # one run-on sentence longer than the fragment limit
    run_on = " ".join(rng.choice(vocab) for _ in range(330)).capitalize() + "."
    sentences.insert(len(sentences) // 2, run_on)
    text = " ".join(sentences)
    while len(text) < 10000:
        text += " " + " ".join(rng.choice(vocab) for _ in range(8)).capitalize() + "."
    return text[:10000].rstrip() + "."


# ---------------------------------------------------------------- hashing

def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def seeded_hash64(data: bytes, seed: int) -> int:
    h = 0xCBF29CE484222325 ^ splitmix64(seed)
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return splitmix64(h)


DEFAULT_SEED = 0x5EED5EED5EED5EED
SIGN_SALT = 0x9E3779B97F4A7C15


def tokens(text: str):
    # ASCII-only oracle inputs: alnum runs, lowercased
    return re.findall(r"[a-z0-9]+", text.lower())


def hash_embed(text: str, dim=256, seed=DEFAULT_SEED):
    v = [0.0] * dim
    for t in tokens(text):
        b = t.encode("utf-8")
        bucket = seeded_hash64(b, seed) % dim
        v[bucket] += 1.0 if seeded_hash64(b, seed ^ SIGN_SALT) & 1 else -1.0
    norm = math.sqrt(sum(x * x for x in v))
    return [x / norm for x in v]


# ---------------------------------------------------------------- tfidf

def stopwords():
    src = (ROOT / "core" / "src" / "stopwords.cpp").read_text()
    return set(re.findall(r'"([a-z]+)"', src))


def segments(text: str):
    segs, cur = [], []
    for m in re.finditer(r"[a-z0-9]+|[-'\s]+|[^a-z0-9\s'-]", text.lower()):
        tok = m.group(0)
        if re.fullmatch(r"[a-z0-9]+", tok):
            cur.append(tok)
        elif re.fullmatch(r"[-'\s]+", tok):
            continue
        elif cur:
            segs.append(cur)
            cur = []
    if cur:
        segs.append(cur)
    return segs


def tfidf(fragments, max_n=3):
    stop = stopwords()

    def edge(t):
        return len(t) > 1 and not t.isdigit() and t not in stop

    per_frag = [segments(text) for _, text in fragments]
    cands = set()
    for segs in per_frag:
        for seg in segs:
            for i in range(len(seg)):
                for n in range(1, max_n + 1):
                    if i + n <= len(seg) and edge(seg[i]) and edge(seg[i + n - 1]):
                        cands.add(" ".join(seg[i:i + n]))
    distinct = {text for _, text in fragments}
    out = []
    for c in cands:
        tf, srcs, texts = 0, [], set()
        width = c.count(" ") + 1
        for (fid, text), segs in zip(fragments, per_frag):
            hits = sum(1 for seg in segs for i in range(len(seg) - width + 1) if " ".join(seg[i:i + width]) == c)
            if hits:
                tf += hits
                srcs.append(fid)
                texts.add(text)
        idf = math.log((1 + len(distinct)) / (1 + len(texts))) + 1
        out.append({"surface": c, "weight": tf * idf * width, "source_fragments": srcs})
    out.sort(key=lambda t: (-t["weight"], t["surface"]))
    return out


# ---------------------------------------------------------------- linking

def fold(s: str) -> str:
    return " ".join(unicodedata.normalize("NFC", s).lower().split())


def ordered_labels(c):
    out = [(lbl, lang) for lang, lbl in sorted(c.get("prefLabel", {}).items())]
    for lang, lbls in sorted(c.get("altLabel", {}).items()):
        out += [(lbl, lang) for lbl in lbls]
    return out


def relations(c):
    out = []
    for iri in c.get("related", []) + c.get("broader", []):
        if iri not in out:
            out.append(iri)
    return out


def link_and_expand(kos, surface, weight, languages=(), depth=1, hop_decay=0.5, max_related=8):
    concepts = {c["iri"]: c for c in kos["concepts"]}
    folded = fold(surface)
    allowed = (lambda lang: not languages or lang in languages)
    best = None  # (rank, iri)
    for iri, c in concepts.items():
        for lbl, _ in ordered_labels(c):
            fl = fold(lbl)
            if fl == folded:
                rank = 0
            else:
                toks, want = re.findall(r"\w+", fl), re.findall(r"\w+", folded)
                if not any(toks[i:i + len(want)] == want for i in range(len(toks))):
                    continue
                rank = len(lbl)
            if best is None or (rank, iri) < best:
                best = (rank, iri)
    if best is None:
        return {"surface": surface, "concept_iri": None, "expansion_labels": []}
    iri = best[1]
    base = min(weight, 1.0)
    seen = {folded}
    labels = []
    for lbl, lang in ordered_labels(concepts[iri]):
        if allowed(lang) and fold(lbl) not in seen:
            seen.add(fold(lbl))
            labels.append({"label": lbl, "language": lang, "weight": base})
    visited, frontier, added = {iri}, [iri], 0
    for hop in range(1, depth + 1):
        nxt = sorted({r for f in frontier for r in relations(concepts[f]) if r not in visited})
        w = base * hop_decay ** hop
        for r in nxt:
            visited.add(r)
            for lbl, lang in ordered_labels(concepts[r]):
                if added >= max_related:
                    break
                if allowed(lang) and fold(lbl) not in seen:
                    seen.add(fold(lbl))
                    labels.append({"label": lbl, "language": lang, "weight": w})
                    added += 1
        frontier = nxt
    return {"surface": surface, "concept_iri": iri, "expansion_labels": labels}


# ---------------------------------------------------------------- main

def write(name, obj):
    path = GOLDEN / name
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print("wrote", path.relative_to(ROOT))


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)

    para = long_paragraph()
    (GOLDEN / "long_paragraph.txt").write_text(para, encoding="utf-8")
    frags = split(para, 80, 2000)
    assert len(frags) >= 5 and all(len(f["text"].encode()) <= 2000 for f in frags)
    write("long_paragraph.split.json", {"min_fragment_chars": 80, "max_fragment_chars": 2000, "fragments": frags})

    manifest = json.loads((FIXTURES / "mda-mini.json").read_text(encoding="utf-8"))
    ids = [d["doc_id"] for d in manifest["documents"]]
    per_doc = {}
    for doc_id in ids:
        body = (FIXTURES / "mda-mini" / f"{doc_id}.txt").read_text(encoding="utf-8")
        per_doc[doc_id] = len(split(body))
    write("mda-mini.counts.json", {"documents": len(ids), "distinct_doc_ids": len(set(ids)),
                                   "fragments": sum(per_doc.values()), "fragments_per_document": per_doc})

    kos = json.loads((FIXTURES / "kos-mini.ttl-json").read_text(encoding="utf-8"))
    write("kos-mini.counts.json", {"concepts": len(kos["concepts"]),
                                   "iris": sorted(c["iri"] for c in kos["concepts"])})

    cases = [
        {"surface": "male breadwinner model", "weight": 0.5, "languages": [], "depth": 1},
        {"surface": "male breadwinner model", "weight": 0.5, "languages": ["de"], "depth": 0},
        {"surface": "male breadwinner model", "weight": 3.0, "languages": ["en"], "depth": 2},
        {"surface": "care", "weight": 1.0, "languages": ["en"], "depth": 1},
        {"surface": "breadwinner", "weight": 0.25, "languages": [], "depth": 1},
        {"surface": "regression discontinuity", "weight": 1.0, "languages": [], "depth": 1},
    ]
    for case in cases:
        case["expected"] = link_and_expand(kos, case["surface"], case["weight"], case["languages"], case["depth"])
    write("kos-mini.linking.json", {"hop_decay": 0.5, "max_related_labels": 8, "cases": cases})

    texts = {
        "a": "male breadwinner model",
        "b": "the male breadwinner model and the male breadwinner model",
        "c": "survey weighting calibration nonresponse",
        "d": "telephone interviews mode effects",
    }
    vectors = {k: hash_embed(v) for k, v in texts.items()}
    cos = {f"{x}-{y}": sum(p * q for p, q in zip(vectors[x], vectors[y]))
           for x in texts for y in texts if x < y}
    write("hashing_vectors.json", {"dimension": 256, "seed": f"{DEFAULT_SEED:x}", "texts": texts,
                                   "vectors": vectors, "cosines": cos})

    corpus = [
        ("t:0", "The male breadwinner model shaped welfare states. Welfare states changed."),
        ("t:1", "Dual earner households replaced the male breadwinner model in many countries."),
        ("t:2", "Time-use surveys measure unpaid care work; care work is unpaid."),
        ("t:3", "Dual earner households replaced the male breadwinner model in many countries."),
    ]
    write("tfidf_small.json", {"fragments": [{"fragment_id": f, "text": t} for f, t in corpus],
                               "terms": tfidf(corpus)})


if __name__ == "__main__":
    sys.exit(main())
