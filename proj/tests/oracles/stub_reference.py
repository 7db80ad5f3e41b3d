"""Independent evaluation of the stub backend from its documented rules.

* tokens: whitespace dropped; runs of [A-Za-z0-9_] or non-ASCII bytes; the
  longest listed operator, else one byte (re module, not the C++ scanner);
* embeddings: SplitMix64 stream seeded with mix(seed, fnv1a64(surface)),
  Box-Muller cosine branch;
* fragment scores: mean-pool cosine and greedy matching over the fixture
  corpus at seed 7, dim 64;
* attention: W_Q, W_K, W_V ~ N(0, 1/d), shape d_k x d, drawn head by head
  from mix(seed, WEIGHT_SALT); A = softmax(E W_Q^T (E W_K^T)^T / sqrt(d_k)).

Writes tests/data/stub_expected.json.
"""

import json
import math
import pathlib
import re

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[2]
MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
WEIGHT_SALT = 0x5354554257454947
OPERATORS = ["**=", "//=", ">>=", "<<=", "...", "==", "!=", "<=", ">=", "//", "**", "+=",
             "-=", "*=", "/=", "%=", "&=", "|=", "^=", "->", "<<", ">>", ":=", "@="]
TOKEN_RE = re.compile(
    rb"[A-Za-z0-9_\x80-\xff]+|" + b"|".join(re.escape(op.encode()) for op in sorted(OPERATORS, key=len, reverse=True)) + rb"|\S",
)


def finalize(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def mix(seed, salt):
    return finalize(seed ^ ((salt * GOLDEN) & MASK))


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


class SplitMix:
    def __init__(self, seed):
        self.state = seed

    def next(self):
        self.state = (self.state + GOLDEN) & MASK
        return finalize(self.state)

    def uniform(self):
        return (self.next() >> 11) * 2.0 ** -53

    def normal(self):
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def tokens(source):
    data = source.encode("utf-8")
    return [(m.group().decode("utf-8", "surrogateescape"), m.start(), m.end()) for m in TOKEN_RE.finditer(data)]


def embed(surfaces, seed, dim):
    rows = []
    for s in surfaces:
        rng = SplitMix(mix(seed, fnv1a64(s.encode("utf-8"))))
        rows.append([rng.normal() for _ in range(dim)])
    return np.array(rows)


def attention(e, seed, heads):
    n, d = e.shape
    dk = d // heads
    rng = SplitMix(mix(seed, WEIGHT_SALT))
    draw = lambda: np.array([[rng.normal() / math.sqrt(d) for _ in range(d)] for _ in range(dk)])
    out = []
    for _ in range(heads):
        wq, wk, _wv = draw(), draw(), draw()
        logits = (e @ wq.T) @ (e @ wk.T).T / math.sqrt(dk)
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        out.append(p / p.sum(axis=1, keepdims=True))
    return np.array(out)


def fragment_scores(embeddings):
    names = list(embeddings)
    unit = {k: v / np.linalg.norm(v, axis=1, keepdims=True) for k, v in embeddings.items()}
    greedy, mean = [], []
    for a in names:
        grow, mrow = [], []
        for b in names:
            c = unit[a] @ unit[b].T
            grow.append(0.5 * (c.max(axis=1).mean() + c.max(axis=0).mean()))
            u, v = embeddings[a].mean(axis=0), embeddings[b].mean(axis=0)
            mrow.append(float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v))))
        greedy.append(grow)
        mean.append(mrow)
    return {"ids": names, "greedy_match": greedy, "mean_pool_cosine": mean}


def main():
    fixtures = {name: (ROOT / "fixtures" / f"{name}.py").read_text(encoding="utf-8")
                for name in ["bubble_sort", "selection_sort", "insertion_sort", "merge_sort", "quick_sort"]}
    out = {"token_counts": {k: len(tokens(v)) for k, v in fixtures.items()},
           "bubble_sort_tokens": tokens(fixtures["bubble_sort"])}
    out["fragment_matrix"] = fragment_scores(
        {k: embed([t[0] for t in tokens(v)], 7, 64) for k, v in fixtures.items()})
    cases = []
    for source, seed, dim, heads in [("i += n;", 7, 64, 4), ("x = y ** 2", 123, 8, 2)]:
        toks = tokens(source)
        e = embed([t[0] for t in toks], seed, dim)
        cases.append({"source": source, "seed": seed, "dim": dim, "heads": heads,
                      "tokens": [t[0] for t in toks], "embeddings": e.tolist(),
                      "attention": attention(e, seed, heads).tolist()})
    out["cases"] = cases
    (ROOT / "tests" / "data" / "stub_expected.json").write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
