"""Writes goldens.json from SacreBLEU (pinned to 2.6.0).

Run from this directory: python3 generate.py
"""

import json
import random

import sacrebleu
from sacrebleu.metrics import BLEU
from sacrebleu.tokenizers.tokenizer_13a import Tokenizer13a

assert sacrebleu.__version__ == "2.6.0", sacrebleu.__version__

WORDS = [
    "the", "cat", "sat", "on", "mat", "a", "dog", "ran", "le", "chat", "est",
    "sur", "tapis", "Ehud", "Ur", "U.S.", "3.5", "1,000", "e-mail", "don't",
    "(yes)", "\"quoted\"", "end.", "comma,", "x-ray", "10-20", "&amp;", "&lt;b&gt;",
    "naïve", "Größe", "été", "?", "!", "--", "$5", "50%", "a/b", "C++", "[ok]",
]


def sentence(rng, lo, hi):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(lo, hi)))


def perturb(rng, ref):
    toks = ref.split()
    out = []
    for t in toks:
        r = rng.random()
        if r < 0.15:
            continue
        if r < 0.3:
            out.append(rng.choice(WORDS))
        else:
            out.append(t)
        if rng.random() < 0.05:
            out.append(rng.choice(WORDS))
    return " ".join(out)


def score(name, hyps, refs):
    res = BLEU().corpus_score(hyps, [refs])
    return {
        "name": name,
        "hyps": hyps,
        "refs": refs,
        "score": res.score,
        "precisions": res.precisions,
        "brevity_penalty": res.bp,
        "hyp_len": res.sys_len,
        "ref_len": res.ref_len,
    }


def main():
    rng = random.Random(20240611)
    corpora = []
    for i in range(20):
        n = rng.randint(1, 8)
        refs = [sentence(rng, 1, 14) for _ in range(n)]
        hyps = [perturb(rng, r) if rng.random() < 0.85 else sentence(rng, 0, 10) for r in refs]
        corpora.append(score(f"random-{i:02}", hyps, refs))

    hand = [
        score("identical", ["the cat sat on the mat .", "a dog ran"], ["the cat sat on the mat .", "a dog ran"]),
        score("empty-hypothesis", [""], ["the cat sat on the mat"]),
        score("no-overlap", ["foo bar baz qux"], ["the cat sat on the mat"]),
        score("short-hypothesis", ["the cat sat"], ["the cat sat on the mat today"]),
        score(
            "punctuation-and-trailing-space",
            ["Hello, world! It costs $5.50 (approx.) \t ", "The U.S.-based e-mail&amp;co."],
            ["Hello , world ! It costs $ 5.50 ( approx . )", "The U.S.-based e-mail & co ."],
        ),
    ]

    tok = Tokenizer13a()
    texts = [
        "Hello, world!",
        "It costs $5.50 (approx.)",
        "The U.S.-based 10-20 e-mail",
        "a&amp;b &lt;tag&gt; &quot;q&quot;",
        "line-\nbreak and\nnewline",
        "<skipped> 1,000.5 people.",
        "naïve Größe été, déjà-vu.",
        "tab\tseparated\x1cfile\x1fsep",
        "trailing dot. and,comma",
        "{braces} [brackets] `tick` ~tilde^ @at #hash",
    ]
    tokenize = [{"text": t, "tokens": tok(t).split()} for t in texts]

    with open("goldens.json", "w", encoding="utf-8") as f:
        json.dump({"corpora": corpora + hand, "tokenize": tokenize}, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
