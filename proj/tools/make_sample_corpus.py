#!/usr/bin/env python3
"""Build data/sample_corpus.txt from the public-domain Gutenberg texts of
Shakespeare's plays shipped in the `shakespeare` PyPI sdist
(shakespeare-0.6/shksprdata/texts/*_gut.txt).

Only spoken lines are kept: front matter, act/scene headings, speaker tags
and bracketed stage directions are dropped. Consecutive speeches of a play
are grouped into documents of at least --min-tokens word tokens; documents
are separated by one blank line.
"""
import argparse
import pathlib
import re

TOKEN = re.compile(r"[a-z0-9\x80-￿]+(?:'[a-z0-9\x80-￿]+)*|[^\sa-z0-9\x80-￿]")
HEADING = re.compile(r"^(ACT|SCENE)\b", re.IGNORECASE)
DIRECTION = re.compile(r"\[[^\]]*\]", re.DOTALL)
POEMS = {"lovers_complaint", "passionate_pilgrim", "phoenix_and_the_turtle",
         "rape_of_lucrece", "sonnets"}


def blocks(text):
    cur = []
    for line in text.splitlines():
        line = line.rstrip()
        if line.strip():
            cur.append(line)
        elif cur:
            yield cur
            cur = []
    if cur:
        yield cur


def speeches(text):
    start = re.search(r"^ACT\s+I\b", text, re.MULTILINE | re.IGNORECASE)
    text = DIRECTION.sub("", text[start.start():] if start else text)
    for b in blocks(text):
        b = [l for l in b if l.strip() and not HEADING.match(l.strip())]
        if len(b) > 1 and len(b[0].strip()) <= 30 and b[0].strip().endswith("."):
            b = b[1:]
        elif len(b) == 1:
            continue
        if b:
            yield [l.strip() for l in b]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("texts_dir")
    ap.add_argument("--out", default="data/sample_corpus.txt")
    ap.add_argument("--min-tokens", type=int, default=150)
    args = ap.parse_args()

    docs = []
    for path in sorted(pathlib.Path(args.texts_dir).glob("*_gut.txt")):
        if path.stem.removesuffix("_gut") in POEMS:
            continue
        cur, n = [], 0
        for b in speeches(path.read_text(encoding="utf-8", errors="replace")):
            cur.extend(b)
            n += sum(len(TOKEN.findall(l.lower())) for l in b)
            if n >= args.min_tokens:
                docs.append("\n".join(cur))
                cur, n = [], 0
    pathlib.Path(args.out).write_text("\n\n".join(docs) + "\n", encoding="utf-8")
    print(f"{len(docs)} documents -> {args.out}")


if __name__ == "__main__":
    main()
