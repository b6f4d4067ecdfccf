#!/usr/bin/env python3
"""Fetch the English evaluation corpora used by the desk-scale runs.

The corpora ship inside the `pattern3` source distribution on PyPI
(test/corpora/). They are reduced samples of public datasets and are meant for
personal/research use; they are not redistributed with this repository.

Outputs (JSON lines, one `{"id", "text", "label"?}` object per line):

  data/mr.jsonl               sentence polarity (2000 pos / 2000 neg)
  data/uncertainty.jsonl      CoNLL-2010 Wikipedia hedge detection (1500 / 1500)
  data/review_snippets.jsonl  closing two sentences of each polarity review (750 / 750)
  data/unlabeled.jsonl        every sentence of the review corpus plus the texts
                              of the three labeled sets, labels removed
"""

import argparse
import csv
import io
import json
import os
import sys
import tarfile
import urllib.request

PYPI_JSON = "https://pypi.org/pypi/pattern3/json"
MEMBERS = {
    "reviews": "pattern3-3.0.0/test/corpora/polarity-en-pang&lee1.csv",
    "sentences": "pattern3-3.0.0/test/corpora/polarity-en-pang&lee2.csv",
    "uncertainty": "pattern3-3.0.0/test/corpora/uncertainty-conll2010.csv",
}


def sdist_url():
    with urllib.request.urlopen(PYPI_JSON, timeout=60) as resp:
        meta = json.load(resp)
    for f in meta["urls"]:
        if f["packagetype"] == "sdist":
            return f["url"]
    raise RuntimeError("no sdist published for pattern3")


def read_rows(tar, member):
    raw = tar.extractfile(member).read().decode("utf-8-sig")
    return list(csv.reader(io.StringIO(raw)))


def polarity(value):
    return 1 if value.strip() == "1" else 0


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as out:
        for rec in records:
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"wrote {len(records):6d} records to {path}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--archive", help="use a local pattern3 sdist instead of downloading")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    if args.archive:
        blob = open(args.archive, "rb").read()
    else:
        url = sdist_url()
        print(f"downloading {url}", file=sys.stderr)
        with urllib.request.urlopen(url, timeout=600) as resp:
            blob = resp.read()

    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        reviews = read_rows(tar, MEMBERS["reviews"])
        sentences = read_rows(tar, MEMBERS["sentences"])
        hedges = read_rows(tar, MEMBERS["uncertainty"])

    mr = [
        {"id": f"mr-{i}", "text": text.strip(), "label": polarity(lab)}
        for i, (lab, text) in enumerate(sentences)
        if text.strip()
    ]
    unc = [
        {"id": f"unc-{i}", "text": text.strip(), "label": polarity(lab)}
        for i, (lab, text) in enumerate(hedges)
        if text.strip()
    ]

    snippets = []
    unlabeled = []
    for i, (lab, text) in enumerate(reviews):
        lines = [ln.strip() for ln in text.split("\n") if ln.strip()]
        for j, ln in enumerate(lines):
            unlabeled.append({"id": f"rev-{i}-{j}", "text": ln})
        if lines:
            snippets.append(
                {"id": f"snip-{i}", "text": " ".join(lines[-2:]), "label": polarity(lab)}
            )

    for rec in mr + unc:
        unlabeled.append({"id": f"u-{rec['id']}", "text": rec["text"]})

    write_jsonl(os.path.join(args.out, "mr.jsonl"), mr)
    write_jsonl(os.path.join(args.out, "uncertainty.jsonl"), unc)
    write_jsonl(os.path.join(args.out, "review_snippets.jsonl"), snippets)
    write_jsonl(os.path.join(args.out, "unlabeled.jsonl"), unlabeled)


if __name__ == "__main__":
    main()
