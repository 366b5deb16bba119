#!/usr/bin/env python3
"""Convert NYT-style relation records into hmt JSON lines.

Input lines look like
  {"sentText": "...", "entityMentions": [{"text": ..., "label": ...}],
   "relationMentions": [{"em1Text": ..., "em2Text": ..., "label": ...}]}

This is a stub: tokens are whitespace-split, every mention is located at its
first exact token match, and mentions that cannot be located are skipped with
a warning on stderr. Relations labelled "None" are dropped.

usage: convert_nyt.py INPUT OUTPUT
"""

import json
import sys

ENTITY_TYPES = {"PERSON": "PER", "LOCATION": "LOC", "ORGANIZATION": "ORG"}


def find_span(tokens, text):
    words = text.split()
    n = len(words)
    if n == 0:
        return None
    for start in range(len(tokens) - n + 1):
        if tokens[start:start + n] == words:
            return start, start + n - 1
    return None


def overlaps(a, b):
    return a[0] <= b[1] and b[0] <= a[1]


def convert(record, line_no, warn):
    tokens = record["sentText"].split()
    entities, taken = [], []

    def add_entity(text, label):
        span = find_span(tokens, text)
        if span is None:
            warn(f"line {line_no}: mention {text!r} not found")
            return None
        if span not in taken:
            if any(overlaps(span, t) for t in taken):
                warn(f"line {line_no}: mention {text!r} overlaps another; dropped")
                return None
            taken.append(span)
            entities.append({"start": span[0], "end": span[1], "type": ENTITY_TYPES.get(label, "MISC")})
        return span

    labels = {m["text"]: m.get("label", "") for m in record.get("entityMentions", [])}
    for text, label in labels.items():
        add_entity(text, label)

    triples = []
    for rel in record.get("relationMentions", []):
        if rel.get("label", "None") == "None":
            continue
        head = add_entity(rel["em1Text"], labels.get(rel["em1Text"], ""))
        tail = add_entity(rel["em2Text"], labels.get(rel["em2Text"], ""))
        if head is None or tail is None or head == tail:
            continue
        triples.append({"head_start": head[0], "head_end": head[1], "tail_start": tail[0],
                        "tail_end": tail[1], "relation": rel["label"]})
    entities.sort(key=lambda e: e["start"])
    return {"tokens": tokens, "entities": entities, "triples": triples}


def main(argv):
    if len(argv) != 3:
        print(__doc__.strip().splitlines()[-1], file=sys.stderr)
        return 2
    warn = lambda msg: print(f"warning: {msg}", file=sys.stderr)
    with open(argv[1], encoding="utf-8") as src, open(argv[2], "w", encoding="utf-8") as dst:
        for line_no, line in enumerate(src, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                print(f"error: line {line_no}: {e}", file=sys.stderr)
                return 1
            dst.write(json.dumps(convert(record, line_no, warn)) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
