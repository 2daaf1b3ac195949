"""Regenerate four.nt from four.jsonl, independently of the Rust exporter.

Usage: python3 golden_nt.py four.jsonl http://ex.org/ > four.nt
"""
import json
import string
import sys

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
OA = "http://www.w3.org/ns/oa#"
NS = "http://purl.org/workanno/ns#"
META = "http://purl.org/workanno/meta#"
SAFE = set(string.ascii_letters + string.digits + "_.-")


def enc(seg):
    return "".join(c if c in SAFE else "".join("%%%02X" % b for b in c.encode()) for c in seg)


def lit(s):
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    return '"%s"' % out


def num(x):
    s = "%.9g" % x
    assert "e" not in s, s
    return s


def anchor_uri(base, anchor):
    work, _, path = anchor.partition(":")
    # Anchor text is already percent-encoded segment by segment.
    return base + "work/" + work + ("/" + path if path else "")


def main(path, base):
    lines = []
    emit = lambda s, p, o: lines.append("<%s> <%s> %s ." % (s, p, o))
    for line in open(path, encoding="utf-8"):
        if not line.strip():
            continue
        a = json.loads(line)
        subj = base + "annotation/" + enc(a["id"])
        body = subj + "/body"
        b = a["body"]
        emit(subj, RDF_TYPE, "<%sAnnotation>" % OA)
        emit(subj, OA + "hasBody", "<%s>" % body)
        emit(body, NS + "kind", lit(a["kind"]))
        if a["kind"] == "query":
            emit(body, NS + "queryText", lit(b["text"]))
            emit(body, NS + "resultCount", lit(str(b["result_count"])))
        elif a["kind"] == "feature":
            emit(body, NS + "key", lit(b["key"]))
            emit(body, NS + "value", lit(b["key"] + "=" + b["value"]))
        elif a["kind"] == "keyword":
            emit(body, NS + "keyword", lit(b["keyword"]))
        else:
            emit(body, NS + "topicId", lit(b["topic_id"]))
            emit(body, NS + "label", lit(b["label"]))
            for i, w in enumerate(b["words"]):
                node = "%s/word/%d" % (body, i)
                emit(body, NS + "word", "<%s>" % node)
                emit(node, NS + "label", lit(w["word"]))
                emit(node, NS + "weight", lit(num(w["weight"])))
            emit(body, NS + "confidence", lit(num(b["confidence"])))
        for t in a["targets"]:
            uri = t[1:-1] if t.startswith("<") else anchor_uri(base, t)
            emit(subj, OA + "hasTarget", "<%s>" % uri)
        for k in sorted(a["metadata"]):
            emit(subj, META + enc(k), lit(a["metadata"][k]))
    sys.stdout.write("".join(l + "\n" for l in lines))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
