#!/usr/bin/env python3
"""Convert a native NIH CDE Repository export into the corpus shape this
package loads (see cdemapper.corpus.load_corpus).

Best-effort tooling, not part of the core contract: the repository's native
export nests names under designations, definitions under definitions, and
permissible values under valueDomain. Records missing a usable name or
collection are written to a rejects file for manual review.

Usage: python3 scripts/convert_nih_export.py native_export.json corpus.json
"""

import argparse
import json
import sys


def first_text(items, key):
    for item in items or []:
        value = (item or {}).get(key)
        if isinstance(value, str) and value.strip():
            return value.strip()
    return ""


def tagged_texts(items, key, tag):
    out = []
    for item in items or []:
        tags = [t.lower() for t in (item or {}).get("tags", []) if isinstance(t, str)]
        value = (item or {}).get(key)
        if isinstance(value, str) and value.strip() and tag in tags:
            out.append(value.strip())
    return out


def convert_record(native: dict) -> dict | None:
    tiny_id = native.get("tinyId", "")
    designations = native.get("designations", [])
    name = first_text(designations, "designation")
    if not tiny_id or not name:
        return None

    alt_names = []
    for item in designations:
        value = (item or {}).get("designation", "")
        tags = [t.lower() for t in (item or {}).get("tags", []) if isinstance(t, str)]
        if isinstance(value, str) and value.strip() and value.strip() != name and "question text" not in tags:
            alt_names.append(value.strip())

    collection = ""
    steward = native.get("stewardOrg") or {}
    if isinstance(steward, dict):
        collection = steward.get("name", "") or ""
    if not collection:
        for cls in native.get("classification", []) or []:
            org = (cls or {}).get("stewardOrg") or {}
            if isinstance(org, dict) and org.get("name"):
                collection = org["name"]
                break
    if not collection:
        return None

    values = []
    domain = native.get("valueDomain") or {}
    for pv in domain.get("permissibleValues", []) or []:
        if not isinstance(pv, dict):
            continue
        value_name = pv.get("valueMeaningName") or pv.get("permissibleValue") or ""
        if not str(value_name).strip():
            continue
        entry = {"valueName": str(value_name).strip()}
        if pv.get("valueMeaningCode"):
            entry["code"] = str(pv["valueMeaningCode"])
        if pv.get("codeSystemName"):
            entry["codeSystem"] = str(pv["codeSystemName"])
        values.append(entry)

    return {
        "tinyId": tiny_id,
        "name": name,
        "designations": alt_names,
        "questionTexts": tagged_texts(designations, "designation", "question text"),
        "definition": first_text(native.get("definitions", []), "definition"),
        "collection": collection,
        "permissibleValues": values,
        "detailUrl": f"https://cde.nlm.nih.gov/deView?tinyId={tiny_id}",
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("native", help="native export JSON (array of CDE objects)")
    parser.add_argument("out", help="converted corpus JSON path")
    parser.add_argument("--rejects", default="", help="where to write unconvertible records")
    args = parser.parse_args()

    with open(args.native, "r", encoding="utf-8") as fh:
        native = json.load(fh)
    if not isinstance(native, list):
        print("expected a top-level JSON array", file=sys.stderr)
        return 2

    converted, rejects = [], []
    for item in native:
        record = convert_record(item) if isinstance(item, dict) else None
        if record is None:
            rejects.append(item)
        else:
            converted.append(record)

    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(converted, fh, ensure_ascii=False, indent=1)
    if args.rejects:
        with open(args.rejects, "w", encoding="utf-8") as fh:
            json.dump(rejects, fh, ensure_ascii=False, indent=1)
    print(f"converted {len(converted)} records, {len(rejects)} rejected", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
