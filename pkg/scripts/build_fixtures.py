#!/usr/bin/env python3
"""Generate the demo CDE corpus, source dictionaries, and gold mappings.

Deterministic (fixed seed): rerunning rewrites byte-identical files under
data/. The four datasets mirror the published evaluation structure:

  dataset   1-vs-1  M-vs-1  1-vs-M  mapped  dictionary  collections
  Eye            3      13       1      17          40  NIH-Endorsed, NEI
  Stroke        18       2       1      21          48  NIH-Endorsed, NINDS
  ADRD          70      17      16     103         105  NIH-Endorsed, NINDS
  COVID-19      21      85      17     123         301  NIH-Endorsed, Project 5 (COVID-19)

Usage: python3 scripts/build_fixtures.py [--out data/]
"""

import argparse
import csv
import json
import random
from pathlib import Path

SEED = 12021

VALUE_POOLS = [
    ["Yes", "No", "Unknown"],
    ["Mild", "Moderate", "Severe"],
    ["Left", "Right", "Both"],
    ["Current", "Former", "Never"],
    ["Normal", "Abnormal", "Not assessed"],
    ["Present", "Absent", "Unknown"],
    ["0", "1", "2", "3", "4"],
    [],
    [],
]

RACE_VALUES = [
    "White",
    "Black or African American",
    "Asian",
    "American Indian or Alaska Native",
    "Native Hawaiian or Other Pacific Islander",
]

ETHNICITY_VALUES = ["Hispanic or Latino", "Not Hispanic or Latino", "Unknown"]

ADJECTIVES = {
    "Eye": ["Retinal", "Corneal", "Macular", "Ocular", "Lens", "Optic Nerve", "Pupillary", "Scleral", "Choroidal", "Vitreous"],
    "Stroke": ["Ischemic", "Hemorrhagic", "Carotid", "Cerebral", "Vascular", "Thrombolytic", "Circadian", "Motor", "Arterial", "Neurologic"],
    "ADRD": ["Cognitive", "Memory", "Behavioral", "Functional", "Neuropsychiatric", "Language", "Executive", "Hippocampal", "Amyloid", "Tau"],
    "COVID-19": ["Respiratory", "Viral", "Oxygen", "Inflammatory", "Pulmonary", "Antibody", "Symptom", "Vaccination", "Ventilator", "Cardiac"],
}

NOUNS = {
    "Eye": ["Thickness", "Pressure", "Acuity", "Opacity", "Perimetry", "Topography", "Field Defect", "Surgery", "Detachment", "Degeneration"],
    "Stroke": ["Onset", "Infarct", "Occlusion", "Perfusion", "Scale", "Recovery", "Stenosis", "Deficit", "Therapy", "Rhythm"],
    "ADRD": ["Decline", "Examination", "Rating", "Fluency", "Recall", "Volume", "Burden", "Orientation", "Impairment", "Genotype"],
    "COVID-19": ["Saturation", "Load", "Support", "Marker", "Titer", "Status", "Duration", "Severity", "Exposure", "Treatment"],
}

MEASURES = ["Score", "Value", "Indicator", "Status", "Count", "Level", "Type", "Date", "Measurement", "Assessment", "Result", "Grade"]

GENERAL_WORDS = [
    "Blood", "Serum", "Plasma", "Heart", "Liver", "Kidney", "Bone", "Muscle", "Skin", "Brain",
    "Glucose", "Sodium", "Potassium", "Creatinine", "Hemoglobin", "Platelet", "Cholesterol",
    "Systolic", "Diastolic", "Resting", "Peak", "Baseline", "Admission", "Discharge", "Daily",
]

DISTRACTOR_COLLECTIONS = ["NIDA", "NHLBI", "NIMH", "NICHD", "PhenX", "RADx-UP", "GRDR"]

QUALIFIER_PAIRS = [
    ("Systolic", "Diastolic"),
    ("Left", "Right"),
    ("Baseline", "Follow-up"),
    ("Onset", "Resolution"),
    ("Weekday", "Weekend"),
    ("First", "Worst"),
    ("Morning", "Evening"),
    ("Self-reported", "Measured"),
    ("Initial", "Final"),
]

SYNONYMS = {"Indicator": "Flag", "Score": "Total Score", "History": "Prior History", "Status": "State", "Type": "Category"}

DATASETS = {
    "Eye": {"counts": (3, 13, 1), "dict_total": 40, "collections": ["NIH-Endorsed", "NEI"], "coverage": 40},
    "Stroke": {"counts": (18, 2, 1), "dict_total": 48, "collections": ["NIH-Endorsed", "NINDS"], "coverage": 48},
    "ADRD": {"counts": (70, 17, 16), "dict_total": 105, "collections": ["NIH-Endorsed", "NINDS"], "coverage": None},
    "COVID-19": {"counts": (21, 85, 17), "dict_total": 301, "collections": ["NIH-Endorsed", "Project 5 (COVID-19)"], "coverage": 301},
}

# Hand-written anchor mappings kept verbatim in the generated data.
ANCHORS = {
    "Eye": [("Race-White", "Race", "NIH-Endorsed", RACE_VALUES, ["White"])],
    "Stroke": [("Imaging Modality Type", "Imaging Modality Type", "NINDS", ["CT", "MRI", "Ultrasound", "Angiography"], [])],
    "ADRD": [("Evidence of Lewy body pathology", "Lewy body pathology indicator", "NINDS", ["Yes", "No", "Unknown"], [])],
    "COVID-19": [("Ethnicity", "Ethnicity", "Project 5 (COVID-19)", ETHNICITY_VALUES, [])],
}


class CorpusBuilder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.records = []
        self.used_names = set()
        self._counter = 0

    def fresh_name(self, dataset: str) -> str:
        for _ in range(1000):
            name = " ".join([
                self.rng.choice(ADJECTIVES[dataset]),
                self.rng.choice(NOUNS[dataset]),
                self.rng.choice(MEASURES),
            ])
            if name not in self.used_names:
                self.used_names.add(name)
                return name
        raise RuntimeError("name space exhausted")

    def add_cde(self, name: str, collection: str, values=None, definition: str = "") -> str:
        self._counter += 1
        tiny_id = f"QX{self._counter:05d}"
        self.used_names.add(name)
        if definition == "":
            definition = f"{name} of the participant recorded at the study visit."
        designations = []
        if self.rng.random() < 0.3:
            designations.append(f"{name} ({collection})")
        question_texts = []
        if self.rng.random() < 0.5:
            question_texts.append(f"What is the participant's {name.lower()}?")
        self.records.append({
            "tinyId": tiny_id,
            "name": name,
            "designations": designations,
            "questionTexts": question_texts,
            "definition": definition,
            "collection": collection,
            "permissibleValues": [{"valueName": v} for v in (values or [])],
            "detailUrl": f"https://cde.nlm.nih.gov/deView?tinyId={tiny_id}",
        })
        return tiny_id


def perturb_name(rng: random.Random, name: str, strong: bool) -> str:
    """Source-side variation of a CDE name. Strong variants keep high token
    overlap; weak ones may swap in synonyms or reorder."""
    words = name.split()
    roll = rng.random()
    if strong:
        if roll < 0.5:
            return name
        if roll < 0.8 and len(words) > 2:
            return " ".join(words[:-1])
        return name + " Value"
    if roll < 0.3:
        return name
    if roll < 0.5 and len(words) > 2:
        return " ".join(words[:-1])
    if roll < 0.7:
        for src, dst in SYNONYMS.items():
            if src in words:
                return " ".join(dst if w == src else w for w in words)
        return name + " Measurement"
    if roll < 0.85 and len(words) >= 2:
        return f"{words[-1]} - {' '.join(words[:-1])}"
    return name.lower()


def build_dataset(builder: CorpusBuilder, rng: random.Random, dataset: str, spec: dict):
    """Returns (gold_rows, dictionary_rows) for one dataset."""
    one_one, many_one, one_many = spec["counts"]
    collections = spec["collections"]
    gold = []  # (source_name, description, values, [target_ids])

    def describe(name):
        return f"{name} collected for the {dataset} study."

    anchors = ANCHORS[dataset]
    anchor_used_one_one = 0
    anchor_used_many_one = 0

    # Anchor mappings: Race-White belongs to a shared-target group, the rest
    # are plain one-to-one entries.
    for source_name, target_name, collection, target_values, source_values in anchors:
        target_id = builder.add_cde(target_name, collection, target_values)
        if source_name.startswith(target_name + "-"):
            group_sources = [f"{target_name}-{v}" for v in target_values[: 4]]
            if source_name not in group_sources:
                group_sources[0] = source_name
            for s in group_sources:
                gold.append((s, describe(target_name), [s.split("-", 1)[1]], [target_id]))
            anchor_used_many_one += len(group_sources)
        else:
            gold.append((source_name, describe(source_name), source_values, [target_id]))
            anchor_used_one_one += 1

    strong = dataset in ("Eye", "Stroke")

    # one-to-one entries
    for _ in range(one_one - anchor_used_one_one):
        name = builder.fresh_name(dataset)
        collection = rng.choice(collections)
        values = rng.choice(VALUE_POOLS)
        target_id = builder.add_cde(name, collection, values)
        gold.append((perturb_name(rng, name, strong), describe(name), [], [target_id]))

    # many-to-one groups
    remaining = many_one - anchor_used_many_one
    while remaining > 0:
        size = min(remaining, rng.choice([2, 2, 3, 3, 4, 5]))
        if remaining - size == 1:
            size += 1  # never leave a singleton, it would classify one-to-one
            size = min(size, remaining)
        name = builder.fresh_name(dataset)
        collection = rng.choice(collections)
        values = rng.choice([p for p in VALUE_POOLS if p])
        target_id = builder.add_cde(name, collection, values)
        qualifiers = (values + [q for pair in QUALIFIER_PAIRS for q in pair])[: size]
        for q in qualifiers:
            gold.append((f"{name}-{q}", describe(name), [q] if q in values else [], [target_id]))
        remaining -= size

    # one-to-many entries
    for _ in range(one_many):
        base = builder.fresh_name(dataset)
        q1, q2 = rng.choice(QUALIFIER_PAIRS)
        collection = rng.choice(collections)
        id1 = builder.add_cde(f"{q1} {base}", collection, [])
        id2 = builder.add_cde(f"{q2} {base}", collection, [])
        gold.append((base, describe(base), [], [id1, id2]))

    # dictionary = mapped sources + local-only elements
    dictionary = [(g[0], g[1], g[2]) for g in gold]
    local_only = spec["dict_total"] - len(dictionary)
    for i in range(local_only):
        name = rng.choice([
            f"site {rng.choice(['code', 'number', 'region'])} {i + 1}",
            f"visit sequence {i + 1}",
            f"internal {rng.choice(['qc flag', 'record key', 'batch id', 'form version'])} {i + 1}",
            f"{rng.choice(GENERAL_WORDS).lower()} free text note {i + 1}",
        ])
        dictionary.append((name, "Study-internal field without a standard equivalent.", []))
    rng.shuffle(dictionary)
    return gold, dictionary


def add_distractors(builder: CorpusBuilder, rng: random.Random, n: int):
    all_collections = sorted({c for s in DATASETS.values() for c in s["collections"]}) + DISTRACTOR_COLLECTIONS
    for _ in range(n):
        words = rng.sample(GENERAL_WORDS, rng.randint(1, 2)) + [rng.choice(MEASURES)]
        name = " ".join(words)
        if name in builder.used_names:
            continue
        builder.add_cde(name, rng.choice(all_collections), rng.choice(VALUE_POOLS))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    out = Path(args.out)
    (out / "dictionaries").mkdir(parents=True, exist_ok=True)
    (out / "gold").mkdir(parents=True, exist_ok=True)

    rng = random.Random(SEED)
    builder = CorpusBuilder(rng)

    gold_rows = []
    for dataset, spec in DATASETS.items():
        gold, dictionary = build_dataset(builder, rng, dataset, spec)
        assert len(dictionary) == spec["dict_total"], (dataset, len(dictionary))
        for source_name, description, values, target_ids in gold:
            gold_rows.append({
                "dataset": dataset,
                "source_name": source_name,
                "source_description": description,
                "source_values": "|".join(values),
                "accepted_target_ids": ";".join(target_ids),
            })
        slug = dataset.lower().replace("-19", "19")
        with open(out / "dictionaries" / f"{slug}.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["name", "description", "values"])
            for name, description, values in dictionary:
                writer.writerow([name, description, "|".join(values)])

    add_distractors(builder, rng, 320)

    with open(out / "cde_corpus.json", "w", encoding="utf-8") as fh:
        json.dump(builder.records, fh, ensure_ascii=False, indent=1)

    with open(out / "gold" / "gold.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["dataset", "source_name", "source_description", "source_values", "accepted_target_ids"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(gold_rows)

    manifest = {
        "datasets": [
            {"name": name, "collections": spec["collections"], "total_elements": spec["coverage"]}
            for name, spec in DATASETS.items()
        ]
    }
    with open(out / "gold" / "datasets.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)

    print(f"corpus: {len(builder.records)} CDEs; gold entries: {len(gold_rows)}")


if __name__ == "__main__":
    main()
