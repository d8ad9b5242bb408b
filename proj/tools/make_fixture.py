#!/usr/bin/env python3
"""Regenerate the bundled offline fixture (fixtures/cvd50)."""
import argparse
import datetime as dt
import json
import math
import pathlib
import random

TOPICS = [
    "hypertension", "atrial fibrillation", "stroke", "heart disease", "atherosclerosis",
    "blood pressure", "cardiovascular disease", "heart attack", "vascular disease",
]
OFF_TOPIC = ["influenza vaccination", "childhood asthma", "hip fracture rehabilitation"]
DESIGNS = [
    "a nationwide cohort study", "a randomised controlled trial", "a cross-sectional survey",
    "a Mendelian randomisation analysis", "a retrospective registry analysis", "a meta-analysis",
]
JOURNALS = [
    ("Circulation Research Letters", "Q1", 17.3),
    ("European Cardiology Journal", "Q1", 35.9),
    ("Hypertension Reports", "Q1", 8.3),
    ("Stroke and Vascular Medicine", "Q1", 5.4),
    ("Open Heart Science", "Q2", 3.1),
    ("Regional Cardiology", "Q1", 2.9),
    ("Clinical Cardiology Notes", "Q3", 1.8),
]
DIM = 64


def iso(d):
    return d.isoformat()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "cvd50"))
    ap.add_argument("--seed", type=int, default=20240104)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    (out / "usage").mkdir(parents=True, exist_ok=True)

    basis = [[rng.gauss(0, 1) for _ in range(DIM)] for _ in range(6)]
    preprints, publications, pubdates, embeddings = [], {}, {}, {}
    start = dt.date(2019, 1, 1)
    for i in range(50):
        doi = "10.1101/fx.%04d" % (i + 1)
        quality = rng.gauss(0, 1)
        if i < 3:
            topic = OFF_TOPIC[i]
        else:
            topic = TOPICS[i % len(TOPICS)]
        posted = start + dt.timedelta(days=rng.randrange(0, 1690))
        if i in (3, 4):
            posted = dt.date(2023, 10, 2 + i)  # after the search window
        design = DESIGNS[rng.randrange(len(DESIGNS))]
        n = rng.randrange(200, 90000)
        title = "Association of %s with outcomes in %s" % (topic, design)
        abstract = ("We studied %d adults to examine %s. Using %s we estimated adjusted hazard ratios "
                    "and report effect sizes with confidence intervals." % (n, topic, design))
        preprints.append({
            "preprint_doi": doi,
            "title": title,
            "abstract": abstract,
            "authors": ["Author %d" % (i + 1), "Coauthor %d" % (i + 7)],
            "posted_date": iso(posted),
        })

        factors = [quality] + [rng.gauss(0, 1) for _ in range(5)]
        embeddings[doi] = [round(sum(f * b[k] for f, b in zip(factors, basis)) + rng.gauss(0, 0.3), 6)
                           for k in range(DIM)]

        scale = math.exp(5.5 + 0.6 * quality + rng.gauss(0, 0.3))
        monthly = []
        y, m = posted.year, posted.month
        for _ in range(4):
            monthly.append({
                "month": "%04d-%02d" % (y, m),
                "abstract_views": int(scale * rng.uniform(0.5, 1.5)),
                "fulltext_views": int(scale * rng.uniform(0.2, 0.8)),
                "pdf_downloads": int(scale * rng.uniform(0.05, 0.3)),
            })
            y, m = (y + 1, 1) if m == 12 else (y, m + 1)
        upath = out / "usage" / (doi + ".json")
        upath.parent.mkdir(parents=True, exist_ok=True)
        with open(upath, "w") as f:
            json.dump({"monthly": monthly}, f, indent=1)

        if rng.random() < 1 / (1 + math.exp(-(1.2 * quality - 0.2))):
            pub_doi = "10.9999/j.%04d" % (i + 1)
            journal = JOURNALS[rng.randrange(len(JOURNALS))] if rng.random() < 0.35 else JOURNALS[rng.randrange(4)]
            publications[doi] = {"published_doi": pub_doi, "journal": journal[0]}
            lag = int(rng.expovariate(1 / 300)) + 30
            pub = posted + dt.timedelta(days=lag)
            if i % 11 == 5:
                continue  # linked but no date on record
            if i % 2:
                pubdates[pub_doi] = {"online": iso(pub), "print": iso(pub + dt.timedelta(days=45))}
            else:
                pubdates[pub_doi] = [iso(pub + dt.timedelta(days=20)), iso(pub)]

    with open(out / "preprints.jsonl", "w") as f:
        for p in preprints:
            f.write(json.dumps(p) + "\n")
    with open(out / "publications.json", "w") as f:
        json.dump(publications, f, indent=1, sort_keys=True)
    with open(out / "pubdates.json", "w") as f:
        json.dump(pubdates, f, indent=1, sort_keys=True)
    with open(out / "embeddings.json", "w") as f:
        json.dump(embeddings, f, sort_keys=True)
    with open(out / "jcr.csv", "w") as f:
        f.write("journal,quartile,impact_factor\n")
        for name, q, impact in JOURNALS:
            f.write('"%s",%s,%.1f\n' % (name, q, impact))
    with open(out / "terms.txt", "w") as f:
        f.write("# cardiovascular search terms\n")
        for t in TOPICS:
            f.write(t + "\n")


if __name__ == "__main__":
    main()
