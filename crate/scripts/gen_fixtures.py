#!/usr/bin/env python3
"""Generate the bundled synthetic fixture corpus.

Writes fixtures/documents.jsonl (exactly 5000 lines, a handful of them
deliberately malformed), fixtures/annotations.csv, the five indicator
files and fixtures/expected_counts.json. The expected counts include an
independent segmentation of the generated series (merge interior zero
runs of at most MAX_GAP days) so the integration tests can pin the event
count without consulting the code under test.
"""

import csv
import json
import random
from datetime import date, timedelta
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"
SEED = 20240817
MAX_GAP = 4
PERIOD_START = date(2000, 1, 1)
PERIOD_END = date(2024, 12, 31)

KEYWORDS = [
    "Erdrutsch", "Felssturz", "Schlammlawine", "Hangrutsch", "Murgang",
    "Rutschung", "Bodenrutsch", "Hangabrutschung", "Gerölllawine", "Mure",
]

OUTLETS = ["SZ", "FAZ", "Welt", "taz", "Bild", "Handelsblatt"]
TEXT_TYPES = ["Nachricht", "Bericht", "Kommentar", "Meldung", None]

COUNTRIES = [
    "ITA", "CHE", "AUT", "FRA", "USA", "CHN", "IND", "IDN", "NPL", "PER",
    "COL", "BRA", "JPN", "PHL", "VNM", "THA", "MYS", "PAK", "AFG", "TUR",
    "GRC", "ESP", "PRT", "NOR", "SWE", "GBR", "IRL", "MEX", "GTM", "ECU",
    "BOL", "CHL", "ARG", "KEN", "ETH", "UGA", "TZA", "COD", "NGA", "MAR",
    "DZA", "EGY", "RUS", "UKR", "GEO", "TJK", "KGZ", "MMR", "BGD", "LKA",
    "NZL", "AUS", "CAN", "KOR", "TWN", "HTI", "SLV", "HND", "PNG", "MDG",
]

NAMES = {
    "ITA": "Italien", "CHE": "der Schweiz", "AUT": "Österreich",
    "NPL": "Nepal", "PER": "Peru", "CHN": "China", "IND": "Indien",
}

SENTENCES = [
    "Nach tagelangem Regen kam es in {place} zu einem schweren {kw}.",
    "Ein {kw} hat in {place} mehrere Häuser verschüttet.",
    "Rettungskräfte suchen nach dem {kw} in {place} nach Vermissten.",
    "Die Behörden in {place} warnen nach dem {kw} vor weiteren Abgängen.",
    "Der {kw} riss in {place} eine Straße in die Tiefe.",
]

FILLER = [
    "Die Regierung kündigte eine Untersuchung an.",
    "Anwohner wurden vorsorglich in Sicherheit gebracht.",
    "Der Verkehr ist weiträumig umgeleitet.",
    "Über die Schadenshöhe gibt es noch keine Angaben.",
    "Meteorologen erwarten weitere Niederschläge.",
]


def rand_date(rng):
    span = (PERIOD_END - PERIOD_START).days
    return PERIOD_START + timedelta(days=rng.randrange(span + 1))


def body_for(rng, countries, with_keyword=True):
    place = NAMES.get(countries[0], "der Region") if countries else "der Region"
    kw = rng.choice(KEYWORDS)
    parts = []
    if with_keyword:
        parts.append(rng.choice(SENTENCES).format(place=place, kw=kw))
    parts.extend(rng.sample(FILLER, k=rng.randrange(1, 4)))
    return " ".join(parts)


def main():
    rng = random.Random(SEED)
    OUT.mkdir(exist_ok=True)

    records = []  # (doc_id, date, relevant, countries, has_keyword)
    lines = []
    doc_no = 0

    def add_doc(d, countries, relevant, has_keyword):
        nonlocal doc_no
        doc_id = f"doc{doc_no:05d}"
        doc_no += 1
        title_kw = has_keyword and rng.random() < 0.5
        title = (
            f"{rng.choice(KEYWORDS)} fordert Opfer" if title_kw
            else "Unwetter und Folgen"
        )
        body = body_for(rng, countries, with_keyword=has_keyword and not title_kw)
        doc = {
            "id": doc_id,
            "date": d.isoformat(),
            "outlet": rng.choice(OUTLETS),
            "title": title,
            "body": body,
        }
        text_type = rng.choice(TEXT_TYPES)
        if text_type is not None:
            doc["type"] = text_type
        lines.append(json.dumps(doc, ensure_ascii=False))
        records.append((doc_id, d, relevant, countries, has_keyword))

    # clustered relevant coverage
    target_relevant = 3650
    while sum(1 for r in records if r[2]) < target_relevant:
        iso3 = rng.choice(COUNTRIES)
        start = rand_date(rng)
        duration = rng.randrange(1, 11)
        for offset in range(duration):
            d = start + timedelta(days=offset)
            if d > PERIOD_END:
                break
            for _ in range(max(1, int(rng.expovariate(0.9)))):
                countries = [iso3]
                if rng.random() < 0.02:
                    other = rng.choice(COUNTRIES)
                    if other != iso3:
                        countries.append(other)
                add_doc(d, countries, True, True)

    # unrelated but keyword-bearing (metaphorical usage, domestic pieces)
    for _ in range(1050):
        add_doc(rand_date(rng), [], False, True)

    # no keyword at all, filtered at ingest
    no_keyword = 330
    for _ in range(no_keyword):
        add_doc(rand_date(rng), [], False, False)

    # malformed lines
    bad_lines = [
        "{not json",
        "[1, 2, 3",
        '{"date": "2010-05-01", "outlet": "SZ", "title": "t", "body": "Erdrutsch x"}',
        '{"id": "docbad01", "date": "2010-13-40", "outlet": "SZ", "title": "t", "body": "Erdrutsch x"}',
        '{"id": "docbad02", "date": "kein Datum", "outlet": "SZ", "title": "t", "body": "Erdrutsch x"}',
        '{"id": "docbad03", "date": "1999-06-01", "outlet": "SZ", "title": "t", "body": "Erdrutsch x"}',
        '{"id": "docbad04", "date": "2025-01-02", "outlet": "SZ", "title": "t", "body": "Erdrutsch x"}',
        '{"id": "docbad05", "date": "2010-05-01", "outlet": "SZ", "title": "t", "body": "   "}',
    ]
    lines.extend(bad_lines)

    # trim or pad to exactly 5000 lines
    assert len(lines) >= 5000, len(lines)
    if len(lines) > 5000:
        # drop the last generated unrelated docs, keeping the bad lines
        body = lines[: len(lines) - len(bad_lines)]
        cut = 5000 - len(bad_lines)
        removed = body[cut:]
        dropped_ids = {json.loads(l)["id"] for l in removed}
        lines = body[:cut] + bad_lines
        records = [r for r in records if r[0] not in dropped_ids]
    assert len(lines) == 5000

    rng.shuffle(lines)
    (OUT / "documents.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    with (OUT / "annotations.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "relevant", "countries"])
        for doc_id, _, relevant, countries, _ in records:
            writer.writerow([doc_id, 1 if relevant else 0, ";".join(countries)])

    # indicators over the full reference, seeded independently of the corpus
    ref_codes = []
    with (ROOT / "data" / "unsd_countries.csv").open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ref_codes.append(row["iso3"])
    ref_codes.append("TWN")
    ref_codes = sorted(set(ref_codes) - {"ATA", "ALA", "UMI", "NIU"})

    irng = random.Random(SEED + 1)
    ind = OUT / "indicators"
    ind.mkdir(exist_ok=True)

    def write_indicator(name, rows):
        with (ind / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iso3", "value"])
            writer.writerows(rows)

    emdat, wbglhm, risk, devel, income = [], [], [], [], []
    for iso3 in ref_codes:
        if irng.random() < 0.45:
            emdat.append([iso3, irng.randrange(1, 60)])
        wbglhm.append([iso3, round(irng.random() ** 2 * 8, 3)])
        risk.append([iso3, irng.choice(["high", "medium", "low", "very low"])])
        devel.append([iso3, irng.choice(["developed", "developing"])])
        income.append([iso3, irng.choice(
            ["high", "upper middle", "lower middle", "low"])])
    write_indicator("emdat.csv", emdat)
    write_indicator("wbglhm.csv", wbglhm)
    write_indicator("risk.csv", risk)
    write_indicator("development.csv", devel)
    write_indicator("income.csv", income)

    # independent expected counts
    kept = [r for r in records if r[4]]  # keyword-bearing survive ingest
    instances = []
    for doc_id, d, relevant, countries, _ in kept:
        if relevant:
            for iso3 in dict.fromkeys(countries):
                instances.append((iso3, d))

    by_country = {}
    for iso3, d in instances:
        by_country.setdefault(iso3, set()).add(d)

    n_events = 0
    for iso3, days in by_country.items():
        ordered = sorted(days)
        events = 1
        for prev, cur in zip(ordered, ordered[1:]):
            if (cur - prev).days > MAX_GAP + 1:
                events += 1
        n_events += events

    expected = {
        "total_lines": len(lines),
        "documents_kept": len(kept),
        "instances": len(instances),
        "events": n_events,
        "countries_with_events": len(by_country),
        "max_gap": MAX_GAP,
    }
    (OUT / "expected_counts.json").write_text(
        json.dumps(expected, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(expected, indent=2))


if __name__ == "__main__":
    main()
