"""Regenerates the end-to-end fixture: claims, model outputs, index, and expected verdicts.

Expected verdicts follow from the citation category each reference was built
from. Field similarities are recomputed here with a plain edit-distance
implementation; nothing in this script runs the Rust pipeline.

    python3 make_fixture.py    # rewrites the four .jsonl files next to this script
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

CLAIMS = [
    {
        "claim_id": "c01",
        "domain": "SE & CS",
        "text": "Mutation testing exposes weak assertions that coverage metrics miss.",
        "window": [2020, 2025],
        "anchors": ["mutation testing", "test adequacy"],
    },
    {
        "claim_id": "c02",
        "domain": "Natural Sciences",
        "text": "Soil microbial diversity buffers crop yields against drought.",
        "window": [2021, 2025],
    },
]
MODELS = ["alpha-large", "beta-small"]
CONDITIONS = ["Baseline", "Temporal", "Survey", "NonDisclosure", "Combo"]
N_CITATIONS = {"Baseline": 5, "Temporal": 5, "Survey": 8, "NonDisclosure": 5, "Combo": 8}
WINDOWED = {"Temporal", "Combo"}

# Four words per record, never reused, so no query can reach half of another record's title.
WORDS = """
lattice harmonic quorum vector ember falcon granite hollow ivory juniper kestrel
lumen marble nectar onyx prism quartz raven saffron tundra umber velvet willow
xenon yarrow zephyr alder basalt cobalt delta estuary fjord glacier heron isthmus
jasper kelp lagoon meadow nimbus orchid pebble quill reef sierra thistle urchin
valley wren yucca zinnia acorn briar cedar dune egret fern grove hazel iris jade
krill lichen maple nettle oak pine quince rush sage tide vale wisp yew aspen birch
clover dahlia elm fennel gorse heath ivy kale larch moss nutmeg olive poppy rowan
shale teak ulmus vetch wattle beryl cinder dusk flint garnet hearth inlet jetty
knoll ledge mesa notch outcrop plume quay ridge spire torrent upland vortex
amber bramble canyon drizzle ermine foxglove gannet hemlock indigo jackal
""".split()
assert len(WORDS) == len(set(WORDS)) and len(WORDS) >= 120

SURNAMES = [
    "Okafor", "Lindqvist", "Haddad", "Moreau", "Tanaka", "Kowalski", "Abernathy",
    "Ferreira", "Nakamura", "Oyelaran", "Petrov", "Quintero", "Rasmussen", "Sato",
    "Villanueva", "Whitlock", "Yilmaz", "Zielinski", "Brandt", "Castellano",
]
WRONG_SURNAMES = ["Imaginary", "Nobody", "Fictitious", "Phantom"]
VENUES = [
    "Journal of Applied Lattices", "Proceedings of the Harmonic Systems Conference",
    "Transactions on Quorum Computing", "Annals of Soil Ecology", "Review of Field Methods",
]
FAB_WORDS = ["Synthetic", "Imagined", "Spurious", "Phantasmal", "Counterfeit", "Invented",
             "Chimeric", "Apocryphal", "Illusory", "Nonexistent", "Mythical", "Fanciful"]

N_RECORDS = 30
RECORD_YEARS = [2018, 2019, 2020, 2021, 2022, 2023, 2024]


def make_records():
    records = []
    for i in range(N_RECORDS):
        words = WORDS[4 * i: 4 * i + 4]
        title = " ".join(w.capitalize() for w in words)
        a1 = SURNAMES[i % len(SURNAMES)]
        a2 = SURNAMES[(i * 7 + 3) % len(SURNAMES)]
        authors = [f"{a1}, {chr(65 + i % 26)}.", f"{a2}, {chr(66 + i % 25)}."]
        rec = {
            "title": title,
            "authors": authors,
            "venue": VENUES[i % len(VENUES)],
            "year": RECORD_YEARS[i % len(RECORD_YEARS)],
            "doi": f"10.5555/fx.{i:03d}" if i % 3 != 2 else None,
        }
        if i % 10 == 4:
            rec["services"] = ["semantic_scholar"]
        records.append(rec)
    return records


# ---- oracle ------------------------------------------------------------------


def tokens(s):
    return "".join(c if c.isalnum() else " " for c in s.lower()).split()


def lev(a, b):
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def ratio(a, b):
    n = max(len(a), len(b))
    return 1.0 if n == 0 else 1.0 - lev(a, b) / n


def token_set(x, z):
    sx, sz = set(tokens(x)), set(tokens(z))
    if sx == sz:
        return 1.0
    if not sx or not sz:
        return 0.0
    inter = " ".join(sorted(sx & sz))
    ex = " ".join(p for p in [inter, " ".join(sorted(sx - sz))] if p)
    ez = " ".join(p for p in [inter, " ".join(sorted(sz - sx))] if p)
    return max(ratio(inter, ex), ratio(inter, ez), ratio(ex, ez))


def partial(x, z):
    x, z = " ".join(tokens(x)), " ".join(tokens(z))
    short, long_ = (x, z) if len(x) <= len(z) else (z, x)
    if not short:
        return 1.0 if not long_ else 0.0
    m = len(short)
    return max(1.0 - lev(short, long_[i:i + m]) / m for i in range(len(long_) - m + 1))


def surname(name):
    family = name.split(",")[0] if "," in name else name
    return "".join(c for c in family.split()[-1].lower() if c.isalnum())


def overlap(parsed, cand):
    p = {surname(a) for a in parsed}
    c = {surname(a) for a in cand}
    return len(p & c) / len(p) if p else 0.0


def year_agree(a, b):
    if a is None or b is None:
        return 0.0
    return 1.0 if a == b else 0.5 if abs(a - b) == 1 else 0.0


def score(cit, rec):
    t = token_set(cit["title"], rec["title"])
    a = overlap(cit["authors"], rec["authors"])
    y = year_agree(cit["year"], rec["year"])
    v = partial(cit["venue"], rec["venue"]) if cit["venue"] and rec["venue"] else 0.0
    s = 0.60 * t + 0.20 * a + 0.15 * y + 0.05 * v
    return {"s": s, "t": t, "a": a, "y": y, "v": v}


# ---- citation categories -----------------------------------------------------

CATEGORIES = [
    "EX_FULL", "UN_AUTHORS_WRONG", "FAB_NOHIT", "EX_NOVENUE", "EX_YEAR_OFF",
    "FAB_DOI_NA", "UN_TITLE_ONLY", "EX_PARTIAL_AUTH", "FAB_FAKE_DOI", "PARSE_FAIL",
    "FAB_NEAR_TITLE", "EX_FULL", "FAB_OLD_YEAR",
]


def build_citation(cat, rec, serial):
    """Returns the citation fields and the record it should match (None for no match)."""
    fab_title = f"{FAB_WORDS[serial % len(FAB_WORDS)]} {FAB_WORDS[(serial + 5) % len(FAB_WORDS)]} Frameworks for Study {serial}"
    wrong = [f"{WRONG_SURNAMES[serial % 4]}, Q."]
    c = {"title": rec["title"], "authors": list(rec["authors"]), "venue": rec["venue"],
         "year": rec["year"], "doi": rec["doi"], "doi_na": False}
    if cat == "EX_FULL":
        pass
    elif cat == "EX_NOVENUE":
        c["venue"] = None
    elif cat == "EX_YEAR_OFF":
        c["year"] = rec["year"] + 1
        c["doi"] = None
    elif cat == "EX_PARTIAL_AUTH":
        c["authors"] = [rec["authors"][0], wrong[0]]
    elif cat == "UN_AUTHORS_WRONG":
        c["authors"] = wrong
        c["doi"] = None
    elif cat == "UN_TITLE_ONLY":
        c.update(authors=wrong, venue=None, year=rec["year"] - 3, doi=None)
    elif cat == "FAB_NEAR_TITLE":
        words = rec["title"].split()[:3]
        c.update(title=" ".join(words + [FAB_WORDS[serial % len(FAB_WORDS)]]), authors=wrong,
                 venue=None, year=rec["year"] - 6, doi=None)
    elif cat == "FAB_NOHIT":
        c.update(title=fab_title, authors=wrong, year=2021, doi=None, venue=VENUES[serial % 5])
        return c, None
    elif cat == "FAB_OLD_YEAR":
        c.update(title=fab_title, authors=wrong, year=2017, doi=None, venue=None)
        return c, None
    elif cat == "FAB_DOI_NA":
        c.update(title=fab_title, authors=wrong, year=2022, doi=None, doi_na=True)
        return c, None
    elif cat == "FAB_FAKE_DOI":
        c.update(title=fab_title, authors=wrong, year=2023, doi=f"10.9999/fake.{serial}")
        return c, None
    elif cat == "PARSE_FAIL":
        return None, None
    return c, rec


def initials_first(name):
    family, given = [p.strip() for p in name.split(",")]
    return f"{given} {family}"


def render_apa(i, c):
    if c is None:
        return f"[{i}] ?????"
    authors = c["authors"]
    auth = authors[0] if len(authors) == 1 else ", ".join(authors[:-1]) + ", & " + authors[-1]
    out = f"[{i}] {auth} ({c['year']}). {c['title']}."
    if c["venue"]:
        out += f" {c['venue']}."
    if c["doi"]:
        out += f" https://doi.org/{c['doi']}"
    elif c["doi_na"]:
        out += " DOI: n/a"
    return out


def render_labeled(i, c):
    if c is None:
        return f"{i}. ?????"
    lines = [f"{i}. Title: {c['title']}", f"   Authors: {'; '.join(c['authors'])}"]
    if c["venue"]:
        lines.append(f"   Venue: {c['venue']}")
    lines.append(f"   Year: {c['year']}")
    if c["doi"]:
        lines.append(f"   DOI: {c['doi']}")
    elif c["doi_na"]:
        lines.append("   DOI: n/a")
    return "\n".join(lines)


def render_ieee(i, c):
    if c is None:
        return f"[{i}] ?????"
    names = [initials_first(a) for a in c["authors"]]
    auth = names[0] if len(names) == 1 else ", ".join(names[:-1]) + " and " + names[-1]
    out = f'[{i}] {auth}, "{c["title"]},"'
    if c["venue"]:
        out += f" {c['venue']},"
    out += f" {c['year']}."
    if c["doi"]:
        out += f" doi: {c['doi']}."
    elif c["doi_na"]:
        out += " doi: n/a."
    return out


RENDERERS = {"apa": render_apa, "labeled": render_labeled, "ieee": render_ieee}


def render_output(claim, condition, style, cits):
    n = len(cits)
    marks = "".join(f"[{i + 1}]" for i in range(n))
    if condition in ("Survey", "Combo"):
        body = (f"## Empirical approaches\nStudies of this question follow two lines {marks[:9]}.\n\n"
                f"## Theoretical approaches\nModels explain the effect {marks[9:]}.\n\n"
                f"## Open problems\nReplication remains limited.\n\n")
    else:
        body = f"{claim['text']} Evidence is extensive {marks}.\n\n"
    sep = "\n\n" if style == "labeled" else "\n"
    refs = sep.join(RENDERERS[style](i + 1, c) for i, c in enumerate(cits))
    return body + "References\n" + refs + "\n"


def main():
    records = make_records()
    outputs, expected = [], []
    serial = 0
    out_no = 0
    for claim in CLAIMS:
        for m_idx, model in enumerate(MODELS):
            for c_idx, condition in enumerate(CONDITIONS):
                style = ["apa", "labeled", "ieee"][(m_idx + c_idx) % 3]
                n = N_CITATIONS[condition]
                cits = []
                for j in range(n):
                    cat = CATEGORIES[(out_no * 3 + j) % len(CATEGORIES)]
                    rec = records[(out_no * 5 + j * 3) % N_RECORDS]
                    cit, match = build_citation(cat, rec, serial)
                    serial += 1
                    cits.append(cit)
                    if cit is None:
                        label, best, year_for_window = "Unresolved", None, None
                    else:
                        best = score(cit, match) if match is not None else None
                        s = best["s"] if best else None
                        if s is None or s < 0.60:
                            label = "Fabricated"
                        elif s < 0.85:
                            label = "Unresolved"
                        else:
                            label = "Existing"
                        year_for_window = match["year"] if label == "Existing" else cit["year"]
                    lo, hi = claim["window"]
                    temporal = (condition in WINDOWED and year_for_window is not None
                                and not lo <= year_for_window <= hi)
                    expected.append({
                        "claim_id": claim["claim_id"], "model_id": model, "condition": condition,
                        "citation_index": j, "category": cat, "label": label,
                        "score": best, "temporal_violation": temporal,
                        "doi_present": bool(cit and cit["doi"]),
                    })
                outputs.append({
                    "claim_id": claim["claim_id"], "model_id": model, "condition": condition,
                    "output_text": render_output(claim, condition, style, cits),
                })
                out_no += 1

    def dump(name, rows):
        with open(os.path.join(HERE, name), "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")

    dump("claims.jsonl", CLAIMS)
    dump("outputs.jsonl", outputs)
    dump("index.jsonl", [{k: v for k, v in r.items() if v is not None} for r in records])
    dump("expected_verdicts.jsonl", expected)
    counts = {}
    for e in expected:
        counts[e["label"]] = counts.get(e["label"], 0) + 1
    print(len(outputs), "outputs,", len(expected), "citations,", counts,
          sum(e["temporal_violation"] for e in expected), "temporal")


if __name__ == "__main__":
    main()
