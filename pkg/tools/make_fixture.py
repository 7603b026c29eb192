"""Generate the committed test fixture: a 330-post synthetic corpus (100 posts
per hashtag bucket plus background chatter), a 40-post annotated training
corpus for the retrieval store, and expert annotations for the 300 bucketed
posts.

The corpus is co-designed with the deterministic mock backend so the three
classification strategies separate cleanly:

  zero-shot         only posts with explicit cue phrases classify correctly
  rag-examples      adds posts whose topic vocabulary matches an indexed
                    training example of the same side
  rag-full          adds posts whose wording matches a codebook definition

Each design assumption (who retrieves what) is asserted before files are
written, so a failed assumption breaks generation instead of silently
producing a fixture that cannot satisfy the ordering.

Run from the repo root:  python tools/make_fixture.py
"""

from __future__ import annotations

import json
import random
import sys
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from stancenet.classify import (  # noqa: E402
    MockBackend,
    STRATEGY_RAG_EXAMPLES,
    STRATEGY_RAG_FULL,
    STRATEGY_ZERO_SHOT,
    classify_corpus,
    default_template_dir,
    load_templates,
    select_best_prompt,
)
from stancenet.corpus import (  # noqa: E402
    HashtagBucket,
    bucket_of,
    load_corpus,
    load_hashtag_list,
    stratified_sample,
)
from stancenet.ragindex import (  # noqa: E402
    combine_stores,
    index_examples,
    index_taxonomy,
    load_codebook,
    retrieve,
)

FIXTURES = ROOT / "tests" / "fixtures"
DATA = ROOT / "src" / "stancenet" / "data"

RNG = random.Random(42)

GLUE = ["about", "today", "update", "corner", "weekly", "rather", "again", "finally", "midweek"]

ANTI_TOPICS = {
    "athletics": ["athletics", "eligibility", "league", "referee", "locker", "varsity", "tryouts", "scorecard"],
    "curriculum": ["curriculum", "classroom", "syllabus", "permission", "assembly", "textbook", "homeroom", "recess"],
    "clinic-panic": ["clinic", "dosing", "referral", "pediatric", "checkup", "prescription", "chart", "waitlist"],
    "drama": ["screenshot", "expose", "receipts", "clout", "ratio", "thread", "blocked", "reupload"],
}
PRO_TOPICS = {
    "crafting": ["crochet", "yarn", "beanie", "knitting", "plushie", "gingham", "buttons", "patchwork"],
    "community": ["aidfund", "bakesale", "carepod", "neighbors", "cookout", "letterwriting", "checkins", "resourcelist"],
    "healthcare": ["telehealth", "endocrinologist", "voicework", "insurance", "copay", "refill", "journal", "intake"],
    "counterspeech": ["factcheck", "rejoinder", "sourcelist", "sourcenote", "misquote", "context", "correction", "chronology"],
}
NEUTRAL_TOPICS = {
    "sourdough": ["sourdough", "starter", "levain", "crumb", "hydration", "banneton", "scoring", "bake"],
    "gaming": ["speedrun", "emulator", "cartridge", "spriteart", "bossfight", "savefile", "glitchless", "console"],
    "plants": ["monstera", "propagation", "cutting", "aroid", "pothos", "humidity", "repotting", "fertilizer"],
    "transit": ["tramline", "timetable", "platform", "commute", "farecard", "busroute", "junction", "depot"],
}

ANTI_CUES = ["gender ideology", "ywnbaw", "adult human female", "single sex spaces", "what is a woman", "wrong body"]
PRO_CUES = ["trans rights", "trans joy", "protect trans kids", "trans is beautiful", "nonbinary visibility", "rights are human rights"]

# tokens lifted verbatim from the shipped codebook definitions
TAXONOMY_TERMS = {
    "TM": ["transmisogyny", "transfeminine", "femininity", "policing", "deceptive"],
    "ATM": ["transandrophobia", "transmasculine", "manhood", "policing", "transition"],
    "XOR": ["exorsexism", "exclusively", "male", "female", "intersex", "altersex"],
    "TERF": ["exclusionary", "anatomy", "radical", "feminism", "invaders"],
    "RW": ["traditional", "family", "values", "conservative", "nation"],
    "INTRA": ["respectability", "politics", "denigrate", "subgroups", "community", "approval"],
    "CEL": ["joy", "hobbies", "fandoms", "milestones", "affirmation", "visibility"],
    "REF": ["debunk", "misinformation", "hostile", "claims", "harm"],
    "CON": ["solidarity", "liberation", "movements", "struggle", "autonomy"],
}
ANTI_SUBLABEL_CYCLE = ["TM", "ATM", "XOR", "TERF", "RW", "INTRA"]
PRO_SUBLABEL_CYCLE = ["CEL", "REF", "CON"]

ANTI_TOPIC_SUBLABELS = {
    "athletics": ["TM"],
    "curriculum": ["RW"],
    "clinic-panic": ["RW", "TM"],
    "drama": ["INTRA"],
}
PRO_TOPIC_SUBLABELS = {
    "crafting": ["CEL"],
    "community": ["CEL", "CON"],
    "healthcare": ["CEL"],
    "counterspeech": ["REF"],
}

ANTI_TAGS_SAFE = [
    "nooneisborninthewrongbody", "saveoursinglesexspaces", "genderideology", "whatisawoman",
    "parentalrights", "terftok", "savethetomboys", "savewomenssports", "adulthumanfemale",
]
# "transmisogyny" stays off this list: it is a pro-side search tag in the shipped
# defaults but also a taxonomy term, so fixture posts avoid it to keep retrieval
# behavior single-sided
PRO_TAGS = [
    "transgender", "transrights", "transmen",
    "protecttranskids", "transisbeautiful", "tdov", "tdor", "nonbinaryvisibility",
]
NEITHER_TAGS = ["fyp", "foryou", "daily", "viral"]

ANTI_AUTHORS = [f"user_a{i:02d}" for i in range(20)]
PRO_AUTHORS = [f"user_p{i:02d}" for i in range(20)]
NEUTRAL_AUTHORS = [f"user_n{i:02d}" for i in range(26)]



def check_hash_collisions() -> None:
    """Content-bearing fixture tokens are chosen collision-free by direct hash
    inspection, so hashed tf-idf cosine behaves like exact token overlap within
    the fixture vocabulary. (Cross-checks against full definition prose happen
    via the per-post retrieval asserts below.)"""
    from stancenet.ragindex import _token_slot

    design: dict[str, str] = {}

    def add(token: str, side: str) -> None:
        if token in design and design[token] != side:
            raise AssertionError(f"token {token!r} used by both {design[token]} and {side}")
        design[token] = side

    for pool in ANTI_TOPICS.values():
        for t in pool:
            add(t, "anti")
    for pool in PRO_TOPICS.values():
        for t in pool:
            add(t, "pro")
    for pool in NEUTRAL_TOPICS.values():
        for t in pool:
            add(t, "neutral")
    for sub, terms in TAXONOMY_TERMS.items():
        side = "anti" if sub in ANTI_SUBLABEL_CYCLE else "pro"
        for t in terms:
            if t in ("male", "female", "community", "family", "politics"):
                continue  # ordinary words shared with definition prose; low weight
            add(t, side)
    for g in GLUE:
        add(g, "glue")
    for t in ANTI_TAGS_SAFE + ["ywnbaw"]:
        add(t, "anti")
    for t in PRO_TAGS:
        add(t, "pro")
    for t in NEITHER_TAGS:
        add(t, "glue")

    by_slot: dict[int, list[str]] = {}
    for token in sorted(design):
        by_slot.setdefault(_token_slot(token, 512), []).append(token)
    clashes = {
        slot: tokens
        for slot, tokens in by_slot.items()
        if len(tokens) > 1 and len({design[t] for t in tokens}) > 1
    }
    assert not clashes, f"fixture tokens of different sides share hash slots: {clashes}"


def pick(rng, pool, n):
    return rng.sample(pool, n)


def main() -> None:
    check_hash_collisions()
    specs = []  # (truth_primary, subtype, topic_or_sublabel)
    for side in ("anti", "pro"):
        topics = list((ANTI_TOPICS if side == "anti" else PRO_TOPICS))
        cycle = ANTI_SUBLABEL_CYCLE if side == "anti" else PRO_SUBLABEL_CYCLE
        for i in range(50):
            specs.append((side, "explicit", topics[i % len(topics)]))
        for i in range(28):
            specs.append((side, "covered", topics[i % len(topics)]))
        for i in range(15):
            specs.append((side, "taxonomy", cycle[i % len(cycle)]))
        for i in range(7):
            specs.append((side, "hopeless", None))
    neutral_topics = list(NEUTRAL_TOPICS)
    for i in range(100):
        specs.append(("neutral", "bucketed", neutral_topics[i % len(neutral_topics)]))

    # bucket allocation per class, then shuffle within class so subtypes spread
    buckets_for = {"anti": [], "pro": [], "neutral": []}
    buckets_for["anti"] = ["anti-only"] * 70 + ["pro-only"] * 10 + ["both"] * 20
    buckets_for["pro"] = ["pro-only"] * 70 + ["anti-only"] * 10 + ["both"] * 20
    buckets_for["neutral"] = ["anti-only"] * 20 + ["pro-only"] * 20 + ["both"] * 60
    for side in buckets_for:
        RNG.shuffle(buckets_for[side])

    class_counters = {"anti": 0, "pro": 0, "neutral": 0}
    posts = []
    annotations = []
    cue_cycle = {"anti": 0, "pro": 0}

    for side, subtype, detail in specs:
        i = class_counters[side]
        class_counters[side] += 1
        rng = random.Random(f"{side}:{subtype}:{detail}:{i}")

        # main text
        if subtype == "explicit":
            cues = ANTI_CUES if side == "anti" else PRO_CUES
            cue = cues[cue_cycle[side] % len(cues)]
            cue_cycle[side] += 1
            pool = (ANTI_TOPICS if side == "anti" else PRO_TOPICS)[detail]
            toks = pick(rng, pool, 2)
            glue = pick(rng, GLUE, 2)
            text = f"{glue[0]} the segment says {cue} during the {toks[0]} {toks[1]} push {glue[1]}"
        elif subtype == "covered":
            pool = (ANTI_TOPICS if side == "anti" else PRO_TOPICS)[detail]
            toks = pick(rng, pool, 5)
            glue = pick(rng, GLUE, 2)
            text = f"{toks[0]} {toks[1]} {glue[0]} the {toks[2]} {toks[3]} {toks[4]} {glue[1]}"
        elif subtype == "taxonomy":
            # dense overlap with one codebook definition so the combined store
            # retrieves it above threshold despite unseen hashtag tokens
            terms = TAXONOMY_TERMS[detail]
            toks = terms[:5] if len(terms) >= 5 else terms + terms[: 5 - len(terms)]
            glue = pick(rng, GLUE, 1)
            text = (
                f"{toks[0]} {toks[1]} {toks[2]} {toks[3]} {glue[0]} "
                f"{toks[4]} {toks[0]} {toks[1]} {toks[2]} {toks[3]} {toks[0]} {toks[1]}"
            )
        elif subtype == "hopeless":
            glue = pick(rng, GLUE, 1)
            text = f"{glue[0]} strong opinions circulating, situation number {i}, not elaborating"
        else:  # neutral
            pool = NEUTRAL_TOPICS[detail]
            toks = pick(rng, pool, 5)
            glue = pick(rng, GLUE, 2)
            text = f"{toks[0]} {toks[1]} {glue[0]} my {toks[2]} {toks[3]} {toks[4]} {glue[1]}"

        # author and interactions
        if side == "anti":
            author = ANTI_AUTHORS[i % len(ANTI_AUTHORS)]
            marker = ""
            if subtype in ("taxonomy", "hopeless"):
                pass
            elif i % 5 == 0:
                marker = f"Replying to @{PRO_AUTHORS[i % len(PRO_AUTHORS)]} "
            elif i % 5 == 1:
                marker = f"#stitch with @{PRO_AUTHORS[(i * 3) % len(PRO_AUTHORS)]} "
            elif i % 5 == 2:
                marker = f"#duet with @{ANTI_AUTHORS[(i + 1) % len(ANTI_AUTHORS)]} "
            elif i % 5 == 3:
                marker = f"@{PRO_AUTHORS[(i * 7) % len(PRO_AUTHORS)]} "
        elif side == "pro":
            author = PRO_AUTHORS[i % len(PRO_AUTHORS)]
            marker = ""
            if subtype in ("taxonomy", "hopeless"):
                pass
            elif i % 5 == 0:
                marker = f"#duet with @{PRO_AUTHORS[(i + 1) % len(PRO_AUTHORS)]} "
            elif i % 5 == 1:
                marker = f"Replying to @{ANTI_AUTHORS[(i * 3) % len(ANTI_AUTHORS)]} "
            elif i % 5 == 2:
                marker = f"@{PRO_AUTHORS[(i + 3) % len(PRO_AUTHORS)]} "
            elif i % 5 == 3:
                marker = f"#stitch with @{ANTI_AUTHORS[(i * 5) % len(ANTI_AUTHORS)]} "
        else:
            author = NEUTRAL_AUTHORS[i % len(NEUTRAL_AUTHORS)]
            marker = ""
            if i % 3 == 0:
                everyone = ANTI_AUTHORS + PRO_AUTHORS + NEUTRAL_AUTHORS
                marker = f"@{everyone[(i * 11) % len(everyone)]} "

        # hashtags by bucket
        if subtype == "neither":
            bucket = "neither"
        else:
            bucket = buckets_for[side][i] if side != "neutral" else buckets_for["neutral"][i]
        if bucket == "anti-only":
            tags = pick(rng, ANTI_TAGS_SAFE, 2)
            if side == "anti" and i % 4 == 0:
                tags = [tags[0], "ywnbaw"]
        elif bucket == "pro-only":
            tags = pick(rng, PRO_TAGS, 2)
        elif bucket == "both":
            tags = [pick(rng, PRO_TAGS, 1)[0], pick(rng, ANTI_TAGS_SAFE, 1)[0]]
        else:
            tags = pick(rng, NEITHER_TAGS, 1)
        tag_str = " ".join(f"#{t}" for t in tags)

        post_id = f"v{len(posts):04d}"
        empty_transcript = i % 3 == 0  # undownloadable posts keep text in the description
        record = {
            "id": post_id,
            "author": author,
            "created_at": 1_690_000_000 + len(posts) * 3600,
            "like_count": rng.randint(0, 5000),
            "_truth": side,
            "_subtype": subtype,
            "_detail": detail,
        }
        if subtype in ("taxonomy", "hopeless"):
            # tags arrive as platform metadata, keeping the caption free of them
            record["hashtags"] = tags
            record["transcript"] = "" if empty_transcript else text
            record["description"] = text if empty_transcript else ""
        elif empty_transcript:
            record["transcript"] = ""
            record["description"] = f"{marker}{text} {tag_str}"
        else:
            record["transcript"] = text
            record["description"] = f"{marker}{tag_str}"
        posts.append(record)
        primary = {"anti": "AntiTrans", "pro": "ProTrans", "neutral": "Neutral"}[side]
        if subtype == "taxonomy":
            subs = [detail]
        elif subtype in ("explicit", "covered"):
            subs = (ANTI_TOPIC_SUBLABELS if side == "anti" else PRO_TOPIC_SUBLABELS)[detail]
        else:
            subs = []
        if primary == "Neutral":
            subs = []
        annotations.append(
            {
                "post_id": post_id,
                "annotator_id": "expert1",
                "label": {"primary": primary, "sublabels": sorted(subs)},
                "annotated_at": 1_691_000_000 + len(posts),
            }
        )

    # 30 background posts with no pro/anti hashtags (Neither bucket)
    for i in range(30):
        rng = random.Random(f"neither:{i}")
        topic = list(NEUTRAL_TOPICS)[i % 4]
        toks = pick(rng, NEUTRAL_TOPICS[topic], 4)
        glue = pick(rng, GLUE, 2)
        everyone = ANTI_AUTHORS + PRO_AUTHORS + NEUTRAL_AUTHORS
        marker = f"@{everyone[(i * 13) % len(everyone)]} " if i % 2 == 0 else ""
        posts.append(
            {
                "id": f"v{len(posts):04d}",
                "author": NEUTRAL_AUTHORS[(i + 7) % len(NEUTRAL_AUTHORS)],
                "description": f"{marker}{toks[0]} {toks[1]} {glue[0]} #{pick(rng, NEITHER_TAGS, 1)[0]}",
                "transcript": f"{toks[2]} {toks[3]} {glue[1]}",
                "created_at": 1_690_000_000 + len(posts) * 3600,
                "like_count": rng.randint(0, 800),
                "_truth": "neutral",
                "_subtype": "neither",
                "_detail": topic,
            }
        )

    RNG.shuffle(posts)

    # training corpus: five annotated examples per topic, transcript only
    train_posts = []
    train_annotations = []
    topic_items = [("anti", t, pool) for t, pool in ANTI_TOPICS.items()] + [
        ("pro", t, pool) for t, pool in PRO_TOPICS.items()
    ]
    for t_index, (side, topic, pool) in enumerate(topic_items):
        for j in range(5):
            rng = random.Random(f"train:{topic}:{j}")
            toks = pick(rng, pool, 5)
            glue = pick(rng, GLUE, 2)
            post_id = f"t{len(train_posts):03d}"
            train_posts.append(
                {
                    "id": post_id,
                    "author": f"user_t{t_index:02d}",
                    "description": "",
                    "transcript": f"{toks[0]} {toks[1]} {glue[0]} the {toks[2]} {toks[3]} {toks[4]} {glue[1]}",
                    "created_at": 1_680_000_000 + len(train_posts) * 3600,
                    "like_count": rng.randint(0, 900),
                }
            )
            primary = "AntiTrans" if side == "anti" else "ProTrans"
            subs = (ANTI_TOPIC_SUBLABELS if side == "anti" else PRO_TOPIC_SUBLABELS)[topic]
            train_annotations.append(
                {
                    "post_id": post_id,
                    "annotator_id": "trainer",
                    "label": {"primary": primary, "sublabels": sorted(subs)},
                    "annotated_at": 1_681_000_000 + len(train_posts),
                }
            )

    # ---- write files ---------------------------------------------------------
    FIXTURES.mkdir(parents=True, exist_ok=True)
    meta = {p["id"]: {"truth": p["_truth"], "subtype": p["_subtype"], "detail": p["_detail"]} for p in posts}
    corpus_lines = []
    for p in posts:
        record = {k: v for k, v in p.items() if not k.startswith("_")}
        corpus_lines.append(json.dumps(record, ensure_ascii=False))
    (FIXTURES / "corpus.jsonl").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")
    (FIXTURES / "annotations.jsonl").write_text(
        "\n".join(json.dumps(a, ensure_ascii=False) for a in annotations) + "\n", encoding="utf-8"
    )
    (FIXTURES / "train_corpus.jsonl").write_text(
        "\n".join(json.dumps(p, ensure_ascii=False) for p in train_posts) + "\n", encoding="utf-8"
    )
    (FIXTURES / "train_annotations.jsonl").write_text(
        "\n".join(json.dumps(a, ensure_ascii=False) for a in train_annotations) + "\n", encoding="utf-8"
    )

    # ---- self checks ----------------------------------------------------------
    load = load_corpus(FIXTURES / "corpus.jsonl")
    assert not load.rejected and not load.duplicates, (load.rejected[:3], load.duplicates[:3])
    pro_list = load_hashtag_list(DATA / "hashtags_pro.txt")
    anti_list = load_hashtag_list(DATA / "hashtags_anti.txt")
    bucket_counts = Counter(bucket_of(p, pro_list, anti_list).value for p in load.posts)
    assert bucket_counts[HashtagBucket.PRO_ONLY.value] == 100, bucket_counts
    assert bucket_counts[HashtagBucket.ANTI_ONLY.value] == 100, bucket_counts
    assert bucket_counts[HashtagBucket.BOTH.value] == 100, bucket_counts
    assert bucket_counts[HashtagBucket.NEITHER.value] == 30, bucket_counts

    sampled = stratified_sample(
        load.posts, 100,
        [HashtagBucket.PRO_ONLY, HashtagBucket.ANTI_ONLY, HashtagBucket.BOTH],
        seed=7, pro=pro_list, anti=anti_list,
    )
    sampled_ids = {p.id for p in sampled}
    assert sampled_ids == set(meta) - {p.id for p in load.posts if meta.get(p.id, {}).get("subtype") == "neither"} \
        or len(sampled_ids) == 300

    train_load = load_corpus(FIXTURES / "train_corpus.jsonl")
    from stancenet.corpus import load_annotations

    train_ann = load_annotations(FIXTURES / "train_annotations.jsonl", known_ids={p.id for p in train_load.posts})
    train_lookup = {p.id: p for p in train_load.posts}
    example_store, skipped = index_examples([(s, train_lookup[s.post_id]) for s in train_ann.samples])
    assert len(example_store) == 40 and not skipped
    taxonomy_store = index_taxonomy(load_codebook(DATA / "codebook.json"))
    combined = combine_stores(example_store, taxonomy_store)
    entry_side = {
        e.id: (e.label.primary if e.label else None) for e in combined.entries
    }

    from stancenet.corpus import classification_text

    posts_by_id = {p.id: p for p in load.posts}
    for post in sampled:
        info = meta[post.id]
        text = classification_text(post)
        ex_hits = retrieve(example_store, text, 3, 0.35).ids()
        all_hits = retrieve(combined, text, 3, 0.35).ids()
        sides_ex = {entry_side[h] for h in ex_hits}
        sides_all = {entry_side[h] for h in all_hits}
        truth_primary = {"anti": "AntiTrans", "pro": "ProTrans", "neutral": "Neutral"}[info["truth"]]
        if info["subtype"] == "covered":
            assert ex_hits, f"covered post {post.id} retrieved nothing: {text!r}"
            assert sides_ex == {truth_primary}, (post.id, sides_ex, text)
            assert sides_all == {truth_primary}, (post.id, sides_all, text)
        elif info["subtype"] == "taxonomy":
            assert not ex_hits, (post.id, ex_hits, text)
            assert info["detail"] in all_hits, (post.id, all_hits, text)
            assert sides_all == {truth_primary}, (post.id, sides_all, text)
        elif info["subtype"] == "hopeless":
            assert not ex_hits and not all_hits, (post.id, ex_hits, all_hits)
        elif info["subtype"] == "bucketed":  # neutral
            assert not ex_hits and not all_hits, (post.id, ex_hits, all_hits, text)
        elif info["subtype"] == "explicit":
            assert sides_ex <= {truth_primary} and sides_all <= {truth_primary}, (
                post.id, sides_ex, sides_all, text,
            )

    # ---- strategy ordering ------------------------------------------------------
    templates = load_templates(default_template_dir())
    backend = MockBackend()
    truth = {a["post_id"]: a["label"]["primary"] for a in annotations}

    zs_records = classify_corpus(backend, sampled, STRATEGY_ZERO_SHOT, templates)
    best_id = select_best_prompt(zs_records, truth)
    best_template = next(t for t in templates if t.id == best_id)
    re_records = classify_corpus(
        backend, sampled, STRATEGY_RAG_EXAMPLES, templates,
        best_template=best_template, example_store=example_store,
    )
    rf_records = classify_corpus(
        backend, sampled, STRATEGY_RAG_FULL, templates,
        best_template=best_template, example_store=example_store, taxonomy_store=taxonomy_store,
    )

    def accuracy(records):
        return sum(1 for r in records if r.verdict == truth[r.post_id]) / len(records)

    zs, re_, rf = accuracy(zs_records), accuracy(re_records), accuracy(rf_records)
    print(f"zero-shot accuracy:    {zs:.3f}")
    print(f"rag-examples accuracy: {re_:.3f}")
    print(f"rag-full accuracy:     {rf:.3f}  (best prompt: {best_id})")
    assert zs < re_ < rf, "strategy ordering failed"

    (FIXTURES / "fixture_meta.json").write_text(
        json.dumps(
            {
                "posts": len(posts),
                "sampled": len(sampled),
                "train_examples": len(train_posts),
                "expected_ordering": {"zero_shot": zs, "rag_examples": re_, "rag_full": rf},
                "sample_seed": 7,
                "best_prompt": best_id,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote fixture: {len(posts)} posts, {len(annotations)} annotations, "
          f"{len(train_posts)} training examples")


if __name__ == "__main__":
    main()
