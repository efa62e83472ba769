"""Seeded synthetic corpora with known structure, for tests and demos."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .corpus import Post
from .textprep import BagOfWords

_CONS = "bdfgklmnprtvz"
_VOW = "aiou"


def pseudo_words(n: int) -> list[str]:
    """Distinct three-syllable nonsense words ending in a vowel.

    They pass the tokenizer, miss the stoplist, and no suffix rule applies.
    """
    syll = [c + v for c in _CONS for v in _VOW]
    words = ("".join(t) for t in itertools.product(syll, repeat=3))
    return list(itertools.islice(words, 0, 7 * n, 7))


@dataclass(frozen=True)
class SyntheticLda:
    bags: list[BagOfWords]
    terms: list[str]
    topic_terms: list[list[int]]
    doc_topics: np.ndarray

    def texts(self) -> list[str]:
        out = []
        for b in self.bags:
            toks = [self.terms[w] for w, c in b.items for _ in range(c)]
            out.append(" ".join(toks))
        return out


def lda_corpus(
    n_docs: int = 200,
    n_topics: int = 2,
    terms_per_topic: int = 25,
    doc_len: int = 50,
    seed: int = 0,
    doc_alpha: float = 0.1,
    zipf: float = 0.0,
) -> SyntheticLda:
    """Documents mixing topics over disjoint vocabularies.

    Each document draws its topic mixture from Dirichlet(``doc_alpha``) and
    each token from its topic's block of ``terms_per_topic`` terms, with
    within-block probabilities proportional to ``1 / rank**zipf`` (uniform
    at the default 0).  Doc ids are zero-padded so id order equals
    generation order.
    """
    rng = np.random.default_rng(seed)
    V = n_topics * terms_per_topic
    terms = pseudo_words(V)
    blocks = [list(range(k * terms_per_topic, (k + 1) * terms_per_topic)) for k in range(n_topics)]
    mix = rng.dirichlet([doc_alpha] * n_topics, size=n_docs)
    within = 1.0 / np.arange(1, terms_per_topic + 1) ** zipf
    within /= within.sum()
    bags = []
    for d in range(n_docs):
        topics = rng.choice(n_topics, size=doc_len, p=mix[d])
        offsets = rng.choice(terms_per_topic, size=doc_len, p=within)
        words = topics * terms_per_topic + offsets
        counts = np.bincount(words, minlength=V)
        items = tuple((int(w), int(c)) for w, c in enumerate(counts) if c)
        bags.append(BagOfWords(f"d{d:05d}", items))
    return SyntheticLda(bags, terms, blocks, mix)


def lda_posts(synth: SyntheticLda, start_year: int = 2019) -> list[Post]:
    """Wrap a synthetic LDA corpus as posts, one per day from ``start_year``."""
    t0 = int(datetime(start_year, 1, 1, tzinfo=timezone.utc).timestamp())
    return [
        Post(b.post_id, t0 + 86400 * i, "synthetic", text, f"u{i:05d}", 0)
        for i, (b, text) in enumerate(zip(synth.bags, synth.texts()))
    ]


# Tenant-forum generator.

SENTENCES = {
    "utility": [
        "The heat has been out for a week and it is freezing.",
        "We have had no hot water since Monday and the landlord will not fix it.",
        "The electric bill is in my name but the utilities were supposed to be included.",
        "Our gas was shut off and nobody told us why.",
    ],
    "pest": [
        "There are roaches everywhere in the kitchen.",
        "I keep finding mice droppings under the sink.",
        "We found bed bugs in the bedroom and the exterminator never came.",
    ],
    "mold": [
        "There is black mold growing on the bathroom ceiling.",
        "A leak from the upstairs unit caused mold in my closet.",
        "The walls are damp and the mildew smell is making me sick.",
    ],
    "interior_decoration": [
        "Can I paint the walls without asking first?",
        "The carpet was old when I moved in and now they blame me for it.",
        "I want to hang shelves and fill the nail holes before I leave.",
    ],
    "fee_dispute": [
        "They charged me a late fee even though I paid on time.",
        "I got a bill for a cleaning fee that was never in the lease.",
        "The management company keeps adding fees to my account.",
    ],
    "noise_complaint": [
        "The neighbors upstairs play loud music every night.",
        "The noise from the unit next door keeps me up until 3am.",
        "A dog barking all day and the stomping never stops.",
    ],
    "evicted_by_landlord": [
        "I received an eviction notice this morning.",
        "My landlord wants to evict me and filed in court.",
        "They gave us a notice to vacate in 30 days.",
    ],
    "rent_increase": [
        "My landlord wants to raise the rent by 20 percent.",
        "The rent increase letter came with only two weeks of notice.",
        "They raised the rent again this year.",
    ],
    "deposit_dispute": [
        "I moved out two months ago and still have not gotten my security deposit back.",
        "They withheld my deposit for normal wear and tear.",
        "The deductions from my deposit make no sense.",
    ],
    "pet": [
        "Can my landlord ban my emotional support dog?",
        "They want to charge pet rent for my cat.",
        "The new lease says no pets but I have had my dog for years.",
    ],
    "landlord_harassment": [
        "My landlord keeps entering without notice.",
        "The property manager threatened me after I complained.",
        "I feel like this is harassment and retaliation.",
    ],
    "personal_income_decrease": [
        "I lost my job last month and cannot afford rent.",
        "My hours were cut and I am behind on payments.",
        "I was laid off and my income dropped by half.",
    ],
    "sublease": [
        "Can I sublet my room for the summer?",
        "My roommate moved out and wants me to find a subtenant.",
        "The landlord refuses to approve my sublease.",
    ],
    "covid_risk": [
        "My roommate tested positive for covid and refuses to quarantine.",
        "The maintenance worker came in without a mask during the pandemic.",
    ],
}

GENERIC = [
    "Any advice would be appreciated.",
    "I have been renting here for two years.",
    "What are my options?",
    "I tried calling the office several times.",
    "Is this legal?",
    "Thanks in advance.",
]

TOPIC_WEIGHTS = {
    "utility": 12, "pest": 5, "mold": 6, "interior_decoration": 4, "fee_dispute": 11,
    "noise_complaint": 6, "evicted_by_landlord": 9, "rent_increase": 5, "deposit_dispute": 11,
    "pet": 5, "landlord_harassment": 8, "personal_income_decrease": 4, "sublease": 5,
    "covid_risk": 2,
}

US_TITLE_TAGS = ["[US - {code}]", "[{code}]", "[{city}, {code}]"]
CITIES = {"CA": "San Francisco", "NY": "Brooklyn", "TX": "Houston", "FL": "Miami",
          "IL": "Chicago", "WA": "Seattle", "MA": "Boston", "GA": "Atlanta"}
STATE_NAMES = {"CA": "California", "NY": "New York", "TX": "Texas", "FL": "Florida",
               "IL": "Illinois", "WA": "Washington", "MA": "Massachusetts", "GA": "Georgia",
               "OH": "Ohio", "CO": "Colorado"}
NON_US = ["Ontario, Canada", "England", "British Columbia, Canada"]
YEAR_WEIGHTS = {2015: 1, 2016: 2, 2017: 3, 2018: 4, 2019: 6, 2020: 14, 2021: 18, 2022: 20, 2023: 7}


@dataclass(frozen=True)
class SyntheticTenantCorpus:
    posts: list[Post]
    labels: dict[str, str]


def _timestamp(rng: random.Random, year: int) -> int:
    start = datetime(year, 8 if year == 2015 else 1, 6 if year == 2015 else 1, tzinfo=timezone.utc)
    end = datetime(year, 5, 1, tzinfo=timezone.utc) if year == 2023 else datetime(year + 1, 1, 1, tzinfo=timezone.utc)
    t0, t1 = int(start.timestamp()), int(end.timestamp()) - 1
    return rng.randint(t0, t1)


def tenant_corpus(n: int = 100, seed: int = 0, n_labeled: int = 40) -> SyntheticTenantCorpus:
    """Forum-like posts with tombstones, location mentions, and a labeled sample.

    The label of a post is the topic its sentences were drawn from.  Labels
    cover the first ``n_labeled`` posts that survive filtering.
    """
    rng = random.Random(seed)
    topics = list(TOPIC_WEIGHTS)
    weights = [TOPIC_WEIGHTS[t] for t in topics]
    years = list(YEAR_WEIGHTS)
    authors = [f"renter{i:03d}" for i in range(int(n * 0.9))]
    posts, truth = [], {}
    for i in range(n):
        topic = rng.choices(topics, weights)[0]
        bank = SENTENCES[topic]
        body = rng.sample(bank, k=min(len(bank), rng.randint(1, 2)))
        body.append(rng.choice(GENERIC))
        if rng.random() < 0.2:
            other = rng.choice(topics)
            body.insert(rng.randint(0, len(body)), rng.choice(SENTENCES[other]))
        title = rng.choice(bank).rstrip(".?")
        roll = rng.random()
        if roll < 0.25:
            code = rng.choice(list(CITIES))
            tag = rng.choice(US_TITLE_TAGS).format(code=code, city=CITIES[code])
            title = f"{tag} {title}"
        elif roll < 0.38:
            code = rng.choice(list(STATE_NAMES))
            body.insert(0, f"I rent an apartment in {STATE_NAMES[code]}.")
        elif roll < 0.45:
            body.insert(0, f"I live in {rng.choice(NON_US)}.")
        text = " ".join(body)
        tomb = rng.random()
        if tomb < 0.08:
            text = "[removed]"
        elif tomb < 0.12:
            text = "[deleted]"
        elif tomb < 0.15:
            text = "  "
        author = "[deleted]" if rng.random() < 0.05 else rng.choice(authors)
        year = rng.choices(years, [YEAR_WEIGHTS[y] for y in years])[0]
        post = Post(f"t3_{i:05d}", _timestamp(rng, year), title, text, author, rng.randint(0, 12))
        posts.append(post)
        truth[post.id] = topic
    clean_ids = [p.id for p in posts if p.body.strip() and p.body.strip() not in ("[removed]", "[deleted]")]
    labels = {pid: truth[pid] for pid in clean_ids[:n_labeled]}
    return SyntheticTenantCorpus(posts, labels)
