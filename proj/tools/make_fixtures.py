#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/fixtures/.

Outputs are deterministic (fixed seed); rerunning produces identical bytes.

  ratings_98.csv     98 distinct, left-skewed 0-100 ratings (simple CSV)
  mock_corpus.json   mock-backend research fixtures for the same 98 books,
                     plus one undocumented book. Source flags are planted:
                     65 books on both Wikipedia and Goodreads, 14 on
                     Wikipedia only, 14 on Goodreads only, 5 elsewhere.
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

GENRES = ["fantasy", "science fiction", "romance", "mystery", "historical fiction", "literary fiction",
          "thriller", "horror", "nonfiction", "classics", "young adult", "contemporary", "poetry"]


def main():
    rng = random.Random(20240601)
    OUT.mkdir(parents=True, exist_ok=True)

    # Left-skewed: most books enjoyed, a tail of abandoned ones.
    ratings = set()
    while len(ratings) < 98:
        if rng.random() < 0.85:
            v = 100 - rng.expovariate(1 / 12.0)
        else:
            v = rng.uniform(0, 35)
        v = round(min(max(v, 0.0), 100.0), 1)
        ratings.add(v)
    ratings = list(ratings)
    rng.shuffle(ratings)

    books = []
    lines = ["title,author,rating,dnf"]
    for i, r in enumerate(ratings):
        title = f"Fixture Novel {i:03d}"
        author = f"Writer {chr(ord('A') + i % 26)}. {['Moss', 'Vale', 'Quill', 'Hart', 'Stone'][i % 5]}"
        dnf = 1 if r < 20 else 0
        lines.append(f"{title},{author},{r},{dnf}")
        books.append((title, author))
    (OUT / "ratings_98.csv").write_text("\n".join(lines) + "\n")

    flags = ([["wikipedia", "goodreads"]] * 65 + [["wikipedia"]] * 14 + [["goodreads"]] * 14 +
             [["other_web"]] * 5)
    rng.shuffle(flags)

    entries = []
    for (title, author), found in zip(books, flags):
        urls = []
        if "wikipedia" in found:
            urls.append("https://en.wikipedia.org/wiki/" + title.replace(" ", "_"))
        if "goodreads" in found:
            urls.append("https://www.goodreads.com/book/show/" + str(rng.randint(1000, 999999)))
        if "other_web" in found:
            urls.append("https://example-author-site.org/" + title.replace(" ", "-").lower())
        n_genres = rng.randint(1, 3)
        entry = {
            "title": title,
            "author": author,
            "found_on": found,
            "urls": urls,
            "retrieved_at": "2025-01-15T12:00:00Z",
            "summary": f"{title} by {author} follows a protagonist through a story of "
                       f"{rng.choice(['loss', 'discovery', 'ambition', 'love', 'war', 'survival'])}.",
            "metadata": {
                "avg_rating": round(rng.uniform(3.2, 4.6), 2),
                "num_ratings": rng.randint(200, 250000),
                "pages": rng.randint(120, 900),
                "genres": sorted(rng.sample(GENRES, n_genres)),
            },
            "comment_count": rng.choice([60, 60, 60, 45, 30, 12]),
        }
        if "goodreads" not in found:
            entry["metadata"].pop("num_ratings")
        entries.append(entry)

    entries.append({
        "title": "Unlisted Chapbook",
        "author": "Nobody Known",
        "found_on": [],
        "urls": [],
        "retrieved_at": "2025-01-15T12:00:00Z",
        "summary": "",
    })

    corpus = {"format": "isaac-mock-corpus", "version": 1, "books": entries}
    (OUT / "mock_corpus.json").write_text(json.dumps(corpus, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
